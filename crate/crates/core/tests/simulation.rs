mod common;

use evcharge::sim::{
    destination_charge_probability, simulate_day, ChargingBehaviorParams, Deployment, Regime, SessionKind, SimMode, Simulator,
    Thresholds,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn latent_runs_hold_invariants_and_gate_regimes() {
    let bundle = common::reference_bundle();
    let sim = Simulator::new(&bundle);
    let params = ChargingBehaviorParams::default();
    for regime in Regime::ALL {
        let log = sim.run(regime, SimMode::LatentGeneration, None, &params, 42).unwrap();
        common::check_log(&bundle, &log, None).unwrap();
        assert!(log.sessions.iter().all(|s| s.station.is_none()));
        let kinds: Vec<SessionKind> = log.latent.iter().map(|e| e.kind).collect();
        match regime {
            Regime::Destination => assert!(!kinds.contains(&SessionKind::EnRoute)),
            Regime::EnRoute => assert!(!kinds.contains(&SessionKind::Destination)),
            Regime::Combined => {}
        }
    }
}

#[test]
fn empty_deployment_serves_only_home_charging() {
    let bundle = common::reference_bundle();
    let params = ChargingBehaviorParams::default();
    let empty = Deployment::default();
    assert!(simulate_day(&bundle, Regime::Combined, SimMode::Evaluation, None, &params, 42).is_err());
    let log = simulate_day(&bundle, Regime::Combined, SimMode::Evaluation, Some(&empty), &params, 42).unwrap();
    common::check_log(&bundle, &log, Some(&empty)).unwrap();
    assert!(log.sessions.iter().all(|s| s.kind == SessionKind::Residential));
    assert!(log.latent.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn evaluation_runs_hold_invariants(seed in any::<u64>(), stations in 1usize..40, r in 0usize..3) {
        let bundle = common::reference_bundle();
        let dep = common::random_deployment(&mut ChaCha8Rng::seed_from_u64(seed), &bundle, stations);
        let regime = Regime::ALL[r];
        let params = ChargingBehaviorParams::default();
        let sim = Simulator::new(&bundle);
        let log = sim.run(regime, SimMode::Evaluation, Some(&dep), &params, seed).unwrap();
        if let Err(e) = common::check_log(&bundle, &log, Some(&dep)) {
            prop_assert!(false, "{}", e);
        }
        let again = sim.run(regime, SimMode::Evaluation, Some(&dep), &params, seed).unwrap();
        prop_assert_eq!(serde_json::to_vec(&log).unwrap(), serde_json::to_vec(&again).unwrap());
    }

    #[test]
    fn destination_probability_is_monotone_and_continuous(
        lower in 0.0f64..0.9,
        width in 0.01f64..0.5,
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
    ) {
        let th = Thresholds::new(lower, (lower + width).min(1.0)).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let p_lo = destination_charge_probability(lo, &th).unwrap();
        let p_hi = destination_charge_probability(hi, &th).unwrap();
        prop_assert!(p_lo >= p_hi);
        prop_assert!((0.0..=1.0).contains(&p_lo));
        // Lipschitz with constant 1 / (upper - lower) implies continuity.
        prop_assert!(p_lo - p_hi <= (hi - lo) / (th.upper - th.lower) + 1e-12);
    }
}
