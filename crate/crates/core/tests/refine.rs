mod common;

use evcharge::pipeline::{self, PipelineSettings};
use evcharge::refine::{
    compute_flh, compute_utilization, refine_loop, refine_step, RefineConfig, RefineInput, TypeUtilization,
    UtilizationReport, DAY_H,
};
use evcharge::sim::{ChargerType, Deployment, Regime, Simulator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_counts(rng: &mut impl Rng, max: u32) -> Vec<[u32; 3]> {
    (0..rng.random_range(1..5))
        .map(|_| [rng.random_range(0..=max), rng.random_range(0..=max), rng.random_range(0..=max)])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn utilization_and_flh_match_second_scan(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dep = common::deployment(&random_counts(&mut rng, 3));
        let sessions = common::random_sessions(&mut rng, &dep);
        let scan = common::occupancy_scan(&sessions, &dep);
        let report = compute_utilization(&sessions, &dep, DAY_H).unwrap();
        let flh = compute_flh(&sessions, &dep).unwrap();
        prop_assert_eq!(report.entries.len(), scan.len());
        for e in &report.entries {
            let (occupied, full) = scan[&(e.station, e.charger.index())];
            let u = occupied as f64 / (e.count as f64 * 86_400.0);
            prop_assert!((e.utilization - u).abs() < 1e-9, "u {} vs {}", e.utilization, u);
            prop_assert!((e.flh_h * 3600.0 - full as f64).abs() <= 1.0);
            prop_assert!((flh[&(e.station, e.charger)] - e.flh_h).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&e.utilization));
            prop_assert!((0.0..=DAY_H).contains(&e.flh_h));
            if e.count == 1 {
                prop_assert_eq!(e.flh_h > 0.0, e.energy_kwh > 0.0);
            }
        }
    }

    #[test]
    fn refine_step_is_a_fixed_point_when_no_rule_fires(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dep = common::deployment(&random_counts(&mut rng, 4));
        let cfg = RefineConfig::default();
        let entries = dep
            .stations
            .iter()
            .flat_map(|s| ChargerType::ALL.into_iter().filter(|&t| s.count(t) > 0).map(move |t| (s, t)))
            .map(|(s, t)| TypeUtilization {
                station: s.id,
                charger: t,
                count: s.count(t),
                energy_kwh: 0.0,
                capacity_kwh: 0.0,
                utilization: rng.random_range(cfg.utilization_decrement..1.0),
                flh_h: rng.random_range(0.0..cfg.flh_increment_h),
            })
            .collect();
        let report = UtilizationReport { horizon_h: DAY_H, entries };
        let once = refine_step(&dep, &report, &cfg);
        let expected: Vec<_> = dep.stations.iter().filter(|s| s.total() >= cfg.station_min).cloned().collect();
        prop_assert_eq!(&once.stations, &expected);
        prop_assert_eq!(refine_step(&once, &report, &cfg), once);
    }
}

#[test]
fn back_to_back_sessions_fill_one_charger() {
    let dep = common::deployment(&[[1, 0, 0]]);
    let mk = |id, a: f64, b: f64| evcharge::sim::ChargingSession {
        id,
        vehicle: id,
        station: Some(0),
        node: 0,
        charger: ChargerType::Ac7_2,
        start_s: a,
        end_s: b,
        energy_kwh: 7.2 * (b - a) / 3600.0,
        kind: evcharge::sim::SessionKind::Destination,
    };
    let sessions = [mk(0, 0.0, 7200.0), mk(1, 7200.0, 10_800.0)];
    let flh = compute_flh(&sessions, &dep).unwrap();
    assert!((flh[&(0, ChargerType::Ac7_2)] - 3.0).abs() < 1e-12);
}

#[test]
fn reference_traces_keep_initial_sites() {
    let bundle = common::reference_bundle();
    let cfg = common::reference_config();
    let settings = cfg.settings(&bundle);
    let sim = Simulator::new(&bundle);
    for regime in Regime::ALL {
        let latent = pipeline::latent_demand(&sim, regime, &settings.behavior, settings.seed).unwrap();
        let initial = pipeline::deploy(&bundle, &latent, &settings.cost, settings.behavior.service_radius_km, settings.solver)
            .unwrap()
            .deployment;
        let (refined, trace) = pipeline::refine(&bundle, &sim, regime, &initial, &settings).unwrap();
        let sites = |d: &Deployment| d.stations.iter().map(|s| (s.id, s.node)).collect::<Vec<_>>();
        let initial_sites = sites(&initial);
        for it in &trace.iterations {
            assert!(sites(&it.deployment).iter().all(|s| initial_sites.contains(s)));
        }
        assert!(sites(&refined).iter().all(|s| initial_sites.contains(s)));
        assert!(trace.iterations.len() <= settings.refine.max_iterations as usize);
    }
}

#[test]
fn crn_loop_is_deterministic() {
    let bundle = common::reference_bundle();
    let settings = PipelineSettings::for_scenario(&bundle);
    let sim = Simulator::new(&bundle);
    let latent = pipeline::latent_demand(&sim, Regime::Combined, &settings.behavior, 42).unwrap();
    let dep = pipeline::deploy(&bundle, &latent, &settings.cost, 1.0, settings.solver).unwrap().deployment;
    let input = RefineInput {
        scenario: &bundle,
        regime: Regime::Combined,
        initial: &dep,
        behavior: &settings.behavior,
        cost: &settings.cost,
        config: &settings.refine,
        seed: 42,
    };
    let a = refine_loop(&input).unwrap();
    let b = refine_loop(&input).unwrap();
    assert_eq!(a, b);
}
