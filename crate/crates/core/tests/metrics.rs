mod common;

use evcharge::cmclp::CostModel;
use evcharge::metrics::{behavior_stats, charging_revenue, evaluate_kpis};
use evcharge::sim::{ChargingBehaviorParams, Regime, SimMode, Simulator};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kpi_identities_hold_for_every_evaluation(seed in any::<u64>(), stations in 0usize..40, r in 0usize..3) {
        let bundle = common::reference_bundle();
        let dep = common::random_deployment(&mut ChaCha8Rng::seed_from_u64(seed), &bundle, stations);
        let log = Simulator::new(&bundle)
            .run(Regime::ALL[r], SimMode::Evaluation, Some(&dep), &ChargingBehaviorParams::default(), seed)
            .unwrap();
        let cost = CostModel::default();
        let k = evaluate_kpis(&log, &dep, &cost);
        prop_assert_eq!(k.net_benefit, k.revenue - k.deployment_cost);
        prop_assert_eq!(k.user_cost, k.detour_cost + cost.nsoc_penalty * k.nsoc_vehicles as f64);
        prop_assert_eq!(k.system_cost, k.deployment_cost + k.user_cost);
        prop_assert!(k.revenue >= 0.0);
        let delivered = log.public_sessions().any(|s| s.energy_kwh > 0.0);
        prop_assert_eq!(k.revenue > 0.0, delivered);
        prop_assert!(k.detour_ratio >= 0.0 && k.detour_km_per_vehicle >= 0.0 && k.detour_cost >= 0.0);

        let mut doubled = log.sessions.clone();
        doubled.extend(log.sessions.iter().cloned());
        let (a, b) = (behavior_stats(&log.sessions), behavior_stats(&doubled));
        for (x, y) in [(a.destination, b.destination), (a.enroute, b.enroute), (a.residential, b.residential)] {
            prop_assert_eq!(x.is_some(), y.is_some());
            if let (Some(x), Some(y)) = (x, y) {
                prop_assert!((x.start_mean_s - y.start_mean_s).abs() < 1e-6);
                prop_assert!((x.start_std_s - y.start_std_s).abs() < 1e-6);
                prop_assert!((x.duration_mean_s - y.duration_mean_s).abs() < 1e-6);
                prop_assert!((x.duration_std_s - y.duration_std_s).abs() < 1e-6);
            }
        }
        let margins = cost.margin_per_kwh;
        let public_only: f64 = log.public_sessions().map(|s| s.energy_kwh * margins[s.charger.index()]).sum();
        prop_assert!((charging_revenue(&log.sessions, &margins) - public_only).abs() < 1e-9);
    }
}
