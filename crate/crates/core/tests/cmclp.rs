mod common;

use evcharge::cmclp::{
    coverage_of, solution_from_counts, solve_exact, solve_heuristic, verify_solution, CmclpInstance, CostModel,
    SolverKind,
};
use evcharge::sim::ChargerType;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, cap: u32) -> CmclpInstance {
    common::random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 5, 12, cap)
}

#[test]
fn exact_matches_brute_force() {
    for seed in 0..40 {
        let inst = instance(seed, 2);
        let (sol, report) = solve_exact(&inst).unwrap();
        assert_eq!(sol.objective, common::brute_force_optimum(&inst, 2), "seed {seed}");
        assert!(report.optimal);
    }
}

#[test]
fn oracle_cost_agrees_with_cost_model() {
    let cost = CostModel::default();
    let counts = vec![[1, 0, 0], [0, 0, 1], [2, 3, 1], [0, 0, 0]];
    let inst = instance(3, 2);
    let mut sol = solution_from_counts(&inst, vec![[0; 3]; inst.sites.len()]);
    sol.chargers = counts.clone();
    sol.selected = counts.iter().map(|n| n != &[0, 0, 0]).collect();
    assert!((sol.cost(&cost) - common::oracle_cost(&cost, &counts)).abs() < 1e-12);
}

#[test]
fn single_site_single_item() {
    let inst = CmclpInstance::new(
        vec![evcharge::cmclp::CandidateSite {
            id: 0,
            location: evcharge::scenario::Point::new(0.0, 0.0),
        }],
        vec![vec![0]],
        vec![evcharge::cmclp::DemandItem {
            event: 0,
            bin: 3,
            charger: ChargerType::Ac7_2,
        }],
        CostModel {
            budget: 7.08,
            ..CostModel::default()
        },
    )
    .unwrap();
    for kind in [SolverKind::Exact, SolverKind::Heuristic] {
        let (sol, _) = evcharge::cmclp::solve(&inst, kind).unwrap();
        assert_eq!(sol.objective, 1);
        assert_eq!(sol.chargers, vec![[1, 0, 0]]);
    }
    let (sol, _) = solve_exact(&inst.clone().with_budget(7.0)).unwrap();
    assert_eq!(sol.objective, 0);
}

#[test]
fn exact_rejects_large_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let inst = std::iter::repeat_with(|| common::random_instance(&mut rng, 5, 80, 2))
        .find(|i| i.items.len() > evcharge::cmclp::MAX_EXACT_ITEMS)
        .unwrap();
    assert!(matches!(solve_exact(&inst), Err(evcharge::Error::Size { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_output_is_feasible(seed in any::<u64>(), cap in 1u32..4) {
        let inst = instance(seed, cap);
        for kind in [SolverKind::Exact, SolverKind::Heuristic] {
            let (sol, report) = evcharge::cmclp::solve(&inst, kind).unwrap();
            prop_assert!(verify_solution(&inst, &sol).is_empty(), "{:?}", verify_solution(&inst, &sol));
            prop_assert!(sol.cost(&inst.cost) <= inst.budget() + 1e-9);
            prop_assert!(sol.objective <= inst.coverable_items() as u64);
            prop_assert_eq!(sol.objective, coverage_of(&inst, &sol.chargers));
            prop_assert_eq!(report.objective, sol.objective);
        }
    }

    #[test]
    fn exact_objective_monotone_in_budget(seed in any::<u64>(), a in 0.0f64..80.0, b in 0.0f64..80.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let inst = instance(seed, 2);
        let small = solve_exact(&inst.clone().with_budget(lo)).unwrap().0.objective;
        let large = solve_exact(&inst.with_budget(hi)).unwrap().0.objective;
        prop_assert!(small <= large);
    }

    #[test]
    fn matching_coverage_equals_exhaustive_assignment(seed in any::<u64>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(&mut rng, 5, 12, 3);
        let chargers: Vec<[u32; 3]> = (0..inst.sites.len())
            .map(|_| [rng.random_range(0..3), rng.random_range(0..3), rng.random_range(0..2)])
            .collect();
        prop_assert_eq!(coverage_of(&inst, &chargers), common::oracle_coverage(&inst, &chargers));
        let sol = solution_from_counts(&inst, chargers);
        prop_assert!(verify_solution(&inst.clone().with_budget(f64::MAX), &sol).is_empty());
    }

    #[test]
    fn heuristic_never_beats_exact(seed in any::<u64>()) {
        let inst = instance(seed, 2);
        let exact = solve_exact(&inst).unwrap().0.objective;
        let heur = solve_heuristic(&inst).unwrap().0.objective;
        prop_assert!(heur <= exact);
    }
}
