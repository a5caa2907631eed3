//! Capacitated multi-charger-type location problem with time-expanded
//! demand: model, coverage oracle, solvers and a feasibility checker.

mod exact;
mod flow;
mod heuristic;
mod instance;
mod verify;

pub use exact::{solve_exact, MAX_EXACT_ITEMS, MAX_EXACT_SITES};
pub use heuristic::solve_heuristic;
pub use instance::{
    bins_for_interval, build_candidates, expand_demand, CandidateSite, CmclpInstance, CmclpSolution, CostModel,
    DemandItem, SolveReport, SolverKind, BIN_COUNT, BIN_S,
};
pub use verify::{verify_solution, ConstraintKind, Violation};

use crate::error::Result;
use flow::CoverageModel;

pub fn solve(instance: &CmclpInstance, kind: SolverKind) -> Result<(CmclpSolution, SolveReport)> {
    match kind {
        SolverKind::Exact => solve_exact(instance),
        SolverKind::Heuristic => solve_heuristic(instance),
    }
}

/// Maximum coverage achievable with the given charger counts.
pub fn coverage_of(instance: &CmclpInstance, chargers: &[[u32; 3]]) -> u64 {
    CoverageModel::new(instance).coverage(chargers)
}

/// Completes a solution from charger counts: sites with any charger are
/// selected and items are assigned by maximum per-bin matching.
pub fn solution_from_counts(instance: &CmclpInstance, chargers: Vec<[u32; 3]>) -> CmclpSolution {
    solution_from_chargers(instance, &CoverageModel::new(instance), chargers)
}

pub(crate) fn solution_from_chargers(
    instance: &CmclpInstance,
    model: &CoverageModel,
    chargers: Vec<[u32; 3]>,
) -> CmclpSolution {
    let assignments = model.assignments(&chargers);
    let mut covered = vec![false; instance.items.len()];
    for &(item, _) in &assignments {
        covered[item as usize] = true;
    }
    CmclpSolution {
        selected: chargers.iter().map(|n| n.iter().sum::<u32>() > 0).collect(),
        objective: assignments.len() as u64,
        chargers,
        covered,
        assignments,
    }
}
