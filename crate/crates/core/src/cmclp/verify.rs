use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::instance::{CmclpInstance, CmclpSolution};
use crate::sim::ChargerType;

/// A broken constraint of the covering model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Vector lengths disagree with the instance.
    Shape(String),
    /// Assignment count differs from the coverage indicator.
    Coverage { item: u32, assigned: usize, covered: bool },
    /// Assignment to a site outside the item's neighborhood.
    OutsideNeighborhood { item: u32, site: u32 },
    /// Assignment to a site that is not selected.
    UnselectedSite { item: u32, site: u32 },
    /// More same-type items in one bin than installed chargers.
    Capacity { site: u32, charger: ChargerType, bin: u16, assigned: u32, installed: u32 },
    Budget { cost: f64, budget: f64 },
    /// Reported objective differs from the number of covered items.
    Objective { reported: u64, covered: u64 },
}

/// Constraint family a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintKind {
    Objective,
    /// Each item assigned at most once, only within its neighborhood, and
    /// exactly when covered.
    Assignment,
    /// Assignments only to selected sites.
    SiteLink,
    Capacity,
    Budget,
}

impl Violation {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Violation::Shape(_) | Violation::Coverage { .. } | Violation::OutsideNeighborhood { .. } => {
                ConstraintKind::Assignment
            }
            Violation::UnselectedSite { .. } => ConstraintKind::SiteLink,
            Violation::Capacity { .. } => ConstraintKind::Capacity,
            Violation::Budget { .. } => ConstraintKind::Budget,
            Violation::Objective { .. } => ConstraintKind::Objective,
        }
    }
}

const BUDGET_TOL: f64 = 1e-9;

pub fn verify_solution(instance: &CmclpInstance, solution: &CmclpSolution) -> Vec<Violation> {
    let mut out = Vec::new();
    let n_sites = instance.sites.len();
    let n_items = instance.items.len();
    if solution.selected.len() != n_sites || solution.chargers.len() != n_sites || solution.covered.len() != n_items {
        out.push(Violation::Shape(format!(
            "expected {n_sites} sites and {n_items} items, got x={}, n={}, c={}",
            solution.selected.len(),
            solution.chargers.len(),
            solution.covered.len()
        )));
        return out;
    }

    let mut per_item = vec![0usize; n_items];
    let mut load: BTreeMap<(u32, usize, u16), u32> = BTreeMap::new();
    for &(item, site) in &solution.assignments {
        if item as usize >= n_items || site as usize >= n_sites {
            out.push(Violation::Shape(format!("assignment ({item}, {site}) out of range")));
            continue;
        }
        let it = &instance.items[item as usize];
        if !instance.neighborhood(item as usize).contains(&site) {
            out.push(Violation::OutsideNeighborhood { item, site });
            continue;
        }
        per_item[item as usize] += 1;
        if !solution.selected[site as usize] {
            out.push(Violation::UnselectedSite { item, site });
        }
        *load.entry((site, it.charger.index(), it.bin)).or_default() += 1;
    }
    for (item, (&count, &covered)) in per_item.iter().zip(&solution.covered).enumerate() {
        if count != covered as usize {
            out.push(Violation::Coverage {
                item: item as u32,
                assigned: count,
                covered,
            });
        }
    }
    for ((site, ty, bin), assigned) in load {
        let installed = solution.chargers[site as usize][ty];
        if assigned > installed {
            out.push(Violation::Capacity {
                site,
                charger: ChargerType::ALL[ty],
                bin,
                assigned,
                installed,
            });
        }
    }
    let cost = solution.cost(&instance.cost);
    if cost > instance.budget() + BUDGET_TOL {
        out.push(Violation::Budget {
            cost,
            budget: instance.budget(),
        });
    }
    let covered = solution.covered.iter().filter(|&&c| c).count() as u64;
    if covered != solution.objective {
        out.push(Violation::Objective {
            reported: solution.objective,
            covered,
        });
    }
    out
}
