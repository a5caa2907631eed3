//! Branch-and-bound over charger counts for small instances.

use std::time::Instant;

use super::flow::CoverageModel;
use super::instance::{CmclpInstance, CmclpSolution, SolveReport, SolverKind};
use super::solution_from_chargers;
use crate::error::{Error, Result};
use crate::sim::ChargerType;

pub const MAX_EXACT_SITES: usize = 8;
pub const MAX_EXACT_ITEMS: usize = 40;

const COST_EPS: f64 = 1e-9;

struct Search<'a> {
    instance: &'a CmclpInstance,
    model: CoverageModel,
    /// (site, type index, upper bound on the count)
    vars: Vec<(usize, usize, u32)>,
    chargers: Vec<[u32; 3]>,
    best_cov: u64,
    best_cost: f64,
    best: Vec<[u32; 3]>,
}

impl Search<'_> {
    fn cost(&self) -> f64 {
        self.chargers
            .iter()
            .map(|n| self.instance.cost.station_cost(n, n.iter().sum::<u32>() > 0))
            .sum()
    }

    /// Coverage if every undecided count from `from` on took its bound.
    fn optimistic(&self, from: usize) -> u64 {
        let mut relaxed = self.chargers.clone();
        for &(s, p, ub) in &self.vars[from..] {
            relaxed[s][p] = ub;
        }
        self.model.coverage(&relaxed)
    }

    fn improves(&self, cov: u64, cost: f64) -> bool {
        cov > self.best_cov || (cov == self.best_cov && cost < self.best_cost - COST_EPS)
    }

    fn dfs(&mut self, depth: usize) {
        if depth == self.vars.len() {
            let cov = self.model.coverage(&self.chargers);
            let cost = self.cost();
            if self.improves(cov, cost) {
                self.best_cov = cov;
                self.best_cost = cost;
                self.best = self.chargers.clone();
            }
            return;
        }
        let (s, p, ub) = self.vars[depth];
        for v in (0..=ub).rev() {
            self.chargers[s][p] = v;
            // Undecided counts are zero, so this is a lower bound on cost.
            let cost = self.cost();
            if cost > self.instance.budget() + COST_EPS {
                continue;
            }
            let bound = self.optimistic(depth + 1);
            if !self.improves(bound, cost) {
                continue;
            }
            self.dfs(depth + 1);
        }
        self.chargers[s][p] = 0;
    }
}

/// Optimal coverage for instances with at most `MAX_EXACT_SITES` sites and
/// `MAX_EXACT_ITEMS` demand items. Among optimal solutions the cheapest one
/// found first in search order is returned.
pub fn solve_exact(instance: &CmclpInstance) -> Result<(CmclpSolution, SolveReport)> {
    instance.validate()?;
    if instance.sites.len() > MAX_EXACT_SITES || instance.items.len() > MAX_EXACT_ITEMS {
        return Err(Error::Size {
            sites: instance.sites.len(),
            items: instance.items.len(),
            max_sites: MAX_EXACT_SITES,
            max_items: MAX_EXACT_ITEMS,
        });
    }
    let started = Instant::now();
    let model = CoverageModel::new(instance);
    let cap = instance.max_chargers_per_type.unwrap_or(u32::MAX);
    let mut vars = Vec::new();
    for s in 0..instance.sites.len() {
        for ty in ChargerType::ALL {
            let ub = model.site_peak[s][ty.index()].min(cap);
            if ub > 0 {
                vars.push((s, ty.index(), ub));
            }
        }
    }
    let n_sites = instance.sites.len();
    let mut search = Search {
        instance,
        model,
        vars,
        chargers: vec![[0; 3]; n_sites],
        best_cov: 0,
        best_cost: 0.0,
        best: vec![[0; 3]; n_sites],
    };
    search.dfs(0);
    let solution = solution_from_chargers(instance, &search.model, search.best.clone());
    let report = SolveReport {
        solver: SolverKind::Exact,
        objective: solution.objective,
        optimal: true,
        bound: Some(solution.objective),
        cost: solution.cost(&instance.cost),
        budget: instance.budget(),
        items: instance.items.len(),
        coverable_items: instance.coverable_items(),
        sites: instance.sites.len(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((solution, report))
}
