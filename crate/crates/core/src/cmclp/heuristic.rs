//! Budgeted greedy on coverage gain per unit cost, followed by local search
//! with drop, add, swap and close-and-refill moves. Every accepted move
//! strictly improves coverage, or keeps it and lowers cost.

use std::time::Instant;

use super::flow::CoverageModel;
use super::instance::{CmclpInstance, CmclpSolution, SolveReport, SolverKind};
use super::solution_from_chargers;
use crate::error::Result;

const COST_EPS: f64 = 1e-9;
const MAX_ROUNDS: usize = 10_000;

struct State<'a> {
    instance: &'a CmclpInstance,
    model: &'a CoverageModel,
    chargers: Vec<[u32; 3]>,
    group_val: Vec<u32>,
    coverage: u64,
    cost: f64,
    cap: u32,
    /// Cached marginal gain of adding one charger, per site*3+type.
    gain: Vec<Option<u32>>,
    banned: Option<usize>,
}

impl<'a> State<'a> {
    fn new(instance: &'a CmclpInstance, model: &'a CoverageModel) -> Self {
        let n = instance.sites.len();
        State {
            instance,
            model,
            chargers: vec![[0; 3]; n],
            group_val: vec![0; model.groups.len()],
            coverage: 0,
            cost: 0.0,
            cap: instance.max_chargers_per_type.unwrap_or(u32::MAX),
            gain: vec![None; n * 3],
            banned: None,
        }
    }

    fn station_cost(&self, n: &[u32; 3]) -> f64 {
        self.instance.cost.station_cost(n, n.iter().sum::<u32>() > 0)
    }

    fn delta_cost(&self, site: usize, ty: usize, delta: i32) -> f64 {
        let old = self.chargers[site];
        let mut new = old;
        new[ty] = (new[ty] as i64 + delta as i64) as u32;
        self.station_cost(&new) - self.station_cost(&old)
    }

    /// Coverage change from adding `delta` chargers, without applying it.
    fn eval(&mut self, site: usize, ty: usize, delta: i32) -> i64 {
        let old = self.chargers[site][ty];
        self.chargers[site][ty] = (old as i64 + delta as i64) as u32;
        let mut diff = 0i64;
        for &gid in &self.model.site_groups[site][ty] {
            let g = gid as usize;
            diff += self.model.group_value(g, &self.chargers) as i64 - self.group_val[g] as i64;
        }
        self.chargers[site][ty] = old;
        diff
    }

    fn apply(&mut self, site: usize, ty: usize, delta: i32) {
        self.cost += self.delta_cost(site, ty, delta);
        let old = self.chargers[site][ty];
        self.chargers[site][ty] = (old as i64 + delta as i64) as u32;
        for &gid in &self.model.site_groups[site][ty] {
            let g = gid as usize;
            let v = self.model.group_value(g, &self.chargers);
            self.coverage = (self.coverage as i64 + v as i64 - self.group_val[g] as i64) as u64;
            self.group_val[g] = v;
            for &s in &self.model.groups[g].sites {
                self.gain[s as usize * 3 + ty] = None;
            }
        }
    }

    fn recompute_cost(&mut self) {
        self.cost = self.chargers.iter().map(|n| self.station_cost(n)).sum();
    }

    fn can_add(&self, site: usize, ty: usize) -> bool {
        Some(site) != self.banned
            && self.chargers[site][ty] < self.cap
            && !self.model.site_groups[site][ty].is_empty()
    }

    fn add_gain(&mut self, site: usize, ty: usize) -> u32 {
        let k = site * 3 + ty;
        if let Some(g) = self.gain[k] {
            return g;
        }
        let g = self.eval(site, ty, 1).max(0) as u32;
        self.gain[k] = Some(g);
        g
    }

    /// Adds chargers by best gain-to-cost ratio while the budget allows.
    fn fill(&mut self) -> bool {
        let budget = self.instance.budget();
        let mut changed = false;
        loop {
            let mut best: Option<(f64, u32, usize, usize)> = None;
            for site in 0..self.chargers.len() {
                for ty in 0..3 {
                    if !self.can_add(site, ty) {
                        continue;
                    }
                    let dc = self.delta_cost(site, ty, 1);
                    if self.cost + dc > budget + COST_EPS {
                        continue;
                    }
                    let gain = self.add_gain(site, ty);
                    if gain == 0 {
                        continue;
                    }
                    let ratio = if dc > 0.0 { gain as f64 / dc } else { f64::INFINITY };
                    let better = match best {
                        None => true,
                        Some((r, g, _, _)) => ratio > r || (ratio == r && gain > g),
                    };
                    if better {
                        best = Some((ratio, gain, site, ty));
                    }
                }
            }
            match best {
                Some((_, _, site, ty)) => {
                    self.apply(site, ty, 1);
                    changed = true;
                }
                None => return changed,
            }
        }
    }

    /// Removes chargers whose removal loses no coverage.
    fn prune(&mut self) -> bool {
        let mut changed = false;
        for site in 0..self.chargers.len() {
            for ty in 0..3 {
                while self.chargers[site][ty] > 0 && self.eval(site, ty, -1) == 0 {
                    self.apply(site, ty, -1);
                    changed = true;
                }
            }
        }
        changed
    }

    fn installed(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (site, n) in self.chargers.iter().enumerate() {
            for ty in 0..3 {
                if n[ty] > 0 {
                    out.push((site, ty));
                }
            }
        }
        out
    }

    fn shares_groups(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        if a.1 != b.1 {
            return false;
        }
        let ga = &self.model.site_groups[a.0][a.1];
        let gb = &self.model.site_groups[b.0][b.1];
        // Both lists are ascending.
        let (mut i, mut j) = (0, 0);
        while i < ga.len() && j < gb.len() {
            match ga[i].cmp(&gb[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Best single remove-one-add-one exchange that improves the solution.
    fn swap(&mut self) -> bool {
        let budget = self.instance.budget();
        let mut adds = Vec::new();
        for site in 0..self.chargers.len() {
            for ty in 0..3 {
                if self.can_add(site, ty) {
                    let g = self.add_gain(site, ty);
                    if g > 0 {
                        adds.push((site, ty, g));
                    }
                }
            }
        }
        if adds.is_empty() {
            return false;
        }
        adds.sort_by(|a, b| b.2.cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
        let removes: Vec<(usize, usize, i64)> = self
            .installed()
            .into_iter()
            .map(|(s, t)| (s, t, -self.eval(s, t, -1)))
            .collect();

        // (net coverage, cost after, remove, add)
        let mut best: Option<(i64, f64, (usize, usize), (usize, usize))> = None;
        for &(bs, bt, bgain) in &adds {
            if let Some((net, _, _, _)) = best {
                if (bgain as i64) < net {
                    break;
                }
            }
            for &(rs, rt, loss) in &removes {
                if (rs, rt) == (bs, bt) {
                    continue;
                }
                let mut n_r = self.chargers[rs];
                n_r[rt] -= 1;
                let cost_after = if rs == bs {
                    let mut n = n_r;
                    n[bt] += 1;
                    self.cost - self.station_cost(&self.chargers[rs]) + self.station_cost(&n)
                } else {
                    self.cost - self.station_cost(&self.chargers[rs]) + self.station_cost(&n_r)
                        + self.delta_cost(bs, bt, 1)
                };
                if cost_after > budget + COST_EPS {
                    continue;
                }
                let net = if self.shares_groups((rs, rt), (bs, bt)) {
                    // Submodularity caps the exchange at the plain add gain.
                    if let Some((bn, _, _, _)) = best {
                        if (bgain as i64) < bn {
                            continue;
                        }
                    }
                    let before = self.coverage as i64;
                    self.apply(rs, rt, -1);
                    let g = self.eval(bs, bt, 1);
                    let net = self.coverage as i64 + g - before;
                    self.apply(rs, rt, 1);
                    net
                } else {
                    bgain as i64 - loss
                };
                if net <= 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bn, bc, _, _)) => net > bn || (net == bn && cost_after < bc - COST_EPS),
                };
                if better {
                    best = Some((net, cost_after, (rs, rt), (bs, bt)));
                }
            }
        }
        match best {
            Some((_, _, (rs, rt), (bs, bt))) => {
                self.apply(rs, rt, -1);
                self.apply(bs, bt, 1);
                self.recompute_cost();
                true
            }
            None => false,
        }
    }

    /// Closes one site at a time and refills the freed budget elsewhere.
    fn close_and_refill(&mut self) -> bool {
        let open: Vec<usize> = (0..self.chargers.len())
            .filter(|&s| self.chargers[s].iter().sum::<u32>() > 0)
            .collect();
        for site in open {
            let snapshot = (self.chargers.clone(), self.group_val.clone(), self.coverage, self.cost);
            for ty in 0..3 {
                while self.chargers[site][ty] > 0 {
                    self.apply(site, ty, -1);
                }
            }
            self.banned = Some(site);
            self.fill();
            self.banned = None;
            let better = self.coverage > snapshot.2
                || (self.coverage == snapshot.2 && self.cost < snapshot.3 - COST_EPS);
            if better {
                return true;
            }
            self.chargers = snapshot.0;
            self.group_val = snapshot.1;
            self.coverage = snapshot.2;
            self.cost = snapshot.3;
            self.gain.iter_mut().for_each(|g| *g = None);
        }
        false
    }
}

/// Heuristic solution for instances of any size. Deterministic for a given
/// instance.
pub fn solve_heuristic(instance: &CmclpInstance) -> Result<(CmclpSolution, SolveReport)> {
    instance.validate()?;
    let started = Instant::now();
    let model = CoverageModel::new(instance);
    let mut state = State::new(instance, &model);
    state.fill();
    for _ in 0..MAX_ROUNDS {
        if state.prune() {
            state.recompute_cost();
            state.fill();
            continue;
        }
        if state.swap() {
            state.fill();
            continue;
        }
        if state.close_and_refill() {
            continue;
        }
        break;
    }
    let solution = solution_from_chargers(instance, &model, state.chargers);
    let report = SolveReport {
        solver: SolverKind::Heuristic,
        objective: solution.objective,
        optimal: false,
        bound: None,
        cost: solution.cost(&instance.cost),
        budget: instance.budget(),
        items: instance.items.len(),
        coverable_items: instance.coverable_items(),
        sites: instance.sites.len(),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    Ok((solution, report))
}
