//! Per-bin assignment subproblem. Demand items of one charger type in one
//! time bin compete for the chargers of that type installed at the sites in
//! their neighborhoods. Maximum coverage is a bipartite b-matching, solved
//! with unit augmenting paths. Items with identical neighborhoods are pooled.

use std::collections::{BTreeMap, VecDeque};

use super::instance::CmclpInstance;
use crate::sim::ChargerType;

#[derive(Debug, Clone)]
struct Pool {
    items: Vec<u32>,
    /// Local site indices into `Group::sites`.
    sites: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Group {
    pub ty: ChargerType,
    pools: Vec<Pool>,
    /// Global site ids, ascending.
    pub sites: Vec<u32>,
    /// For each local site, the (pool, position in pool's site list) pairs.
    users: Vec<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone)]
pub(crate) struct GroupFlow {
    pub value: u32,
    /// Units routed from each pool to each of its sites.
    per_pool: Vec<Vec<u32>>,
}

#[derive(Debug, Clone)]
pub(crate) struct CoverageModel {
    pub groups: Vec<Group>,
    /// For each (site, type index), the groups the site can serve.
    pub site_groups: Vec<[Vec<u32>; 3]>,
    /// Max number of same-type items in one bin that a site can reach.
    pub site_peak: Vec<[u32; 3]>,
}

impl CoverageModel {
    pub fn new(instance: &CmclpInstance) -> Self {
        let mut grouped: BTreeMap<(usize, u16), BTreeMap<Vec<u32>, Vec<u32>>> = BTreeMap::new();
        for (idx, item) in instance.items.iter().enumerate() {
            let nb = instance.neighborhood(idx);
            if nb.is_empty() {
                continue;
            }
            grouped
                .entry((item.charger.index(), item.bin))
                .or_default()
                .entry(nb.to_vec())
                .or_default()
                .push(idx as u32);
        }
        let n_sites = instance.sites.len();
        let mut site_groups = vec![[Vec::new(), Vec::new(), Vec::new()]; n_sites];
        let mut site_peak = vec![[0u32; 3]; n_sites];
        let mut groups = Vec::with_capacity(grouped.len());
        for ((ty_idx, _bin), by_nb) in grouped {
            let mut sites: Vec<u32> = by_nb.keys().flatten().copied().collect();
            sites.sort_unstable();
            sites.dedup();
            let local = |s: u32| sites.binary_search(&s).expect("site collected above");
            let pools: Vec<Pool> = by_nb
                .into_iter()
                .map(|(nb, items)| Pool {
                    items,
                    sites: nb.iter().map(|&s| local(s)).collect(),
                })
                .collect();
            let mut users = vec![Vec::new(); sites.len()];
            for (pi, p) in pools.iter().enumerate() {
                for (pos, &ls) in p.sites.iter().enumerate() {
                    users[ls].push((pi, pos));
                }
            }
            let gid = groups.len() as u32;
            for (ls, &s) in sites.iter().enumerate() {
                site_groups[s as usize][ty_idx].push(gid);
                let reach: usize = users[ls].iter().map(|&(pi, _)| pools[pi].items.len()).sum();
                let peak = &mut site_peak[s as usize][ty_idx];
                *peak = (*peak).max(reach as u32);
            }
            groups.push(Group {
                ty: ChargerType::ALL[ty_idx],
                pools,
                sites,
                users,
            });
        }
        CoverageModel {
            groups,
            site_groups,
            site_peak,
        }
    }

    pub fn group_flow(&self, gid: usize, chargers: &[[u32; 3]]) -> GroupFlow {
        let g = &self.groups[gid];
        let ty = g.ty.index();
        let cap: Vec<u32> = g.sites.iter().map(|&s| chargers[s as usize][ty]).collect();
        let mut per_pool: Vec<Vec<u32>> = g.pools.iter().map(|p| vec![0; p.sites.len()]).collect();
        let mut load = vec![0u32; g.sites.len()];
        let total_cap: u32 = cap.iter().sum();
        let mut value = 0u32;
        if total_cap == 0 {
            return GroupFlow { value, per_pool };
        }
        // Greedy initial assignment, then augmenting paths for the remainder.
        for (pi, pool) in g.pools.iter().enumerate() {
            let mut supply = pool.items.len() as u32;
            for (pos, &ls) in pool.sites.iter().enumerate() {
                let take = supply.min(cap[ls] - load[ls]);
                load[ls] += take;
                per_pool[pi][pos] += take;
                supply -= take;
                value += take;
            }
        }
        for pi in 0..g.pools.len() {
            let supply = g.pools[pi].items.len() as u32;
            let mut assigned: u32 = per_pool[pi].iter().sum();
            while assigned < supply && value < total_cap {
                if !augment(g, pi, &cap, &mut load, &mut per_pool) {
                    break;
                }
                assigned += 1;
                value += 1;
            }
        }
        GroupFlow { value, per_pool }
    }

    pub fn group_value(&self, gid: usize, chargers: &[[u32; 3]]) -> u32 {
        self.group_flow(gid, chargers).value
    }

    pub fn coverage(&self, chargers: &[[u32; 3]]) -> u64 {
        (0..self.groups.len()).map(|g| self.group_value(g, chargers) as u64).sum()
    }

    /// (item, site) pairs realising maximum coverage for `chargers`, sorted.
    pub fn assignments(&self, chargers: &[[u32; 3]]) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for gid in 0..self.groups.len() {
            let g = &self.groups[gid];
            let flow = self.group_flow(gid, chargers);
            for (pool, units) in g.pools.iter().zip(&flow.per_pool) {
                let mut items = pool.items.iter();
                for (&ls, &u) in pool.sites.iter().zip(units) {
                    for _ in 0..u {
                        let item = *items.next().expect("flow bounded by pool supply");
                        out.push((item, g.sites[ls]));
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Pushes one unit from pool `start` along a shortest augmenting path.
/// A path alternates "pool takes site" and "another pool releases that
/// site", ending at a site with spare capacity.
fn augment(g: &Group, start: usize, cap: &[u32], load: &mut [u32], per_pool: &mut [Vec<u32>]) -> bool {
    // parent[q] = (p, pos_in_p, pos_in_q): p takes the shared site, q releases it.
    let mut parent: Vec<Option<(usize, usize, usize)>> = vec![None; g.pools.len()];
    let mut seen_pool = vec![false; g.pools.len()];
    let mut seen_site = vec![false; g.sites.len()];
    seen_pool[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        for (pos, &ls) in g.pools[p].sites.iter().enumerate() {
            if seen_site[ls] {
                continue;
            }
            seen_site[ls] = true;
            if load[ls] < cap[ls] {
                load[ls] += 1;
                per_pool[p][pos] += 1;
                let mut cur = p;
                while let Some((prev, prev_pos, cur_pos)) = parent[cur] {
                    per_pool[cur][cur_pos] -= 1;
                    per_pool[prev][prev_pos] += 1;
                    cur = prev;
                }
                return true;
            }
            for &(q, qpos) in &g.users[ls] {
                if !seen_pool[q] && per_pool[q][qpos] > 0 {
                    seen_pool[q] = true;
                    parent[q] = Some((p, pos, qpos));
                    queue.push_back(q);
                }
            }
        }
    }
    false
}
