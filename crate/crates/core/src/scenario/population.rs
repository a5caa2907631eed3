//! Households, activity plans, TAZ partition and the EV fleet.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{round_half_up, ScenarioConfig, VehicleSpec};
use super::network::{NetworkGraph, NodeId, Point, RoutingTable};
use crate::error::{config_err, Error, Result};

pub const DAY_S: f64 = 86_400.0;

pub type HouseholdId = u32;
pub type VehicleId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Taz {
    pub id: u32,
    pub centroid: NodeId,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivityKind {
    Home,
    Work,
    Shop,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub kind: ActivityKind,
    pub node: NodeId,
    pub start_s: f64,
    pub duration_s: f64,
}

impl Activity {
    pub fn end_s(&self) -> f64 {
        self.start_s + self.duration_s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityPlan {
    pub vehicle: VehicleId,
    pub activities: Vec<Activity>,
}

impl ActivityPlan {
    pub fn validate(&self) -> Result<()> {
        let acts = &self.activities;
        let bad = |m: &str| Err(Error::Input(format!("plan of vehicle {}: {m}", self.vehicle)));
        let (Some(first), Some(last)) = (acts.first(), acts.last()) else {
            return bad("empty plan");
        };
        if acts.len() < 2 {
            return bad("plan needs at least two activities");
        }
        if first.kind != ActivityKind::Home || last.kind != ActivityKind::Home || first.node != last.node {
            return bad("plan must start and end at the same home");
        }
        for a in acts {
            if !(a.start_s >= 0.0 && a.duration_s >= 0.0 && a.end_s() <= DAY_S + 1e-6) {
                return bad("activity outside the simulated day");
            }
        }
        if acts.windows(2).any(|w| w[1].start_s < w[0].end_s() - 1e-6) {
            return bad("activity times decrease");
        }
        Ok(())
    }

    /// Number of trips implied by the plan.
    pub fn trip_count(&self) -> usize {
        self.activities.len().saturating_sub(1)
    }

    /// Network distance of trips `from_trip..` (trip j joins activity j and j+1).
    pub fn remaining_distance_km(&self, routes: &RoutingTable, from_trip: usize) -> f64 {
        self.activities
            .windows(2)
            .skip(from_trip)
            .map(|w| routes.distance_km(w[0].node, w[1].node))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub id: HouseholdId,
    pub home_node: NodeId,
    pub owns_ev: bool,
    /// 7.2 kW home charger.
    pub home_charger: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: VehicleId,
    pub household: HouseholdId,
    pub is_ev: bool,
    pub spec: VehicleSpec,
}

const STREAM_POPULATION: u64 = 2;
const STREAM_PLANS: u64 = 3;
const STREAM_FLEET: u64 = 4;

pub fn partition_taz(config: &ScenarioConfig, network: &NetworkGraph) -> Vec<Taz> {
    let cols = config.grid_cols;
    let rows = config.grid_rows;
    let block = config.taz_block;
    let bcols = cols.div_ceil(block);
    let brows = rows.div_ceil(block);
    let mut tazs = Vec::with_capacity((bcols * brows) as usize);
    for br in 0..brows {
        for bc in 0..bcols {
            let nodes: Vec<NodeId> = (br * block..((br + 1) * block).min(rows))
                .flat_map(|r| (bc * block..((bc + 1) * block).min(cols)).map(move |c| r * cols + c))
                .collect();
            let n = nodes.len() as f64;
            let mean = nodes.iter().fold(Point::new(0.0, 0.0), |acc, &id| {
                let p = network.point(id);
                Point::new(acc.x + p.x / n, acc.y + p.y / n)
            });
            let centroid = *nodes
                .iter()
                .min_by(|&&a, &&b| {
                    network
                        .point(a)
                        .distance(&mean)
                        .total_cmp(&network.point(b).distance(&mean))
                        .then(a.cmp(&b))
                })
                .expect("TAZ blocks are non-empty");
            tazs.push(Taz {
                id: tazs.len() as u32,
                centroid,
                nodes,
            });
        }
    }
    tazs
}

/// Households with EV/home-charger flags and one activity plan per vehicle.
pub fn generate_population(
    config: &ScenarioConfig,
    network: &NetworkGraph,
) -> Result<(Vec<Household>, Vec<ActivityPlan>)> {
    config.validate()?;
    let n_nodes = network.node_count();
    let capacity = n_nodes as u64 * config.max_households_per_node as u64;
    if (config.households as u64) > capacity {
        return Err(config_err(format!(
            "{} households do not fit on {n_nodes} nodes at {} per node",
            config.households, config.max_households_per_node
        )));
    }
    let routes = network.routing_table();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_POPULATION);

    let mut occupancy = vec![0u32; n_nodes];
    let mut households = Vec::with_capacity(config.households as usize);
    for id in 0..config.households {
        let home_node = loop {
            let node = rng.random_range(0..n_nodes);
            if occupancy[node] < config.max_households_per_node {
                occupancy[node] += 1;
                break node as NodeId;
            }
        };
        households.push(Household {
            id,
            home_node,
            owns_ev: false,
            home_charger: false,
        });
    }

    let n_ev = round_half_up(config.households as f64 * config.ev_penetration) as usize;
    let mut order: Vec<usize> = (0..households.len()).collect();
    order.shuffle(&mut rng);
    let mut ev_idx: Vec<usize> = order[..n_ev].to_vec();
    ev_idx.sort_unstable();
    for &i in &ev_idx {
        households[i].owns_ev = true;
    }
    let n_home = round_half_up(n_ev as f64 * config.home_charger_share) as usize;
    ev_idx.shuffle(&mut rng);
    for &i in &ev_idx[..n_home] {
        households[i].home_charger = true;
    }

    let mut plan_rng = ChaCha8Rng::seed_from_u64(config.seed);
    plan_rng.set_stream(STREAM_PLANS);
    let work_weights = work_location_weights(config, network);
    let plans = households
        .iter()
        .map(|h| build_plan(config, &routes, &work_weights, h, &mut plan_rng))
        .collect::<Result<Vec<_>>>()?;
    Ok((households, plans))
}

fn work_location_weights(config: &ScenarioConfig, network: &NetworkGraph) -> Vec<f64> {
    let cx = (config.grid_cols - 1) as f64 * config.spacing_km / 2.0;
    let cy = (config.grid_rows - 1) as f64 * config.spacing_km / 2.0;
    let centre = Point::new(cx, cy);
    let decay = config.plans.work_center_decay_km.max(1e-9);
    let mut cumulative = Vec::with_capacity(network.node_count());
    let mut acc = 0.0;
    for n in &network.nodes {
        acc += (-n.point().distance(&centre) / decay).exp();
        cumulative.push(acc);
    }
    cumulative
}

fn pick_weighted(cumulative: &[f64], rng: &mut ChaCha8Rng) -> NodeId {
    let total = *cumulative.last().expect("non-empty network");
    let u = rng.random::<f64>() * total;
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1) as NodeId
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn build_plan(
    config: &ScenarioConfig,
    routes: &RoutingTable,
    work_weights: &[f64],
    household: &Household,
    rng: &mut ChaCha8Rng,
) -> Result<ActivityPlan> {
    let shape = &config.plans;
    let n_nodes = work_weights.len();
    let home = household.home_node;
    let w = shape.template_weights;
    let u = rng.random::<f64>() * w.iter().sum::<f64>();
    let template = if u < w[0] {
        0
    } else if u < w[0] + w[1] {
        1
    } else {
        2
    };

    // (kind, node, planned start or None to follow the previous activity, duration)
    let mut stops: Vec<(ActivityKind, NodeId, Option<f64>, f64)> = Vec::new();
    match template {
        0 | 1 => {
            let work = pick_weighted(work_weights, rng);
            let start = (shape.work_start_h + uniform(rng, -1.0, 1.0) * shape.work_start_jitter_h) * 3600.0;
            let dur = (shape.work_duration_h + uniform(rng, -1.0, 1.0) * shape.work_duration_jitter_h) * 3600.0;
            stops.push((ActivityKind::Work, work, Some(start), dur.max(0.0)));
            if template == 1 {
                let shop = rng.random_range(0..n_nodes) as NodeId;
                let dur = uniform(rng, shape.shop_duration_min_h, shape.shop_duration_max_h) * 3600.0;
                stops.push((ActivityKind::Shop, shop, None, dur));
            }
        }
        _ => {
            let other = rng.random_range(0..n_nodes) as NodeId;
            let start = uniform(rng, shape.other_start_min_h, shape.other_start_max_h) * 3600.0;
            let dur = uniform(rng, shape.other_duration_min_h, shape.other_duration_max_h) * 3600.0;
            stops.push((ActivityKind::Other, other, Some(start), dur));
        }
    }

    let mut activities = Vec::with_capacity(stops.len() + 2);
    let first_tt = routes.travel_time_s(home, stops[0].1);
    let first_start = stops[0].2.unwrap_or(0.0);
    let leave_home = (first_start - first_tt).max(0.0);
    activities.push(Activity {
        kind: ActivityKind::Home,
        node: home,
        start_s: 0.0,
        duration_s: leave_home,
    });
    let mut clock = leave_home;
    let mut prev = home;
    for (kind, node, planned, dur) in stops {
        let arrival = clock + routes.travel_time_s(prev, node);
        let start = planned.map_or(arrival, |p| p.max(arrival));
        // Any slack between arrival and the planned start is spent at the activity.
        let duration = dur + (start - arrival);
        activities.push(Activity {
            kind,
            node,
            start_s: arrival,
            duration_s: duration,
        });
        clock = arrival + duration;
        prev = node;
    }
    let back = clock + routes.travel_time_s(prev, home);
    let latest_home = DAY_S - 1800.0;
    if back > latest_home {
        // Shorten the longest out-of-home activity so the vehicle is home by 23:30.
        let overshoot = back - latest_home;
        let (idx, _) = activities
            .iter()
            .enumerate()
            .skip(1)
            .max_by(|a, b| a.1.duration_s.total_cmp(&b.1.duration_s))
            .expect("at least one out-of-home activity");
        if activities[idx].duration_s < overshoot {
            return Err(config_err(format!(
                "plan for household {} cannot fit in one day; reduce grid size or activity durations",
                household.id
            )));
        }
        activities[idx].duration_s -= overshoot;
        for a in activities.iter_mut().skip(idx + 1) {
            a.start_s -= overshoot;
        }
    }
    let back = {
        let last = activities.last().expect("non-empty");
        last.end_s() + routes.travel_time_s(last.node, home)
    };
    activities.push(Activity {
        kind: ActivityKind::Home,
        node: home,
        start_s: back,
        duration_s: DAY_S - back,
    });
    let plan = ActivityPlan {
        vehicle: household.id,
        activities,
    };
    plan.validate()?;
    Ok(plan)
}

/// One vehicle per household. EV initial SoC is jittered per
/// `initial_soc_spread`.
pub fn assign_fleet(config: &ScenarioConfig, households: &[Household]) -> Result<Vec<Vehicle>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_FLEET);
    Ok(households
        .iter()
        .map(|h| {
            let mut spec = config.vehicle;
            if h.owns_ev && config.initial_soc_spread > 0.0 {
                let draw = rng.random::<f64>();
                spec.initial_soc = (spec.initial_soc - config.initial_soc_spread * draw).clamp(0.0, 1.0);
            }
            Vehicle {
                id: h.id,
                household: h.id,
                is_ev: h.owns_ev,
                spec,
            }
        })
        .collect())
}
