//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use evcharge::cmclp::{CandidateSite, CmclpInstance, CostModel, DemandItem, BIN_COUNT};
use evcharge::pipeline::PipelineConfig;
use evcharge::scenario::{Point, ScenarioBundle};
use evcharge::sim::{ChargerType, ChargingSession, Deployment, SessionKind, Station};
use rand::Rng;

pub fn reference_config() -> PipelineConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.toml");
    PipelineConfig::load(&path).expect("reference settings parse")
}

pub fn reference_bundle() -> ScenarioBundle {
    let cfg = reference_config();
    ScenarioBundle::generate(&cfg.scenario, &cfg.behavior_or_default()).expect("reference scenario generates")
}

/// Random instance with at most `max_sites` sites and `max_items` items.
/// Events span 1 to 3 consecutive bins of a single charger type, inside a
/// narrow window so that bins collide.
pub fn random_instance(rng: &mut impl Rng, max_sites: usize, max_items: usize, cap: u32) -> CmclpInstance {
    let n_sites = rng.random_range(1..=max_sites);
    let sites = (0..n_sites)
        .map(|i| CandidateSite {
            id: i as u32,
            location: Point::new(i as f64, 0.0),
        })
        .collect();
    let mut neighborhoods = Vec::new();
    let mut items = Vec::new();
    let target = rng.random_range(1..=max_items);
    while items.len() < target {
        let event = neighborhoods.len() as u32;
        let nb: Vec<u32> = (0..n_sites as u32).filter(|_| rng.random_bool(0.45)).collect();
        neighborhoods.push(nb);
        let ty = match rng.random_range(0..10) {
            0..=4 => ChargerType::Ac7_2,
            5..=8 => ChargerType::Ac22,
            _ => ChargerType::Dc150,
        };
        let start: u16 = rng.random_range(16..20);
        let len: u16 = rng.random_range(1..=3);
        for bin in start..start + len {
            if items.len() < target && (bin as usize) < BIN_COUNT {
                items.push(DemandItem { event, bin, charger: ty });
            }
        }
    }
    let cost = CostModel {
        budget: rng.random_range(0.0..70.0),
        ..CostModel::default()
    };
    let mut inst = CmclpInstance::new(sites, neighborhoods, items, cost).expect("valid random instance");
    inst.max_chargers_per_type = Some(cap);
    inst
}

/// Daily cost written out from the cost table: equipment plus a site charge
/// that is the DC rate whenever any DC charger is present.
pub fn oracle_cost(cost: &CostModel, chargers: &[[u32; 3]]) -> f64 {
    let mut total = 0.0;
    for n in chargers {
        if n == &[0, 0, 0] {
            continue;
        }
        total += if n[2] > 0 { cost.site_dc } else { cost.site_ac };
        for ty in 0..3 {
            total += n[ty] as f64 * (cost.capex[ty] + cost.opex[ty]);
        }
    }
    total
}

/// Largest number of items that can each take a distinct charger slot.
/// Items only compete within one (type, bin), so each group is searched on
/// its own by trying every assignment.
pub fn oracle_coverage(inst: &CmclpInstance, chargers: &[[u32; 3]]) -> u64 {
    let mut groups: BTreeMap<(usize, u16), Vec<&[u32]>> = BTreeMap::new();
    for (k, item) in inst.items.iter().enumerate() {
        groups.entry((item.charger.index(), item.bin)).or_default().push(inst.neighborhood(k));
    }
    let mut total = 0;
    for ((ty, _), nbs) in groups {
        let mut caps: Vec<u32> = chargers.iter().map(|n| n[ty]).collect();
        total += best_assignment(&nbs, &mut caps, 0);
    }
    total
}

fn best_assignment(nbs: &[&[u32]], caps: &mut [u32], k: usize) -> u64 {
    if k == nbs.len() {
        return 0;
    }
    let mut best = best_assignment(nbs, caps, k + 1);
    for &s in nbs[k] {
        if caps[s as usize] > 0 {
            caps[s as usize] -= 1;
            best = best.max(1 + best_assignment(nbs, caps, k + 1));
            caps[s as usize] += 1;
        }
    }
    best
}

/// Best coverage over every charger vector with entries in `0..=cap` whose
/// cost fits the budget. Counts of a type no item at that site could use are
/// held at zero since they only add cost.
pub fn brute_force_optimum(inst: &CmclpInstance, cap: u32) -> u64 {
    let n = inst.sites.len();
    let mut useful = vec![[false; 3]; n];
    for (k, item) in inst.items.iter().enumerate() {
        for &s in inst.neighborhood(k) {
            useful[s as usize][item.charger.index()] = true;
        }
    }
    let vars: Vec<(usize, usize)> = (0..n).flat_map(|s| (0..3).map(move |t| (s, t))).filter(|&(s, t)| useful[s][t]).collect();
    let mut chargers = vec![[0u32; 3]; n];
    let mut memo = HashMap::new();
    enumerate(inst, cap, &vars, 0, &mut chargers, &mut memo)
}

fn enumerate(
    inst: &CmclpInstance,
    cap: u32,
    vars: &[(usize, usize)],
    i: usize,
    chargers: &mut Vec<[u32; 3]>,
    memo: &mut HashMap<Vec<[u32; 3]>, u64>,
) -> u64 {
    if oracle_cost(&inst.cost, chargers) > inst.budget() + 1e-9 {
        // Costs only grow as counts rise, so nothing below is feasible.
        return 0;
    }
    if i == vars.len() {
        return *memo.entry(chargers.clone()).or_insert_with(|| oracle_coverage(inst, chargers));
    }
    let (s, t) = vars[i];
    let mut best = 0;
    for v in 0..=cap {
        chargers[s][t] = v;
        best = best.max(enumerate(inst, cap, vars, i + 1, chargers, memo));
    }
    chargers[s][t] = 0;
    best
}

pub fn station(id: u32, chargers: [u32; 3]) -> Station {
    Station {
        id,
        node: id,
        location: Point::new(id as f64, 0.0),
        chargers,
    }
}

pub fn deployment(stations: &[[u32; 3]]) -> Deployment {
    Deployment::new(stations.iter().enumerate().map(|(i, &c)| station(i as u32, c)).collect())
}

/// Random sessions that never exceed the installed counts, with integer
/// second boundaries and energy delivered at full rated power.
pub fn random_sessions(rng: &mut impl Rng, dep: &Deployment) -> Vec<ChargingSession> {
    let mut out = Vec::new();
    for st in &dep.stations {
        for ty in ChargerType::ALL {
            for _ in 0..st.count(ty) {
                // Each physical charger hosts a chain of non-overlapping sessions.
                let mut t: u32 = rng.random_range(0..7200);
                while t < 86_400 {
                    let len = rng.random_range(60..4 * 3600);
                    let end = (t + len).min(86_400);
                    out.push(ChargingSession {
                        id: out.len() as u32,
                        vehicle: 0,
                        station: Some(st.id),
                        node: st.node,
                        charger: ty,
                        start_s: t as f64,
                        end_s: end as f64,
                        energy_kwh: ty.power_kw() * (end - t) as f64 / 3600.0,
                        kind: SessionKind::Destination,
                    });
                    t = end + if rng.random_bool(0.3) { 0 } else { rng.random_range(1..6 * 3600) };
                }
            }
        }
    }
    out
}

/// Per-second occupancy scan: (busy charger-seconds, seconds with every
/// charger busy) per (station, type).
pub fn occupancy_scan(sessions: &[ChargingSession], dep: &Deployment) -> BTreeMap<(u32, usize), (u64, u64)> {
    let mut out = BTreeMap::new();
    for st in &dep.stations {
        for ty in ChargerType::ALL {
            let n = st.count(ty);
            if n == 0 {
                continue;
            }
            let mut busy = vec![0u32; 86_400];
            for s in sessions.iter().filter(|s| s.station == Some(st.id) && s.charger == ty) {
                for sec in (s.start_s as usize)..(s.end_s as usize).min(86_400) {
                    busy[sec] += 1;
                }
            }
            let occupied: u64 = busy.iter().map(|&b| b as u64).sum();
            let full = busy.iter().filter(|&&b| b == n).count() as u64;
            out.insert((st.id, ty.index()), (occupied, full));
        }
    }
    out
}

/// Random stations on distinct network nodes.
pub fn random_deployment(rng: &mut impl Rng, bundle: &ScenarioBundle, stations: usize) -> Deployment {
    let n = bundle.network.nodes.len() as u32;
    let mut nodes: Vec<u32> = (0..n).collect();
    for i in 0..nodes.len() {
        let j = rng.random_range(i..nodes.len());
        nodes.swap(i, j);
    }
    let list = nodes
        .into_iter()
        .take(stations)
        .map(|node| {
            let mut chargers = [rng.random_range(0..3), rng.random_range(0..3), rng.random_range(0..2)];
            if chargers == [0, 0, 0] {
                chargers[0] = 1;
            }
            Station {
                id: node,
                node,
                location: bundle.network.point(node),
                chargers,
            }
        })
        .collect();
    Deployment::new(list)
}

/// Largest simultaneous session count per (station, type), by sweeping
/// half-open intervals.
pub fn peak_concurrency(sessions: &[ChargingSession]) -> BTreeMap<(u32, usize), u32> {
    let mut events: BTreeMap<(u32, usize), Vec<(f64, i32)>> = BTreeMap::new();
    for s in sessions {
        if let Some(id) = s.station {
            let e = events.entry((id, s.charger.index())).or_default();
            e.push((s.start_s, 1));
            e.push((s.end_s, -1));
        }
    }
    events
        .into_iter()
        .map(|(k, mut ev)| {
            ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let (mut cur, mut peak) = (0i32, 0i32);
            for (_, d) in ev {
                cur += d;
                peak = peak.max(cur);
            }
            (k, peak as u32)
        })
        .collect()
}

/// Checks every per-run invariant of a simulated day; returns the first
/// failure.
pub fn check_log(
    bundle: &ScenarioBundle,
    log: &evcharge::sim::EventLog,
    dep: Option<&Deployment>,
) -> Result<(), String> {
    use evcharge::sim::{Regime, SimMode};
    let n = bundle.vehicles.len();
    let mut driven = vec![0.0; n];
    let mut charged = vec![0.0; n];
    for t in &log.trips {
        driven[t.vehicle as usize] += t.distance_km;
    }
    for s in &log.sessions {
        if !(s.energy_kwh >= 0.0) || !(s.end_s >= s.start_s) {
            return Err(format!("session {} has energy {} over [{}, {}]", s.id, s.energy_kwh, s.start_s, s.end_s));
        }
        charged[s.vehicle as usize] += s.energy_kwh;
        match (log.regime, s.kind) {
            (Regime::Destination, SessionKind::EnRoute) | (Regime::EnRoute, SessionKind::Destination) => {
                return Err(format!("session {} of kind {:?} under {:?}", s.id, s.kind, log.regime));
            }
            _ => {}
        }
        if log.mode == SimMode::Evaluation && s.kind != SessionKind::Residential {
            let st = s.station.and_then(|id| dep.and_then(|d| d.station(id)));
            match st {
                Some(st) if st.count(s.charger) > 0 => {}
                _ => return Err(format!("session {} uses an uninstalled charger", s.id)),
            }
        }
    }
    for vd in &log.vehicles {
        let v = vd.vehicle as usize;
        let expected = vd.initial_soc_kwh - driven[v] * vd.consumption_kwh_per_km + charged[v];
        if (vd.final_soc_kwh - expected).abs() > 1e-6 {
            return Err(format!("vehicle {v}: final SoC {} but closure gives {expected}", vd.final_soc_kwh));
        }
        // Replay with each trip's energy taken at departure; SoC can then
        // only be underestimated, so a session topping above capacity is a
        // genuine overflow.
        let mut timeline: Vec<(f64, f64)> = log
            .trips
            .iter()
            .filter(|t| t.vehicle as usize == v)
            .map(|t| (t.departure_s, -t.distance_km * vd.consumption_kwh_per_km))
            .collect();
        timeline.extend(log.sessions.iter().filter(|s| s.vehicle as usize == v).map(|s| (s.end_s, s.energy_kwh)));
        timeline.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut soc = vd.initial_soc_kwh;
        for (_, delta) in timeline {
            soc += delta;
            if delta > 0.0 && soc > vd.capacity_kwh + 1e-6 {
                return Err(format!("vehicle {v}: SoC {soc} exceeds capacity {}", vd.capacity_kwh));
            }
        }
    }
    if let (SimMode::Evaluation, Some(dep)) = (log.mode, dep) {
        for ((id, ty), peak) in peak_concurrency(&log.sessions) {
            let installed = dep.station(id).map_or(0, |s| s.chargers[ty]);
            if peak > installed {
                return Err(format!("station {id} type {ty}: {peak} concurrent sessions on {installed} chargers"));
            }
        }
    }
    Ok(())
}
