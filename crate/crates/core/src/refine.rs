//! Energy-normalized utilization, full-load hours and the rule-based
//! refinement loop that trims or grows charger counts at existing stations.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cmclp::CostModel;
use crate::error::{config_err, Error, Result};
use crate::metrics::{evaluate_kpis, KpiReport};
use crate::scenario::{ScenarioBundle, DAY_S};
use crate::sim::{
    ChargerType, ChargingBehaviorParams, ChargingSession, Deployment, Regime, SimMode, Simulator, StationId,
};

pub const DAY_H: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeUtilization {
    pub station: StationId,
    pub charger: ChargerType,
    pub count: u32,
    pub energy_kwh: f64,
    pub capacity_kwh: f64,
    pub utilization: f64,
    pub flh_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub horizon_h: f64,
    /// One entry per installed (station, type), ascending.
    pub entries: Vec<TypeUtilization>,
}

impl UtilizationReport {
    pub fn get(&self, station: StationId, charger: ChargerType) -> Option<&TypeUtilization> {
        self.entries
            .binary_search_by_key(&(station, charger.index()), |e| (e.station, e.charger.index()))
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Station sessions grouped by installed (station, type). Sessions without a
/// station are ignored.
fn group_sessions<'s>(
    sessions: &'s [ChargingSession],
    deployment: &Deployment,
) -> Result<BTreeMap<(StationId, usize), Vec<&'s ChargingSession>>> {
    let mut out: BTreeMap<(StationId, usize), Vec<&ChargingSession>> = BTreeMap::new();
    for st in &deployment.stations {
        for ty in ChargerType::ALL {
            if st.count(ty) > 0 {
                out.insert((st.id, ty.index()), Vec::new());
            }
        }
    }
    for s in sessions {
        let Some(id) = s.station else { continue };
        let slot = out.get_mut(&(id, s.charger.index())).ok_or_else(|| {
            Error::Consistency(format!("session {} uses {} at station {id}, which is not installed", s.id, s.charger))
        })?;
        slot.push(s);
    }
    Ok(out)
}

/// Hours within `[0, horizon_h)` during which all `count` chargers are busy.
fn full_load_hours(sessions: &[&ChargingSession], count: u32, horizon_s: f64, key: (StationId, ChargerType)) -> Result<f64> {
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(sessions.len() * 2);
    for s in sessions {
        if s.end_s > s.start_s {
            events.push((s.start_s, 1));
            events.push((s.end_s, -1));
        }
    }
    // Ends sort before starts at equal times: intervals are half-open.
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut busy = 0i64;
    let mut full_s = 0.0;
    let mut since = 0.0f64;
    for (t, d) in events {
        if busy == count as i64 {
            full_s += (t.min(horizon_s) - since.max(0.0)).max(0.0);
        }
        busy += d as i64;
        if busy > count as i64 {
            return Err(Error::Consistency(format!(
                "{busy} concurrent sessions on {} {} chargers at station {} (t = {t} s)",
                count, key.1, key.0
            )));
        }
        since = t.min(horizon_s);
    }
    Ok(full_s / 3600.0)
}

/// Full-load hours per installed (station, type) over one day.
pub fn compute_flh(sessions: &[ChargingSession], deployment: &Deployment) -> Result<BTreeMap<(StationId, ChargerType), f64>> {
    let grouped = group_sessions(sessions, deployment)?;
    let mut out = BTreeMap::new();
    for ((id, ti), list) in grouped {
        let ty = ChargerType::ALL[ti];
        let n = deployment.station(id).expect("grouped from deployment").count(ty);
        out.insert((id, ty), full_load_hours(&list, n, DAY_S, (id, ty))?);
    }
    Ok(out)
}

pub fn compute_utilization(
    sessions: &[ChargingSession],
    deployment: &Deployment,
    horizon_h: f64,
) -> Result<UtilizationReport> {
    if !(horizon_h > 0.0) {
        return Err(config_err("utilization horizon must be positive"));
    }
    let grouped = group_sessions(sessions, deployment)?;
    let mut entries = Vec::with_capacity(grouped.len());
    for ((id, ti), list) in grouped {
        let ty = ChargerType::ALL[ti];
        let count = deployment.station(id).expect("grouped from deployment").count(ty);
        let energy_kwh: f64 = list.iter().map(|s| s.energy_kwh).fold(0.0, |a, b| a + b);
        let capacity_kwh = count as f64 * ty.power_kw() * horizon_h;
        entries.push(TypeUtilization {
            station: id,
            charger: ty,
            count,
            energy_kwh,
            capacity_kwh,
            utilization: energy_kwh / capacity_kwh,
            flh_h: full_load_hours(&list, count, horizon_h * 3600.0, (id, ty))?,
        });
    }
    Ok(UtilizationReport { horizon_h, entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    /// Full-load hours per day at or above which a charger is added.
    pub flh_increment_h: f64,
    /// Utilization below which a charger is removed.
    pub utilization_decrement: f64,
    pub n_min: u32,
    /// Cap on chargers per station.
    pub n_max: u32,
    /// Stations with fewer chargers are closed.
    pub station_min: u32,
    /// Consecutive unchanged iterations that end the loop.
    pub stable_iterations: u32,
    pub max_iterations: u32,
    /// Use a fresh seed per iteration instead of common random numbers.
    pub reseed_each_iteration: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            flh_increment_h: 2.0,
            utilization_decrement: 0.05,
            n_min: 0,
            n_max: 10,
            station_min: 1,
            stable_iterations: 2,
            max_iterations: 50,
            reseed_each_iteration: false,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.utilization_decrement > 0.0 && self.utilization_decrement < 1.0) {
            return Err(config_err("utilization_decrement must lie in (0, 1)"));
        }
        if !(self.flh_increment_h > 0.0 && self.flh_increment_h <= DAY_H) {
            return Err(config_err("flh_increment_h must lie in (0, 24]"));
        }
        if self.n_min > self.n_max {
            return Err(config_err("n_min must not exceed n_max"));
        }
        if self.stable_iterations < 1 {
            return Err(config_err("stable_iterations must be at least 1"));
        }
        if self.max_iterations < self.stable_iterations {
            return Err(config_err("max_iterations must be at least stable_iterations"));
        }
        Ok(())
    }
}

/// One pass of the increment/decrement rules followed by station removal.
/// Types missing from the report are left untouched.
pub fn refine_step(deployment: &Deployment, report: &UtilizationReport, config: &RefineConfig) -> Deployment {
    let mut stations = Vec::with_capacity(deployment.stations.len());
    for st in &deployment.stations {
        let mut st = st.clone();
        let mut total = st.total();
        for ty in ChargerType::ALL {
            let n = st.count(ty);
            if n == 0 {
                continue;
            }
            let Some(u) = report.get(st.id, ty) else { continue };
            if u.flh_h >= config.flh_increment_h && total < config.n_max {
                st.chargers[ty.index()] += 1;
                total += 1;
            } else if u.utilization < config.utilization_decrement && n > config.n_min {
                st.chargers[ty.index()] -= 1;
                total -= 1;
            }
        }
        if total >= config.station_min && total > 0 {
            stations.push(st);
        }
    }
    Deployment::new(stations)
}

/// Chargers added or removed between two deployments of the same stations.
pub fn deployment_changes(before: &Deployment, after: &Deployment) -> u32 {
    let mut changes = 0;
    for st in &before.stations {
        let other = after.station(st.id).map_or([0; 3], |s| s.chargers);
        for i in 0..3 {
            changes += st.chargers[i].abs_diff(other[i]);
        }
    }
    for st in &after.stations {
        if before.station(st.id).is_none() {
            changes += st.total();
        }
    }
    changes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u32,
    /// Deployment simulated in this iteration.
    pub deployment: Deployment,
    pub utilization: UtilizationReport,
    /// Chargers changed by the refinement step that followed.
    pub changes: u32,
    pub deployment_cost: f64,
    pub system_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// No change for the configured number of consecutive iterations.
    Stable,
    /// The deployment returned to an earlier state under a fixed seed.
    Cycle,
    IterationCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    pub regime: Regime,
    pub seed: u64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    pub termination: Termination,
    /// KPIs of the final deployment; its system cost is the loop objective.
    pub final_kpis: KpiReport,
    pub objective: f64,
}

pub fn iteration_seed(seed: u64, iteration: u32, config: &RefineConfig) -> u64 {
    if !config.reseed_each_iteration {
        return seed;
    }
    // splitmix64 finalizer
    let mut z = seed ^ (iteration as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct RefineInput<'a> {
    pub scenario: &'a ScenarioBundle,
    pub regime: Regime,
    pub initial: &'a Deployment,
    pub behavior: &'a ChargingBehaviorParams,
    pub cost: &'a CostModel,
    pub config: &'a RefineConfig,
    pub seed: u64,
}

/// Alternates evaluation runs and refinement steps. Without convergence the
/// lowest-cost deployment seen is returned.
pub fn refine_loop(input: &RefineInput<'_>) -> Result<(Deployment, RefineTrace)> {
    refine_with(&Simulator::new(input.scenario), input)
}

pub fn refine_with(sim: &Simulator<'_>, input: &RefineInput<'_>) -> Result<(Deployment, RefineTrace)> {
    let config = input.config;
    config.validate()?;
    input.cost.validate()?;
    let mut current = input.initial.clone();
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut unchanged = 0;
    let mut termination = Termination::IterationCap;
    for it in 0..config.max_iterations {
        let log = sim.run(
            input.regime,
            SimMode::Evaluation,
            Some(&current),
            input.behavior,
            iteration_seed(input.seed, it, config),
        )?;
        let utilization = compute_utilization(&log.sessions, &current, DAY_H)?;
        let kpis = evaluate_kpis(&log, &current, input.cost);
        let next = refine_step(&current, &utilization, config);
        let changes = deployment_changes(&current, &next);
        iterations.push(IterationRecord {
            iteration: it,
            deployment: current.clone(),
            utilization,
            changes,
            deployment_cost: kpis.deployment_cost,
            system_cost: kpis.system_cost,
        });
        if changes == 0 {
            unchanged += 1;
            if unchanged >= config.stable_iterations {
                termination = Termination::Stable;
                break;
            }
        } else {
            unchanged = 0;
            if !config.reseed_each_iteration && iterations.iter().any(|r| r.deployment == next) {
                termination = Termination::Cycle;
                break;
            }
        }
        current = next;
    }
    let converged = termination == Termination::Stable;
    let chosen = if converged {
        current
    } else {
        let best = iterations
            .iter()
            .min_by(|a, b| a.system_cost.total_cmp(&b.system_cost).then(a.iteration.cmp(&b.iteration)))
            .expect("at least one iteration");
        best.deployment.clone()
    };
    let log = sim.run(input.regime, SimMode::Evaluation, Some(&chosen), input.behavior, input.seed)?;
    let final_kpis = evaluate_kpis(&log, &chosen, input.cost);
    let trace = RefineTrace {
        regime: input.regime,
        seed: input.seed,
        objective: final_kpis.system_cost,
        iterations,
        converged,
        termination,
        final_kpis,
    };
    Ok((chosen, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Point;
    use crate::sim::{SessionKind, Station};

    fn station(id: u32, chargers: [u32; 3]) -> Station {
        Station { id, node: id, location: Point { x: id as f64, y: 0.0 }, chargers }
    }

    fn sess(station: u32, ty: ChargerType, start_h: f64, end_h: f64, energy: f64) -> ChargingSession {
        ChargingSession {
            id: 0,
            vehicle: 0,
            station: Some(station),
            node: station,
            charger: ty,
            start_s: start_h * 3600.0,
            end_s: end_h * 3600.0,
            energy_kwh: energy,
            kind: SessionKind::Destination,
        }
    }

    fn entry(station: u32, ty: ChargerType, count: u32, u: f64, f: f64) -> TypeUtilization {
        TypeUtilization {
            station,
            charger: ty,
            count,
            energy_kwh: 0.0,
            capacity_kwh: 0.0,
            utilization: u,
            flh_h: f,
        }
    }

    #[test]
    fn utilization_arithmetic() {
        let dep = Deployment::new(vec![station(0, [1, 0, 2])]);
        let s = vec![sess(0, ChargerType::Ac7_2, 8.0, 10.0, 17.28), sess(0, ChargerType::Dc150, 1.0, 2.0, 1800.0)];
        let r = compute_utilization(&s, &dep, 24.0).unwrap();
        let ac = r.get(0, ChargerType::Ac7_2).unwrap();
        assert!((ac.capacity_kwh - 172.8).abs() < 1e-9);
        assert!((ac.utilization - 0.10).abs() < 1e-12);
        let dc = r.get(0, ChargerType::Dc150).unwrap();
        assert_eq!(dc.capacity_kwh, 7200.0);
        assert_eq!(dc.utilization, 0.25);
        assert!(r.get(0, ChargerType::Ac22).is_none());
    }

    #[test]
    fn flh_examples() {
        let dep = Deployment::new(vec![station(0, [1, 2, 0])]);
        let s = vec![
            sess(0, ChargerType::Ac7_2, 8.0, 10.0, 1.0),
            sess(0, ChargerType::Ac22, 8.0, 9.5, 1.0),
            sess(0, ChargerType::Ac22, 9.0, 12.0, 1.0),
        ];
        let f = compute_flh(&s, &dep).unwrap();
        assert_eq!(f[&(0, ChargerType::Ac7_2)], 2.0);
        assert_eq!(f[&(0, ChargerType::Ac22)], 0.5);
        assert_eq!(compute_flh(&[], &dep).unwrap()[&(0, ChargerType::Ac7_2)], 0.0);
    }

    #[test]
    fn back_to_back_sessions_do_not_overlap() {
        let dep = Deployment::new(vec![station(0, [1, 0, 0])]);
        let s = vec![sess(0, ChargerType::Ac7_2, 8.0, 9.0, 1.0), sess(0, ChargerType::Ac7_2, 9.0, 10.0, 1.0)];
        assert_eq!(compute_flh(&s, &dep).unwrap()[&(0, ChargerType::Ac7_2)], 2.0);
    }

    #[test]
    fn over_capacity_and_unknown_station_rejected() {
        let dep = Deployment::new(vec![station(0, [1, 0, 0])]);
        let s = vec![sess(0, ChargerType::Ac7_2, 8.0, 10.0, 1.0), sess(0, ChargerType::Ac7_2, 9.0, 11.0, 1.0)];
        assert!(matches!(compute_flh(&s, &dep), Err(Error::Consistency(_))));
        let s = vec![sess(5, ChargerType::Ac7_2, 8.0, 10.0, 1.0)];
        assert!(matches!(compute_utilization(&s, &dep, 24.0), Err(Error::Consistency(_))));
        let s = vec![sess(0, ChargerType::Dc150, 8.0, 10.0, 1.0)];
        assert!(matches!(compute_flh(&s, &dep), Err(Error::Consistency(_))));
    }

    #[test]
    fn step_rules() {
        let cfg = RefineConfig { n_min: 1, ..RefineConfig::default() };
        let dep = Deployment::new(vec![station(0, [4, 0, 0]), station(1, [2, 0, 0])]);
        let report = UtilizationReport {
            horizon_h: 24.0,
            entries: vec![entry(0, ChargerType::Ac7_2, 4, 0.5, 3.0), entry(1, ChargerType::Ac7_2, 2, 0.03, 0.0)],
        };
        let next = refine_step(&dep, &report, &cfg);
        assert_eq!(next.station(0).unwrap().chargers, [5, 0, 0]);
        assert_eq!(next.station(1).unwrap().chargers, [1, 0, 0]);
        assert_eq!(deployment_changes(&dep, &next), 2);
    }

    #[test]
    fn emptied_station_removed() {
        let cfg = RefineConfig::default();
        let dep = Deployment::new(vec![station(0, [1, 1, 0]), station(1, [1, 0, 0])]);
        let report = UtilizationReport {
            horizon_h: 24.0,
            entries: vec![
                entry(0, ChargerType::Ac7_2, 1, 0.0, 0.0),
                entry(0, ChargerType::Ac22, 1, 0.0, 0.0),
                entry(1, ChargerType::Ac7_2, 1, 0.2, 0.0),
            ],
        };
        let next = refine_step(&dep, &report, &cfg);
        assert!(next.station(0).is_none());
        assert_eq!(next.stations.len(), 1);
    }

    #[test]
    fn increment_respects_station_cap() {
        let cfg = RefineConfig { n_max: 2, ..RefineConfig::default() };
        let dep = Deployment::new(vec![station(0, [1, 1, 0])]);
        let report = UtilizationReport {
            horizon_h: 24.0,
            entries: vec![entry(0, ChargerType::Ac7_2, 1, 0.9, 20.0), entry(0, ChargerType::Ac22, 1, 0.9, 20.0)],
        };
        assert_eq!(refine_step(&dep, &report, &cfg), dep);
    }

    #[test]
    fn config_validation() {
        assert!(RefineConfig::default().validate().is_ok());
        assert!(RefineConfig { utilization_decrement: 0.0, ..Default::default() }.validate().is_err());
        assert!(RefineConfig { flh_increment_h: 25.0, ..Default::default() }.validate().is_err());
        assert!(RefineConfig { n_min: 11, ..Default::default() }.validate().is_err());
        assert!(RefineConfig { stable_iterations: 0, ..Default::default() }.validate().is_err());
    }
}
