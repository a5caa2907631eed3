//! Charging decision rules shared by both simulation modes.

use serde::{Deserialize, Serialize};

use super::types::{ChargerClass, ChargerType, Deployment, StationId};
use crate::error::{config_err, Error, Result};
use crate::scenario::{NodeId, Point, RoutingTable};

/// Lower and upper SoC thresholds of the destination-charging probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub lower: f64,
    pub upper: f64,
}

impl Thresholds {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let t = Thresholds { lower, upper };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.lower && self.lower < self.upper && self.upper <= 1.0) {
            return Err(config_err(format!(
                "thresholds must satisfy 0 <= lower < upper <= 1, got ({}, {})",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChargingBehaviorParams {
    pub public: Thresholds,
    pub residential: Thresholds,
    /// Extra fraction of the remaining-plan energy required before departing
    /// without an en-route stop.
    pub enroute_margin: f64,
    /// En-route top-up target is the remaining-plan energy times (1 + buffer).
    pub enroute_buffer: f64,
    /// Longest a vehicle queues at a busy fast charger.
    pub max_wait_s: f64,
    pub service_radius_km: f64,
}

impl Default for ChargingBehaviorParams {
    fn default() -> Self {
        ChargingBehaviorParams {
            public: Thresholds { lower: 0.2, upper: 0.8 },
            residential: Thresholds { lower: 0.3, upper: 0.9 },
            enroute_margin: 0.1,
            enroute_buffer: 0.2,
            max_wait_s: 3600.0,
            service_radius_km: 1.0,
        }
    }
}

impl ChargingBehaviorParams {
    pub fn validate(&self) -> Result<()> {
        self.public.validate()?;
        self.residential.validate()?;
        if !(self.enroute_margin >= 0.0 && self.enroute_buffer >= 0.0) {
            return Err(config_err("en-route margin and buffer must be non-negative"));
        }
        if !(self.max_wait_s >= 0.0) {
            return Err(config_err("max wait must be non-negative"));
        }
        if !(self.service_radius_km >= 0.0) {
            return Err(config_err("service radius must be non-negative"));
        }
        Ok(())
    }
}

/// Probability that a vehicle arriving with state of charge `soc` (fraction
/// of capacity) starts destination charging: 1 at or below the lower
/// threshold, 0 at or above the upper one, linear in between.
pub fn destination_charge_probability(soc: f64, thresholds: &Thresholds) -> Result<f64> {
    thresholds.validate()?;
    let Thresholds { lower, upper } = *thresholds;
    Ok(if soc <= lower {
        1.0
    } else if soc >= upper {
        0.0
    } else {
        (upper - soc) / (upper - lower)
    })
}

/// True when the battery cannot cover the rest of the plan with the safety
/// margin. Equality counts as sufficient.
pub fn should_charge_enroute(soc_kwh: f64, remaining_km: f64, consumption_kwh_per_km: f64, margin: f64) -> Result<bool> {
    if !remaining_km.is_finite() {
        return Err(Error::Simulation("remaining plan is not routable".into()));
    }
    Ok(soc_kwh < remaining_km * consumption_kwh_per_km * (1.0 + margin))
}

/// Constant-power session: returns (energy kWh, duration s).
pub fn charge_session(soc_kwh: f64, capacity_kwh: f64, power_kw: f64, dwell_s: f64, target_kwh: f64) -> Result<(f64, f64)> {
    if soc_kwh < 0.0 || capacity_kwh < 0.0 || power_kw < 0.0 || dwell_s < 0.0 || target_kwh < 0.0 {
        return Err(Error::Simulation(format!(
            "negative charging input (soc {soc_kwh}, capacity {capacity_kwh}, power {power_kw}, dwell {dwell_s}, target {target_kwh})"
        )));
    }
    if power_kw == 0.0 {
        return Ok((0.0, 0.0));
    }
    let energy = (target_kwh - soc_kwh)
        .min(capacity_kwh - soc_kwh)
        .min(power_kw * dwell_s / 3600.0)
        .max(0.0);
    Ok((energy, energy / power_kw * 3600.0))
}

/// Context in which a public charging need arises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChargeContext {
    EnRoute,
    Destination { need_kwh: f64, dwell_s: f64 },
}

pub fn assign_required_charger_type(context: ChargeContext) -> ChargerType {
    match context {
        ChargeContext::EnRoute => ChargerType::Dc150,
        ChargeContext::Destination { need_kwh, dwell_s } => {
            if ChargerType::Ac7_2.power_kw() * dwell_s / 3600.0 >= need_kwh {
                ChargerType::Ac7_2
            } else {
                ChargerType::Ac22
            }
        }
    }
}

/// Occupancy of AC plugs during an evaluation run: the end times of the
/// sessions in progress per (station index, AC type).
#[derive(Debug, Clone)]
pub struct AcPlugs {
    busy_until: Vec<[Vec<f64>; 2]>,
}

impl AcPlugs {
    pub fn new(deployment: &Deployment) -> Self {
        AcPlugs {
            busy_until: vec![[Vec::new(), Vec::new()]; deployment.stations.len()],
        }
    }

    pub fn free_count(&mut self, deployment: &Deployment, station_idx: usize, ty: ChargerType, t: f64) -> u32 {
        let n = deployment.stations[station_idx].count(ty);
        let ends = &mut self.busy_until[station_idx][ty.index()];
        ends.retain(|&e| e > t);
        n.saturating_sub(ends.len() as u32)
    }

    pub fn occupy(&mut self, station_idx: usize, ty: ChargerType, end_s: f64) {
        self.busy_until[station_idx][ty.index()].push(end_s);
    }
}

/// Fast-charger queues during an evaluation run. Each plug is booked
/// first-come first-served in order of request.
#[derive(Debug, Clone)]
pub struct DcPlugs {
    free_at: Vec<Vec<f64>>,
}

impl DcPlugs {
    pub fn new(deployment: &Deployment) -> Self {
        DcPlugs {
            free_at: deployment
                .stations
                .iter()
                .map(|s| vec![0.0; s.count(ChargerType::Dc150) as usize])
                .collect(),
        }
    }

    /// Earliest plug and the time it can start a session for a vehicle
    /// arriving at `arrival_s`.
    pub fn earliest_start(&self, station_idx: usize, arrival_s: f64) -> Option<(usize, f64)> {
        self.free_at[station_idx]
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
            .map(|(plug, &free)| (plug, free.max(arrival_s)))
    }

    pub fn book(&mut self, station_idx: usize, plug: usize, end_s: f64) {
        self.free_at[station_idx][plug] = end_s;
    }
}

/// Nearest station within `radius_km` with a free AC plug at `t`. The
/// required type is preferred when the station has both AC types free.
pub fn find_destination_charger(
    location: Point,
    deployment: &Deployment,
    required: ChargerType,
    t: f64,
    plugs: &mut AcPlugs,
    radius_km: f64,
) -> Option<(StationId, ChargerType)> {
    if required.class() != ChargerClass::Ac {
        return None;
    }
    let mut candidates: Vec<(f64, StationId, usize)> = deployment
        .stations
        .iter()
        .enumerate()
        .map(|(idx, s)| (s.location.distance(&location), s.id, idx))
        .filter(|(d, _, _)| *d <= radius_km)
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let alternate = match required {
        ChargerType::Ac7_2 => ChargerType::Ac22,
        _ => ChargerType::Ac7_2,
    };
    for (_, id, idx) in candidates {
        for ty in [required, alternate] {
            if plugs.free_count(deployment, idx, ty, t) > 0 {
                return Some((id, ty));
            }
        }
    }
    None
}

/// DC stations ordered by the distance a detour through them adds to the
/// trip `origin -> destination` (ties by station id).
pub fn rank_enroute_candidates(
    origin: NodeId,
    destination: NodeId,
    deployment: &Deployment,
    routes: &RoutingTable,
) -> Vec<(usize, StationId, f64)> {
    let direct = routes.distance_km(origin, destination);
    let mut ranked: Vec<(usize, StationId, f64)> = deployment
        .stations
        .iter()
        .enumerate()
        .filter(|(_, s)| s.has_dc())
        .map(|(idx, s)| {
            let via = routes.distance_km(origin, s.node) + routes.distance_km(s.node, destination);
            (idx, s.id, (via - direct).max(0.0))
        })
        .filter(|(_, _, d)| d.is_finite())
        .collect();
    ranked.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.1.cmp(&b.1)));
    ranked
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnrouteChoice {
    pub station: StationId,
    pub station_idx: usize,
    pub plug: usize,
    pub detour_km: f64,
    pub arrival_s: f64,
    pub start_s: f64,
}

/// Lowest-detour DC station whose queue lets the vehicle plug in within
/// `max_wait_s` of reaching it, departing from `origin` at `t`.
pub fn find_enroute_charger(
    origin: NodeId,
    destination: NodeId,
    deployment: &Deployment,
    routes: &RoutingTable,
    t: f64,
    plugs: &DcPlugs,
    max_wait_s: f64,
) -> Option<EnrouteChoice> {
    rank_enroute_candidates(origin, destination, deployment, routes)
        .into_iter()
        .find_map(|(idx, id, detour)| {
            let node = deployment.stations[idx].node;
            let arrival = t + routes.travel_time_s(origin, node);
            let (plug, start) = plugs.earliest_start(idx, arrival)?;
            (start - arrival <= max_wait_s).then_some(EnrouteChoice {
                station: id,
                station_idx: idx,
                plug,
                detour_km: detour,
                arrival_s: arrival,
                start_s: start,
            })
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::types::Station;

    fn th() -> Thresholds {
        Thresholds { lower: 0.2, upper: 0.8 }
    }

    #[test]
    fn probability_branches() {
        assert_eq!(destination_charge_probability(0.10, &th()).unwrap(), 1.0);
        assert_eq!(destination_charge_probability(0.90, &th()).unwrap(), 0.0);
        assert!((destination_charge_probability(0.50, &th()).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(destination_charge_probability(0.2, &th()).unwrap(), 1.0);
        assert_eq!(destination_charge_probability(0.8, &th()).unwrap(), 0.0);
    }

    #[test]
    fn probability_rejects_inverted_thresholds() {
        let bad = Thresholds { lower: 0.8, upper: 0.2 };
        assert!(matches!(destination_charge_probability(0.5, &bad), Err(Error::Config(_))));
        let equal = Thresholds { lower: 0.5, upper: 0.5 };
        assert!(destination_charge_probability(0.5, &equal).is_err());
    }

    #[test]
    fn enroute_rule_is_strict() {
        assert!(should_charge_enroute(5.0, 50.0, 0.16, 0.0).unwrap());
        assert!(!should_charge_enroute(20.0, 50.0, 0.16, 0.0).unwrap());
        assert!(!should_charge_enroute(8.0, 50.0, 0.16, 0.0).unwrap());
        assert!(should_charge_enroute(1.0, f64::INFINITY, 0.16, 0.0).is_err());
    }

    #[test]
    fn session_branches() {
        let (e, d) = charge_session(10.0, 64.0, 7.2, 7200.0, 64.0).unwrap();
        assert!((e - 14.4).abs() < 1e-12);
        assert!((d - 7200.0).abs() < 1e-9);
        let (e, _) = charge_session(60.0, 64.0, 150.0, 3600.0, 64.0).unwrap();
        assert!((e - 4.0).abs() < 1e-12);
        assert_eq!(charge_session(30.0, 64.0, 22.0, 3600.0, 30.0).unwrap(), (0.0, 0.0));
        assert!(charge_session(-1.0, 64.0, 22.0, 3600.0, 30.0).is_err());
    }

    #[test]
    fn required_type_rule() {
        assert_eq!(assign_required_charger_type(ChargeContext::EnRoute), ChargerType::Dc150);
        let ctx = |need_kwh, hours: f64| ChargeContext::Destination { need_kwh, dwell_s: hours * 3600.0 };
        assert_eq!(assign_required_charger_type(ctx(10.0, 2.0)), ChargerType::Ac7_2);
        assert_eq!(assign_required_charger_type(ctx(20.0, 1.0)), ChargerType::Ac22);
    }

    fn station(id: StationId, x: f64, y: f64, chargers: [u32; 3]) -> Station {
        Station {
            id,
            node: id,
            location: Point::new(x, y),
            chargers,
        }
    }

    #[test]
    fn destination_search() {
        let near = Deployment::new(vec![station(0, 0.5, 0.0, [1, 0, 0])]);
        let mut plugs = AcPlugs::new(&near);
        let found = find_destination_charger(Point::new(0.0, 0.0), &near, ChargerType::Ac7_2, 0.0, &mut plugs, 1.0);
        assert_eq!(found, Some((0, ChargerType::Ac7_2)));

        let far = Deployment::new(vec![station(0, 1.5, 0.0, [1, 0, 0])]);
        let mut plugs = AcPlugs::new(&far);
        assert_eq!(
            find_destination_charger(Point::new(0.0, 0.0), &far, ChargerType::Ac7_2, 0.0, &mut plugs, 1.0),
            None
        );

        let tie = Deployment::new(vec![station(7, 0.6, 0.0, [1, 0, 0]), station(3, 0.0, 0.6, [1, 0, 0])]);
        let mut plugs = AcPlugs::new(&tie);
        let found = find_destination_charger(Point::new(0.0, 0.0), &tie, ChargerType::Ac7_2, 0.0, &mut plugs, 1.0);
        assert_eq!(found, Some((3, ChargerType::Ac7_2)));
    }

    #[test]
    fn busy_plug_is_skipped_until_released() {
        let dep = Deployment::new(vec![station(0, 0.0, 0.0, [1, 0, 0]), station(1, 0.8, 0.0, [0, 1, 0])]);
        let mut plugs = AcPlugs::new(&dep);
        plugs.occupy(0, ChargerType::Ac7_2, 100.0);
        let here = Point::new(0.0, 0.0);
        assert_eq!(
            find_destination_charger(here, &dep, ChargerType::Ac7_2, 50.0, &mut plugs, 1.0),
            Some((1, ChargerType::Ac22))
        );
        assert_eq!(
            find_destination_charger(here, &dep, ChargerType::Ac7_2, 100.0, &mut plugs, 1.0),
            Some((0, ChargerType::Ac7_2))
        );
    }

    #[test]
    fn dc_queue_respects_max_wait() {
        let dep = Deployment::new(vec![station(0, 0.0, 0.0, [0, 0, 1])]);
        let mut q = DcPlugs::new(&dep);
        assert_eq!(q.earliest_start(0, 10.0), Some((0, 10.0)));
        q.book(0, 0, 5000.0);
        assert_eq!(q.earliest_start(0, 10.0), Some((0, 5000.0)));
    }
}
