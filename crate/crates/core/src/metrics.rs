//! Operator, user and system KPIs and charging-behaviour statistics.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cmclp::CostModel;
use crate::sim::{ChargingSession, Deployment, EventLog, NsocEvent, SessionKind, TripRecord};

/// Euclidean origin-destination distance is scaled by this factor to get
/// the no-detour baseline.
pub const DETOUR_CIRCUITY: f64 = 1.4;

/// Margin revenue over public sessions.
pub fn charging_revenue(sessions: &[ChargingSession], margins: &[f64; 3]) -> f64 {
    sessions
        .iter()
        .filter(|s| s.kind.is_public())
        .map(|s| s.energy_kwh * margins[s.charger.index()])
        // `Sum` for floats starts from -0.0
        .fold(0.0, |a, b| a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetourSummary {
    /// Mean detour over vehicles with at least one detour trip.
    pub per_vehicle_km: f64,
    /// Mean of driven distance over baseline across detour trips.
    pub ratio: f64,
    pub trips: usize,
    pub vehicles: usize,
    pub total_km: f64,
    /// Extra driving plus queueing time.
    pub total_time_s: f64,
}

/// Baseline distance for one trip.
pub fn detour_baseline_km(trip: &TripRecord) -> f64 {
    DETOUR_CIRCUITY * trip.origin_xy.distance(&trip.destination_xy)
}

pub fn trip_detour_km(trip: &TripRecord) -> f64 {
    (trip.distance_km - detour_baseline_km(trip)).max(0.0)
}

pub fn detour_metrics(trips: &[TripRecord]) -> DetourSummary {
    let flagged: Vec<&TripRecord> = trips.iter().filter(|t| t.enroute_detour).collect();
    if flagged.is_empty() {
        return DetourSummary {
            per_vehicle_km: 0.0,
            ratio: 1.0,
            trips: 0,
            vehicles: 0,
            total_km: 0.0,
            total_time_s: 0.0,
        };
    }
    let vehicles: BTreeSet<u32> = flagged.iter().map(|t| t.vehicle).collect();
    let total_km: f64 = flagged.iter().map(|t| trip_detour_km(t)).fold(0.0, |a, b| a + b);
    let total_time_s = flagged.iter().map(|t| t.extra_travel_s + t.wait_s).fold(0.0, |a, b| a + b);
    // Trips that start and end at the same point have no meaningful ratio.
    let ratios: Vec<f64> = flagged
        .iter()
        .filter(|t| detour_baseline_km(t) > 0.0)
        .map(|t| t.distance_km / detour_baseline_km(t))
        .collect();
    let ratio = if ratios.is_empty() { 1.0 } else { ratios.iter().sum::<f64>() / ratios.len() as f64 };
    DetourSummary {
        per_vehicle_km: total_km / vehicles.len() as f64,
        ratio,
        trips: flagged.len(),
        vehicles: vehicles.len(),
        total_km,
        total_time_s,
    }
}

pub fn detour_cost(total_km: f64, total_time_s: f64, cost: &CostModel) -> f64 {
    total_km * cost.vehicle_cost_per_km + total_time_s / 3600.0 * cost.value_of_time_per_h
}

/// Vehicles with at least one deficit.
pub fn nsoc_count(events: &[NsocEvent]) -> usize {
    events.iter().map(|e| e.vehicle).collect::<BTreeSet<_>>().len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemCosts {
    pub net_benefit: f64,
    pub user_cost: f64,
    pub total_cost: f64,
}

pub fn system_costs(revenue: f64, deployment_cost: f64, detour_cost: f64, nsoc: usize, penalty: f64) -> SystemCosts {
    let user_cost = detour_cost + penalty * nsoc as f64;
    SystemCosts {
        net_benefit: revenue - deployment_cost,
        user_cost,
        total_cost: deployment_cost + user_cost,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindStats {
    pub count: usize,
    pub start_mean_s: f64,
    pub start_std_s: f64,
    pub duration_mean_s: f64,
    pub duration_std_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub destination: Option<KindStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enroute: Option<KindStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residential: Option<KindStats>,
}

impl DistributionStats {
    pub fn get(&self, kind: SessionKind) -> Option<&KindStats> {
        match kind {
            SessionKind::Destination => self.destination.as_ref(),
            SessionKind::EnRoute => self.enroute.as_ref(),
            SessionKind::Residential => self.residential.as_ref(),
        }
    }
}

/// Population mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

fn kind_stats(sessions: &[ChargingSession], kind: SessionKind) -> Option<KindStats> {
    let picked: Vec<&ChargingSession> = sessions.iter().filter(|s| s.kind == kind).collect();
    if picked.is_empty() {
        return None;
    }
    let starts: Vec<f64> = picked.iter().map(|s| s.start_s).collect();
    let durations: Vec<f64> = picked.iter().map(|s| s.duration_s()).collect();
    let (start_mean_s, start_std_s) = mean_std(&starts);
    let (duration_mean_s, duration_std_s) = mean_std(&durations);
    Some(KindStats {
        count: picked.len(),
        start_mean_s,
        start_std_s,
        duration_mean_s,
        duration_std_s,
    })
}

pub fn behavior_stats(sessions: &[ChargingSession]) -> DistributionStats {
    DistributionStats {
        destination: kind_stats(sessions, SessionKind::Destination),
        enroute: kind_stats(sessions, SessionKind::EnRoute),
        residential: kind_stats(sessions, SessionKind::Residential),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub revenue: f64,
    pub deployment_cost: f64,
    pub detour_km_per_vehicle: f64,
    pub detour_ratio: f64,
    pub detour_cost: f64,
    pub nsoc_vehicles: usize,
    pub net_benefit: f64,
    pub user_cost: f64,
    pub system_cost: f64,
    pub public_sessions: usize,
    pub public_energy_kwh: f64,
    pub detour_trips: usize,
    pub stations: usize,
    pub chargers: [u32; 3],
}

pub fn evaluate_kpis(log: &EventLog, deployment: &Deployment, cost: &CostModel) -> KpiReport {
    let revenue = charging_revenue(&log.sessions, &cost.margin_per_kwh);
    let deployment_cost = cost.deployment_cost(deployment);
    let detour = detour_metrics(&log.trips);
    let dcost = detour_cost(detour.total_km, detour.total_time_s, cost);
    let nsoc = nsoc_count(&log.nsoc);
    let sys = system_costs(revenue, deployment_cost, dcost, nsoc, cost.nsoc_penalty);
    KpiReport {
        revenue,
        deployment_cost,
        detour_km_per_vehicle: detour.per_vehicle_km,
        detour_ratio: detour.ratio,
        detour_cost: dcost,
        nsoc_vehicles: nsoc,
        net_benefit: sys.net_benefit,
        user_cost: sys.user_cost,
        system_cost: sys.total_cost,
        public_sessions: log.public_sessions().count(),
        public_energy_kwh: log.public_sessions().map(|s| s.energy_kwh).fold(0.0, |a, b| a + b),
        detour_trips: detour.trips,
        stations: deployment.stations.len(),
        chargers: [0, 1, 2].map(|i| deployment.stations.iter().map(|s| s.chargers[i]).sum()),
    }
}
