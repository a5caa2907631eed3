//! Report files. Each is TOML with a one-line comment header holding the
//! wall time, so the body is reproducible.

use evcharge::cmclp::SolverKind;
use evcharge::metrics::{DistributionStats, KpiReport};
use evcharge::refine::Termination;
use evcharge::sim::{ChargingSession, Regime, SessionKind};
use serde::{Deserialize, Serialize};

pub const DEMAND_SCHEMA: &str = "evcharge.demand/1";
pub const DEPLOY_SCHEMA: &str = "evcharge.deploy/1";
pub const REFINE_SCHEMA: &str = "evcharge.refine/1";
pub const KPI_SCHEMA: &str = "evcharge.kpi/1";

#[derive(Debug, Serialize, Deserialize)]
pub struct DemandReport {
    pub schema: String,
    pub table_schema: String,
    pub regime: Regime,
    pub seed: u64,
    pub scenario_sha256: String,
    pub demand_sha256: String,
    pub events: usize,
    pub destination_events: usize,
    pub enroute_events: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DeployReport {
    pub schema: String,
    pub label: String,
    pub regime: Regime,
    pub scenario_sha256: String,
    pub demand_sha256: String,
    pub deployment_sha256: String,
    pub solver: SolverKind,
    pub optimal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<u64>,
    pub covered_items: u64,
    pub items: usize,
    pub coverable_items: usize,
    pub candidate_sites: usize,
    pub budget: f64,
    pub cost: f64,
    pub stations: usize,
    pub chargers: [u32; 3],
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RefineReport {
    pub schema: String,
    pub label: String,
    pub regime: Regime,
    pub seed: u64,
    pub scenario_sha256: String,
    pub initial_sha256: String,
    pub deployment_sha256: String,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    /// System total cost of the returned deployment.
    pub objective: f64,
    pub final_kpis: KpiReport,
}

pub const START_BIN_S: f64 = 3600.0;
pub const DURATION_BIN_S: f64 = 900.0;
pub const DURATION_BINS: usize = 32;

/// Session counts per start hour and per 15-minute duration bin (the last
/// duration bin collects everything longer).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Histograms {
    pub destination_start: Vec<u32>,
    pub destination_duration: Vec<u32>,
    pub enroute_start: Vec<u32>,
    pub enroute_duration: Vec<u32>,
}

impl Histograms {
    pub fn from_sessions(sessions: &[ChargingSession]) -> Self {
        let hist = |kind: SessionKind| {
            let mut start = vec![0u32; 24];
            let mut duration = vec![0u32; DURATION_BINS];
            for s in sessions.iter().filter(|s| s.kind == kind) {
                let b = ((s.start_s / START_BIN_S) as usize).min(23);
                start[b] += 1;
                let d = ((s.duration_s() / DURATION_BIN_S) as usize).min(DURATION_BINS - 1);
                duration[d] += 1;
            }
            (start, duration)
        };
        let (destination_start, destination_duration) = hist(SessionKind::Destination);
        let (enroute_start, enroute_duration) = hist(SessionKind::EnRoute);
        Histograms {
            destination_start,
            destination_duration,
            enroute_start,
            enroute_duration,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct KpiFile {
    pub schema: String,
    pub label: String,
    pub regime: Regime,
    pub seed: u64,
    pub scenario_sha256: String,
    pub deployment_sha256: String,
    pub kpis: KpiReport,
    pub behavior: DistributionStats,
    pub histograms: Histograms,
}
