use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::scenario::{Point, DAY_S};
use crate::sim::{ChargerType, Deployment, LatentDemandEvent, Station};

pub const BIN_S: f64 = 1800.0;
pub const BIN_COUNT: usize = 48;

/// Daily-equivalent cost assumptions (AUD/day) and the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    /// Charger CAPEX per type, indexed by `ChargerType::index`.
    pub capex: [f64; 3],
    pub opex: [f64; 3],
    pub site_ac: f64,
    pub site_dc: f64,
    pub budget: f64,
    /// Operator margin per delivered kWh, by type.
    pub margin_per_kwh: [f64; 3],
    pub value_of_time_per_h: f64,
    pub vehicle_cost_per_km: f64,
    pub nsoc_penalty: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            capex: [1.10, 1.90, 41.1],
            opex: [0.5, 0.8, 12.0],
            site_ac: 5.48,
            site_dc: 27.40,
            budget: 2600.0,
            margin_per_kwh: [0.10, 0.10, 0.25],
            value_of_time_per_h: 30.0,
            vehicle_cost_per_km: 0.4,
            nsoc_penalty: 100.0,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .capex
            .iter()
            .chain(&self.opex)
            .chain(&self.margin_per_kwh)
            .chain([&self.site_ac, &self.site_dc, &self.budget, &self.value_of_time_per_h, &self.vehicle_cost_per_km, &self.nsoc_penalty]);
        for v in all {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(config_err("cost model entries must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn charger_cost(&self, ty: ChargerType) -> f64 {
        self.capex[ty.index()] + self.opex[ty.index()]
    }

    /// Site cost of a selected station; the DC rate applies as soon as one
    /// DC charger is installed.
    pub fn site_cost(&self, has_dc: bool) -> f64 {
        if has_dc {
            self.site_dc
        } else {
            self.site_ac
        }
    }

    /// Daily cost of one site with the given counts.
    pub fn station_cost(&self, chargers: &[u32; 3], selected: bool) -> f64 {
        let equipment: f64 = ChargerType::ALL
            .iter()
            .map(|&ty| chargers[ty.index()] as f64 * self.charger_cost(ty))
            .fold(0.0, |a, b| a + b);
        let site = if selected {
            self.site_cost(chargers[ChargerType::Dc150.index()] >= 1)
        } else {
            0.0
        };
        equipment + site
    }

    pub fn deployment_cost(&self, deployment: &Deployment) -> f64 {
        deployment
            .stations
            .iter()
            .map(|s| self.station_cost(&s.chargers, true))
            .fold(0.0, |a, b| a + b)
    }
}

/// One (event, bin) pair of time-expanded demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandItem {
    pub event: u32,
    pub bin: u16,
    pub charger: ChargerType,
}

fn bin_of(t: f64) -> u16 {
    ((t / BIN_S).floor() as i64).clamp(0, BIN_COUNT as i64 - 1) as u16
}

/// Bins overlapped by the half-open interval `[start, end)`; a zero-length
/// interval maps to the bin containing `start`.
pub fn bins_for_interval(start_s: f64, end_s: f64) -> Result<Vec<u16>> {
    if !(start_s >= 0.0 && start_s < DAY_S && end_s >= start_s && end_s <= DAY_S) {
        return Err(Error::Input(format!(
            "interval [{start_s}, {end_s}) lies outside the simulated day"
        )));
    }
    if end_s == start_s {
        return Ok(vec![bin_of(start_s)]);
    }
    let first = bin_of(start_s);
    let last = ((end_s / BIN_S).ceil() as i64 - 1).clamp(first as i64, BIN_COUNT as i64 - 1) as u16;
    Ok((first..=last).collect())
}

pub fn expand_demand(events: &[LatentDemandEvent]) -> Result<Vec<DemandItem>> {
    let mut items = Vec::new();
    for (k, e) in events.iter().enumerate() {
        let bins = bins_for_interval(e.start_s, e.end_s)
            .map_err(|err| Error::Input(format!("latent event {}: {err}", e.id)))?;
        items.extend(bins.into_iter().map(|bin| DemandItem {
            event: k as u32,
            bin,
            charger: e.charger,
        }));
    }
    Ok(items)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateSite {
    pub id: u32,
    pub location: Point,
}

/// One site per distinct latent location (first appearance order) and, per
/// event, the ids of the sites within `radius_km`.
pub fn build_candidates(events: &[LatentDemandEvent], radius_km: f64) -> (Vec<CandidateSite>, Vec<Vec<u32>>) {
    let mut sites: Vec<CandidateSite> = Vec::new();
    for e in events {
        if !sites.iter().any(|s| s.location == e.location) {
            sites.push(CandidateSite {
                id: sites.len() as u32,
                location: e.location,
            });
        }
    }
    let neighborhoods = events
        .iter()
        .map(|e| {
            sites
                .iter()
                .filter(|s| s.location.distance(&e.location) <= radius_km)
                .map(|s| s.id)
                .collect()
        })
        .collect();
    (sites, neighborhoods)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmclpInstance {
    pub sites: Vec<CandidateSite>,
    /// Candidate sites within the service radius of each event, ascending.
    pub neighborhoods: Vec<Vec<u32>>,
    pub items: Vec<DemandItem>,
    pub cost: CostModel,
    /// Optional cap on n_{i,p}; `None` leaves counts bounded only by demand.
    pub max_chargers_per_type: Option<u32>,
}

impl CmclpInstance {
    pub fn from_latent(events: &[LatentDemandEvent], cost: CostModel, radius_km: f64) -> Result<Self> {
        cost.validate()?;
        let items = expand_demand(events)?;
        let (sites, neighborhoods) = build_candidates(events, radius_km);
        Ok(CmclpInstance {
            sites,
            neighborhoods,
            items,
            cost,
            max_chargers_per_type: None,
        })
    }

    pub fn new(
        sites: Vec<CandidateSite>,
        neighborhoods: Vec<Vec<u32>>,
        items: Vec<DemandItem>,
        cost: CostModel,
    ) -> Result<Self> {
        let inst = CmclpInstance {
            sites,
            neighborhoods,
            items,
            cost,
            max_chargers_per_type: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        for (i, s) in self.sites.iter().enumerate() {
            if s.id as usize != i {
                return Err(Error::Input(format!("site ids must be dense, found {} at {i}", s.id)));
            }
        }
        for n in &self.neighborhoods {
            if n.iter().any(|&i| i as usize >= self.sites.len()) {
                return Err(Error::Input("neighborhood references a missing site".into()));
            }
        }
        for it in &self.items {
            if it.event as usize >= self.neighborhoods.len() || it.bin as usize >= BIN_COUNT {
                return Err(Error::Input(format!("malformed demand item {it:?}")));
            }
        }
        Ok(())
    }

    pub fn budget(&self) -> f64 {
        self.cost.budget
    }

    pub fn neighborhood(&self, item: usize) -> &[u32] {
        &self.neighborhoods[self.items[item].event as usize]
    }

    pub fn coverable_items(&self) -> usize {
        (0..self.items.len()).filter(|&i| !self.neighborhood(i).is_empty()).count()
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.cost.budget = budget;
        self
    }
}

/// Decision variables of one CMCLP solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmclpSolution {
    /// x_i
    pub selected: Vec<bool>,
    /// n_{i,p}
    pub chargers: Vec<[u32; 3]>,
    /// c_{kb}, one per demand item
    pub covered: Vec<bool>,
    /// (item, site) pairs with a_{i,kb} = 1
    pub assignments: Vec<(u32, u32)>,
    pub objective: u64,
}

impl CmclpSolution {
    pub fn empty(instance: &CmclpInstance) -> Self {
        CmclpSolution {
            selected: vec![false; instance.sites.len()],
            chargers: vec![[0; 3]; instance.sites.len()],
            covered: vec![false; instance.items.len()],
            assignments: Vec::new(),
            objective: 0,
        }
    }

    pub fn cost(&self, model: &CostModel) -> f64 {
        self.chargers
            .iter()
            .zip(&self.selected)
            .map(|(n, &x)| model.station_cost(n, x))
            .fold(0.0, |a, b| a + b)
    }

    /// Selected sites with at least one charger, as a deployment whose
    /// station ids are the site ids.
    pub fn to_deployment(&self, instance: &CmclpInstance, node_of: impl Fn(Point) -> Option<u32>) -> Result<Deployment> {
        let mut stations = Vec::new();
        for (i, (&x, n)) in self.selected.iter().zip(&self.chargers).enumerate() {
            if !x || n.iter().sum::<u32>() == 0 {
                continue;
            }
            let location = instance.sites[i].location;
            let node = node_of(location)
                .ok_or_else(|| Error::Input(format!("site {i} at ({}, {}) is not a network node", location.x, location.y)))?;
            stations.push(Station {
                id: i as u32,
                node,
                location,
                chargers: *n,
            });
        }
        Ok(Deployment::new(stations))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: SolverKind,
    pub objective: u64,
    pub optimal: bool,
    /// Proven upper bound on the objective (exact search only).
    pub bound: Option<u64>,
    pub cost: f64,
    pub budget: f64,
    pub items: usize,
    pub coverable_items: usize,
    pub sites: usize,
    pub wall_time_s: f64,
}
