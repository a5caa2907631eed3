//! Synthetic desk-scale scenarios: grid network, TAZs, households,
//! activity plans and the EV fleet, bundled into one versioned file.

mod config;
mod network;
mod population;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use config::{round_half_up, PlanShape, ScenarioConfig, VehicleSpec};
pub use network::{generate_network, Link, NetworkGraph, Node, NodeId, Point, RoutingTable};
pub use population::{
    assign_fleet, generate_population, partition_taz, Activity, ActivityKind, ActivityPlan, Household,
    HouseholdId, Taz, Vehicle, VehicleId, DAY_S,
};

use crate::error::{Error, Result};
use crate::io::sha256_hex;
use crate::sim::ChargingBehaviorParams;

pub const SCENARIO_SCHEMA: &str = "evcharge.scenario/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBundle {
    pub schema: String,
    pub config: ScenarioConfig,
    pub behavior: ChargingBehaviorParams,
    pub network: NetworkGraph,
    pub tazs: Vec<Taz>,
    pub households: Vec<Household>,
    pub plans: Vec<ActivityPlan>,
    pub vehicles: Vec<Vehicle>,
}

impl ScenarioBundle {
    pub fn generate(config: &ScenarioConfig, behavior: &ChargingBehaviorParams) -> Result<Self> {
        behavior.validate()?;
        let network = generate_network(config)?;
        let tazs = partition_taz(config, &network);
        let (households, plans) = generate_population(config, &network)?;
        let vehicles = assign_fleet(config, &households)?;
        Ok(ScenarioBundle {
            schema: SCENARIO_SCHEMA.to_string(),
            config: config.clone(),
            behavior: behavior.clone(),
            network,
            tazs,
            households,
            plans,
            vehicles,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCENARIO_SCHEMA {
            return Err(Error::Input(format!(
                "unsupported scenario schema '{}', expected '{SCENARIO_SCHEMA}'",
                self.schema
            )));
        }
        self.behavior.validate()?;
        self.network.validate()?;
        let n = self.network.node_count();
        let mut covered = vec![0u32; n];
        for t in &self.tazs {
            if t.nodes.is_empty() {
                return Err(Error::Input(format!("TAZ {} is empty", t.id)));
            }
            for &node in &t.nodes {
                *covered
                    .get_mut(node as usize)
                    .ok_or_else(|| Error::Input(format!("TAZ {} references missing node {node}", t.id)))? += 1;
            }
        }
        if covered.iter().any(|&c| c != 1) {
            return Err(Error::Input("TAZs do not partition the network nodes".into()));
        }
        if self.plans.len() != self.vehicles.len() || self.households.len() != self.vehicles.len() {
            return Err(Error::Input("households, vehicles and plans must correspond one-to-one".into()));
        }
        for (i, ((h, v), p)) in self.households.iter().zip(&self.vehicles).zip(&self.plans).enumerate() {
            if h.id as usize != i || v.id as usize != i || p.vehicle as usize != i || v.household != h.id {
                return Err(Error::Input(format!("record {i} is out of order")));
            }
            if h.home_charger && !h.owns_ev {
                return Err(Error::Input(format!("household {} has a home charger but no EV", h.id)));
            }
            if v.is_ev != h.owns_ev {
                return Err(Error::Input(format!("vehicle {} EV flag disagrees with its household", v.id)));
            }
            v.spec.validate()?;
            p.validate()?;
            if p.activities.iter().any(|a| a.node as usize >= n) {
                return Err(Error::Input(format!("plan {} references a missing node", p.vehicle)));
            }
            if p.activities[0].node != h.home_node {
                return Err(Error::Input(format!("plan {} does not start at home", p.vehicle)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("scenario serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let bundle: ScenarioBundle = serde_json::from_slice(bytes)?;
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read(path)?)
    }

    pub fn content_hash(&self) -> String {
        sha256_hex(&self.to_json())
    }

    pub fn ev_count(&self) -> usize {
        self.vehicles.iter().filter(|v| v.is_ev).count()
    }

    pub fn home_charger_count(&self) -> usize {
        self.households.iter().filter(|h| h.home_charger).count()
    }

    pub fn taz_of(&self, node: NodeId) -> Option<u32> {
        self.tazs.iter().find(|t| t.nodes.contains(&node)).map(|t| t.id)
    }
}
