use serde::{Deserialize, Serialize};

use super::network::check_grid;
use crate::error::{config_err, Result};

/// Battery and consumption parameters of one electric vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSpec {
    pub capacity_kwh: f64,
    pub consumption_kwh_per_km: f64,
    /// Fraction of capacity available at the start of the simulated day.
    pub initial_soc: f64,
}

impl Default for VehicleSpec {
    fn default() -> Self {
        VehicleSpec {
            capacity_kwh: 64.0,
            consumption_kwh_per_km: 0.16,
            initial_soc: 1.0,
        }
    }
}

impl VehicleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity_kwh > 0.0) {
            return Err(config_err("battery capacity must be positive"));
        }
        if !(self.consumption_kwh_per_km > 0.0) {
            return Err(config_err("consumption rate must be positive"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(config_err("initial SoC must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn initial_soc_kwh(&self) -> f64 {
        self.initial_soc * self.capacity_kwh
    }
}

/// Shape parameters of the activity-plan template library. Hours are
/// clock hours on the simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanShape {
    /// Relative weights of home-work-home, home-work-shop-home and
    /// home-other-home.
    pub template_weights: [f64; 3],
    pub work_start_h: f64,
    pub work_start_jitter_h: f64,
    pub work_duration_h: f64,
    pub work_duration_jitter_h: f64,
    pub shop_duration_min_h: f64,
    pub shop_duration_max_h: f64,
    pub other_start_min_h: f64,
    pub other_start_max_h: f64,
    pub other_duration_min_h: f64,
    pub other_duration_max_h: f64,
    /// Work locations are drawn with weight exp(-d / decay) where d is the
    /// distance to the grid centre.
    pub work_center_decay_km: f64,
}

impl Default for PlanShape {
    fn default() -> Self {
        PlanShape {
            template_weights: [0.5, 0.3, 0.2],
            work_start_h: 8.0,
            work_start_jitter_h: 1.0,
            work_duration_h: 8.5,
            work_duration_jitter_h: 1.0,
            shop_duration_min_h: 0.5,
            shop_duration_max_h: 1.5,
            other_start_min_h: 9.0,
            other_start_max_h: 17.0,
            other_duration_min_h: 1.0,
            other_duration_max_h: 3.0,
            work_center_decay_km: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub grid_cols: u32,
    pub grid_rows: u32,
    pub spacing_km: f64,
    /// Each link is lengthened by a uniform fraction in [0, link_circuity].
    pub link_circuity: f64,
    pub free_flow_speed_kmh: f64,
    /// TAZs are square blocks of `taz_block` x `taz_block` nodes.
    pub taz_block: u32,
    pub households: u32,
    pub max_households_per_node: u32,
    pub ev_penetration: f64,
    pub home_charger_share: f64,
    pub vehicle: VehicleSpec,
    /// Per-EV initial SoC is drawn uniformly from
    /// [initial_soc - spread, initial_soc], clamped to [0, 1].
    pub initial_soc_spread: f64,
    pub plans: PlanShape,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 42,
            grid_cols: 10,
            grid_rows: 10,
            spacing_km: 1.0,
            link_circuity: 0.0,
            free_flow_speed_kmh: 40.0,
            taz_block: 2,
            households: 2000,
            max_households_per_node: 50,
            ev_penetration: 0.05,
            home_charger_share: 0.60,
            vehicle: VehicleSpec::default(),
            initial_soc_spread: 0.0,
            plans: PlanShape::default(),
        }
    }
}

impl ScenarioConfig {
    /// The bundled reference scenario. A 3 km grid gives metropolitan trip
    /// lengths, one zone per node keeps every zone charger within the
    /// service radius of its demand, and initial SoC is spread so that
    /// both charging triggers fire.
    pub fn reference() -> Self {
        ScenarioConfig {
            spacing_km: 3.0,
            taz_block: 1,
            initial_soc_spread: 0.95,
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_grid(self)?;
        if !(self.spacing_km > 0.0) {
            return Err(config_err("node spacing must be positive"));
        }
        if !(self.link_circuity >= 0.0) {
            return Err(config_err("link circuity must be non-negative"));
        }
        if !(self.free_flow_speed_kmh > 0.0) {
            return Err(config_err("free-flow speed must be positive"));
        }
        if self.taz_block == 0 {
            return Err(config_err("TAZ block size must be positive"));
        }
        if self.households == 0 {
            return Err(config_err("household count must be positive"));
        }
        if self.max_households_per_node == 0 {
            return Err(config_err("max households per node must be positive"));
        }
        if !(0.0..=1.0).contains(&self.ev_penetration) {
            return Err(config_err("EV penetration must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.home_charger_share) {
            return Err(config_err("home-charger share must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.initial_soc_spread) {
            return Err(config_err("initial SoC spread must lie in [0, 1]"));
        }
        self.vehicle.validate()?;
        let w = &self.plans.template_weights;
        if w.iter().any(|x| !(*x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return Err(config_err("plan template weights must be non-negative and not all zero"));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.grid_cols as usize * self.grid_rows as usize
    }
}

/// Nearest-integer rounding with ties rounding up.
pub fn round_half_up(x: f64) -> u32 {
    (x + 0.5).floor().max(0.0) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_rule() {
        assert_eq!(round_half_up(2.5), 3);
        assert_eq!(round_half_up(2.4999), 2);
        assert_eq!(round_half_up(100.0 * 0.05), 5);
        assert_eq!(round_half_up(5.0 * 0.6), 3);
        assert_eq!(round_half_up(0.0), 0);
    }

    #[test]
    fn default_vehicle_matches_cost_table() {
        let v = VehicleSpec::default();
        assert_eq!(v.capacity_kwh, 64.0);
        assert_eq!(v.consumption_kwh_per_km, 0.16);
    }

    #[test]
    fn rejects_out_of_range_fractions() {
        let bad = ScenarioConfig {
            ev_penetration: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = ScenarioConfig {
            home_charger_share: -0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
