//! Stage functions shared by the command-line tool and the tests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cmclp::{self, verify_solution, CmclpInstance, CmclpSolution, CostModel, SolveReport, SolverKind};
use crate::error::{Error, Result};
use crate::metrics::{behavior_stats, evaluate_kpis, DistributionStats, KpiReport};
use crate::refine::{refine_with, RefineConfig, RefineInput, RefineTrace};
use crate::scenario::{ScenarioBundle, ScenarioConfig};
use crate::sim::{ChargingBehaviorParams, Deployment, EventLog, LatentDemandEvent, Regime, SimMode, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub behavior: ChargingBehaviorParams,
    pub cost: CostModel,
    pub refine: RefineConfig,
    pub solver: SolverKind,
    pub seed: u64,
}

/// Settings file layout: optional `[scenario]`, `[behavior]`, `[cost]` and
/// `[refine]` tables. A `[behavior]` table overrides the parameters stored in
/// the scenario file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scenario: ScenarioConfig,
    pub behavior: Option<ChargingBehaviorParams>,
    pub cost: CostModel,
    pub refine: RefineConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if let Some(b) = &self.behavior {
            b.validate()?;
        }
        self.cost.validate()?;
        self.refine.validate()
    }

    pub fn behavior_or_default(&self) -> ChargingBehaviorParams {
        self.behavior.clone().unwrap_or_default()
    }

    pub fn settings(&self, scenario: &ScenarioBundle) -> PipelineSettings {
        PipelineSettings {
            behavior: self.behavior.clone().unwrap_or_else(|| scenario.behavior.clone()),
            cost: self.cost.clone(),
            refine: self.refine.clone(),
            solver: SolverKind::Heuristic,
            seed: scenario.config.seed,
        }
    }
}

impl PipelineSettings {
    pub fn for_scenario(scenario: &ScenarioBundle) -> Self {
        PipelineSettings {
            behavior: scenario.behavior.clone(),
            cost: CostModel::default(),
            refine: RefineConfig::default(),
            solver: SolverKind::Heuristic,
            seed: scenario.config.seed,
        }
    }
}

pub fn latent_demand(
    sim: &Simulator<'_>,
    regime: Regime,
    behavior: &ChargingBehaviorParams,
    seed: u64,
) -> Result<Vec<LatentDemandEvent>> {
    Ok(sim.run(regime, SimMode::LatentGeneration, None, behavior, seed)?.latent)
}

#[derive(Debug, Clone)]
pub struct DeployOutcome {
    pub instance: CmclpInstance,
    pub solution: CmclpSolution,
    pub report: SolveReport,
    pub deployment: Deployment,
}

/// Builds and solves the covering instance, checks the solution against
/// every constraint and converts it to a deployment on the network.
pub fn deploy(
    scenario: &ScenarioBundle,
    latent: &[LatentDemandEvent],
    cost: &CostModel,
    radius_km: f64,
    solver: SolverKind,
) -> Result<DeployOutcome> {
    let instance = CmclpInstance::from_latent(latent, cost.clone(), radius_km)?;
    let (solution, report) = cmclp::solve(&instance, solver)?;
    let violations = verify_solution(&instance, &solution);
    if !violations.is_empty() {
        return Err(Error::Simulation(format!(
            "solver returned an infeasible solution: {:?}",
            &violations[..violations.len().min(5)]
        )));
    }
    let deployment = solution.to_deployment(&instance, |p| scenario.network.node_at(p, 1e-6))?;
    Ok(DeployOutcome { instance, solution, report, deployment })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub kpis: KpiReport,
    pub behavior: DistributionStats,
}

pub fn evaluate(
    sim: &Simulator<'_>,
    regime: Regime,
    deployment: &Deployment,
    settings: &PipelineSettings,
) -> Result<(Evaluation, EventLog)> {
    let log = sim.run(regime, SimMode::Evaluation, Some(deployment), &settings.behavior, settings.seed)?;
    let kpis = evaluate_kpis(&log, deployment, &settings.cost);
    let behavior = behavior_stats(&log.sessions);
    Ok((Evaluation { kpis, behavior }, log))
}

pub fn refine(
    scenario: &ScenarioBundle,
    sim: &Simulator<'_>,
    regime: Regime,
    initial: &Deployment,
    settings: &PipelineSettings,
) -> Result<(Deployment, RefineTrace)> {
    refine_with(
        sim,
        &RefineInput {
            scenario,
            regime,
            initial,
            behavior: &settings.behavior,
            cost: &settings.cost,
            config: &settings.refine,
            seed: settings.seed,
        },
    )
}

/// Both deployments of one regime and their evaluations.
#[derive(Debug, Clone)]
pub struct RegimeOutcome {
    pub regime: Regime,
    pub latent_events: usize,
    pub solve: SolveReport,
    pub cmclp: Deployment,
    pub cmclp_eval: Evaluation,
    pub refined: Deployment,
    pub trace: RefineTrace,
    pub refined_eval: Evaluation,
}

pub fn run_regime(
    scenario: &ScenarioBundle,
    sim: &Simulator<'_>,
    regime: Regime,
    settings: &PipelineSettings,
) -> Result<RegimeOutcome> {
    let latent = latent_demand(sim, regime, &settings.behavior, settings.seed)?;
    let dep = deploy(scenario, &latent, &settings.cost, settings.behavior.service_radius_km, settings.solver)?;
    let (cmclp_eval, _) = evaluate(sim, regime, &dep.deployment, settings)?;
    let (refined, trace) = refine(scenario, sim, regime, &dep.deployment, settings)?;
    let (refined_eval, _) = evaluate(sim, regime, &refined, settings)?;
    Ok(RegimeOutcome {
        regime,
        latent_events: latent.len(),
        solve: dep.report,
        cmclp: dep.deployment,
        cmclp_eval,
        refined,
        trace,
        refined_eval,
    })
}
