use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use evcharge::io::{self, sha256_hex, TABLE_SCHEMA};
use evcharge::pipeline::{self, PipelineConfig, PipelineSettings};
use evcharge::scenario::ScenarioBundle;
use evcharge::sim::{Deployment, Regime, SessionKind, Simulator};

use crate::reports::{
    DemandReport, DeployReport, Histograms, KpiFile, RefineReport, DEMAND_SCHEMA, DEPLOY_SCHEMA, KPI_SCHEMA,
    REFINE_SCHEMA,
};
use crate::{compare, Command, Common, Failure};

type Outcome = Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Generate { common } => generate(&common),
        Command::Demand { common, scenario, regime } => demand(&common, &scenario, regime.into()),
        Command::Deploy { common, scenario, demand, budget, solver } => {
            deploy(&common, &scenario, &demand, budget, solver.into())
        }
        Command::Refine { common, scenario, regime, deployment } => {
            refine(&common, &scenario, regime.into(), &deployment)
        }
        Command::Evaluate { common, scenario, regime, deployment, label } => {
            evaluate(&common, &scenario, regime.into(), &deployment, label)
        }
        Command::Compare { reports, out, plots } => compare::compare(&reports, &out, plots),
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig, Failure> {
    match &common.config {
        Some(path) => PipelineConfig::load(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display()))),
        None => Ok(PipelineConfig::default()),
    }
}

fn out_dir(common: &Common) -> Result<&Path, Failure> {
    fs::create_dir_all(&common.out)?;
    Ok(&common.out)
}

struct Loaded {
    bundle: ScenarioBundle,
    hash: String,
}

fn load_scenario(path: &Path) -> Result<Loaded, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let bundle = ScenarioBundle::from_json(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(Loaded { bundle, hash: sha256_hex(&bytes) })
}

fn settings(cfg: &PipelineConfig, common: &Common, bundle: &ScenarioBundle) -> PipelineSettings {
    let mut s = cfg.settings(bundle);
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    s
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write_report<T: serde::Serialize>(path: &Path, header: &str, report: &T) -> Outcome {
    let text = io::report_to_string(header, report)?;
    write(path, text.as_bytes())
}

fn read_deployment(path: &Path, bundle: &ScenarioBundle) -> Result<(Deployment, String), Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let dep = io::deployment_from_csv(&bytes, &bundle.network)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok((dep, sha256_hex(&bytes)))
}

fn generate(common: &Common) -> Outcome {
    let cfg = load_config(common)?;
    let mut sc = cfg.scenario.clone();
    if let Some(seed) = common.seed {
        sc.seed = seed;
    }
    let bundle = ScenarioBundle::generate(&sc, &cfg.behavior_or_default())?;
    let path = out_dir(common)?.join("scenario.json");
    write(&path, &bundle.to_json())?;
    println!(
        "scenario: {} nodes, {} zones, {} households, {} EVs, {} home chargers -> {}",
        bundle.network.node_count(),
        bundle.tazs.len(),
        bundle.households.len(),
        bundle.ev_count(),
        bundle.home_charger_count(),
        path.display()
    );
    Ok(())
}

fn demand(common: &Common, scenario: &Path, regime: Regime) -> Outcome {
    let cfg = load_config(common)?;
    let loaded = load_scenario(scenario)?;
    let settings = settings(&cfg, common, &loaded.bundle);
    let sim = Simulator::new(&loaded.bundle);
    let latent = pipeline::latent_demand(&sim, regime, &settings.behavior, settings.seed)?;
    let table = io::latent_to_csv(&latent)?;
    let dir = out_dir(common)?;
    let csv_path = dir.join(format!("latent-{}.csv", regime.as_str()));
    write(&csv_path, &table)?;
    let count = |k: SessionKind| latent.iter().filter(|e| e.kind == k).count();
    let report = DemandReport {
        schema: DEMAND_SCHEMA.into(),
        table_schema: TABLE_SCHEMA.into(),
        regime,
        seed: settings.seed,
        scenario_sha256: loaded.hash,
        demand_sha256: sha256_hex(&table),
        events: latent.len(),
        destination_events: count(SessionKind::Destination),
        enroute_events: count(SessionKind::EnRoute),
    };
    write_report(&csv_path.with_extension("toml"), "evcharge demand", &report)?;
    println!(
        "latent demand ({regime}): {} events ({} destination, {} en-route) -> {}",
        report.events,
        report.destination_events,
        report.enroute_events,
        csv_path.display()
    );
    Ok(())
}

fn deploy(
    common: &Common,
    scenario: &Path,
    demand: &Path,
    budget: Option<f64>,
    solver: evcharge::cmclp::SolverKind,
) -> Outcome {
    let cfg = load_config(common)?;
    let loaded = load_scenario(scenario)?;
    let settings = settings(&cfg, common, &loaded.bundle);
    let bytes = fs::read(demand).map_err(|e| Failure::Input(format!("{}: {e}", demand.display())))?;
    let events = io::latent_from_csv(&bytes).map_err(|e| Failure::Input(format!("{}: {e}", demand.display())))?;
    let report_path = demand.with_extension("toml");
    let demand_report: DemandReport = io::read_report(&report_path)
        .map_err(|e| Failure::Input(format!("demand report {}: {e}", report_path.display())))?;
    if demand_report.scenario_sha256 != loaded.hash {
        return Err(Failure::Input(format!(
            "{} was generated from a different scenario than {}",
            demand.display(),
            scenario.display()
        )));
    }
    if demand_report.demand_sha256 != sha256_hex(&bytes) {
        return Err(Failure::Input(format!("{} does not match its report", demand.display())));
    }
    let mut cost = settings.cost.clone();
    if let Some(b) = budget {
        cost.budget = b;
    }
    cost.validate()?;
    if cost.budget == 0.0 {
        eprintln!("warning: budget is zero; the deployment will be empty");
    }
    let outcome = pipeline::deploy(&loaded.bundle, &events, &cost, settings.behavior.service_radius_km, solver)?;
    let regime = demand_report.regime;
    let label = format!("CMCLP-{}", regime.suffix());
    let dir = out_dir(common)?;
    let table = io::deployment_to_csv(&outcome.deployment)?;
    let dep_path = dir.join(format!("{label}.csv"));
    write(&dep_path, &table)?;
    let r = &outcome.report;
    let report = DeployReport {
        schema: DEPLOY_SCHEMA.into(),
        label: label.clone(),
        regime,
        scenario_sha256: loaded.hash,
        demand_sha256: demand_report.demand_sha256,
        deployment_sha256: sha256_hex(&table),
        solver: r.solver,
        optimal: r.optimal,
        bound: r.bound,
        covered_items: r.objective,
        items: r.items,
        coverable_items: r.coverable_items,
        candidate_sites: r.sites,
        budget: r.budget,
        cost: r.cost,
        stations: outcome.deployment.stations.len(),
        chargers: charger_totals(&outcome.deployment),
    };
    write_report(&dir.join(format!("{label}.solve.toml")), &format!("evcharge deploy, solve time {:.3} s", r.wall_time_s), &report)?;
    let note = if r.optimal { "optimal" } else { "heuristic" };
    println!(
        "{label}: {} stations, chargers {:?}, cost {:.2}/{:.2}, covered {}/{} items ({note}) -> {}",
        report.stations,
        report.chargers,
        report.cost,
        report.budget,
        report.covered_items,
        report.items,
        dep_path.display()
    );
    Ok(())
}

fn charger_totals(dep: &Deployment) -> [u32; 3] {
    [0, 1, 2].map(|i| dep.stations.iter().map(|s| s.chargers[i]).sum())
}

fn refine(common: &Common, scenario: &Path, regime: Regime, deployment: &Path) -> Outcome {
    let cfg = load_config(common)?;
    let loaded = load_scenario(scenario)?;
    let settings = settings(&cfg, common, &loaded.bundle);
    let (initial, initial_hash) = read_deployment(deployment, &loaded.bundle)?;
    let sim = Simulator::new(&loaded.bundle);
    let started = Instant::now();
    let (refined, trace) = pipeline::refine(&loaded.bundle, &sim, regime, &initial, &settings)?;
    let wall = started.elapsed().as_secs_f64();
    let label = format!("REF-{}", regime.suffix());
    let dir = out_dir(common)?;
    let table = io::deployment_to_csv(&refined)?;
    let dep_path = dir.join(format!("{label}.csv"));
    write(&dep_path, &table)?;
    write(&dir.join(format!("{label}.trace.csv")), &io::trace_to_csv(&trace)?)?;
    let iter_dir: PathBuf = dir.join(format!("{label}.iterations"));
    fs::create_dir_all(&iter_dir)?;
    for it in &trace.iterations {
        write(
            &iter_dir.join(format!("iter-{:03}.csv", it.iteration)),
            &io::deployment_to_csv(&it.deployment)?,
        )?;
    }
    let report = RefineReport {
        schema: REFINE_SCHEMA.into(),
        label: label.clone(),
        regime,
        seed: settings.seed,
        scenario_sha256: loaded.hash,
        initial_sha256: initial_hash,
        deployment_sha256: sha256_hex(&table),
        converged: trace.converged,
        termination: trace.termination,
        iterations: trace.iterations.len(),
        objective: trace.objective,
        final_kpis: trace.final_kpis.clone(),
    };
    write_report(&dir.join(format!("{label}.refine.toml")), &format!("evcharge refine, wall time {wall:.3} s"), &report)?;
    if !trace.converged {
        eprintln!(
            "warning: refinement did not converge ({:?} after {} iterations); returning the lowest-cost deployment seen",
            trace.termination,
            trace.iterations.len()
        );
    }
    println!(
        "{label}: {} -> {} stations, chargers {:?} -> {:?}, {} iterations, system cost {:.2} -> {}",
        initial.stations.len(),
        refined.stations.len(),
        charger_totals(&initial),
        charger_totals(&refined),
        trace.iterations.len(),
        trace.objective,
        dep_path.display()
    );
    Ok(())
}

fn evaluate(common: &Common, scenario: &Path, regime: Regime, deployment: &Path, label: Option<String>) -> Outcome {
    let cfg = load_config(common)?;
    let loaded = load_scenario(scenario)?;
    let settings = settings(&cfg, common, &loaded.bundle);
    let (dep, dep_hash) = read_deployment(deployment, &loaded.bundle)?;
    let label = match label {
        Some(l) => l,
        None => deployment
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| Failure::Usage("cannot derive a label from the deployment path; pass --label".into()))?,
    };
    let sim = Simulator::new(&loaded.bundle);
    let (eval, log) = pipeline::evaluate(&sim, regime, &dep, &settings)?;
    let dir = out_dir(common)?;
    write(&dir.join(format!("{label}.sessions.csv")), &io::sessions_to_csv(&log.sessions)?)?;
    write(&dir.join(format!("{label}.trips.csv")), &io::trips_to_csv(&log.trips)?)?;
    let file = KpiFile {
        schema: KPI_SCHEMA.into(),
        label: label.clone(),
        regime,
        seed: settings.seed,
        scenario_sha256: loaded.hash,
        deployment_sha256: dep_hash,
        histograms: Histograms::from_sessions(&log.sessions),
        kpis: eval.kpis,
        behavior: eval.behavior,
    };
    let path = dir.join(format!("{label}.kpi.toml"));
    write_report(&path, "evcharge evaluate", &file)?;
    let k = &file.kpis;
    println!(
        "{label}: revenue {:.2}, deployment cost {:.2}, detour cost {:.2}, NSoC vehicles {}, system cost {:.2} -> {}",
        k.revenue,
        k.deployment_cost,
        k.detour_cost,
        k.nsoc_vehicles,
        k.system_cost,
        path.display()
    );
    Ok(())
}
