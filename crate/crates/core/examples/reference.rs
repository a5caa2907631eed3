//! Runs the six-deployment pipeline in memory and prints a summary per
//! regime. Takes an optional settings file (default: the bundled reference
//! scenario); set `TRACE=1` to list every refinement iteration.
//!
//!     cargo run --release -p evcharge-core --example reference [settings.toml]

use std::path::PathBuf;
use std::time::Instant;

use evcharge::pipeline::{run_regime, PipelineConfig};
use evcharge::scenario::ScenarioBundle;
use evcharge::sim::{Deployment, Regime, Simulator};

fn chargers(d: &Deployment) -> [u32; 3] {
    [0, 1, 2].map(|i| d.stations.iter().map(|s| s.chargers[i]).sum())
}

fn main() -> evcharge::Result<()> {
    let started = Instant::now();
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/reference.toml"));
    let cfg = PipelineConfig::load(&path)?;
    let scenario = ScenarioBundle::generate(&cfg.scenario, &cfg.behavior_or_default())?;
    let settings = cfg.settings(&scenario);
    let sim = Simulator::new(&scenario);
    println!("{} EVs, {} home chargers", scenario.ev_count(), scenario.home_charger_count());
    for regime in Regime::ALL {
        let out = run_regime(&scenario, &sim, regime, &settings)?;
        println!(
            "{regime}: {} latent events, {}/{} items covered, {} iterations ({:?})",
            out.latent_events,
            out.solve.objective,
            out.solve.items,
            out.trace.iterations.len(),
            out.trace.termination
        );
        if std::env::var_os("TRACE").is_some() {
            for it in &out.trace.iterations {
                println!(
                    "    {:>2}: {} stations {:?}, {} changes, cost {:.2}, system {:.2}",
                    it.iteration,
                    it.deployment.stations.len(),
                    chargers(&it.deployment),
                    it.changes,
                    it.deployment_cost,
                    it.system_cost
                );
            }
        }
        for (label, k) in [("CMCLP", &out.cmclp_eval.kpis), ("REF", &out.refined_eval.kpis)] {
            println!(
                "  {label}-{}: {} stations {:?}, cost {:.2}, revenue {:.2}, detour {:.2}, NSoC {}, system {:.2}",
                regime.suffix(),
                k.stations,
                k.chargers,
                k.deployment_cost,
                k.revenue,
                k.detour_cost,
                k.nsoc_vehicles,
                k.system_cost
            );
        }
    }
    println!("elapsed {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}
