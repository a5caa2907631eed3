//! Side-by-side KPI table for a set of evaluated deployments.

use std::fs;
use std::path::{Path, PathBuf};

use evcharge::io;
use evcharge::metrics::KpiReport;

use crate::plots;
use crate::reports::{KpiFile, KPI_SCHEMA};
use crate::Failure;

const ORDER: [&str; 6] = ["CMCLP-D", "REF-D", "CMCLP-E", "REF-E", "CMCLP-C", "REF-C"];

const COLUMNS: [(&str, fn(&KpiReport) -> f64); 9] = [
    ("revenue", |k| k.revenue),
    ("deployment_cost", |k| k.deployment_cost),
    ("net_benefit", |k| k.net_benefit),
    ("detour_km_per_vehicle", |k| k.detour_km_per_vehicle),
    ("detour_ratio", |k| k.detour_ratio),
    ("detour_cost", |k| k.detour_cost),
    ("nsoc_vehicles", |k| k.nsoc_vehicles as f64),
    ("user_cost", |k| k.user_cost),
    ("system_cost", |k| k.system_cost),
];

fn rank(label: &str) -> usize {
    ORDER.iter().position(|&l| l == label).unwrap_or(ORDER.len())
}

/// Relative change of the refined deployment against its covering-model
/// counterpart, in percent. `None` when the base is zero.
pub fn delta_pct(cmclp: f64, refined: f64) -> Option<f64> {
    // Adding 0.0 turns a negative zero into a positive one.
    (cmclp != 0.0).then(|| (refined - cmclp) / cmclp * 100.0 + 0.0)
}

pub fn load(paths: &[PathBuf]) -> Result<Vec<KpiFile>, Failure> {
    let mut files = Vec::with_capacity(paths.len());
    for path in paths {
        let file: KpiFile = io::read_report(path).map_err(|e| Failure::Input(e.to_string()))?;
        if file.schema != KPI_SCHEMA {
            return Err(Failure::Input(format!("{}: unsupported schema '{}'", path.display(), file.schema)));
        }
        files.push(file);
    }
    if let Some(first) = files.first() {
        if let Some(other) = files.iter().find(|f| f.scenario_sha256 != first.scenario_sha256) {
            return Err(Failure::Input(format!(
                "reports '{}' and '{}' come from different scenarios",
                first.label, other.label
            )));
        }
    }
    files.sort_by(|a, b| rank(&a.label).cmp(&rank(&b.label)).then_with(|| a.label.cmp(&b.label)));
    Ok(files)
}

/// Renders the comparison as CSV. Delta columns appear only for labels
/// whose counterpart (`CMCLP-x` for `REF-x`) is also present.
pub fn table(files: &[KpiFile]) -> Vec<u8> {
    let has_pair = files.iter().any(|f| counterpart(files, f).is_some());
    let mut header = vec!["label".to_string(), "regime".to_string(), "stations".to_string()];
    header.extend(COLUMNS.iter().map(|(n, _)| n.to_string()));
    if has_pair {
        header.extend(COLUMNS.iter().map(|(n, _)| format!("delta_{n}_pct")));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for f in files {
        let mut row = vec![f.label.clone(), f.regime.to_string(), f.kpis.stations.to_string()];
        row.extend(COLUMNS.iter().map(|(_, get)| format!("{:.4}", get(&f.kpis))));
        if has_pair {
            let base = counterpart(files, f);
            row.extend(COLUMNS.iter().map(|(_, get)| {
                base.and_then(|b| delta_pct(get(&b.kpis), get(&f.kpis)))
                    .map_or(String::new(), |d| format!("{d:.2}"))
            }));
        }
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn counterpart<'a>(files: &'a [KpiFile], f: &KpiFile) -> Option<&'a KpiFile> {
    let suffix = f.label.strip_prefix("REF-")?;
    let want = format!("CMCLP-{suffix}");
    files.iter().find(|g| g.label == want)
}

pub fn compare(paths: &[PathBuf], out: &Path, with_plots: bool) -> Result<(), Failure> {
    let files = load(paths)?;
    fs::create_dir_all(out)?;
    let csv = table(&files);
    let path = out.join("comparison.csv");
    fs::write(&path, &csv)?;
    print!("{}", String::from_utf8_lossy(&csv));
    if with_plots {
        plots::write_all(&files, out)?;
    }
    println!("-> {}", path.display());
    Ok(())
}
