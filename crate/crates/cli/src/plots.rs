//! Start-time and duration histograms of the compared deployments, one line
//! per report, destination and en-route sessions in separate panels.

use std::path::Path;

use plotters::prelude::*;

use crate::reports::{KpiFile, DURATION_BIN_S, START_BIN_S};
use crate::Failure;

const SIZE: (u32, u32) = (960, 720);

pub fn write_all(files: &[KpiFile], out: &Path) -> Result<(), Failure> {
    let start = |f: &KpiFile| [f.histograms.destination_start.clone(), f.histograms.enroute_start.clone()];
    let duration = |f: &KpiFile| [f.histograms.destination_duration.clone(), f.histograms.enroute_duration.clone()];
    draw(files, &out.join("start_time.svg"), "start hour", START_BIN_S / 3600.0, start)?;
    draw(files, &out.join("duration.svg"), "duration (h)", DURATION_BIN_S / 3600.0, duration)?;
    Ok(())
}

fn draw(
    files: &[KpiFile],
    path: &Path,
    x_label: &str,
    bin_h: f64,
    series: impl Fn(&KpiFile) -> [Vec<u32>; 2],
) -> Result<(), Failure> {
    let fail = |e: &dyn std::fmt::Display| Failure::Input(format!("{}: {e}", path.display()));
    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(|e| fail(&e))?;
    let panels = root.split_evenly((2, 1));
    let data: Vec<[Vec<u32>; 2]> = files.iter().map(&series).collect();
    for (panel_idx, (panel, title)) in panels.iter().zip(["destination", "en-route"]).enumerate() {
        let bins = data.iter().map(|d| d[panel_idx].len()).max().unwrap_or(1).max(1);
        let y_max = data.iter().flat_map(|d| d[panel_idx].iter().copied()).max().unwrap_or(0).max(1);
        let mut chart = ChartBuilder::on(panel)
            .caption(title, ("sans-serif", 18))
            .margin(10)
            .x_label_area_size(35)
            .y_label_area_size(45)
            .build_cartesian_2d(0.0..bins as f64 * bin_h, 0u32..y_max + 1)
            .map_err(|e| fail(&e))?;
        chart
            .configure_mesh()
            .x_desc(x_label)
            .y_desc("sessions")
            .draw()
            .map_err(|e| fail(&e))?;
        for (i, (f, d)) in files.iter().zip(&data).enumerate() {
            let color = Palette99::pick(i).to_rgba();
            let points = d[panel_idx].iter().enumerate().flat_map(|(b, &c)| {
                let x0 = b as f64 * bin_h;
                [(x0, c), (x0 + bin_h, c)]
            });
            chart
                .draw_series(LineSeries::new(points, color.stroke_width(2)))
                .map_err(|e| fail(&e))?
                .label(f.label.clone())
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 16, y)], color.stroke_width(2)));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| fail(&e))?;
    }
    root.present().map_err(|e| fail(&e))?;
    Ok(())
}
