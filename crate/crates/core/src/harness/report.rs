use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::energy::{Comparison, EnergyModel};
use super::run::RunLog;
use crate::error::{Error, Result};

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(127, 127, 127),
];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn plot_err(e: impl std::fmt::Display) -> Error {
    Error::Plot(e.to_string())
}

fn bounds(panel: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in panel {
        for (x, y) in &s.points {
            b = (b.0.min(*x), b.1.max(*x), b.2.min(*y), b.3.max(*y));
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    let pad = ((b.3 - b.2) * 0.05).max(1e-3);
    (b.0, b.1.max(b.0 + 1e-3), b.2 - pad, b.3 + pad)
}

/// Stacked line panels sharing a time axis in hours.
fn line_panels(path: &Path, title: &str, panels: &[(&str, Vec<Series>)]) -> Result<()> {
    let height = 260 * panels.len() as u32 + 40;
    let root = SVGBackend::new(path, (1000, height)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let root = root.titled(title, ("sans-serif", 22)).map_err(plot_err)?;
    let areas = root.split_evenly((panels.len(), 1));
    for (area, (ylabel, series)) in areas.iter().zip(panels) {
        let (x0, x1, y0, y1) = bounds(series);
        let mut chart = ChartBuilder::on(area)
            .margin(10)
            .x_label_area_size(30)
            .y_label_area_size(60)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("time [h]")
            .y_desc(*ylabel)
            .draw()
            .map_err(plot_err)?;
        for (i, s) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
                .map_err(plot_err)?
                .label(s.name.clone())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)
}

fn series(log: &RunLog, name: impl Into<String>, f: impl Fn(&super::run::LogRow) -> f64) -> Series {
    // one point per minute keeps the SVGs small
    let stride = ((60.0 / log.dt).round() as usize).max(1);
    Series {
        name: name.into(),
        points: log.rows.iter().step_by(stride).map(|r| (r.t / 3600.0, f(r))).collect(),
    }
}

fn savings_bars(path: &Path, cmp: &Comparison) -> Result<()> {
    let root = SVGBackend::new(path, (1000, 400)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let n = cmp.buckets.len().max(1);
    let (lo, hi) = cmp
        .buckets
        .iter()
        .map(|b| b.savings_pct)
        .fold((0.0f64, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let mut chart = ChartBuilder::on(&root)
        .caption(
            format!("Surrogate energy savings per 30 min, total {:.2} %", cmp.savings_pct),
            ("sans-serif", 20),
        )
        .margin(10)
        .x_label_area_size(30)
        .y_label_area_size(60)
        .build_cartesian_2d(0.0..n as f64, (lo - 5.0)..(hi + 5.0))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("bucket")
        .y_desc("savings [%]")
        .draw()
        .map_err(plot_err)?;
    chart
        .draw_series(cmp.buckets.iter().enumerate().map(|(i, b)| {
            let color = if b.savings_pct >= 0.0 { PALETTE[2] } else { PALETTE[3] };
            Rectangle::new([(i as f64 + 0.1, 0.0), (i as f64 + 0.9, b.savings_pct)], color.filled())
        }))
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

fn write(path: PathBuf, text: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    out.push(path);
    Ok(())
}

/// Writes run logs, DDPC step logs, the comparison tables and SVG plots
/// into `dir`. Returns the written paths.
pub fn emit_report(
    dir: &Path,
    logs: &[RunLog],
    comparison: Option<&Comparison>,
    t_max: f64,
    energy: &EnergyModel,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for log in logs {
        write(dir.join(format!("{}_log.csv", log.label)), &log.to_csv(), &mut out)?;
        if !log.ddpc.is_empty() {
            let path = dir.join(format!("{}_ddpc.csv", log.label));
            let mut w = csv::Writer::from_path(&path)?;
            for r in &log.ddpc {
                w.serialize(r)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            out.push(path);
        }
    }
    if let Some(c) = comparison {
        let mut s = String::from("metric,value\n");
        for (k, v) in [
            ("window_start_s", c.window_start_s),
            ("window_end_s", c.window_end_s),
            ("energy_a_kwh", c.energy_a_kwh),
            ("energy_b_kwh", c.energy_b_kwh),
            ("surrogate_savings_pct", c.savings_pct),
            ("avg_hourly_violation_a_k", c.violation_a),
            ("avg_hourly_violation_b_k", c.violation_b),
        ] {
            s.push_str(&format!("{k},{v}\n"));
        }
        s.push_str(&format!("run_a,{}\nrun_b,{}\n", c.label_a, c.label_b));
        write(dir.join("comparison.csv"), &s, &mut out)?;
        let path = dir.join("savings_buckets.csv");
        let mut w = csv::Writer::from_path(&path)?;
        for b in &c.buckets {
            w.serialize(b)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        out.push(path);
        let path = dir.join("savings.svg");
        savings_bars(&path, c)?;
        out.push(path);
    }
    if logs.is_empty() {
        return Ok(out);
    }

    let temp_panels: Vec<(&str, Vec<Series>)> = logs
        .iter()
        .map(|log| {
            let s = vec![
                series(log, format!("{} up", log.label), |r| r.t_room[0]),
                series(log, format!("{} mid", log.label), |r| r.t_room[1]),
                series(log, format!("{} low", log.label), |r| r.t_room[2]),
                series(log, "rule + t_max", |r| r.t_rule + t_max),
                series(log, "rule - t_max", |r| r.t_rule - t_max),
            ];
            ("room temperature [°C]", s)
        })
        .collect();
    let path = dir.join("temperatures.svg");
    line_panels(&path, "Room temperatures and comfort bounds", &temp_panels)?;
    out.push(path);

    let mut sp = vec![series(&logs[0], "rule-based", |r| r.t_rule)];
    for log in logs {
        sp.push(series(log, format!("{} reference", log.label), |r| r.t_ref));
    }
    let path = dir.join("setpoints.svg");
    line_panels(&path, "Setpoints", &[("setpoint [°C]", sp)])?;
    out.push(path);

    let log = &logs[0];
    let path = dir.join("disturbances.svg");
    line_panels(
        &path,
        "Disturbances",
        &[
            ("ambient [°C]", vec![series(log, "T_amb", |r| r.d.t_amb)]),
            ("irradiation [W/m²]", vec![series(log, "Q_G", |r| r.d.q_g)]),
            ("occupancy [-]", vec![series(log, "P", |r| r.d.occupancy_pct)]),
        ],
    )?;
    out.push(path);

    let cumulative: Vec<Series> = logs
        .iter()
        .map(|log| {
            let mut acc = 0.0;
            let mut prev: Option<(f64, f64)> = None;
            let points: Vec<(f64, f64)> = log
                .rows
                .iter()
                .map(|r| {
                    let p = energy.power(&r.q_hvac, &r.q_fw);
                    if let Some((t0, p0)) = prev {
                        acc += 0.5 * (r.t - t0) * (p + p0) / 3.6e6;
                    }
                    prev = Some((r.t, p));
                    (r.t / 3600.0, acc)
                })
                .collect();
            let stride = ((60.0 / log.dt).round() as usize).max(1);
            Series {
                name: log.label.clone(),
                points: points.into_iter().step_by(stride).collect(),
            }
        })
        .collect();
    let path = dir.join("energy.svg");
    line_panels(&path, "Cumulative surrogate energy", &[("energy [kWh]", cumulative)])?;
    out.push(path);
    Ok(out)
}
