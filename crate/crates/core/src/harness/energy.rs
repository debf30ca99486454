use serde::Serialize;

use super::run::{LogRow, RunLog};
use crate::error::{Error, Result};

/// Electrical surrogate for the thermal inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyModel {
    /// Heating efficiency.
    pub eta_heat: f64,
    pub cop: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            eta_heat: 1.0,
            cop: 3.0,
        }
    }
}

impl EnergyModel {
    pub fn new(eta_heat: f64, cop: f64) -> Result<Self> {
        if !(eta_heat > 0.0 && cop > 0.0) {
            return Err(Error::invalid("energy model", "eta_heat and cop must be positive"));
        }
        Ok(EnergyModel { eta_heat, cop })
    }

    /// Electrical power in W.
    pub fn power(&self, q_hvac: &[f64; 3], q_fw: &[f64; 3]) -> f64 {
        (0..3)
            .map(|i| (q_hvac[i].max(0.0) + q_fw[i]) / self.eta_heat + (-q_hvac[i]).max(0.0) / self.cop)
            .sum()
    }
}

const J_PER_KWH: f64 = 3.6e6;

/// Trapezoid integral of `f` over the rows, in (unit of f)·s.
fn trapezoid(rows: &[LogRow], f: impl Fn(&LogRow) -> f64) -> f64 {
    rows.windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1])))
        .sum()
}

fn energy_of(rows: &[LogRow], model: &EnergyModel) -> f64 {
    trapezoid(rows, |r| model.power(&r.q_hvac, &r.q_fw)) / J_PER_KWH
}

/// Total electrical energy of a run in kWh.
pub fn energy_account(log: &RunLog, model: &EnergyModel) -> f64 {
    energy_of(&log.rows, model)
}

/// Mean over decks of the comfort-band excess, K.
fn violation(r: &LogRow, t_max: f64) -> f64 {
    r.t_room.iter().map(|t| ((t - r.t_rule).abs() - t_max).max(0.0)).sum::<f64>() / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bucket {
    pub start_s: f64,
    pub energy_a_kwh: f64,
    pub energy_b_kwh: f64,
    pub savings_pct: f64,
}

/// A/B result over the steady-state window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    pub window_start_s: f64,
    pub window_end_s: f64,
    pub energy_a_kwh: f64,
    pub energy_b_kwh: f64,
    /// Savings of A relative to B.
    pub savings_pct: f64,
    /// Average hourly violation, K.
    pub violation_a: f64,
    pub violation_b: f64,
    pub buckets: Vec<Bucket>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareOptions {
    pub steady_start: f64,
    pub t_max: f64,
    pub energy: EnergyModel,
    pub bucket_s: f64,
}

impl CompareOptions {
    pub fn new(steady_start: f64, t_max: f64) -> Self {
        CompareOptions {
            steady_start,
            t_max,
            energy: EnergyModel::default(),
            bucket_s: 1800.0,
        }
    }
}

pub fn savings_pct(energy_a: f64, energy_b: f64) -> f64 {
    if energy_b == 0.0 {
        0.0
    } else {
        100.0 * (energy_b - energy_a) / energy_b
    }
}

fn window(rows: &[LogRow], from: f64, to: f64) -> &[LogRow] {
    let lo = rows.partition_point(|r| r.t < from);
    let hi = rows.partition_point(|r| r.t <= to);
    &rows[lo..hi.max(lo)]
}

/// Compares run A against baseline B on their common grid from
/// `steady_start` to the end.
pub fn compare(a: &RunLog, b: &RunLog, opts: &CompareOptions) -> Result<Comparison> {
    if a.rows.len() != b.rows.len() || a.times().zip(b.times()).any(|(x, y)| x != y) {
        return Err(Error::invalid("compare", "runs are not on a common time grid"));
    }
    let end = a.rows.last().map_or(0.0, |r| r.t);
    let wa = window(&a.rows, opts.steady_start, end);
    let wb = window(&b.rows, opts.steady_start, end);
    if wa.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "no samples between steady start {} s and end {end} s",
            opts.steady_start
        )));
    }
    let hours = (wa[wa.len() - 1].t - wa[0].t) / 3600.0;
    let avg_violation = |rows: &[LogRow]| trapezoid(rows, |r| violation(r, opts.t_max)) / 3600.0 / hours;
    let (energy_a, energy_b) = (energy_of(wa, &opts.energy), energy_of(wb, &opts.energy));

    let mut buckets = Vec::new();
    let mut start = wa[0].t;
    while start < end {
        let stop = (start + opts.bucket_s).min(end);
        let ea = energy_of(window(&a.rows, start, stop), &opts.energy);
        let eb = energy_of(window(&b.rows, start, stop), &opts.energy);
        buckets.push(Bucket {
            start_s: start,
            energy_a_kwh: ea,
            energy_b_kwh: eb,
            savings_pct: savings_pct(ea, eb),
        });
        start = stop;
    }

    Ok(Comparison {
        label_a: a.label.clone(),
        label_b: b.label.clone(),
        window_start_s: wa[0].t,
        window_end_s: end,
        energy_a_kwh: energy_a,
        energy_b_kwh: energy_b,
        savings_pct: savings_pct(energy_a, energy_b),
        violation_a: avg_violation(wa),
        violation_b: avg_violation(wb),
        buckets,
    })
}
