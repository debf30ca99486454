use nalgebra::{DMatrix, DVector};

use super::{DdpcConfig, SlackMode};
use crate::coach_sim::{Coach, CoachState, DisturbanceSample};
use crate::error::{Error, Result};
use crate::predictor::PredictorModel;
use crate::qp::{self, KktResiduals, Qp, QpStatus};

/// Open-loop deck-average room temperature with HVAC and floor/wall
/// heating off, projected onto [t_rule − band, t_rule + band] at every
/// control step k = 0..T. `schedule[k]` is held over step k.
pub fn compute_t_opt(
    state: &CoachState,
    schedule: &[DisturbanceSample],
    t_rule_f: &[f64],
    band: f64,
    coach: &Coach,
    period_s: f64,
    dt_s: f64,
) -> Result<Vec<f64>> {
    let horizon = t_rule_f.len().saturating_sub(1);
    if schedule.len() < horizon {
        return Err(Error::InsufficientData(format!(
            "disturbance schedule covers {} of {horizon} steps",
            schedule.len()
        )));
    }
    let substeps = (period_s / dt_s).round().max(1.0) as usize;
    let h = period_s / substeps as f64;
    let clip = |v: f64, k: usize| v.clamp(t_rule_f[k] - band, t_rule_f[k] + band);
    let mut x = *state;
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(clip(x.mean_room(), 0));
    for k in 1..=horizon {
        for _ in 0..substeps {
            x = coach.step(&x, &[0.0; 6], &schedule[k - 1], h)?;
        }
        out.push(clip(x.mean_room(), k));
    }
    Ok(out)
}

/// QP data for one receding-horizon solve with y_f eliminated:
/// y_f = c + B·u where u = (u(0|t), …, u(T|t)).
#[derive(Clone, Debug, PartialEq)]
pub struct OcpInstance {
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
    /// Measured y(t).
    pub y0: [f64; 3],
    pub t_rule_f: Vec<f64>,
    pub t_opt_f: Vec<f64>,
    pub u_prev: f64,
    pub config: DdpcConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OcpSolution {
    pub u_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub eps_star: Vec<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
    pub residuals: KktResiduals,
}

/// Builds the instance from the model, the past ρ−1 complete (y, u, d)
/// slices, the current measurement and the forecasts.
#[allow(clippy::too_many_arguments)]
pub fn assemble_qp(
    model: &PredictorModel,
    history: &[[f64; 9]],
    y0: [f64; 3],
    d0: [f64; 5],
    d_f: &[[f64; 5]],
    t_rule_f: &[f64],
    t_opt_f: &[f64],
    u_prev: f64,
    config: &DdpcConfig,
) -> Result<OcpInstance> {
    config.validate()?;
    let (rho, t) = (model.rho, model.horizon);
    if model.dims != crate::data::Dims::default() {
        return Err(Error::invalid("model", "controller needs 3/1/5 dims"));
    }
    if history.len() + 1 < rho {
        return Err(Error::InsufficientData(format!(
            "history has {} past samples, need {}",
            history.len(),
            rho - 1
        )));
    }
    for (block, expected, actual) in [
        ("d_f", t, d_f.len()),
        ("t_rule_f", t + 1, t_rule_f.len()),
        ("t_opt_f", t + 1, t_opt_f.len()),
    ] {
        if expected != actual {
            return Err(Error::Dimension {
                block,
                expected,
                actual,
            });
        }
    }
    let nz = 9;
    let mut z_p = Vec::with_capacity(rho * nz);
    for slice in &history[history.len() + 1 - rho..] {
        z_p.extend_from_slice(slice);
    }
    z_p.extend_from_slice(&y0);
    let slot = z_p.len();
    z_p.push(0.0);
    z_p.extend_from_slice(&d0);

    let h_p = model.h_p();
    let h_u = model.h_u();
    let h_d = model.h_d();
    let d_vec = DVector::from_iterator(5 * t, d_f.iter().flatten().copied());
    let c = &h_p * DVector::from_vec(z_p) + &h_d * d_vec;
    let mut b = DMatrix::zeros(3 * t, t + 1);
    b.column_mut(0).copy_from(&h_p.column(slot));
    b.view_mut((0, 1), (3 * t, t)).copy_from(&h_u);
    Ok(OcpInstance {
        b,
        c,
        y0,
        t_rule_f: t_rule_f.to_vec(),
        t_opt_f: t_opt_f.to_vec(),
        u_prev,
        config: config.clone(),
    })
}

impl OcpInstance {
    pub fn horizon(&self) -> usize {
        self.t_rule_f.len() - 1
    }

    fn n_slack(&self) -> usize {
        match self.config.slack {
            SlackMode::Scalar => self.horizon(),
            SlackMode::PerDeck => 3 * self.horizon(),
        }
    }

    fn slack_index(&self, k: usize, deck: usize) -> usize {
        let nu = self.horizon() + 1;
        match self.config.slack {
            SlackMode::Scalar => nu + k - 1,
            SlackMode::PerDeck => nu + 3 * (k - 1) + deck,
        }
    }

    pub fn predict(&self, u: &[f64]) -> DVector<f64> {
        &self.c + &self.b * DVector::from_column_slice(u)
    }

    /// ½xᵀPx + qᵀx plus the constant that makes it equal the cost.
    pub fn to_qp(&self) -> (Qp, f64) {
        let t = self.horizon();
        let nu = t + 1;
        let n = nu + self.n_slack();
        let cfg = &self.config;
        let mut p = DMatrix::zeros(n, n);
        let mut q = DVector::zeros(n);
        let mut constant = 0.0;

        // J_y, k = 0 measured
        for d in 0..3 {
            constant += (self.y0[d] - self.t_opt_f[0]).powi(2);
        }
        for k in 1..=t {
            for d in 0..3 {
                let row = self.b.row(3 * (k - 1) + d);
                let r = self.c[3 * (k - 1) + d] - self.t_opt_f[k];
                for i in 0..nu {
                    q[i] += 2.0 * r * row[i];
                    for j in 0..nu {
                        p[(i, j)] += 2.0 * row[i] * row[j];
                    }
                }
                constant += r * r;
            }
        }
        // σ J_u
        for k in 0..=t {
            p[(k, k)] += 2.0 * cfg.sigma;
            q[k] -= 2.0 * cfg.sigma * self.t_opt_f[k];
            constant += cfg.sigma * self.t_opt_f[k].powi(2);
        }
        // τ J_ε
        for i in nu..n {
            p[(i, i)] += 2.0 * cfg.tau;
        }
        // γ J_Δu
        p[(0, 0)] += 2.0 * cfg.gamma;
        q[0] -= 2.0 * cfg.gamma * self.u_prev;
        constant += cfg.gamma * self.u_prev.powi(2);
        for k in 1..=t {
            p[(k, k)] += 2.0 * cfg.gamma;
            p[(k - 1, k - 1)] += 2.0 * cfg.gamma;
            p[(k, k - 1)] -= 2.0 * cfg.gamma;
            p[(k - 1, k)] -= 2.0 * cfg.gamma;
        }
        p = 0.5 * (&p + p.transpose());
        let eig = p.clone().symmetric_eigenvalues();
        let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(v.abs())));
        if lo <= 1e-12 * hi.max(1.0) {
            for i in 0..n {
                p[(i, i)] += 1e-9;
            }
        }

        let band = cfg.comfort_band();
        let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
        for k in 1..=t {
            for d in 0..3 {
                let r = 3 * (k - 1) + d;
                let e = self.slack_index(k, d);
                let coeffs: Vec<(usize, f64)> = (0..nu).map(|i| (i, self.b[(r, i)])).collect();
                let mut up = coeffs.clone();
                up.push((e, -1.0));
                rows.push((up, self.t_rule_f[k] + band - self.c[r]));
                let mut down: Vec<(usize, f64)> = coeffs.iter().map(|(i, v)| (*i, -v)).collect();
                down.push((e, -1.0));
                rows.push((down, band - self.t_rule_f[k] + self.c[r]));
            }
        }
        for e in nu..n {
            rows.push((vec![(e, -1.0)], 0.0));
        }
        for k in 0..=t {
            rows.push((vec![(k, 1.0)], self.t_rule_f[k] + cfg.setpoint_band));
            rows.push((vec![(k, -1.0)], cfg.setpoint_band - self.t_rule_f[k]));
        }
        if cfg.delta_t_max.is_finite() {
            rows.push((vec![(0, 1.0)], cfg.delta_t_max + self.u_prev));
            rows.push((vec![(0, -1.0)], cfg.delta_t_max - self.u_prev));
            for k in 1..=t {
                rows.push((vec![(k, 1.0), (k - 1, -1.0)], cfg.delta_t_max));
                rows.push((vec![(k, -1.0), (k - 1, 1.0)], cfg.delta_t_max));
            }
        }
        let mut g = DMatrix::zeros(rows.len(), n);
        let mut h = DVector::zeros(rows.len());
        for (r, (coeffs, rhs)) in rows.into_iter().enumerate() {
            for (i, v) in coeffs {
                g[(r, i)] += v;
            }
            h[r] = rhs;
        }
        (Qp::new(p, q, g, h), constant)
    }
}

pub fn solve_qp(inst: &OcpInstance) -> Result<OcpSolution> {
    let (qp, constant) = inst.to_qp();
    let sol = qp::solve(&qp, &inst.config.solver, None)?;
    let nu = inst.horizon() + 1;
    let u_star: Vec<f64> = sol.x.rows(0, nu).iter().copied().collect();
    let y_star = inst.predict(&u_star).iter().copied().collect();
    Ok(OcpSolution {
        eps_star: sol.x.rows(nu, sol.x.len() - nu).iter().copied().collect(),
        u_star,
        y_star,
        objective: sol.objective + constant,
        status: sol.status,
        iterations: sol.iterations,
        residuals: sol.residuals,
    })
}

/// Splits J_y = Σ_k ‖y(k) − T_opt(k)·1₃‖² into the average-tracking part
/// Σ 3·(T_avg − T_opt)² and the deck spread Σ Σ (T_room − T_avg)².
pub fn jy_decomposition(y: &[f64], t_opt: &[f64]) -> Result<(f64, f64)> {
    if y.len() != 3 * t_opt.len() {
        return Err(Error::Dimension {
            block: "y",
            expected: 3 * t_opt.len(),
            actual: y.len(),
        });
    }
    let mut avg_tracking = 0.0;
    let mut spread = 0.0;
    for (k, to) in t_opt.iter().enumerate() {
        let yk = &y[3 * k..3 * k + 3];
        let avg = (yk[0] + yk[1] + yk[2]) / 3.0;
        avg_tracking += 3.0 * (avg - to).powi(2);
        spread += yk.iter().map(|v| (v - avg).powi(2)).sum::<f64>();
    }
    Ok((avg_tracking, spread))
}

pub fn j_y(y: &[f64], t_opt: &[f64]) -> f64 {
    t_opt
        .iter()
        .enumerate()
        .map(|(k, to)| (0..3).map(|d| (y[3 * k + d] - to).powi(2)).sum::<f64>())
        .sum()
}
