//! Receding-horizon setpoint optimization on top of the identified
//! predictor.

mod ocp;

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use ocp::{assemble_qp, compute_t_opt, j_y, jy_decomposition, solve_qp, OcpInstance, OcpSolution};

use crate::coach_sim::{Coach, CoachState, DisturbanceSample};
use crate::error::{Error, Result};
use crate::hvac::RuleTable;
use crate::predictor::PredictorModel;
use crate::qp::{QpSettings, QpStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlackMode {
    /// One slack per step shared by all decks.
    Scalar,
    PerDeck,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMode {
    /// True future disturbances.
    Perfect,
    /// Current disturbance held over the horizon.
    Persistence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DdpcConfig {
    /// Comfort half-band around t_rule, K.
    pub t_max: f64,
    /// Tighter half-band used inside the controller.
    pub t_max_inner: Option<f64>,
    /// Setpoint half-band around t_rule, K.
    pub setpoint_band: f64,
    /// K per control step.
    pub delta_t_max: f64,
    pub sigma: f64,
    pub tau: f64,
    pub gamma: f64,
    pub horizon: usize,
    pub rho: usize,
    pub period_s: f64,
    pub slack: SlackMode,
    pub forecast: ForecastMode,
    pub solver: QpSettings,
}

impl Default for DdpcConfig {
    /// Placeholder weights.
    fn default() -> Self {
        DdpcConfig {
            t_max: 2.0,
            t_max_inner: None,
            setpoint_band: 2.0,
            delta_t_max: 0.3,
            sigma: 1.0,
            tau: 100.0,
            gamma: 10.0,
            horizon: 6,
            rho: 12,
            period_s: 300.0,
            slack: SlackMode::Scalar,
            forecast: ForecastMode::Perfect,
            solver: QpSettings::default(),
        }
    }
}

impl DdpcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_max > 0.0) {
            return Err(Error::invalid("t_max", "must be positive"));
        }
        if let Some(inner) = self.t_max_inner {
            if !(inner > 0.0 && inner <= self.t_max) {
                return Err(Error::invalid("t_max_inner", "must lie in (0, t_max]"));
            }
        }
        if !(self.setpoint_band >= 0.0 && self.setpoint_band.is_finite()) {
            return Err(Error::invalid("setpoint_band", "must be non-negative"));
        }
        if !(self.delta_t_max > 0.0) {
            return Err(Error::invalid("delta_t_max", "must be positive"));
        }
        if !(self.sigma >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::invalid("weights", "sigma and gamma must be non-negative"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::invalid("tau", "must be positive"));
        }
        if self.horizon == 0 || self.rho == 0 {
            return Err(Error::invalid("horizon/rho", "must be at least 1"));
        }
        if !(self.period_s > 0.0) {
            return Err(Error::invalid("period_s", "must be positive"));
        }
        Ok(())
    }

    /// Half-band used for the comfort constraint and the T_opt projection.
    pub fn comfort_band(&self) -> f64 {
        self.t_max_inner.unwrap_or(self.t_max)
    }
}

/// Outcome of one controller call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepStatus {
    WarmUp,
    Optimal,
    /// Solver failed; previous setpoint was reused.
    Fallback(QpStatus),
}

impl StepStatus {
    pub fn label(&self) -> &'static str {
        match self {
            StepStatus::WarmUp => "WarmUp",
            StepStatus::Optimal => "Optimal",
            StepStatus::Fallback(QpStatus::MaxIter) => "MaxIter",
            StepStatus::Fallback(QpStatus::Infeasible) => "Infeasible",
            StepStatus::Fallback(QpStatus::Optimal) => "Optimal",
        }
    }
}

/// Per-step log line `t,u_star,t_rule,t_opt0,eps_max,objective,status,solve_ms`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub u_star: f64,
    pub t_rule: f64,
    pub t_opt0: f64,
    pub eps_max: f64,
    pub objective: f64,
    pub status: &'static str,
    pub solve_ms: f64,
}

#[derive(Clone, Debug)]
pub struct StepDetail {
    pub record: StepRecord,
    pub status: StepStatus,
    pub solution: Option<OcpSolution>,
    pub t_opt: Vec<f64>,
}

/// Controller state for one coach.
#[derive(Clone, Debug)]
pub struct DdpcController {
    model: PredictorModel,
    config: DdpcConfig,
    rule: RuleTable,
    coach: Coach,
    sim_dt: f64,
    history: VecDeque<[f64; 9]>,
    u_prev: Option<f64>,
}

impl DdpcController {
    pub fn new(model: PredictorModel, config: DdpcConfig, rule: RuleTable, coach: Coach) -> Result<Self> {
        config.validate()?;
        rule.validate()?;
        if model.rho != config.rho || model.horizon != config.horizon {
            return Err(Error::Config(format!(
                "model has rho {} / horizon {} but the controller is configured for {} / {}",
                model.rho, model.horizon, config.rho, config.horizon
            )));
        }
        Ok(DdpcController {
            model,
            config,
            rule,
            coach,
            sim_dt: 10.0,
            history: VecDeque::new(),
            u_prev: None,
        })
    }

    pub fn with_sim_dt(mut self, dt: f64) -> Self {
        self.sim_dt = dt;
        self
    }

    pub fn config(&self) -> &DdpcConfig {
        &self.config
    }

    pub fn model(&self) -> &PredictorModel {
        &self.model
    }

    pub fn is_warm(&self) -> bool {
        self.history.len() + 1 >= self.config.rho
    }

    /// One control step at time `t`. `forecast[k]` is the disturbance over
    /// step k = 0..=T; `forecast[0]` is the current measurement.
    pub fn step(
        &mut self,
        t: f64,
        y: [f64; 3],
        estimate: &CoachState,
        forecast: &[DisturbanceSample],
    ) -> Result<StepDetail> {
        let cfg = &self.config;
        let horizon = cfg.horizon;
        if forecast.len() < horizon + 1 {
            return Err(Error::InsufficientData(format!(
                "forecast has {} samples, need {}",
                forecast.len(),
                horizon + 1
            )));
        }
        let t_rule_f: Vec<f64> = forecast[..=horizon].iter().map(|d| self.rule.setpoint(d.t_amb)).collect();
        let t_opt = compute_t_opt(
            estimate,
            forecast,
            &t_rule_f,
            cfg.comfort_band(),
            &self.coach,
            cfg.period_s,
            self.sim_dt,
        )?;
        let d0 = forecast[0].features();
        let u_prev = self.u_prev.unwrap_or(t_rule_f[0]);

        let (u, status, solution, solve_ms) = if !self.is_warm() {
            (t_rule_f[0], StepStatus::WarmUp, None, 0.0)
        } else {
            let start = Instant::now();
            let hist: Vec<[f64; 9]> = self.history.iter().copied().collect();
            let d_f: Vec<[f64; 5]> = forecast[1..=horizon].iter().map(|d| d.features()).collect();
            let inst = assemble_qp(&self.model, &hist, y, d0, &d_f, &t_rule_f, &t_opt, u_prev, cfg)?;
            let sol = solve_qp(&inst)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            match sol.status {
                QpStatus::Optimal => (
                    clamp_to_box(sol.u_star[0], t_rule_f[0], u_prev, cfg),
                    StepStatus::Optimal,
                    Some(sol),
                    ms,
                ),
                other => {
                    log::warn!("DDPC solve at t = {t} s ended with {other:?}; holding the previous setpoint");
                    let u = clamp_to_box(u_prev, t_rule_f[0], u_prev, cfg);
                    (u, StepStatus::Fallback(other), Some(sol), ms)
                }
            }
        };

        let [y1, y2, y3] = y;
        let [a, b, c, d, e] = d0;
        self.history.push_back([y1, y2, y3, u, a, b, c, d, e]);
        while self.history.len() > self.config.rho {
            self.history.pop_front();
        }
        self.u_prev = Some(u);

        let eps_max = solution
            .as_ref()
            .map_or(0.0, |s| s.eps_star.iter().copied().fold(0.0, f64::max));
        let objective = solution.as_ref().map_or(f64::NAN, |s| s.objective);
        Ok(StepDetail {
            record: StepRecord {
                t,
                u_star: u,
                t_rule: t_rule_f[0],
                t_opt0: t_opt[0],
                eps_max,
                objective,
                status: status.label(),
                solve_ms,
            },
            status,
            solution,
            t_opt,
        })
    }
}

/// Projects u onto the setpoint band intersected with the rate box; the
/// band wins when the two do not overlap.
fn clamp_to_box(u: f64, t_rule: f64, u_prev: f64, cfg: &DdpcConfig) -> f64 {
    let (band_lo, band_hi) = (t_rule - cfg.setpoint_band, t_rule + cfg.setpoint_band);
    let lo = band_lo.max(u_prev - cfg.delta_t_max);
    let hi = band_hi.min(u_prev + cfg.delta_t_max);
    if lo <= hi {
        u.clamp(lo, hi)
    } else {
        u.clamp(band_lo, band_hi)
    }
}
