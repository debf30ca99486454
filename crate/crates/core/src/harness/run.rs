use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::energy::{energy_account, EnergyModel};
use super::scenario::Scenario;
use crate::coach_sim::{Coach, CoachState, DisturbanceSample};
use crate::ddpc::{DdpcController, ForecastMode, StepRecord};
use crate::error::{Error, Result};
use crate::hvac::{HvacConfig, HvacController, HvacMode, HvacOutput, HvacState};

/// The simulated coach with its HVAC stack.
#[derive(Clone, Debug)]
pub struct Plant {
    coach: Coach,
    hvac: HvacController,
    state: CoachState,
}

impl Plant {
    pub fn new(coach: Coach, hvac: HvacConfig, state: CoachState) -> Result<Self> {
        state.validate()?;
        Ok(Plant {
            coach,
            hvac: HvacController::new(hvac, HvacMode::Regular)?,
            state,
        })
    }

    pub fn state(&self) -> &CoachState {
        &self.state
    }

    /// HVAC commands for the current temperatures.
    pub fn control(&mut self, t_ref: f64, d: &DisturbanceSample, dt: f64) -> Result<HvacOutput> {
        self.hvac.step(t_ref, &self.state.t_room, d, dt)
    }

    pub fn integrate(&mut self, out: &HvacOutput, d: &DisturbanceSample, dt: f64) -> Result<()> {
        self.state = self.coach.step_ventilated(&self.state, &out.q_in(), out.outside_air, d, dt)?;
        Ok(())
    }

    pub fn advance(&mut self, t_ref: f64, d: &DisturbanceSample, dt: f64) -> Result<HvacOutput> {
        let out = self.control(t_ref, d, dt)?;
        self.integrate(&out, d, dt)?;
        Ok(out)
    }
}

/// One simulator step: the state at `t` and the inputs held over [t, t+dt).
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub t_ref: f64,
    pub t_rule: f64,
    pub t_room: [f64; 3],
    pub q_hvac: [f64; 3],
    pub q_fw: [f64; 3],
    pub d: DisturbanceSample,
    pub hvac_state: HvacState,
    /// `Off` in deactivated runs, else the label of the last DDPC call.
    pub ddpc_status: &'static str,
}

const STATUS_LABELS: [&str; 5] = ["Off", "WarmUp", "Optimal", "MaxIter", "Infeasible"];

const LOG_HEADER: &str = "t,t_ref,t_rule,t_room_up,t_room_mid,t_room_low,q_hvac_up,q_hvac_mid,q_hvac_low,\
q_fw_up,q_fw_mid,q_fw_low,t_amb,q_g,alpha,beta,theta,occupancy_pct,speed,door_open,hvac_state,ddpc_status";

#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub label: String,
    pub dt: f64,
    pub rows: Vec<LogRow>,
    pub ddpc: Vec<StepRecord>,
    /// Largest KKT residual of each DDPC solve, aligned with `ddpc`; NaN
    /// for warm-up steps.
    pub kkt: Vec<f64>,
    pub energy_kwh: f64,
}

impl RunLog {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.t)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(LOG_HEADER);
        s.push('\n');
        for r in &self.rows {
            let nums = [
                r.t, r.t_ref, r.t_rule, r.t_room[0], r.t_room[1], r.t_room[2], r.q_hvac[0], r.q_hvac[1],
                r.q_hvac[2], r.q_fw[0], r.q_fw[1], r.q_fw[2], r.d.t_amb, r.d.q_g, r.d.alpha, r.d.beta,
                r.d.theta, r.d.occupancy_pct, r.d.speed,
            ];
            for v in nums {
                s.push_str(&v.to_string());
                s.push(',');
            }
            s.push_str(if r.d.door_open { "1," } else { "0," });
            s.push_str(r.hvac_state.as_str());
            s.push(',');
            s.push_str(r.ddpc_status);
            s.push('\n');
        }
        s
    }

    /// Reads a log written by [`RunLog::to_csv`]; DDPC step records are not
    /// part of the file. Energy is recomputed with `energy`.
    pub fn read_csv(path: &Path, label: &str, energy: &EnergyModel) -> Result<Self> {
        let parse_err = |reason: String| Error::Parse {
            path: path.to_path_buf(),
            reason,
        };
        let mut rdr = csv::Reader::from_path(path)?;
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.join(",") != LOG_HEADER {
            return Err(parse_err("unexpected header".into()));
        }
        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("row {}, column {}: {e}", line + 2, header[i])))
            };
            let v: Vec<f64> = (0..19).map(num).collect::<Result<_>>()?;
            let door_open = match &rec[19] {
                "0" => false,
                "1" => true,
                other => return Err(parse_err(format!("row {}: door_open `{other}`", line + 2))),
            };
            let hvac_state = HvacState::parse(&rec[20])
                .ok_or_else(|| parse_err(format!("row {}: hvac state `{}`", line + 2, &rec[20])))?;
            let ddpc_status = STATUS_LABELS
                .into_iter()
                .find(|l| *l == &rec[21])
                .ok_or_else(|| parse_err(format!("row {}: ddpc status `{}`", line + 2, &rec[21])))?;
            rows.push(LogRow {
                t: v[0],
                t_ref: v[1],
                t_rule: v[2],
                t_room: [v[3], v[4], v[5]],
                q_hvac: [v[6], v[7], v[8]],
                q_fw: [v[9], v[10], v[11]],
                d: DisturbanceSample {
                    t_amb: v[12],
                    q_g: v[13],
                    alpha: v[14],
                    beta: v[15],
                    theta: v[16],
                    occupancy_pct: v[17],
                    speed: v[18],
                    door_open,
                },
                hvac_state,
                ddpc_status,
            });
        }
        let dt = match rows.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => return Err(parse_err("a log needs at least two rows".into())),
        };
        let mut log = RunLog {
            label: label.to_string(),
            dt,
            rows,
            ddpc: Vec::new(),
            kkt: Vec::new(),
            energy_kwh: 0.0,
        };
        log.energy_kwh = energy_account(&log, energy);
        Ok(log)
    }
}

/// Simulates one scenario with (`activated`) or without the DDPC layer.
///
/// The coach and HVAC stack step every dt. The rule setpoint is refreshed
/// every control period; in activated mode the DDPC then replaces it,
/// seeing room temperatures with additive Gaussian noise and the true
/// coach state for its open-loop reference.
pub fn run_closed_loop(sc: &Scenario, activated: bool) -> Result<RunLog> {
    let cfg = &sc.config;
    let params = &sc.params;
    cfg.validate(params.ddpc.rho)?;
    let coach = params.coach()?;
    let dt = cfg.dt_s;
    let every = (cfg.control_period_s / dt).round() as usize;
    let steps = (cfg.duration_s / dt).round() as usize;
    let rule = &params.hvac.rule;

    let mut ddpc = if activated {
        let model = sc
            .model
            .clone()
            .ok_or_else(|| Error::Config("activated run needs a predictor model".into()))?;
        let ctrl = DdpcController::new(model, params.ddpc.clone(), rule.clone(), coach.clone())
            .map_err(|e| e.at("ddpc", 0.0))?;
        Some(ctrl.with_sim_dt(dt))
    } else {
        None
    };
    let horizon = params.ddpc.horizon;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::invalid("noise_std", e.to_string()))?;

    let d0 = sc.schedule.at(0.0);
    let rule0 = rule.setpoint(d0.t_amb);
    let mut plant = Plant::new(
        coach,
        params.hvac.clone(),
        CoachState::from_room_estimate([rule0; 3], d0.t_amb),
    )
    .map_err(|e| e.at("coach_sim", 0.0))?;

    let mut rows = Vec::with_capacity(steps + 1);
    let mut records = Vec::new();
    let mut kkt = Vec::new();
    let mut t_rule = rule0;
    let mut t_ref = rule0;
    let mut status = if activated { "WarmUp" } else { "Off" };
    for i in 0..=steps {
        let t = i as f64 * dt;
        let d = sc.schedule.at(t);
        if i % every == 0 {
            t_rule = rule.setpoint(d.t_amb);
            t_ref = t_rule;
            if let Some(ctrl) = ddpc.as_mut() {
                let forecast: Vec<DisturbanceSample> = (0..=horizon)
                    .map(|k| match params.ddpc.forecast {
                        ForecastMode::Perfect => sc.schedule.at(t + k as f64 * cfg.control_period_s),
                        ForecastMode::Persistence => d,
                    })
                    .collect();
                let mut y = plant.state().t_room;
                if cfg.noise_std > 0.0 {
                    for v in &mut y {
                        *v += noise.sample(&mut rng);
                    }
                }
                let estimate = *plant.state();
                let detail = ctrl.step(t, y, &estimate, &forecast).map_err(|e| e.at("ddpc", t))?;
                t_ref = detail.record.u_star;
                status = detail.record.status;
                kkt.push(detail.solution.as_ref().map_or(f64::NAN, |s| s.residuals.max()));
                records.push(detail.record);
            }
        }
        let out = plant.control(t_ref, &d, dt).map_err(|e| e.at("hvac", t))?;
        rows.push(LogRow {
            t,
            t_ref,
            t_rule,
            t_room: plant.state().t_room,
            q_hvac: out.q_hvac,
            q_fw: out.q_fw,
            d,
            hvac_state: out.state,
            ddpc_status: status,
        });
        if i < steps {
            plant.integrate(&out, &d, dt).map_err(|e| e.at("coach_sim", t))?;
        }
    }
    let mut log = RunLog {
        label: if activated { "activated" } else { "deactivated" }.into(),
        dt,
        rows,
        ddpc: records,
        kkt,
        energy_kwh: 0.0,
    };
    log.energy_kwh = energy_account(&log, &EnergyModel::new(cfg.eta_heat, cfg.cop)?);
    Ok(log)
}
