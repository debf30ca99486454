//! Synthetic identification data: the simulated coach under the HVAC
//! stack with a randomly excited setpoint.

use chrono::{DateTime, TimeDelta, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::params::ParamFile;
use super::run::{Plant, RunLog};
use super::schedule::DayShape;
use crate::coach_sim::CoachState;
use crate::data::{build_hankel, HvacRecord, RawRecordSet, Trajectory, TripRecord, WeatherRecord};
use crate::hvac::HvacMode;
use crate::error::{Error, Result};
use crate::predictor::{fit, FitOptions, PredictorModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSpec {
    /// One trajectory per simulated day.
    pub days: usize,
    pub seed: u64,
    /// Gaussian noise on the recorded room temperatures, K.
    pub noise_std: f64,
    pub period_s: f64,
    pub dt_s: f64,
    /// Setpoint excursions stay within rule ± this, K.
    pub offset_max: f64,
    /// Largest setpoint move per sample, K.
    pub offset_rate: f64,
    /// Simulated time discarded before recording, s.
    pub pre_roll_s: f64,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        TrainingSpec {
            days: 24,
            seed: 7,
            noise_std: 0.05,
            period_s: 300.0,
            dt_s: 10.0,
            offset_max: 2.0,
            offset_rate: 0.3,
            pre_roll_s: 3600.0,
        }
    }
}

impl TrainingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::invalid("days", "must be at least 1"));
        }
        if !(self.dt_s > 0.0 && self.period_s >= self.dt_s) {
            return Err(Error::invalid("period_s", "must be positive and at least dt"));
        }
        let ratio = self.period_s / self.dt_s;
        if (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::invalid("period_s", "must be a multiple of dt"));
        }
        if !(self.noise_std >= 0.0 && self.offset_max >= 0.0 && self.offset_rate > 0.0) {
            return Err(Error::invalid("training", "noise, offset and rate must be non-negative"));
        }
        Ok(())
    }
}

fn random_day(rng: &mut ChaCha8Rng) -> DayShape {
    let t_min = rng.random_range(-5.0..26.0);
    DayShape {
        t_min,
        t_max: t_min + rng.random_range(3.0..12.0),
        sunrise_h: rng.random_range(5.0..8.0),
        sunset_h: rng.random_range(16.0..21.0),
        peak_q_g: rng.random_range(0.0..950.0),
        peak_elevation: rng.random_range(0.3..1.15),
        service: rng.random_bool(0.5),
        midday_load: if rng.random_bool(0.3) { rng.random_range(0.0..0.5) } else { 0.0 },
    }
}

/// Simulates `spec.days` independent days and records (u, y, d) at the
/// sample period. y is point-sampled room temperature plus noise, d the
/// disturbance features at the sampling instant, u the setpoint held over
/// the following period.
pub fn generate_training(params: &ParamFile, spec: &TrainingSpec) -> Result<Vec<Trajectory>> {
    spec.validate()?;
    params.validate()?;
    let coach = params.coach()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).map_err(|e| Error::invalid("noise_std", e.to_string()))?;
    let substeps = (spec.period_s / spec.dt_s).round() as usize;
    let samples = (86_400.0 / spec.period_s).floor() as usize;
    let pre = (spec.pre_roll_s / spec.period_s).ceil() as usize;

    let mut out = Vec::with_capacity(spec.days);
    for day in 0..spec.days {
        let shape = random_day(&mut rng);
        let t_start = -(pre as f64) * spec.period_s;
        let d0 = shape.sample(t_start);
        let rule0 = params.hvac.rule.setpoint(d0.t_amb);
        let mut plant = Plant::new(
            coach.clone(),
            params.hvac.clone(),
            CoachState::from_room_estimate([rule0; 3], d0.t_amb),
        )?;
        let mut offset = 0.0;
        let mut target = 0.0;
        let mut hold = 0usize;
        let mut traj = Trajectory {
            id: format!("train-{day:03}"),
            sample_period: spec.period_s,
            t0: 0.0,
            u: Vec::with_capacity(samples),
            y: Vec::with_capacity(samples),
            d: Vec::with_capacity(samples),
        };
        for k in 0..pre + samples {
            let t = t_start + k as f64 * spec.period_s;
            let d = shape.sample(t);
            if hold == 0 {
                target = rng.random_range(-spec.offset_max..=spec.offset_max);
                hold = rng.random_range(2..=12);
            }
            hold -= 1;
            offset += (target - offset).clamp(-spec.offset_rate, spec.offset_rate);
            let u = params.hvac.rule.setpoint(d.t_amb) + offset;
            if k >= pre {
                let mut y = plant.state().t_room;
                if spec.noise_std > 0.0 {
                    for v in &mut y {
                        *v += noise.sample(&mut rng);
                    }
                }
                traj.u.push(u);
                traj.y.push(y);
                traj.d.push(d.features());
            }
            for s in 0..substeps {
                let ts = t + s as f64 * spec.dt_s;
                plant.advance(u, &shape.sample(ts), spec.dt_s).map_err(|e| e.at("coach_sim", ts))?;
            }
        }
        out.push(traj);
    }
    Ok(out)
}

/// Generates training data and fits a predictor with default options.
pub fn train_model(params: &ParamFile, spec: &TrainingSpec) -> Result<PredictorModel> {
    let trajs = generate_training(params, spec)?;
    let hankel = build_hankel(&trajs, params.ddpc.rho, params.ddpc.horizon)?;
    fit(&hankel, &FitOptions::default())
}

const EARTH_RADIUS: f64 = 6_371_008.8;
/// Distance covered between consecutive weather records, m.
const TRACK_STEP: f64 = 250.0;

/// Raw HVAC, weather and trip records sampled from a run every
/// `period_s`, timestamped from `start`. The GPS track advances a fixed
/// distance along the logged heading before each record, so the
/// heading recovered from consecutive fixes equals the logged one.
pub fn raw_records(log: &RunLog, start: DateTime<Utc>, period_s: f64, origin: (f64, f64)) -> Result<RawRecordSet> {
    let stride = (period_s / log.dt).round() as usize;
    if stride == 0 || ((stride as f64) * log.dt - period_s).abs() > 1e-9 {
        return Err(Error::invalid("period_s", "must be a multiple of the log step"));
    }
    let rows: Vec<_> = log.rows.iter().step_by(stride).collect();
    let stamp = |t: f64| start + TimeDelta::milliseconds((t * 1000.0).round() as i64);
    let mut hvac = Vec::with_capacity(rows.len());
    let mut weather = Vec::with_capacity(rows.len());
    let (mut lat, mut lon) = origin;
    for (k, r) in rows.iter().enumerate() {
        let theta = rows[k.max(1).min(rows.len() - 1)].d.theta;
        if k > 0 {
            let lat1 = lat + (TRACK_STEP * theta.cos() / EARTH_RADIUS).to_degrees();
            let mid = (0.5 * (lat + lat1)).to_radians();
            lon += (TRACK_STEP * theta.sin() / (EARTH_RADIUS * mid.cos())).to_degrees();
            lat = lat1;
        }
        hvac.push(HvacRecord {
            timestamp: stamp(r.t),
            mode: HvacMode::Regular,
            t_ref_c: r.t_ref,
            t_room_up_c: r.t_room[0],
            t_room_mid_c: r.t_room[1],
            t_room_low_c: r.t_room[2],
            speed_ms: r.d.speed,
        });
        weather.push(WeatherRecord {
            timestamp: stamp(r.t),
            lat_deg: lat,
            lon_deg: lon,
            t_amb_c: r.d.t_amb,
            q_g_wm2: r.d.q_g,
            alpha_rad: r.d.alpha,
            beta_rad: r.d.beta,
        });
    }
    let mut trips = Vec::new();
    let mut k = 0;
    while k < rows.len() {
        let occ = rows[k].d.occupancy_pct;
        let mut end = k;
        while end + 1 < rows.len() && rows[end + 1].d.occupancy_pct == occ {
            end += 1;
        }
        if occ > 0.0 {
            trips.push(TripRecord {
                start: stamp(rows[k].t),
                end: stamp(rows[end].t),
                occupancy_pct: occ,
            });
        }
        k = end + 1;
    }
    Ok(RawRecordSet { hvac, weather, trips })
}
