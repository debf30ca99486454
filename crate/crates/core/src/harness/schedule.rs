use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coach_sim::DisturbanceSample;
use crate::data::{read_csv, write_csv};
use crate::error::{Error, Result};

/// One line of a disturbance schedule file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct ScheduleRow {
    time_s: f64,
    t_amb_c: f64,
    q_g_wm2: f64,
    alpha_rad: f64,
    beta_rad: f64,
    theta_rad: f64,
    occupancy_pct: f64,
    speed_ms: f64,
    door_open: u8,
}

/// Time-stamped disturbances, held constant until the next entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    times: Vec<f64>,
    samples: Vec<DisturbanceSample>,
}

impl Schedule {
    pub fn new(entries: Vec<(f64, DisturbanceSample)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InsufficientData("empty disturbance schedule".into()));
        }
        if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("schedule", "times must be strictly increasing"));
        }
        for (t, d) in &entries {
            if !t.is_finite() {
                return Err(Error::invalid("schedule", "non-finite time"));
            }
            d.validate()?;
        }
        let (times, samples) = entries.into_iter().unzip();
        Ok(Schedule { times, samples })
    }

    /// Constant conditions from t = 0.
    pub fn constant(d: DisturbanceSample) -> Self {
        Schedule {
            times: vec![0.0],
            samples: vec![d],
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (f64, &DisturbanceSample)> {
        self.times.iter().copied().zip(&self.samples)
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Most recent entry at or before `t`; the first entry before the start.
    pub fn at(&self, t: f64) -> DisturbanceSample {
        let i = self.times.partition_point(|s| *s <= t);
        self.samples[i.saturating_sub(1)]
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows: Vec<ScheduleRow> = read_csv(path)?;
        let entries = rows
            .into_iter()
            .map(|r| {
                let door_open = match r.door_open {
                    0 => false,
                    1 => true,
                    v => {
                        return Err(Error::Parse {
                            path: path.to_path_buf(),
                            reason: format!("door_open must be 0 or 1, got {v}"),
                        })
                    }
                };
                Ok((
                    r.time_s,
                    DisturbanceSample {
                        t_amb: r.t_amb_c,
                        q_g: r.q_g_wm2,
                        alpha: r.alpha_rad,
                        beta: r.beta_rad,
                        theta: r.theta_rad,
                        occupancy_pct: r.occupancy_pct,
                        speed: r.speed_ms,
                        door_open,
                    },
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Schedule::new(entries).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<ScheduleRow> = self
            .entries()
            .map(|(t, d)| ScheduleRow {
                time_s: t,
                t_amb_c: d.t_amb,
                q_g_wm2: d.q_g,
                alpha_rad: d.alpha,
                beta_rad: d.beta,
                theta_rad: d.theta,
                occupancy_pct: d.occupancy_pct,
                speed_ms: d.speed,
                door_open: u8::from(d.door_open),
            })
            .collect();
        write_csv(path, &rows)
    }
}

/// Built-in synthetic day profiles. All start at midnight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// Cold morning, sunny midday with a busy lunchtime service.
    MarchLike,
    /// 24 to 34 °C, strong sun, parked and empty.
    HotDay,
    /// 4 to 10 °C, weak sun, parked and empty.
    ColdDay,
}

impl Profile {
    pub fn as_str(self) -> &'static str {
        match self {
            Profile::MarchLike => "march_like",
            Profile::HotDay => "hot_day",
            Profile::ColdDay => "cold_day",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "march_like" => Some(Profile::MarchLike),
            "hot_day" => Some(Profile::HotDay),
            "cold_day" => Some(Profile::ColdDay),
            _ => None,
        }
    }

    /// Day shape parameters.
    fn day(self) -> DayShape {
        match self {
            Profile::MarchLike => DayShape {
                t_min: 2.0,
                t_max: 16.0,
                sunrise_h: 6.5,
                sunset_h: 18.5,
                peak_q_g: 800.0,
                peak_elevation: 0.7,
                service: true,
                midday_load: 0.3,
            },
            Profile::HotDay => DayShape {
                t_min: 24.0,
                t_max: 34.0,
                sunrise_h: 5.5,
                sunset_h: 21.0,
                peak_q_g: 900.0,
                peak_elevation: 1.1,
                service: false,
                midday_load: 0.0,
            },
            Profile::ColdDay => DayShape {
                t_min: 4.0,
                t_max: 10.0,
                sunrise_h: 7.5,
                sunset_h: 17.0,
                peak_q_g: 150.0,
                peak_elevation: 0.35,
                service: false,
                midday_load: 0.0,
            },
        }
    }

    /// Schedule sampled every `step_s` over [0, duration_s].
    pub fn generate(self, duration_s: f64, step_s: f64) -> Result<Schedule> {
        if !(step_s > 0.0 && duration_s >= 0.0) {
            return Err(Error::invalid("profile", "step must be positive and duration non-negative"));
        }
        self.day().schedule(duration_s, step_s)
    }
}

/// Parametric day used by the profiles and the training-data generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct DayShape {
    pub t_min: f64,
    pub t_max: f64,
    pub sunrise_h: f64,
    pub sunset_h: f64,
    pub peak_q_g: f64,
    pub peak_elevation: f64,
    /// Run a passenger timetable instead of standing empty.
    pub service: bool,
    /// Extra occupancy peaking at 12:30.
    pub midday_load: f64,
}

impl DayShape {
    /// Minimum at 05:00, maximum at 15:00, cosine in between.
    pub fn temperature(&self, hour: f64) -> f64 {
        let h = hour.rem_euclid(24.0);
        let span = self.t_max - self.t_min;
        if (5.0..15.0).contains(&h) {
            self.t_min + span * (1.0 - (PI * (h - 5.0) / 10.0).cos()) / 2.0
        } else {
            let h = if h < 5.0 { h + 24.0 } else { h };
            self.t_max - span * (1.0 - (PI * (h - 15.0) / 14.0).cos()) / 2.0
        }
    }

    /// (q_g, elevation, azimuth) at the given hour.
    pub fn sun(&self, hour: f64) -> (f64, f64, f64) {
        let h = hour.rem_euclid(24.0);
        let day = self.sunset_h - self.sunrise_h;
        let phase = (h - self.sunrise_h) / day;
        if !(0.0..=1.0).contains(&phase) {
            return (0.0, 0.0, 0.0);
        }
        let s = (PI * phase).sin();
        let elevation = self.peak_elevation * s;
        // east at sunrise, west at sunset
        let azimuth = PI / 2.0 + PI * phase;
        (self.peak_q_g * s.powf(1.5), elevation, azimuth)
    }

    /// Timetable: 40-minute legs alternating heading, 5-minute stops with
    /// doors open, load peaking in the commuter hours.
    pub fn service(&self, hour: f64) -> (f64, f64, f64, bool) {
        if !self.service {
            return (0.0, 0.0, 0.0, false);
        }
        let h = hour.rem_euclid(24.0);
        if !(5.5..23.0).contains(&h) {
            return (0.0, 0.0, 0.0, false);
        }
        let minutes = (h - 5.5) * 60.0;
        let leg = (minutes / 45.0).floor();
        let in_leg = minutes - 45.0 * leg;
        let heading = if leg as i64 % 2 == 0 { 0.6 } else { 0.6 + PI };
        let rush = (-(h - 7.5).powi(2) / 2.0).exp() + (-(h - 17.5).powi(2) / 2.0).exp();
        let lunch = (-(h - 12.5).powi(2) / 2.0).exp();
        let occupancy = (0.08 + 0.3 * rush + self.midday_load * lunch).min(1.0);
        if in_leg < 5.0 {
            (heading, occupancy, 0.0, true)
        } else {
            (heading, occupancy, 25.0, false)
        }
    }

    pub fn sample(&self, t: f64) -> DisturbanceSample {
        let hour = t / 3600.0;
        let (q_g, alpha, beta) = self.sun(hour);
        let (theta, occupancy_pct, speed, door_open) = self.service(hour);
        DisturbanceSample {
            t_amb: self.temperature(hour),
            q_g,
            alpha,
            beta,
            theta,
            occupancy_pct,
            speed,
            door_open,
        }
    }

    pub fn schedule(&self, duration_s: f64, step_s: f64) -> Result<Schedule> {
        let n = (duration_s / step_s).ceil() as usize;
        Schedule::new((0..=n).map(|i| (i as f64 * step_s, self.sample(i as f64 * step_s))).collect())
    }
}
