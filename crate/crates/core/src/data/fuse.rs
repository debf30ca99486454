use chrono::{DateTime, NaiveDate, Utc};

use super::records::RawRecordSet;
use crate::coach_sim::solar_components;
use crate::error::{Error, Result};
use crate::hvac::HvacMode;

/// Mean Earth radius, m.
const EARTH_RADIUS: f64 = 6_371_008.8;
/// Displacements shorter than this keep the previous heading, m.
const MIN_DISPLACEMENT: f64 = 1.0;

/// One HVAC timestamp with its joined weather and occupancy.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedSample {
    pub timestamp: DateTime<Utc>,
    pub mode: HvacMode,
    pub u: f64,
    pub y: [f64; 3],
    /// (T_amb, Q_Gt, Q_Gs, P, V); `None` when no fresh weather was available.
    pub d: Option<[f64; 5]>,
}

/// Samples of one coach on one UTC day.
#[derive(Clone, Debug, PartialEq)]
pub struct FusedStream {
    pub day: NaiveDate,
    pub samples: Vec<FusedSample>,
}

/// Local east/north displacement in metres.
fn displacement(p0: (f64, f64), p1: (f64, f64)) -> (f64, f64) {
    let lat_mid = 0.5 * (p0.0 + p1.0).to_radians();
    let east = (p1.1 - p0.1).to_radians() * lat_mid.cos() * EARTH_RADIUS;
    let north = (p1.0 - p0.0).to_radians() * EARTH_RADIUS;
    (east, north)
}

/// Bearing in rad from north, clockwise, or `None` when the points are
/// closer than 1 m.
pub fn bearing(p0: (f64, f64), p1: (f64, f64)) -> Option<f64> {
    let (east, north) = displacement(p0, p1);
    if east.hypot(north) < MIN_DISPLACEMENT {
        None
    } else {
        Some(east.atan2(north))
    }
}

/// Heading at each (lat, lon) point, from the displacement since the
/// previous point. The first point takes the first available bearing;
/// stationary stretches carry the last bearing forward.
pub fn heading(points: &[(f64, f64)]) -> Result<Vec<f64>> {
    if points.len() < 2 {
        return Err(Error::invalid("heading", "need at least two positions"));
    }
    let steps: Vec<Option<f64>> = points.windows(2).map(|w| bearing(w[0], w[1])).collect();
    let mut last = steps.iter().flatten().next().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(points.len());
    out.push(last);
    for b in steps {
        if let Some(b) = b {
            last = b;
        }
        out.push(last);
    }
    Ok(out)
}

fn median_period_s(times: &[DateTime<Utc>]) -> Option<f64> {
    let mut gaps: Vec<f64> = times
        .windows(2)
        .map(|w| (w[1] - w[0]).num_milliseconds() as f64 / 1000.0)
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    Some(gaps[gaps.len() / 2])
}

/// Joins weather (most recent at or before, at most twice the nominal
/// weather period old) and occupancy (enclosing trip, 0 outside) onto the
/// HVAC timestamps, split per UTC day.
pub fn fuse(raw: &RawRecordSet) -> Result<Vec<FusedStream>> {
    let raw = raw.clone().normalize()?;
    let w = &raw.weather;
    let times: Vec<_> = w.iter().map(|r| r.timestamp).collect();
    let theta = if w.len() >= 2 {
        heading(&w.iter().map(|r| (r.lat_deg, r.lon_deg)).collect::<Vec<_>>())?
    } else {
        vec![0.0; w.len()]
    };
    let max_age = median_period_s(&times).map(|p| 2.0 * p).unwrap_or(f64::INFINITY);

    let mut streams: Vec<FusedStream> = Vec::new();
    for h in &raw.hvac {
        let idx = times.partition_point(|t| *t <= h.timestamp);
        let d = idx.checked_sub(1).and_then(|i| {
            let age = (h.timestamp - times[i]).num_milliseconds() as f64 / 1000.0;
            (age <= max_age).then(|| {
                let r = &w[i];
                let (q_gt, q_gs) = solar_components(r.q_g_wm2, r.alpha_rad, r.beta_rad, theta[i]);
                let occ = raw
                    .trips
                    .iter()
                    .find(|t| t.start <= h.timestamp && h.timestamp <= t.end)
                    .map_or(0.0, |t| t.occupancy_pct);
                [r.t_amb_c, q_gt, q_gs, occ, h.speed_ms]
            })
        });
        let sample = FusedSample {
            timestamp: h.timestamp,
            mode: h.mode,
            u: h.t_ref_c,
            y: h.t_room(),
            d,
        };
        let day = h.timestamp.date_naive();
        match streams.last_mut() {
            Some(s) if s.day == day => s.samples.push(sample),
            _ => streams.push(FusedStream {
                day,
                samples: vec![sample],
            }),
        }
    }
    Ok(streams)
}
