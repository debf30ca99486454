use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hvac::HvacMode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvacRecord {
    pub timestamp: DateTime<Utc>,
    pub mode: HvacMode,
    pub t_ref_c: f64,
    pub t_room_up_c: f64,
    pub t_room_mid_c: f64,
    pub t_room_low_c: f64,
    pub speed_ms: f64,
}

impl HvacRecord {
    pub fn t_room(&self) -> [f64; 3] {
        [self.t_room_up_c, self.t_room_mid_c, self.t_room_low_c]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub timestamp: DateTime<Utc>,
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub t_amb_c: f64,
    pub q_g_wm2: f64,
    pub alpha_rad: f64,
    pub beta_rad: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub occupancy_pct: f64,
}

/// Raw HVAC, weather and trip logs of one coach.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawRecordSet {
    pub hvac: Vec<HvacRecord>,
    pub weather: Vec<WeatherRecord>,
    pub trips: Vec<TripRecord>,
}

fn sort_unique<T>(rows: &mut [T], key: impl Fn(&T) -> DateTime<Utc>, name: &str) -> Result<()> {
    rows.sort_by_key(|r| key(r));
    if let Some(w) = rows.windows(2).find(|w| key(&w[0]) == key(&w[1])) {
        return Err(Error::invalid(
            name,
            format!("duplicate timestamp {}", key(&w[0]).to_rfc3339()),
        ));
    }
    Ok(())
}

impl RawRecordSet {
    /// Sorts every list by time and rejects duplicate timestamps and
    /// malformed trips.
    pub fn normalize(mut self) -> Result<Self> {
        sort_unique(&mut self.hvac, |r| r.timestamp, "hvac")?;
        sort_unique(&mut self.weather, |r| r.timestamp, "weather")?;
        sort_unique(&mut self.trips, |r| r.start, "trips")?;
        for t in &self.trips {
            if t.end < t.start {
                return Err(Error::invalid("trips", "trip ends before it starts"));
            }
            if !(0.0..=1.0).contains(&t.occupancy_pct) {
                return Err(Error::invalid("trips", "occupancy outside [0, 1]"));
            }
        }
        Ok(self)
    }

    /// Reads `hvac.csv`, `weather.csv` and `trips.csv` from a directory.
    /// A missing `trips.csv` means no trips.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let trips_path = dir.join("trips.csv");
        let trips = if trips_path.exists() {
            read_csv(&trips_path)?
        } else {
            Vec::new()
        };
        RawRecordSet {
            hvac: read_csv(&dir.join("hvac.csv"))?,
            weather: read_csv(&dir.join("weather.csv"))?,
            trips,
        }
        .normalize()
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_csv(&dir.join("hvac.csv"), &self.hvac)?;
        write_csv(&dir.join("weather.csv"), &self.weather)?;
        write_csv(&dir.join("trips.csv"), &self.trips)
    }
}

pub(crate) fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    rdr.deserialize()
        .map(|row| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
        })
        .collect()
}

pub(crate) fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn at(min: i64) -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap() + chrono::Duration::minutes(min)
    }

    fn hvac(min: i64) -> HvacRecord {
        HvacRecord {
            timestamp: at(min),
            mode: HvacMode::Regular,
            t_ref_c: 21.0,
            t_room_up_c: 21.0,
            t_room_mid_c: 21.0,
            t_room_low_c: 21.0,
            speed_ms: 0.0,
        }
    }

    #[test]
    fn duplicates_rejected_and_sorted() {
        let set = RawRecordSet {
            hvac: vec![hvac(2), hvac(1)],
            ..Default::default()
        }
        .normalize()
        .unwrap();
        assert_eq!(set.hvac[0].timestamp, at(1));
        let dup = RawRecordSet {
            hvac: vec![hvac(1), hvac(1)],
            ..Default::default()
        };
        assert!(dup.normalize().is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let set = RawRecordSet {
            hvac: vec![hvac(0), hvac(1)],
            weather: vec![WeatherRecord {
                timestamp: at(0),
                lat_deg: 47.37,
                lon_deg: 8.54,
                t_amb_c: 5.25,
                q_g_wm2: 120.0,
                alpha_rad: 1.1,
                beta_rad: 2.0,
            }],
            trips: vec![TripRecord {
                start: at(0),
                end: at(10),
                occupancy_pct: 0.4,
            }],
        };
        set.write_dir(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("hvac.csv")).unwrap();
        assert!(text.starts_with(
            "timestamp,mode,t_ref_c,t_room_up_c,t_room_mid_c,t_room_low_c,speed_ms\n2024-03-01T00:00:00Z,Regular"
        ));
        let back = RawRecordSet::read_dir(dir.path()).unwrap();
        assert_eq!(back, set);
    }
}
