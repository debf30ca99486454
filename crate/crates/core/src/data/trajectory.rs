use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::fuse::FusedStream;
use super::records::{read_csv, write_csv};
use crate::error::{Error, Result};
use crate::hvac::HvacMode;

/// Uniformly sampled, gap-free (u, y, d) series.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub id: String,
    /// s
    pub sample_period: f64,
    /// Time of the first sample, s.
    pub t0: f64,
    pub u: Vec<f64>,
    pub y: Vec<[f64; 3]>,
    pub d: Vec<[f64; 5]>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.sample_period
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.u.len() || self.d.len() != self.u.len() {
            return Err(Error::invalid(
                "trajectory",
                format!("{}: u, y and d lengths differ", self.id),
            ));
        }
        if !(self.sample_period > 0.0) {
            return Err(Error::invalid("trajectory", "sample period must be positive"));
        }
        let finite = self.u.iter().all(|v| v.is_finite())
            && self.y.iter().flatten().all(|v| v.is_finite())
            && self.d.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid(
                "trajectory",
                format!("{}: non-finite entry", self.id),
            ));
        }
        Ok(())
    }

    /// Stacked z = (y, u, d) of sample k.
    pub fn z(&self, k: usize) -> [f64; 9] {
        let y = self.y[k];
        let d = self.d[k];
        [y[0], y[1], y[2], self.u[k], d[0], d[1], d[2], d[3], d[4]]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<TrajRow> = (0..self.len())
            .map(|k| {
                let [y1, y2, y3] = self.y[k];
                let [d1, d2, d3, d4, d5] = self.d[k];
                TrajRow {
                    t: self.time(k),
                    u: self.u[k],
                    y1,
                    y2,
                    y3,
                    d1,
                    d2,
                    d3,
                    d4,
                    d5,
                }
            })
            .collect();
        write_csv(path, &rows)
    }

    /// Reads a trajectory file; the id is the file stem.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let rows: Vec<TrajRow> = read_csv(path)?;
        if rows.len() < 2 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                reason: "trajectory needs at least two samples".into(),
            });
        }
        let period = rows[1].t - rows[0].t;
        let uniform = rows
            .iter()
            .enumerate()
            .all(|(k, r)| (r.t - rows[0].t - k as f64 * period).abs() <= 1e-6 * period.abs().max(1.0));
        if !(period > 0.0) || !uniform {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                reason: "timestamps are not uniformly spaced".into(),
            });
        }
        let traj = Trajectory {
            id: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sample_period: period,
            t0: rows[0].t,
            u: rows.iter().map(|r| r.u).collect(),
            y: rows.iter().map(|r| [r.y1, r.y2, r.y3]).collect(),
            d: rows.iter().map(|r| [r.d1, r.d2, r.d3, r.d4, r.d5]).collect(),
        };
        traj.validate()?;
        Ok(traj)
    }
}

#[derive(Serialize, Deserialize)]
struct TrajRow {
    t: f64,
    u: f64,
    y1: f64,
    y2: f64,
    y3: f64,
    d1: f64,
    d2: f64,
    d3: f64,
    d4: f64,
    d5: f64,
}

/// Writes `<id>.csv` per trajectory into `dir`.
pub fn write_trajectories(dir: &Path, trajs: &[Trajectory]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    trajs
        .iter()
        .map(|t| {
            let p = dir.join(format!("{}.csv", t.id));
            t.write_csv(&p).map(|_| p)
        })
        .collect()
}

/// Reads every `*.csv` in `dir` except the summary, sorted by file name.
pub fn read_trajectories(dir: &Path) -> Result<Vec<Trajectory>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .filter(|p| p.file_name().is_some_and(|n| n != SUMMARY_FILE))
        .collect();
    paths.sort();
    paths.iter().map(|p| Trajectory::read_csv(p)).collect()
}

pub const SUMMARY_FILE: &str = "summary.csv";

/// One grid cell after resampling.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSample {
    pub mode: HvacMode,
    pub u: f64,
    pub y: [f64; 3],
    pub d: [f64; 5],
}

/// Uniform grid with `None` marking gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct Fragment {
    pub t0: f64,
    pub period: f64,
    pub samples: Vec<Option<GridSample>>,
}

/// Bin-mean aggregation onto a grid aligned to multiples of `period`
/// (seconds since the Unix epoch). Empty bins and bins holding a missing
/// sample become gaps. A bin is Regular only if all its samples are.
pub fn resample(streams: &[FusedStream], period: f64) -> Result<Vec<Fragment>> {
    if !(period > 0.0) {
        return Err(Error::invalid("period", "must be positive"));
    }
    let mut out = Vec::with_capacity(streams.len());
    for s in streams {
        let Some(first) = s.samples.first() else {
            continue;
        };
        let secs = |k: usize| s.samples[k].timestamp.timestamp_millis() as f64 / 1000.0;
        let bin_of = |t: f64| (t / period).floor() as i64;
        let b0 = bin_of(first.timestamp.timestamp_millis() as f64 / 1000.0);
        let b1 = bin_of(secs(s.samples.len() - 1));
        let n = (b1 - b0 + 1) as usize;

        struct Acc {
            count: usize,
            missing: bool,
            mode: HvacMode,
            u: f64,
            y: [f64; 3],
            d: [f64; 5],
        }
        let mut acc: Vec<Option<Acc>> = (0..n).map(|_| None).collect();
        for (k, smp) in s.samples.iter().enumerate() {
            let i = (bin_of(secs(k)) - b0) as usize;
            let a = acc[i].get_or_insert(Acc {
                count: 0,
                missing: false,
                mode: HvacMode::Regular,
                u: 0.0,
                y: [0.0; 3],
                d: [0.0; 5],
            });
            a.count += 1;
            if smp.mode != HvacMode::Regular && a.mode == HvacMode::Regular {
                a.mode = smp.mode;
            }
            match smp.d {
                None => a.missing = true,
                Some(d) => {
                    a.u += smp.u;
                    for j in 0..3 {
                        a.y[j] += smp.y[j];
                    }
                    for (acc, v) in a.d.iter_mut().zip(d) {
                        *acc += v;
                    }
                }
            }
        }
        let samples = acc
            .into_iter()
            .map(|a| {
                a.filter(|a| !a.missing).map(|a| {
                    let c = a.count as f64;
                    GridSample {
                        mode: a.mode,
                        u: a.u / c,
                        y: a.y.map(|v| v / c),
                        d: a.d.map(|v| v / c),
                    }
                })
            })
            .collect();
        out.push(Fragment {
            t0: b0 as f64 * period,
            period,
            samples,
        });
    }
    Ok(out)
}

/// Trajectory count and mean length for one sampling period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    pub period_min: f64,
    pub trajectories: usize,
    pub mean_points: f64,
}

impl SegmentSummary {
    pub fn of(trajs: &[Trajectory], period: f64) -> Self {
        let n = trajs.len();
        let total: usize = trajs.iter().map(Trajectory::len).sum();
        SegmentSummary {
            period_min: period / 60.0,
            trajectories: n,
            mean_points: if n == 0 { 0.0 } else { total as f64 / n as f64 },
        }
    }
}

pub fn write_summary(path: &Path, rows: &[SegmentSummary]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SegmentSummary>> {
    read_csv(path)
}

/// Splits fragments into maximal gap-free Regular-mode runs, dropping runs
/// shorter than `min_len`.
pub fn segment_filter(fragments: &[Fragment], min_len: usize) -> (Vec<Trajectory>, SegmentSummary) {
    let mut trajs = Vec::new();
    let period = fragments.first().map_or(60.0, |f| f.period);
    for f in fragments {
        let mut start = 0;
        let n = f.samples.len();
        while start < n {
            let usable = |k: usize| {
                matches!(&f.samples[k], Some(s) if s.mode == HvacMode::Regular)
            };
            if !usable(start) {
                start += 1;
                continue;
            }
            let mut end = start;
            while end < n && usable(end) {
                end += 1;
            }
            if end - start >= min_len.max(1) {
                let run: Vec<&GridSample> =
                    f.samples[start..end].iter().map(|s| s.as_ref().unwrap()).collect();
                trajs.push(Trajectory {
                    id: format!("seg-{:04}", trajs.len()),
                    sample_period: f.period,
                    t0: f.t0 + start as f64 * f.period,
                    u: run.iter().map(|s| s.u).collect(),
                    y: run.iter().map(|s| s.y).collect(),
                    d: run.iter().map(|s| s.d).collect(),
                });
            }
            start = end;
        }
    }
    let summary = SegmentSummary::of(&trajs, period);
    (trajs, summary)
}

/// Bin mean over consecutive groups of `factor` samples; a trailing
/// partial group is dropped.
pub fn downsample(traj: &Trajectory, factor: usize) -> Result<Trajectory> {
    if factor == 0 {
        return Err(Error::invalid("factor", "must be at least 1"));
    }
    let groups = traj.len() / factor;
    let f = factor as f64;
    let mut out = Trajectory {
        id: traj.id.clone(),
        sample_period: traj.sample_period * f,
        t0: traj.t0,
        u: Vec::with_capacity(groups),
        y: Vec::with_capacity(groups),
        d: Vec::with_capacity(groups),
    };
    for g in 0..groups {
        let r = g * factor..(g + 1) * factor;
        out.u.push(traj.u[r.clone()].iter().sum::<f64>() / f);
        let mut y = [0.0; 3];
        for v in &traj.y[r.clone()] {
            for j in 0..3 {
                y[j] += v[j];
            }
        }
        out.y.push(y.map(|v| v / f));
        let mut d = [0.0; 5];
        for v in &traj.d[r] {
            for j in 0..5 {
                d[j] += v[j];
            }
        }
        out.d.push(d.map(|v| v / f));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::fuse::FusedSample;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn ramp(n: usize) -> Trajectory {
        Trajectory {
            id: "r".into(),
            sample_period: 60.0,
            t0: 0.0,
            u: (1..=n).map(|v| v as f64).collect(),
            y: (1..=n).map(|v| [v as f64; 3]).collect(),
            d: (1..=n).map(|v| [v as f64; 5]).collect(),
        }
    }

    fn grid(n: usize, gaps: &[usize], mode: HvacMode) -> Fragment {
        Fragment {
            t0: 0.0,
            period: 60.0,
            samples: (0..n)
                .map(|k| {
                    (!gaps.contains(&k)).then_some(GridSample {
                        mode,
                        u: 21.0,
                        y: [21.0; 3],
                        d: [5.0, 0.0, 0.0, 0.0, 0.0],
                    })
                })
                .collect(),
        }
    }

    fn stream(values: &[(i64, f64)]) -> FusedStream {
        let base = Utc.with_ymd_and_hms(2024, 3, 1, 8, 0, 0).unwrap();
        FusedStream {
            day: base.date_naive(),
            samples: values
                .iter()
                .map(|&(s, v)| FusedSample {
                    timestamp: base + chrono::Duration::seconds(s),
                    mode: HvacMode::Regular,
                    u: v,
                    y: [v; 3],
                    d: Some([v; 5]),
                })
                .collect(),
        }
    }

    #[test]
    fn downsample_examples() {
        assert_eq!(downsample(&ramp(7), 1).unwrap(), ramp(7));
        let d = downsample(&ramp(10), 5).unwrap();
        assert_eq!(d.u, vec![3.0, 8.0]);
        assert_eq!(d.sample_period, 300.0);
        let d = downsample(&ramp(30), 5).unwrap();
        assert_eq!(d.len(), 6);
        assert!(downsample(&ramp(3), 0).is_err());
    }

    #[test]
    fn resample_two_second_data() {
        let vals: Vec<(i64, f64)> = (0..60).map(|k| (2 * k, if k % 2 == 0 { 20.0 } else { 22.0 })).collect();
        let f = resample(&[stream(&vals)], 60.0).unwrap();
        assert_eq!(f[0].samples.len(), 2);
        for s in &f[0].samples {
            assert_eq!(s.as_ref().unwrap().u, 21.0);
        }
    }

    #[test]
    fn resample_gap_and_missing() {
        let mut s = stream(&[(0, 1.0), (120, 2.0), (180, 3.0)]);
        s.samples[2].d = None;
        let f = resample(&[s], 60.0).unwrap();
        assert_eq!(f[0].samples.len(), 4);
        assert!(f[0].samples[0].is_some());
        assert!(f[0].samples[1].is_none());
        assert!(f[0].samples[2].is_some());
        assert!(f[0].samples[3].is_none());
    }

    #[test]
    fn segment_examples() {
        let (t, s) = segment_filter(&[grid(100, &[50], HvacMode::Regular)], 12);
        assert_eq!(t.iter().map(Trajectory::len).collect::<Vec<_>>(), vec![50, 49]);
        assert_eq!(s.trajectories, 2);
        assert_eq!(s.mean_points, 49.5);
        assert_eq!(t[1].t0, 51.0 * 60.0);
        let (t, _) = segment_filter(&[grid(40, &[], HvacMode::Slumber)], 12);
        assert!(t.is_empty());
        let (t, _) = segment_filter(&[grid(40, &[], HvacMode::Regular)], 12);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].len(), 40);
        let (t, _) = segment_filter(&[grid(40, &[10], HvacMode::Regular)], 12);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn csv_roundtrip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = ramp(5);
        t.u[2] = 0.1 + 0.2;
        t.id = "seg-0001".into();
        let p = write_trajectories(dir.path(), std::slice::from_ref(&t)).unwrap();
        let head = std::fs::read_to_string(&p[0]).unwrap();
        assert!(head.starts_with("t,u,y1,y2,y3,d1,d2,d3,d4,d5\n"));
        let back = read_trajectories(dir.path()).unwrap();
        assert_eq!(back, vec![t]);
    }

    proptest! {
        #[test]
        fn segment_lengths_sum(n in 1usize..200, gaps in prop::collection::btree_set(0usize..200, 0..20)) {
            let gaps: Vec<usize> = gaps.into_iter().filter(|g| *g < n).collect();
            let (t, _) = segment_filter(&[grid(n, &gaps, HvacMode::Regular)], 1);
            let total: usize = t.iter().map(Trajectory::len).sum();
            prop_assert_eq!(total, n - gaps.len());
        }

        #[test]
        fn resample_constant(n in 1usize..300, step in 1i64..20, c in -10.0f64..40.0) {
            let vals: Vec<(i64, f64)> = (0..n as i64).map(|k| (k * step, c)).collect();
            for f in resample(&[stream(&vals)], 60.0).unwrap() {
                for s in f.samples.into_iter().flatten() {
                    prop_assert!((s.u - c).abs() <= 1e-12 * c.abs().max(1.0));
                }
            }
        }
    }
}
