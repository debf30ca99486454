use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::trajectory::Trajectory;
use crate::error::{Error, Result};

/// Channel counts of z = (y, u, d).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub ny: usize,
    pub nu: usize,
    pub nd: usize,
}

impl Default for Dims {
    fn default() -> Self {
        Dims { ny: 3, nu: 1, nd: 5 }
    }
}

impl Dims {
    pub fn nz(&self) -> usize {
        self.ny + self.nu + self.nd
    }
}

/// Depth-(ρ+T) windows of z stacked column-wise. Rows within each time
/// slice are ordered (y, u, d).
#[derive(Clone, Debug, PartialEq)]
pub struct HankelSet {
    pub z: DMatrix<f64>,
    /// Future outputs y at slices ρ..ρ+T.
    pub y: DMatrix<f64>,
    pub rho: usize,
    pub horizon: usize,
    pub dims: Dims,
    /// Source series index of every column.
    pub col_source: Vec<usize>,
    /// Series too short for a single window.
    pub skipped: usize,
}

impl HankelSet {
    pub fn cols(&self) -> usize {
        self.z.ncols()
    }

    /// Builds the matrices from per-series lists of z vectors.
    pub fn from_series(series: &[Vec<Vec<f64>>], dims: Dims, rho: usize, horizon: usize) -> Result<Self> {
        if rho == 0 || horizon == 0 {
            return Err(Error::invalid("rho/horizon", "must both be at least 1"));
        }
        let nz = dims.nz();
        let depth = rho + horizon;
        let mut skipped = 0;
        let mut width = 0;
        for s in series {
            if let Some(bad) = s.iter().find(|z| z.len() != nz) {
                return Err(Error::Dimension {
                    block: "z",
                    expected: nz,
                    actual: bad.len(),
                });
            }
            if s.len() < depth {
                skipped += 1;
            } else {
                width += s.len() - depth + 1;
            }
        }
        if width == 0 {
            return Err(Error::InsufficientData(format!(
                "no series reaches the window length {depth}"
            )));
        }
        if skipped > 0 {
            log::warn!("{skipped} series shorter than {depth} samples skipped");
        }
        let mut z = DMatrix::zeros(depth * nz, width);
        let mut y = DMatrix::zeros(horizon * dims.ny, width);
        let mut col_source = Vec::with_capacity(width);
        let mut c = 0;
        for (si, s) in series.iter().enumerate() {
            if s.len() < depth {
                continue;
            }
            for start in 0..=s.len() - depth {
                for k in 0..depth {
                    let zk = &s[start + k];
                    for (j, v) in zk.iter().enumerate() {
                        z[(k * nz + j, c)] = *v;
                    }
                    if k >= rho {
                        for j in 0..dims.ny {
                            y[((k - rho) * dims.ny + j, c)] = zk[j];
                        }
                    }
                }
                col_source.push(si);
                c += 1;
            }
        }
        Ok(HankelSet {
            z,
            y,
            rho,
            horizon,
            dims,
            col_source,
            skipped,
        })
    }
}

/// Hankel matrices over all trajectories, concatenated in id order.
pub fn build_hankel(trajs: &[Trajectory], rho: usize, horizon: usize) -> Result<HankelSet> {
    if let Some(t) = trajs.first() {
        if trajs.iter().any(|o| (o.sample_period - t.sample_period).abs() > 1e-9) {
            return Err(Error::invalid("trajectories", "sample periods differ"));
        }
    }
    let mut order: Vec<&Trajectory> = trajs.iter().collect();
    order.sort_by(|a, b| a.id.cmp(&b.id));
    let series: Vec<Vec<Vec<f64>>> = order
        .iter()
        .map(|t| (0..t.len()).map(|k| t.z(k).to_vec()).collect())
        .collect();
    HankelSet::from_series(&series, Dims::default(), rho, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(id: &str, n: usize, f: impl Fn(usize) -> f64) -> Trajectory {
        Trajectory {
            id: id.into(),
            sample_period: 300.0,
            t0: 0.0,
            u: (0..n).map(|k| f(k) + 0.5).collect(),
            y: (0..n).map(|k| [f(k), f(k) + 0.1, f(k) + 0.2]).collect(),
            d: (0..n).map(|k| [f(k) - 1.0, 2.0, 3.0, 4.0, f(k) * 2.0]).collect(),
        }
    }

    #[test]
    fn width_formula() {
        let h = build_hankel(&[traj("a", 12, |k| k as f64)], 6, 6).unwrap();
        assert_eq!(h.cols(), 1);
        let h = build_hankel(&[traj("a", 30, |k| k as f64), traj("b", 32, |k| k as f64)], 6, 6).unwrap();
        assert_eq!(h.cols(), 40);
        assert_eq!(h.z.nrows(), 9 * 12);
        assert_eq!(h.y.nrows(), 18);
    }

    #[test]
    fn short_trajectories() {
        let h = build_hankel(&[traj("a", 5, |k| k as f64), traj("b", 20, |k| k as f64)], 6, 6).unwrap();
        assert_eq!(h.skipped, 1);
        assert_eq!(h.cols(), 9);
        assert!(build_hankel(&[traj("a", 5, |k| k as f64)], 6, 6).is_err());
    }

    #[test]
    fn constant_columns_identical() {
        let h = build_hankel(&[traj("a", 25, |_| 7.0)], 3, 2).unwrap();
        for c in 1..h.cols() {
            assert_eq!(h.z.column(c), h.z.column(0));
        }
    }

    #[test]
    fn shift_structure_and_no_crossing() {
        let h = build_hankel(&[traj("b", 20, |k| (k * k) as f64), traj("a", 15, |k| k as f64 * 0.3)], 4, 3)
            .unwrap();
        let nz = 9;
        for c in 0..h.cols() - 1 {
            if h.col_source[c] != h.col_source[c + 1] {
                continue;
            }
            for r in 0..h.z.nrows() - nz {
                assert_eq!(h.z[(r, c + 1)], h.z[(r + nz, c)]);
            }
        }
        // sorted by id: "a" first, 15 − 7 + 1 = 9 columns
        assert_eq!(h.col_source.iter().filter(|s| **s == 0).count(), 9);
        assert_eq!(h.z[(3, 0)], 0.5);
        // Y rows are the future y rows of Z
        for c in 0..h.cols() {
            for j in 0..3 {
                for i in 0..3 {
                    assert_eq!(h.y[(j * 3 + i, c)], h.z[((4 + j) * nz + i, c)]);
                }
            }
        }
    }
}
