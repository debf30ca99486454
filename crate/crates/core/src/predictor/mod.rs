//! Multistep Transient Predictor identified from Hankel data through an
//! LQ factorization.

mod io;
mod lq;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use io::{read_model, write_model};
pub use lq::{lq_decompose, lq_factor};

use crate::data::{Dims, HankelSet, Trajectory};
use crate::error::{Error, Result};

/// What to do when the lower-triangular factor is numerically singular.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankFallback {
    /// Tikhonov solve with λ = scale·‖Z‖²_F/𝒩.
    Ridge { scale: f64 },
    /// Minimum-norm least squares, singular values below rtol·σ_max dropped.
    Pinv { rtol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    /// |L_ii| below rank_tol·‖Z‖_F counts as singular.
    pub rank_tol: f64,
    pub fallback: RankFallback,
    /// Fit on per-channel standardized data.
    pub standardize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            rank_tol: 1e-10,
            fallback: RankFallback::Pinv { rtol: 1e-10 },
            standardize: false,
        }
    }
}

/// How the regression was solved.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Regularization {
    None,
    Ridge { lambda: f64 },
    Pinv { rtol: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    /// Hankel column count 𝒩.
    pub columns: usize,
    pub regularization: Regularization,
    pub standardized: bool,
    /// SHA-256 of the training Hankel matrix.
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictorModel {
    pub rho: usize,
    pub horizon: usize,
    pub dims: Dims,
    /// [Φ̂_p Φ̂_f]: maps (z_p, z_f) to y_f. Future columns are per slice
    /// (y, u, d).
    pub phi: DMatrix<f64>,
    /// [H_p H_u H_d]: maps (z_p, u_f, d_f) to y_f.
    pub h: DMatrix<f64>,
    pub meta: FitMetadata,
}

fn digest(h: &HankelSet) -> String {
    let mut hasher = Sha256::new();
    hasher.update((h.rho as u64).to_le_bytes());
    hasher.update((h.horizon as u64).to_le_bytes());
    for v in h.z.iter() {
        hasher.update(v.to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Regression of the Y_j block rows of L on the leading `p` rows.
fn block_coefficients(
    l: &DMatrix<f64>,
    y_rows: std::ops::Range<usize>,
    p: usize,
    reg: &Regularization,
    columns: usize,
) -> DMatrix<f64> {
    let lpp = l.view((0, 0), (p, p));
    let lyp = l.view((y_rows.start, 0), (y_rows.len(), p));
    match *reg {
        Regularization::None => {
            let sol = lpp
                .transpose()
                .solve_upper_triangular(&lyp.transpose())
                .expect("nonsingular diagonal checked");
            sol.transpose()
        }
        Regularization::Ridge { lambda } => {
            let mut g = lpp * lpp.transpose();
            for i in 0..p {
                g[(i, i)] += lambda * columns as f64;
            }
            let rhs = lpp * lyp.transpose();
            let sol = match g.clone().cholesky() {
                Some(c) => c.solve(&rhs),
                None => g.lu().solve(&rhs).expect("ridge system is positive definite"),
            };
            sol.transpose()
        }
        Regularization::Pinv { rtol } => {
            let svd = lpp.clone_owned().svd(true, true);
            let smax = svd.singular_values.max();
            let pinv = svd
                .pseudo_inverse(rtol * smax)
                .expect("both factors were computed");
            lyp * pinv
        }
    }
}

/// Identifies Φ̂ and Ĥ from the Hankel data.
pub fn fit(hankel: &HankelSet, opts: &FitOptions) -> Result<PredictorModel> {
    let dims = hankel.dims;
    let (nz, ny, nu, nd) = (dims.nz(), dims.ny, dims.nu, dims.nd);
    let (rho, t) = (hankel.rho, hankel.horizon);
    let rows = (rho + t) * nz;
    if hankel.z.nrows() != rows {
        return Err(Error::Dimension {
            block: "Z",
            expected: rows,
            actual: hankel.z.nrows(),
        });
    }
    let n = hankel.cols();
    if n < rows {
        return Err(Error::InsufficientData(format!(
            "{n} Hankel columns, need at least {rows}"
        )));
    }

    let scale: Vec<f64> = if opts.standardize {
        (0..nz)
            .map(|j| {
                let vals: Vec<f64> = (0..rho + t)
                    .flat_map(|k| hankel.z.row(k * nz + j).iter().copied().collect::<Vec<_>>())
                    .collect();
                let m = vals.iter().sum::<f64>() / vals.len() as f64;
                let sd = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
                if sd > 0.0 { sd } else { 1.0 }
            })
            .collect()
    } else {
        vec![1.0; nz]
    };
    let mut z = hankel.z.clone();
    if opts.standardize {
        for r in 0..rows {
            let s = scale[r % nz];
            z.row_mut(r).scale_mut(1.0 / s);
        }
    }

    let l = lq_factor(&z)?;
    let znorm = z.norm();
    let min_diag = (0..rows).map(|i| l[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    let reg = if min_diag >= opts.rank_tol * znorm {
        Regularization::None
    } else {
        match opts.fallback {
            RankFallback::Ridge { scale } => Regularization::Ridge {
                lambda: scale * znorm * znorm / n as f64,
            },
            RankFallback::Pinv { rtol } => Regularization::Pinv { rtol },
        }
    };
    if reg != Regularization::None {
        log::warn!("Hankel data is rank deficient; using {reg:?}");
    }

    let np = rho * nz;
    let mut phi = DMatrix::zeros(ny * t, rows);
    for j in 0..t {
        let p = np + j * nz;
        let coeffs = block_coefficients(&l, p..p + ny, p, &reg, n);
        phi.view_mut((j * ny, 0), (ny, p)).copy_from(&coeffs);
    }
    if opts.standardize {
        for r in 0..phi.nrows() {
            for c in 0..phi.ncols() {
                phi[(r, c)] *= scale[r % ny] / scale[c % nz];
            }
        }
    }

    // Partition the future columns into y, u and d blocks.
    let mut phi_y = DMatrix::zeros(ny * t, ny * t);
    let mut h = DMatrix::zeros(ny * t, np + (nu + nd) * t);
    h.view_mut((0, 0), (ny * t, np)).copy_from(&phi.view((0, 0), (ny * t, np)));
    for j in 0..t {
        let c = np + j * nz;
        phi_y
            .view_mut((0, j * ny), (ny * t, ny))
            .copy_from(&phi.view((0, c), (ny * t, ny)));
        h.view_mut((0, np + j * nu), (ny * t, nu))
            .copy_from(&phi.view((0, c + ny), (ny * t, nu)));
        h.view_mut((0, np + nu * t + j * nd), (ny * t, nd))
            .copy_from(&phi.view((0, c + ny + nu), (ny * t, nd)));
    }
    let mut lower = -phi_y;
    for i in 0..ny * t {
        lower[(i, i)] += 1.0;
    }
    let h = lower
        .solve_lower_triangular(&h)
        .ok_or_else(|| Error::Numerical("I − Φ̂_y is singular".into()))?;

    let meta = FitMetadata {
        columns: n,
        regularization: reg,
        standardized: opts.standardize,
        digest: digest(hankel),
    };
    Ok(PredictorModel {
        rho,
        horizon: t,
        dims,
        phi,
        h,
        meta,
    })
}

impl PredictorModel {
    pub fn past_len(&self) -> usize {
        self.rho * self.dims.nz()
    }

    /// Column range of H_p, H_u and H_d in `h`.
    pub fn h_blocks(&self) -> (std::ops::Range<usize>, std::ops::Range<usize>, std::ops::Range<usize>) {
        let np = self.past_len();
        let nu = self.dims.nu * self.horizon;
        let nd = self.dims.nd * self.horizon;
        (0..np, np..np + nu, np + nu..np + nu + nd)
    }

    pub fn h_p(&self) -> DMatrix<f64> {
        let (p, _, _) = self.h_blocks();
        self.h.columns(p.start, p.len()).into_owned()
    }

    pub fn h_u(&self) -> DMatrix<f64> {
        let (_, u, _) = self.h_blocks();
        self.h.columns(u.start, u.len()).into_owned()
    }

    pub fn h_d(&self) -> DMatrix<f64> {
        let (_, _, d) = self.h_blocks();
        self.h.columns(d.start, d.len()).into_owned()
    }

    /// y_f = Ĥ·[z_p; u_f; d_f].
    pub fn predict(&self, z_p: &[f64], u_f: &[f64], d_f: &[f64]) -> Result<DVector<f64>> {
        let (p, u, d) = self.h_blocks();
        for (block, expected, actual) in [("z_p", p.len(), z_p.len()), ("u_f", u.len(), u_f.len()), ("d_f", d.len(), d_f.len())] {
            if expected != actual {
                return Err(Error::Dimension {
                    block,
                    expected,
                    actual,
                });
            }
        }
        let x = DVector::from_iterator(self.h.ncols(), z_p.iter().chain(u_f).chain(d_f).copied());
        Ok(&self.h * x)
    }

    /// Mean absolute multistep error over every window of the trajectories.
    pub fn evaluate_mae(&self, trajs: &[Trajectory]) -> Result<MaeReport> {
        let (ny, t, rho) = (self.dims.ny, self.horizon, self.rho);
        if self.dims != Dims::default() {
            return Err(Error::invalid("model", "trajectory evaluation needs 3/1/5 dims"));
        }
        let mut per_deck = vec![vec![0.0; ny]; t];
        let mut windows = 0usize;
        for tr in trajs {
            if tr.len() < rho + t {
                continue;
            }
            for s in 0..=tr.len() - rho - t {
                let z_p: Vec<f64> = (s..s + rho).flat_map(|k| tr.z(k)).collect();
                let u_f: Vec<f64> = (s + rho..s + rho + t).map(|k| tr.u[k]).collect();
                let d_f: Vec<f64> = (s + rho..s + rho + t).flat_map(|k| tr.d[k]).collect();
                let y_hat = self.predict(&z_p, &u_f, &d_f)?;
                for j in 0..t {
                    let y = tr.y[s + rho + j];
                    for i in 0..ny {
                        per_deck[j][i] += (y_hat[j * ny + i] - y[i]).abs();
                    }
                }
                windows += 1;
            }
        }
        if windows == 0 {
            return Err(Error::InsufficientData(
                "no validation trajectory covers one prediction window".into(),
            ));
        }
        for row in per_deck.iter_mut() {
            for v in row.iter_mut() {
                *v /= windows as f64;
            }
        }
        let per_step = per_deck
            .iter()
            .map(|r| r.iter().sum::<f64>() / ny as f64)
            .collect();
        Ok(MaeReport {
            per_step,
            per_deck,
            windows,
        })
    }

    /// CSV lines `step,minutes,mae_up,mae_mid,mae_low,mae_mean`.
    pub fn mae_csv(report: &MaeReport, period_s: f64) -> String {
        let mut s = String::from("step,minutes,mae_up,mae_mid,mae_low,mae_mean\n");
        for (j, (row, m)) in report.per_deck.iter().zip(&report.per_step).enumerate() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&format!(
                "{},{},{},{}\n",
                j + 1,
                (j + 1) as f64 * period_s / 60.0,
                cells.join(","),
                m
            ));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaeReport {
    /// Averaged over decks, one entry per horizon step.
    pub per_step: Vec<f64>,
    pub per_deck: Vec<Vec<f64>>,
    pub windows: usize,
}
