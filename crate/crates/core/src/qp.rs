//! Dense convex QP solver: Mehrotra predictor-corrector primal-dual
//! interior point for
//!
//! ```text
//! minimize ½xᵀPx + qᵀx  subject to  Gx ≤ h,  Ax = b.
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Qp {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub a: Option<DMatrix<f64>>,
    pub b: Option<DVector<f64>>,
}

impl Qp {
    pub fn new(p: DMatrix<f64>, q: DVector<f64>, g: DMatrix<f64>, h: DVector<f64>) -> Self {
        Qp {
            p,
            q,
            g,
            h,
            a: None,
            b: None,
        }
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Self {
        self.a = Some(a);
        self.b = Some(b);
        self
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        let check = |block: &'static str, expected: usize, actual: usize| {
            if expected == actual {
                Ok(())
            } else {
                Err(Error::Dimension {
                    block,
                    expected,
                    actual,
                })
            }
        };
        check("P rows", n, self.p.nrows())?;
        check("P cols", n, self.p.ncols())?;
        check("G cols", n, self.g.ncols())?;
        check("h", self.g.nrows(), self.h.len())?;
        match (&self.a, &self.b) {
            (Some(a), Some(b)) => {
                check("A cols", n, a.ncols())?;
                check("b", a.nrows(), b.len())
            }
            (None, None) => Ok(()),
            _ => Err(Error::invalid("qp", "A and b must be given together")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QpSettings {
    pub max_iter: usize,
    /// Relative tolerance on the residuals.
    pub tol: f64,
    /// Relative tolerance on the duality measure sᵀz/m.
    pub gap_tol: f64,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            max_iter: 100,
            tol: 1e-10,
            gap_tol: 1e-15,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

impl QpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QpStatus::Optimal => "Optimal",
            QpStatus::MaxIter => "MaxIter",
            QpStatus::Infeasible => "Infeasible",
        }
    }
}

/// Infinity-norm KKT residuals at the returned point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Inequality multipliers.
    pub z: DVector<f64>,
    /// Equality multipliers.
    pub y: DVector<f64>,
    pub status: QpStatus,
    pub iterations: usize,
    pub objective: f64,
    pub residuals: KktResiduals,
}

fn kkt_residuals(qp: &Qp, x: &DVector<f64>, z: &DVector<f64>, y: &DVector<f64>) -> KktResiduals {
    let mut rd = &qp.p * x + &qp.q + qp.g.transpose() * z;
    let mut primal = 0.0f64;
    if let (Some(a), Some(b)) = (&qp.a, &qp.b) {
        rd += a.transpose() * y;
        primal = (a * x - b).amax();
    }
    let slack = &qp.h - &qp.g * x;
    primal = primal.max(slack.iter().fold(0.0f64, |m, s| m.max(-s)));
    KktResiduals {
        stationarity: rd.amax(),
        primal,
        dual: z.iter().fold(0.0f64, |m, v| m.max(-v)),
        complementarity: slack
            .iter()
            .zip(z.iter())
            .fold(0.0f64, |m, (s, z)| m.max((s * z).abs())),
    }
}

/// Largest step in (0, 1] keeping v + α·dv ≥ 0.
fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(1.0, f64::min)
}

struct Newton {
    chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    n: usize,
}

impl Newton {
    fn factor(qp: &Qp, w: &DVector<f64>) -> Result<Self> {
        let n = qp.n();
        let mut gw = qp.g.clone();
        for (i, mut row) in gw.row_iter_mut().enumerate() {
            row *= w[i];
        }
        let k = &qp.p + qp.g.transpose() * gw;
        match &qp.a {
            None => {
                if let Some(c) = k.clone().cholesky() {
                    return Ok(Newton {
                        chol: Some(c),
                        lu: None,
                        n,
                    });
                }
                let lu = k.lu();
                if !lu.is_invertible() {
                    return Err(Error::Numerical("singular Newton system".into()));
                }
                Ok(Newton {
                    chol: None,
                    lu: Some(lu),
                    n,
                })
            }
            Some(a) => {
                let me = a.nrows();
                let mut full = DMatrix::zeros(n + me, n + me);
                full.view_mut((0, 0), (n, n)).copy_from(&k);
                full.view_mut((0, n), (n, me)).copy_from(&a.transpose());
                full.view_mut((n, 0), (me, n)).copy_from(a);
                let lu = full.lu();
                if !lu.is_invertible() {
                    return Err(Error::Numerical("singular KKT system".into()));
                }
                Ok(Newton {
                    chol: None,
                    lu: Some(lu),
                    n,
                })
            }
        }
    }

    /// Solves for (dx, dy) given the right-hand sides of the reduced system.
    fn solve(&self, rhs_x: &DVector<f64>, rhs_e: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        if let Some(c) = &self.chol {
            return (c.solve(rhs_x), DVector::zeros(0));
        }
        let lu = self.lu.as_ref().expect("one factorization exists");
        let rhs = DVector::from_iterator(self.n + rhs_e.len(), rhs_x.iter().chain(rhs_e.iter()).copied());
        let sol = lu.solve(&rhs).expect("factorization is invertible");
        (sol.rows(0, self.n).into_owned(), sol.rows(self.n, rhs_e.len()).into_owned())
    }
}

/// Solves a convex QP. `warm` seeds the primal iterate only.
pub fn solve(qp: &Qp, settings: &QpSettings, warm: Option<&DVector<f64>>) -> Result<QpSolution> {
    qp.validate()?;
    let n = qp.n();
    let m = qp.h.len();
    let me = qp.b.as_ref().map_or(0, |b| b.len());
    let mut x = warm.cloned().unwrap_or_else(|| DVector::zeros(n));
    if x.len() != n {
        return Err(Error::Dimension {
            block: "warm start",
            expected: n,
            actual: x.len(),
        });
    }
    let mut s = (&qp.h - &qp.g * &x).map(|v| v.max(1.0));
    let mut z = DVector::from_element(m, 1.0);
    let mut y = DVector::zeros(me);

    let scale_d = 1.0 + qp.q.amax().max(qp.p.amax());
    let scale_p = 1.0 + qp.h.amax().max(qp.b.as_ref().map_or(0.0, |b| b.amax()));
    let mut status = QpStatus::MaxIter;
    let mut iterations = 0;

    for it in 0..=settings.max_iter {
        iterations = it;
        let mut rd = &qp.p * &x + &qp.q + qp.g.transpose() * &z;
        let re = match (&qp.a, &qp.b) {
            (Some(a), Some(b)) => {
                rd += a.transpose() * &y;
                a * &x - b
            }
            _ => DVector::zeros(0),
        };
        let rp = &qp.g * &x + &s - &qp.h;
        let mu = if m > 0 { s.dot(&z) / m as f64 } else { 0.0 };
        let done = rd.amax() <= settings.tol * scale_d
            && rp.amax().max(re.amax()) <= settings.tol * scale_p
            && mu <= settings.gap_tol * scale_d.max(scale_p);
        if done {
            status = QpStatus::Optimal;
            break;
        }
        if it == settings.max_iter {
            break;
        }
        if z.amax() > 1e14 * scale_d && rp.amax() > settings.tol.sqrt() * scale_p {
            status = QpStatus::Infeasible;
            break;
        }

        let w = z.component_div(&s);
        let newton = Newton::factor(qp, &w)?;
        let direction = |rc: &DVector<f64>| {
            // ds = −rp − G dx; dz = S⁻¹(Z rp − rc + Z G dx)
            let t = (z.component_mul(&rp) - rc).component_div(&s);
            let rhs_x = -&rd - qp.g.transpose() * &t;
            let (dx, dy) = newton.solve(&rhs_x, &(-&re));
            let gdx = &qp.g * &dx;
            let ds = -&rp - &gdx;
            let dz = &t + w.component_mul(&gdx);
            (dx, ds, dz, dy)
        };

        let rc_aff = s.component_mul(&z);
        let (_, ds_a, dz_a, _) = direction(&rc_aff);
        let alpha_aff = max_step(&s, &ds_a).min(max_step(&z, &dz_a));
        let mu_aff = if m > 0 {
            (&s + alpha_aff * &ds_a).dot(&(&z + alpha_aff * &dz_a)) / m as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).powi(3).min(1.0) } else { 0.0 };
        let rc = rc_aff + ds_a.component_mul(&dz_a) - DVector::from_element(m, sigma * mu);
        let (dx, ds, dz, dy) = direction(&rc);
        let alpha = (0.99 * max_step(&s, &ds).min(max_step(&z, &dz))).min(1.0);
        x += alpha * dx;
        s += alpha * ds;
        z += alpha * dz;
        if me > 0 {
            y += alpha * dy;
        }
    }

    let residuals = kkt_residuals(qp, &x, &z, &y);
    Ok(QpSolution {
        objective: qp.objective(&x),
        x,
        z,
        y,
        status,
        iterations,
        residuals,
    })
}
