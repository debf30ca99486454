#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use railtherm::data::Trajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random stable discrete-time system x⁺ = A x + B w, y = C x with
/// w = (u, d) ∈ R¹ × R⁵.
pub struct Lti {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl Lti {
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let s = a.clone().svd(false, false).singular_values.max();
        a *= 0.9 / s;
        let b = DMatrix::from_fn(n, 6, |_, _| rng.random_range(-1.0..1.0));
        let c = DMatrix::from_fn(3, n, |_, _| rng.random_range(-1.0..1.0));
        Lti { a, b, c }
    }

    pub fn simulate(&self, len: usize, seed: u64, id: &str) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.a.nrows();
        let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mut tr = Trajectory {
            id: id.into(),
            sample_period: 300.0,
            t0: 0.0,
            u: vec![],
            y: vec![],
            d: vec![],
        };
        for _ in 0..len {
            let w = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
            let y = &self.c * &x;
            tr.y.push([y[0], y[1], y[2]]);
            tr.u.push(w[0]);
            tr.d.push([w[1], w[2], w[3], w[4], w[5]]);
            x = &self.a * &x + &self.b * &w;
        }
        tr
    }
}

/// Largest absolute multistep error over every window, per horizon step.
pub fn max_window_error(m: &railtherm::predictor::PredictorModel, tr: &Trajectory) -> Vec<f64> {
    let (rho, t) = (m.rho, m.horizon);
    let mut worst = vec![0.0f64; t];
    for s in 0..=tr.len() - rho - t {
        let z_p: Vec<f64> = (s..s + rho).flat_map(|k| tr.z(k)).collect();
        let u_f: Vec<f64> = (s + rho..s + rho + t).map(|k| tr.u[k]).collect();
        let d_f: Vec<f64> = (s + rho..s + rho + t).flat_map(|k| tr.d[k]).collect();
        let y = m.predict(&z_p, &u_f, &d_f).unwrap();
        for j in 0..t {
            for i in 0..3 {
                worst[j] = worst[j].max((y[j * 3 + i] - tr.y[s + rho + j][i]).abs());
            }
        }
    }
    worst
}

/// Random strictly convex QP whose feasible set contains the origin.
pub fn random_qp(seed: u64, n: usize, m: usize) -> railtherm::qp::Qp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let p = f.transpose() * &f + DMatrix::identity(n, n) * 0.1;
    let q = DVector::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
    let g = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let h = DVector::from_fn(m, |_, _| rng.random_range(0.05..1.0));
    railtherm::qp::Qp::new(p, q, g, h)
}

/// Brute force over every active set: solve the equality-constrained KKT
/// system and keep the best point that is primal and dual feasible.
pub fn active_set_oracle(qp: &railtherm::qp::Qp) -> DVector<f64> {
    let n = qp.q.len();
    let m = qp.h.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let act: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if act.len() > n {
            continue;
        }
        let k = act.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&qp.p);
        let mut rhs = DVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&qp.q));
        for (j, &i) in act.iter().enumerate() {
            for c in 0..n {
                kkt[(n + j, c)] = qp.g[(i, c)];
                kkt[(c, n + j)] = qp.g[(i, c)];
            }
            rhs[n + j] = qp.h[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let x = sol.rows(0, n).into_owned();
        let feasible = (&qp.g * &x - &qp.h).iter().all(|v| *v <= 1e-9);
        let dual_ok = sol.rows(n, k).iter().all(|l| *l >= -1e-9);
        if feasible && dual_ok {
            let obj = qp.objective(&x);
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, x));
            }
        }
    }
    best.expect("feasible QP has a KKT point").1
}
