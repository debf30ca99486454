use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Z = L·Q with L square lower-triangular (non-negative diagonal) and Q
/// having orthonormal rows. Computed from a QR factorization of Zᵀ.
pub fn lq_decompose(z: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_shape(z)?;
    let qr = z.transpose().qr();
    let mut l = qr.r().transpose();
    let mut q = qr.q().transpose();
    flip_signs(&mut l, Some(&mut q));
    Ok((l, q))
}

/// Lower-triangular factor only.
pub fn lq_factor(z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shape(z)?;
    let mut l = z.transpose().qr().r().transpose();
    flip_signs(&mut l, None);
    Ok(l)
}

fn check_shape(z: &DMatrix<f64>) -> Result<()> {
    if z.ncols() < z.nrows() {
        return Err(Error::InsufficientData(format!(
            "LQ needs at least as many columns as rows ({} < {})",
            z.ncols(),
            z.nrows()
        )));
    }
    Ok(())
}

fn flip_signs(l: &mut DMatrix<f64>, mut q: Option<&mut DMatrix<f64>>) {
    for i in 0..l.nrows() {
        if l[(i, i)] < 0.0 {
            l.column_mut(i).neg_mut();
            if let Some(q) = q.as_deref_mut() {
                q.row_mut(i).neg_mut();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity() {
        let (l, q) = lq_decompose(&DMatrix::identity(4, 4)).unwrap();
        assert!((l - DMatrix::<f64>::identity(4, 4)).norm() < 1e-14);
        assert!((q - DMatrix::<f64>::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn scaled_orthonormal() {
        let (c, s) = (0.6, 0.8);
        let q0 = DMatrix::from_row_slice(2, 3, &[c, s, 0.0, -s, c, 0.0]);
        let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0])) * &q0;
        let (l, q) = lq_decompose(&z).unwrap();
        assert!((l - DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0])).norm() < 1e-12);
        assert!((q - q0).norm() < 1e-12);
    }

    #[test]
    fn random_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z = DMatrix::from_fn(18, 200, |_, _| rng.random_range(-1.0..1.0));
        let (l, q) = lq_decompose(&z).unwrap();
        assert!((&z - &l * &q).norm() <= 1e-10 * z.norm());
        assert!((&q * q.transpose() - DMatrix::<f64>::identity(18, 18)).norm() <= 1e-10);
        for i in 0..18 {
            assert!(l[(i, i)] >= 0.0);
            for j in i + 1..18 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn wide_required() {
        assert!(lq_decompose(&DMatrix::zeros(5, 4)).is_err());
    }
}
