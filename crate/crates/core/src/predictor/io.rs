use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{FitMetadata, PredictorModel};
use crate::data::Dims;
use crate::error::{Error, Result};

const FORMAT: &str = "railtherm-predictor";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Matrix {
    rows: usize,
    cols: usize,
    /// Row-major.
    data: Vec<f64>,
}

impl Matrix {
    fn from(m: &DMatrix<f64>) -> Self {
        Matrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().iter().copied().collect(),
        }
    }

    fn into_dmatrix(self, name: &'static str) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Dimension {
                block: name,
                expected: self.rows * self.cols,
                actual: self.data.len(),
            });
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    rho: usize,
    horizon: usize,
    dims: Dims,
    meta: FitMetadata,
    phi: Matrix,
    h: Matrix,
}

/// JSON model file; floats are written in shortest round-trip form so a
/// read after write is bit-identical.
pub fn write_model(path: &Path, m: &PredictorModel) -> Result<()> {
    if m.phi.iter().chain(m.h.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("model has non-finite coefficients".into()));
    }
    let file = ModelFile {
        format: FORMAT.into(),
        version: VERSION,
        rho: m.rho,
        horizon: m.horizon,
        dims: m.dims,
        meta: m.meta.clone(),
        phi: Matrix::from(&m.phi),
        h: Matrix::from(&m.h),
    };
    let text = serde_json::to_string(&file)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: &Path) -> Result<PredictorModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: ModelFile = serde_json::from_str(&text)?;
    if f.format != FORMAT || f.version != VERSION {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            reason: format!("unsupported model format {} v{}", f.format, f.version),
        });
    }
    let m = PredictorModel {
        rho: f.rho,
        horizon: f.horizon,
        dims: f.dims,
        phi: f.phi.into_dmatrix("phi")?,
        h: f.h.into_dmatrix("h")?,
        meta: f.meta,
    };
    let (ny, nz, t) = (m.dims.ny, m.dims.nz(), m.horizon);
    let expect = [
        ("phi", m.phi.shape(), (ny * t, (m.rho + t) * nz)),
        ("h", m.h.shape(), (ny * t, m.rho * nz + (m.dims.nu + m.dims.nd) * t)),
    ];
    for (block, got, want) in expect {
        if got != want {
            return Err(Error::Dimension {
                block,
                expected: want.0 * want.1,
                actual: got.0 * got.1,
            });
        }
    }
    Ok(m)
}
