//! Versioned JSON persistence for [`KlModel`].
//!
//! Floats are written with 17 significant digits so a saved model reloads
//! bit-for-bit.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::{FrequencyGrid, KlModel, LogBase};
use crate::error::{check_len, Error, Result};

pub const KL_FORMAT: &str = "kl-model";
pub const KL_FORMAT_VERSION: u32 = 1;

fn sig17(x: f64) -> Result<Box<RawValue>> {
    if !x.is_finite() {
        return Err(Error::numerical(format!("cannot serialize non-finite value {x}")));
    }
    Ok(RawValue::from_string(format!("{x:.16e}"))?)
}

fn sig17_vec<'a>(xs: impl IntoIterator<Item = &'a f64>) -> Result<Vec<Box<RawValue>>> {
    xs.into_iter().map(|x| sig17(*x)).collect()
}

#[derive(Serialize)]
struct GridOut {
    log_base: LogBase,
    log_step: Box<RawValue>,
    omega: Vec<Box<RawValue>>,
}

#[derive(Serialize)]
struct ModelOut {
    format: &'static str,
    version: u32,
    rank: usize,
    grid_len: usize,
    grid: GridOut,
    mean: Vec<Box<RawValue>>,
    eigenvalues: Vec<Box<RawValue>>,
    /// Row-major N×M.
    basis: Vec<Box<RawValue>>,
}

#[derive(Deserialize)]
struct GridIn {
    log_base: LogBase,
    log_step: f64,
    omega: Vec<f64>,
}

#[derive(Deserialize)]
struct ModelIn {
    format: String,
    version: u32,
    rank: usize,
    grid_len: usize,
    grid: GridIn,
    mean: Vec<f64>,
    eigenvalues: Vec<f64>,
    basis: Vec<f64>,
}

impl KlModel {
    pub fn to_json(&self) -> Result<String> {
        let n = self.grid.len();
        let m = self.rank();
        let mut row_major = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                row_major.push(self.basis[(i, j)]);
            }
        }
        let out = ModelOut {
            format: KL_FORMAT,
            version: KL_FORMAT_VERSION,
            rank: m,
            grid_len: n,
            grid: GridOut {
                log_base: self.grid.log_base,
                log_step: sig17(self.grid.log_step)?,
                omega: sig17_vec(&self.grid.omega)?,
            },
            mean: sig17_vec(self.mean.iter())?,
            eigenvalues: sig17_vec(&self.eigenvalues())?,
            basis: sig17_vec(&row_major)?,
        };
        Ok(serde_json::to_string_pretty(&out)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ModelIn = serde_json::from_str(text)?;
        if raw.format != KL_FORMAT {
            return Err(Error::config(format!("not a KL model document: `{}`", raw.format)));
        }
        if raw.version != KL_FORMAT_VERSION {
            return Err(Error::config(format!(
                "unsupported KL model version {} (expected {KL_FORMAT_VERSION})",
                raw.version
            )));
        }
        let (n, m) = (raw.grid_len, raw.rank);
        check_len("grid", n, raw.grid.omega.len())?;
        check_len("mean", n, raw.mean.len())?;
        check_len("eigenvalues", m, raw.eigenvalues.len())?;
        check_len("basis", n * m, raw.basis.len())?;
        if raw.eigenvalues.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::config("KL eigenvalues must be positive"));
        }
        if raw.grid.omega.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("KL grid must be strictly increasing"));
        }
        Ok(KlModel {
            grid: FrequencyGrid {
                omega: raw.grid.omega,
                log_step: raw.grid.log_step,
                log_base: raw.grid.log_base,
            },
            mean: DVector::from_vec(raw.mean),
            basis: DMatrix::from_row_slice(n, m, &raw.basis),
            scale: DVector::from_iterator(m, raw.eigenvalues.iter().map(|l| l.sqrt())),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
