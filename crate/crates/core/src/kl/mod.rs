//! Discrete Karhunen-Loève reduction of the random conductivity spectrum.
//!
//! The random Cole-Cole conductivity is sampled on a log-spaced frequency
//! grid, its sample covariance is eigendecomposed and the leading `M` modes
//! define a reduced random field
//!
//! ```text
//! g_M(y) = E_g + V_M · diag(√λ) · y
//! ```
//!
//! whose coordinates `y` are uncorrelated with unit variance. Values between
//! grid points are recovered with a natural cubic spline in log₁₀ ω.

mod eigen;
mod io;

pub use eigen::{decompose, eig_sym, eig_top_lanczos, EigenDecomposition, EigenSolver};
pub use io::{KL_FORMAT, KL_FORMAT_VERSION};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{self, RandomParamBox, N_PARAMS};
use crate::error::{check_len, Error, Result};
use crate::spline::NaturalSpline;

/// Base of the logarithm used for grid spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Ten,
    E,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Ten => x.log10(),
            LogBase::E => x.ln(),
        }
    }

    fn exp(self, x: f64) -> f64 {
        match self {
            LogBase::Ten => 10f64.powf(x),
            LogBase::E => x.exp(),
        }
    }
}

/// Strictly increasing angular frequencies, equidistant in log scale except
/// for a possibly shorter final interval ending exactly at `omega_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub omega: Vec<f64>,
    pub log_step: f64,
    #[serde(default)]
    pub log_base: LogBase,
}

impl FrequencyGrid {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn omega_min(&self) -> f64 {
        self.omega[0]
    }

    pub fn omega_max(&self) -> f64 {
        self.omega[self.omega.len() - 1]
    }

    /// Grid abscissas in log₁₀ ω, the interpolation variable.
    pub fn log10_omega(&self) -> Vec<f64> {
        self.omega.iter().map(|w| w.log10()).collect()
    }
}

/// Base-10 log-spaced grid from `omega_min` to `omega_max`.
pub fn build_grid(omega_min: f64, omega_max: f64, log_step: f64) -> Result<FrequencyGrid> {
    build_grid_with_base(omega_min, omega_max, log_step, LogBase::Ten)
}

pub fn build_grid_with_base(omega_min: f64, omega_max: f64, log_step: f64, base: LogBase) -> Result<FrequencyGrid> {
    if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) {
        return Err(Error::domain(format!(
            "invalid frequency bounds [{omega_min}, {omega_max}]"
        )));
    }
    if !(log_step > 0.0 && log_step.is_finite()) {
        return Err(Error::domain(format!("invalid log step {log_step}")));
    }
    let l0 = base.log(omega_min);
    let span = base.log(omega_max) - l0;
    // The small slack keeps exact multiples (one decade, step 1) from
    // acquiring a spurious extra interval through rounding.
    let intervals = ((span / log_step) - 1e-9).ceil().max(1.0) as usize;
    let mut omega: Vec<f64> = (0..intervals).map(|k| base.exp(l0 + k as f64 * log_step)).collect();
    omega[0] = omega_min;
    omega.push(omega_max);
    Ok(FrequencyGrid {
        omega,
        log_step,
        log_base: base,
    })
}

/// Conductivity samples: row `s` is κ(θₛ, ·) on the grid.
#[derive(Debug, Clone)]
pub struct SampleEnsemble {
    pub values: DMatrix<f64>,
}

impl SampleEnsemble {
    pub fn samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn grid_len(&self) -> usize {
        self.values.ncols()
    }
}

/// Draw `samples` independent parameter sets from the box and evaluate their
/// conductivity on the grid.
///
/// Sample `s` uses its own ChaCha stream (`seed`, stream `s`), so the result
/// does not depend on the number of worker threads.
pub fn sample_ensemble(
    pbox: &RandomParamBox,
    grid: &FrequencyGrid,
    samples: usize,
    seed: u64,
) -> Result<SampleEnsemble> {
    if samples < 2 {
        return Err(Error::domain(format!(
            "an ensemble needs at least two samples, got {samples}"
        )));
    }
    let n = grid.len();
    let rows: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let u: Vec<f64> = (0..N_PARAMS).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let params = dispersion::sample_params(pbox, &u)?;
            grid.omega
                .iter()
                .map(|&w| dispersion::conductivity(&params, w))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let values = DMatrix::from_fn(samples, n, |s, k| rows[s][k]);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite conductivity sample"));
    }
    Ok(SampleEnsemble { values })
}

/// Sample mean and unbiased (1/(S−1)) sample covariance of the ensemble.
pub fn sample_covariance(ens: &SampleEnsemble) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s = ens.samples();
    if s < 2 {
        return Err(Error::domain(format!("covariance needs at least two samples, got {s}")));
    }
    let mean = ens.values.row_mean().transpose();
    let mut centered = ens.values.clone();
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut c = centered.transpose() * &centered;
    c /= (s - 1) as f64;
    // Exact symmetry regardless of the GEMM summation order.
    let c = (&c + c.transpose()) * 0.5;
    Ok((mean, c))
}

/// Truncated KL model: `mean + basis · diag(scale) · y`.
#[derive(Debug, Clone, PartialEq)]
pub struct KlModel {
    pub grid: FrequencyGrid,
    pub mean: DVector<f64>,
    /// N×M matrix of orthonormal modes.
    pub basis: DMatrix<f64>,
    /// √λₘ for the kept modes.
    pub scale: DVector<f64>,
}

impl KlModel {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.scale.iter().map(|s| s * s).collect()
    }

    /// Rank-M covariance V_M·diag(λ)·V_Mᵀ.
    pub fn covariance(&self) -> DMatrix<f64> {
        let mut scaled = self.basis.clone();
        for (k, s) in self.scale.iter().enumerate() {
            scaled.column_mut(k).scale_mut(s * s);
        }
        scaled * self.basis.transpose()
    }

    /// Spline interpolant of one realization over log₁₀ ω.
    pub fn realization_spline(&self, y: &[f64]) -> Result<NaturalSpline> {
        let values = kl_realize(self, y)?;
        NaturalSpline::new(&self.grid.log10_omega(), values.as_slice())
    }
}

fn build_model(grid: &FrequencyGrid, mean: &DVector<f64>, eig: &EigenDecomposition, m: usize) -> Result<KlModel> {
    let n = grid.len();
    check_len("KL mean", n, mean.len())?;
    check_len("eigenvector length", n, eig.vectors.nrows())?;
    if m == 0 || m > eig.len() {
        return Err(Error::domain(format!("truncation rank {m} outside 1..={}", eig.len())));
    }
    if let Some((k, lam)) = eig.values[..m].iter().enumerate().find(|(_, l)| !(**l > 0.0)) {
        return Err(Error::numerical(format!(
            "kept eigenvalue {} is not positive ({lam})",
            k + 1
        )));
    }
    let mut basis = eig.vectors.columns(0, m).into_owned();
    eigen::fix_signs(&mut basis);
    Ok(KlModel {
        grid: grid.clone(),
        mean: mean.clone(),
        basis,
        scale: DVector::from_iterator(m, eig.values[..m].iter().map(|l| l.sqrt())),
    })
}

/// Keep the `m` leading eigenpairs.
pub fn truncate(grid: &FrequencyGrid, mean: &DVector<f64>, eig: &EigenDecomposition, m: usize) -> Result<KlModel> {
    build_model(grid, mean, eig, m)
}

/// Smallest rank whose discarded eigenvalue mass is at most `tol` times the
/// total. Negative round-off eigenvalues count as zero.
pub fn truncate_by_energy(
    grid: &FrequencyGrid,
    mean: &DVector<f64>,
    eig: &EigenDecomposition,
    tol: f64,
) -> Result<KlModel> {
    let clipped: Vec<f64> = eig.values.iter().map(|l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let mut tail = total;
    let mut m = eig.len();
    for (k, l) in clipped.iter().enumerate() {
        tail -= l;
        if tail <= tol * total {
            m = k + 1;
            break;
        }
    }
    build_model(grid, mean, eig, m)
}

/// Realization `mean + V_M·diag(√λ)·y` on the grid.
pub fn kl_realize(model: &KlModel, y: &[f64]) -> Result<DVector<f64>> {
    check_len("KL coordinates", model.rank(), y.len())?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("KL coordinates must be finite"));
    }
    let weighted = DVector::from_iterator(y.len(), y.iter().zip(model.scale.iter()).map(|(a, s)| a * s));
    Ok(&model.mean + &model.basis * weighted)
}

/// Coordinates `yₘ = (g − mean)ᵀ bₘ / √λₘ` of an observed spectrum.
pub fn kl_project(model: &KlModel, g_obs: &[f64]) -> Result<DVector<f64>> {
    check_len("observed spectrum", model.grid.len(), g_obs.len())?;
    if g_obs.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("observed spectrum must be finite"));
    }
    let centered = DVector::from_column_slice(g_obs) - &model.mean;
    let mut y = model.basis.transpose() * centered;
    for (v, s) in y.iter_mut().zip(model.scale.iter()) {
        *v /= s;
    }
    Ok(y)
}

/// Natural cubic spline through `(log₁₀ ωₙ, valuesₙ)` evaluated at `omega_query`.
pub fn spline_eval(grid: &FrequencyGrid, values: &[f64], omega_query: f64) -> Result<f64> {
    check_len("spline values", grid.len(), values.len())?;
    if !(omega_query >= grid.omega_min() && omega_query <= grid.omega_max()) {
        return Err(Error::domain(format!(
            "query {omega_query} outside grid [{}, {}]",
            grid.omega_min(),
            grid.omega_max()
        )));
    }
    let spline = NaturalSpline::new(&grid.log10_omega(), values)?;
    // Clamp so that log10 round-off at the end points stays inside the knots.
    let x = omega_query.log10().clamp(spline.x_min(), spline.x_max());
    spline.eval(x)
}

/// Entrywise `|C − C_M| / max|C|` and its maximum.
pub fn truncation_error(c: &DMatrix<f64>, model: &KlModel) -> Result<(f64, DMatrix<f64>)> {
    check_len("covariance rows", model.grid.len(), c.nrows())?;
    check_len("covariance columns", model.grid.len(), c.ncols())?;
    let scale = c.amax();
    let mut field = (c - model.covariance()).abs();
    if scale > 0.0 {
        field /= scale;
    }
    let max_rel = field.amax();
    Ok((max_rel, field))
}

/// Every stage from the parameter box to the truncated model.
#[derive(Debug, Clone)]
pub struct KlBuild {
    pub ensemble: SampleEnsemble,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub eigen: EigenDecomposition,
    pub model: KlModel,
}

pub fn build_model_from_box(
    pbox: &RandomParamBox,
    grid: &FrequencyGrid,
    samples: usize,
    seed: u64,
    rank: usize,
    solver: EigenSolver,
) -> Result<KlBuild> {
    let ensemble = sample_ensemble(pbox, grid, samples, seed)?;
    let (mean, covariance) = sample_covariance(&ensemble)?;
    let eigen = decompose(&covariance, solver, rank)?;
    let model = truncate(grid, &mean, &eigen, rank)?;
    Ok(KlBuild {
        ensemble,
        mean,
        covariance,
        eigen,
        model,
    })
}
