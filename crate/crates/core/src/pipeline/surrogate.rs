//! Cheap analytic forward model for checking the quadrature against
//! Monte Carlo: the threshold of a point source in homogeneous tissue is the
//! current that lifts |φ| at a fixed distance to a target potential.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::conductor::point_source_oracle;
use crate::dispersion::ColeColeParams;
use crate::error::{Error, Result};
use crate::ffem::TissueSpectrum;
use crate::kl::KlModel;
use crate::sparse_grid::{moments, SparseGridRule};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSourceSurrogate {
    /// [m].
    pub distance: f64,
    /// [Hz].
    pub frequency: f64,
    /// [V].
    pub target: f64,
    pub permittivity: ColeColeParams,
}

impl Default for PointSourceSurrogate {
    fn default() -> Self {
        Self {
            distance: 1e-3,
            frequency: 1e3,
            target: 0.02,
            permittivity: ColeColeParams::tissue_mean(),
        }
    }
}

impl PointSourceSurrogate {
    /// target / |φ_unit(r)| = target·4πr·|σ(y, ω)|.
    pub fn threshold(&self, model: &KlModel, y: &[f64]) -> Result<f64> {
        let omega = 2.0 * std::f64::consts::PI * self.frequency;
        let spectrum = TissueSpectrum::from_kl(model, y, self.permittivity, 1.0)?;
        let sigma = spectrum.tissue(omega)?.value();
        Ok(self.target / point_source_oracle(sigma, self.distance)?.norm())
    }

    /// (mean, std) by the quadrature rule with y = scale·x.
    pub fn quadrature(&self, model: &KlModel, rule: &SparseGridRule, scale: f64) -> Result<(f64, f64)> {
        let values = rule
            .scaled_points(scale)
            .iter()
            .map(|y| self.threshold(model, y))
            .collect::<Result<Vec<f64>>>()?;
        let (m, v) = moments(rule, &values)?;
        Ok((m, v.sqrt()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    /// Standard error of `mean`.
    pub se_mean: f64,
    /// Standard error of `std` from the sample fourth moment.
    pub se_std: f64,
}

/// Plain Monte Carlo with independent y_i ~ U[−scale, scale]. Sample `s`
/// draws from ChaCha stream `s`, so results do not depend on thread count.
pub fn monte_carlo<F>(f: F, dim: usize, scale: f64, samples: usize, seed: u64) -> Result<MonteCarloEstimate>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if samples < 4 {
        return Err(Error::domain("Monte Carlo needs at least four samples"));
    }
    let values = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect();
            f(&y)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let var = m2 * n / (n - 1.0);
    let std = var.sqrt();
    let var_of_var = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    Ok(MonteCarloEstimate {
        samples,
        mean,
        std,
        se_mean: std / n.sqrt(),
        se_std: if std > 0.0 {
            var_of_var.sqrt() / (2.0 * std)
        } else {
            0.0
        },
    })
}
