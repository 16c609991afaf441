//! Four-term Cole-Cole dispersion of biological tissue.
//!
//! A parameter set is ε∞, the static ionic conductivity κᵢ and four relaxation
//! terms {Δεₙ, τₙ, αₙ}. The complex relative permittivity
//!
//! ```text
//! f(ω) = ε∞ + κᵢ/(jωε₀) + Σₙ Δεₙ / (1 + (jωτₙ)^(1−αₙ))
//! ```
//!
//! yields the permittivity ε(ω) = Re f(ω) and the conductivity
//! κ(ω) = −Im(ε₀ ω f(ω)). The complex power is taken on the principal branch,
//! (jωτ)^(1−α) = (ωτ)^(1−α)·exp(j(1−α)π/2).

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vacuum permittivity [F/m].
pub const EPS0: f64 = 8.8541878128e-12;

/// Number of scalar parameters in one Cole-Cole set.
pub const N_PARAMS: usize = 14;

/// Number of relaxation terms.
pub const N_TERMS: usize = 4;

/// Literature mean values for grey-matter-like tissue, in the flat ordering
/// (ε∞, κᵢ, Δε₁, τ₁, α₁, …, Δε₄, τ₄, α₄).
pub const MEAN_TISSUE: [f64; N_PARAMS] = [
    4.0, 0.02, 45.0, 7.96e-12, 0.1, 400.0, 15.92e-9, 0.15, 2.0e5, 106.10e-6, 0.22, 4.5e7, 5.31e-3, 0.0,
];

/// One relaxation term of the Cole-Cole sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub delta_eps: f64,
    pub tau: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColeColeParams {
    pub eps_inf: f64,
    /// Static ionic conductivity [S/m].
    pub kappa_i: f64,
    pub terms: [Relaxation; N_TERMS],
}

impl ColeColeParams {
    pub fn tissue_mean() -> Self {
        Self::from_array(&MEAN_TISSUE)
    }

    pub fn from_array(v: &[f64; N_PARAMS]) -> Self {
        let term = |n: usize| Relaxation {
            delta_eps: v[2 + 3 * n],
            tau: v[3 + 3 * n],
            alpha: v[4 + 3 * n],
        };
        Self {
            eps_inf: v[0],
            kappa_i: v[1],
            terms: [term(0), term(1), term(2), term(3)],
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let arr: [f64; N_PARAMS] = v.try_into().map_err(|_| Error::Dimension {
            what: "Cole-Cole parameter vector",
            expected: N_PARAMS,
            got: v.len(),
        })?;
        Ok(Self::from_array(&arr))
    }

    pub fn to_array(&self) -> [f64; N_PARAMS] {
        let mut v = [0.0; N_PARAMS];
        v[0] = self.eps_inf;
        v[1] = self.kappa_i;
        for (n, t) in self.terms.iter().enumerate() {
            v[2 + 3 * n] = t.delta_eps;
            v[3 + 3 * n] = t.tau;
            v[4 + 3 * n] = t.alpha;
        }
        v
    }

    /// A parameter set with only ε∞ and κᵢ; all relaxation amplitudes zero.
    pub fn non_dispersive(eps_inf: f64, kappa_i: f64) -> Self {
        let mut p = Self::tissue_mean();
        p.eps_inf = eps_inf;
        p.kappa_i = kappa_i;
        for t in p.terms.iter_mut() {
            t.delta_eps = 0.0;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::domain(msg));
        if !(self.eps_inf > 0.0) {
            return bad(format!("eps_inf must be positive, got {}", self.eps_inf));
        }
        if !(self.kappa_i >= 0.0) {
            return bad(format!("kappa_i must be non-negative, got {}", self.kappa_i));
        }
        for (n, t) in self.terms.iter().enumerate() {
            if !(t.delta_eps >= 0.0) || !(t.tau > 0.0) || !(0.0..1.0).contains(&t.alpha) {
                return bad(format!("relaxation term {} out of range: {:?}", n + 1, t));
            }
        }
        Ok(())
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "angular frequency must be positive and finite, got {omega}"
        )))
    }
}

/// Sum of the relaxation terms only (no ε∞, no κᵢ pole).
fn relaxation_sum(params: &ColeColeParams, omega: f64) -> Complex64 {
    params
        .terms
        .iter()
        .map(|t| {
            let expo = 1.0 - t.alpha;
            let z = Complex64::from_polar((omega * t.tau).powf(expo), expo * FRAC_PI_2);
            t.delta_eps / (1.0 + z)
        })
        .sum()
}

/// Complex relative permittivity f(ω).
pub fn eval_f(params: &ColeColeParams, omega: f64) -> Result<Complex64> {
    check_omega(omega)?;
    let ionic = Complex64::new(0.0, -params.kappa_i / (omega * EPS0));
    Ok(params.eps_inf + ionic + relaxation_sum(params, omega))
}

/// Relative permittivity ε(ω) = Re f(ω).
pub fn permittivity(params: &ColeColeParams, omega: f64) -> Result<f64> {
    Ok(eval_f(params, omega)?.re)
}

/// Conductivity κ(ω) = −Im(ε₀ ω f(ω)) [S/m].
pub fn conductivity(params: &ColeColeParams, omega: f64) -> Result<f64> {
    check_omega(omega)?;
    // κᵢ is added separately so that the static term is reproduced exactly.
    Ok(params.kappa_i - EPS0 * omega * relaxation_sum(params, omega).im)
}

/// Complex admittivity κ + jωε₀εᵣ [S/m].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexAdmittivity(pub Complex64);

impl ComplexAdmittivity {
    pub fn real(value: f64) -> Self {
        Self(Complex64::new(value, 0.0))
    }

    pub fn from_parts(kappa: f64, omega: f64, eps_r: f64) -> Self {
        Self(Complex64::new(kappa, omega * EPS0 * eps_r))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0 * factor)
    }
}

/// Admittivity of the tissue at `omega`. When `eps_r_override` is given it
/// replaces the Cole-Cole permittivity (deterministic-permittivity mode).
/// At ω = 0 only the static conductivity remains.
pub fn admittivity(params: &ColeColeParams, omega: f64, eps_r_override: Option<f64>) -> Result<ComplexAdmittivity> {
    if omega == 0.0 {
        return Ok(ComplexAdmittivity::real(params.kappa_i));
    }
    if !(omega > 0.0) {
        return Err(Error::domain(format!(
            "angular frequency must be non-negative, got {omega}"
        )));
    }
    let kappa = conductivity(params, omega)?;
    let eps_r = match eps_r_override {
        Some(e) => e,
        None => permittivity(params, omega)?,
    };
    Ok(ComplexAdmittivity::from_parts(kappa, omega, eps_r))
}

/// Independent uniform perturbation of every parameter on
/// `[mean·(1−h), mean·(1+h)]`. Zero-mean entries stay point masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomParamBox {
    pub mean: ColeColeParams,
    pub rel_halfwidth: f64,
}

impl Default for RandomParamBox {
    fn default() -> Self {
        Self {
            mean: ColeColeParams::tissue_mean(),
            rel_halfwidth: 0.10,
        }
    }
}

impl RandomParamBox {
    pub fn new(mean: ColeColeParams, rel_halfwidth: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rel_halfwidth) {
            return Err(Error::domain(format!(
                "relative half-width must lie in [0, 1), got {rel_halfwidth}"
            )));
        }
        mean.validate()?;
        Ok(Self { mean, rel_halfwidth })
    }
}

/// Map box coordinates `u ∈ [−1, 1]¹⁴` to a parameter set.
pub fn sample_params(pbox: &RandomParamBox, u: &[f64]) -> Result<ColeColeParams> {
    if u.len() != N_PARAMS {
        return Err(Error::Dimension {
            what: "box coordinates",
            expected: N_PARAMS,
            got: u.len(),
        });
    }
    if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(Error::domain(format!("box coordinate {i} = {v} outside [-1, 1]")));
    }
    let mean = pbox.mean.to_array();
    let mut out = [0.0; N_PARAMS];
    for i in 0..N_PARAMS {
        out[i] = mean[i] * (1.0 + pbox.rel_halfwidth * u[i]);
    }
    Ok(ColeColeParams::from_array(&out))
}
