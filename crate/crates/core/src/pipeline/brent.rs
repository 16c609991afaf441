//! Brent's bracketing root finder and the activation-threshold search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    /// Final sign-change bracket, lo ≤ x ≤ hi.
    pub bracket: (f64, f64),
    pub evaluations: usize,
}

/// Root of `f` on [a, b] with a final bracket no wider than `tol` (or four
/// ulps of the root, if larger), combining bisection, secant and inverse
/// quadratic steps.
/// Every evaluation lies in [a, b].
pub fn brent<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Root>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::domain("bracket end points must be finite"));
    }
    let (mut a, mut b) = (a, b);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    let mut evaluations = 2;
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            bracket: (a, a),
            evaluations,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            bracket: (b, b),
            evaluations,
        });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange { a, b, fa, fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_ITERATIONS {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = (2.0 * f64::EPSILON * b.abs()).max(0.5 * tol);
        let m = 0.5 * (c - b);
        if fb == 0.0 {
            return Ok(Root {
                x: b,
                bracket: (b, b),
                evaluations,
            });
        }
        if m.abs() <= tol1 {
            let bracket = if b < c { (b, c) } else { (c, b) };
            return Ok(Root {
                x: b,
                bracket,
                evaluations,
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // Secant.
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                // Inverse quadratic interpolation.
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(m) };
        fb = f(b)?;
        evaluations += 1;
    }
    Err(Error::MaxIterations(MAX_ITERATIONS))
}

/// Bracketing and tolerance for the threshold search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThresholdSearch {
    /// Absolute Brent tolerance [A].
    pub tol: f64,
    /// First probe amplitude when no hint is given [A].
    pub start: f64,
    /// Geometric step of the bracket scan.
    pub factor: f64,
    /// Largest amplitude tried before the axon is declared unreachable [A].
    pub cap: f64,
    /// Smallest amplitude tried when scanning downward [A].
    pub floor: f64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            start: 1e-5,
            factor: 2.0,
            cap: 10.0,
            floor: 1e-9,
        }
    }
}

impl ThresholdSearch {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.start > 0.0 && self.factor > 1.0 && self.cap > self.start && self.floor > 0.0) {
            return Err(Error::config(
                "threshold search needs tol, start, floor > 0, factor > 1 and cap > start",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Found(Root),
    /// No activation up to the cap.
    Unreachable {
        cap: f64,
        metric_at_cap: f64,
    },
}

impl Threshold {
    pub fn value(&self) -> Option<f64> {
        match self {
            Threshold::Found(r) => Some(r.x),
            Threshold::Unreachable { .. } => None,
        }
    }
}

/// Smallest amplitude with `metric(I) > 0`: a scan over the lattice
/// start·factorᵏ finds the first sign change, Brent refines it.
///
/// The hint only picks the lattice point the scan begins at, so equal
/// metrics always get the same bracket and the same root even when the
/// metric has several closely spaced zeros.
pub fn find_threshold<F>(mut metric: F, search: &ThresholdSearch, hint: Option<f64>) -> Result<Threshold>
where
    F: FnMut(f64) -> Result<f64>,
{
    search.validate()?;
    let mut evaluations = 0;
    let mut eval = |i: f64| {
        evaluations += 1;
        metric(i)
    };
    let lattice = |k: i32| (search.start * search.factor.powi(k)).min(search.cap);
    let mut k = hint
        .filter(|h| *h > 0.0 && h.is_finite())
        .map_or(0, |h| ((h / search.start).ln() / search.factor.ln()).floor() as i32);
    while lattice(k) >= search.cap && lattice(k - 1) >= search.cap {
        k -= 1;
    }
    let (lo, hi);
    if eval(lattice(k))? > 0.0 {
        loop {
            k -= 1;
            if lattice(k) < search.floor {
                return Err(Error::numerical(format!(
                    "activation persists down to {:e} A; no sub-threshold amplitude found",
                    lattice(k)
                )));
            }
            if eval(lattice(k))? <= 0.0 {
                break;
            }
        }
        (lo, hi) = (lattice(k), lattice(k + 1));
    } else {
        loop {
            if lattice(k) >= search.cap {
                return Ok(Threshold::Unreachable {
                    cap: search.cap,
                    metric_at_cap: eval(search.cap)?,
                });
            }
            k += 1;
            if eval(lattice(k))? > 0.0 {
                break;
            }
        }
        (lo, hi) = (lattice(k - 1), lattice(k));
    }
    let mut root = brent(&mut eval, lo, hi, search.tol)?;
    root.evaluations = evaluations;
    Ok(Threshold::Found(root))
}
