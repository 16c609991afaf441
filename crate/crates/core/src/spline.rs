//! Natural cubic spline on strictly increasing knots.

use crate::error::{Error, Result};
use crate::tridiag;

#[derive(Debug, Clone)]
pub struct NaturalSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        crate::error::check_len("spline values", x.len(), y.len())?;
        let n = x.len();
        if n < 2 {
            return Err(Error::domain("a spline needs at least two knots"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain("spline knots must be strictly increasing"));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("spline values must be finite"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut lower = vec![0.0; k];
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                lower[i - 1] = h0;
                diag[i - 1] = 2.0 * (h0 + h1);
                upper[i - 1] = h1;
                rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            let mut scratch = vec![0.0; k];
            tridiag::solve_in_place(&lower, &diag, &upper, &mut rhs, &mut scratch);
            m[1..n - 1].copy_from_slice(&rhs);
        }
        Ok(Self {
            x: x.to_vec(),
            y: y.to_vec(),
            m,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Evaluate inside the knot range; queries outside are rejected.
    pub fn eval(&self, xq: f64) -> Result<f64> {
        if !(xq >= self.x_min() && xq <= self.x_max()) {
            return Err(Error::domain(format!(
                "spline query {xq} outside [{}, {}]",
                self.x_min(),
                self.x_max()
            )));
        }
        Ok(self.eval_unchecked(xq))
    }

    fn eval_unchecked(&self, xq: f64) -> f64 {
        let n = self.x.len();
        // Index of the interval [x[i], x[i+1]] containing xq.
        let i = match self.x.binary_search_by(|v| v.total_cmp(&xq)) {
            Ok(i) => return self.y[i],
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - xq) / h;
        let b = (xq - self.x[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}
