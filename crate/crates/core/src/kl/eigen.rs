//! Symmetric eigendecomposition of the frequency covariance.
//!
//! The dense path wraps nalgebra's symmetric QR solver and returns the full
//! spectrum. The Lanczos path computes only the leading pairs with full
//! reorthogonalization; it exists for larger grids and is cross-checked
//! against the dense solver in the tests.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenpairs sorted by decreasing eigenvalue; column `k` of `vectors`
/// belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenDecomposition {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// V·diag(λ)·Vᵀ using the stored pairs.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (k, lam) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(*lam);
        }
        scaled * self.vectors.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigenSolver {
    #[default]
    Dense,
    Lanczos,
}

fn symmetrized(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !c.is_square() {
        return Err(Error::Dimension {
            what: "covariance matrix columns",
            expected: c.nrows(),
            got: c.ncols(),
        });
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("covariance contains non-finite entries"));
    }
    Ok((c + c.transpose()) * 0.5)
}

/// Flip each column so that its largest-magnitude entry is positive.
pub(crate) fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

fn sorted(values: &DVector<f64>, vectors: &DMatrix<f64>, keep: usize) -> EigenDecomposition {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    order.truncate(keep);
    let n = vectors.nrows();
    let mut out = DMatrix::zeros(n, order.len());
    for (dst, &src) in order.iter().enumerate() {
        out.set_column(dst, &vectors.column(src));
    }
    fix_signs(&mut out);
    EigenDecomposition {
        values: order.iter().map(|&k| values[k]).collect(),
        vectors: out,
    }
}

/// Full spectrum of the symmetrized matrix, sorted descending.
pub fn eig_sym(c: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let a = symmetrized(c)?;
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a, 1e-15, 0)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge"))?;
    Ok(sorted(&eig.eigenvalues, &eig.eigenvectors, n))
}

/// Leading `count` eigenpairs by Lanczos with full reorthogonalization.
///
/// The Krylov space is grown until the Ritz residuals of the wanted pairs
/// fall below `1e-12·‖A‖` or the space reaches the matrix dimension.
pub fn eig_top_lanczos(c: &DMatrix<f64>, count: usize) -> Result<EigenDecomposition> {
    let a = symmetrized(c)?;
    let n = a.nrows();
    if count == 0 || count > n {
        return Err(Error::domain(format!(
            "requested {count} eigenpairs of a {n}x{n} matrix"
        )));
    }
    let norm = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())) * n as f64;
    if norm == 0.0 {
        return Ok(sorted(&DVector::zeros(n), &DMatrix::identity(n, n), count));
    }

    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    // Deterministic start vector with components in every direction.
    let mut q = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 101) as f64 / 101.0);
    q /= q.norm();
    let max_dim = n;
    let check_every = (2 * count).max(8);

    loop {
        let mut w = &a * &q;
        let a_k = q.dot(&w);
        w.axpy(-a_k, &q, 1.0);
        if let Some(prev) = basis.last() {
            w.axpy(-beta[beta.len() - 1], prev, 1.0);
        }
        basis.push(q.clone());
        alpha.push(a_k);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let proj = v.dot(&w);
                w.axpy(-proj, v, 1.0);
            }
        }
        let b_k = w.norm();
        let m = basis.len();

        let invariant = b_k <= 1e-14 * norm;
        if m >= count && (m % check_every == 0 || invariant || m == max_dim) {
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j {
                    beta[i]
                } else if j + 1 == i {
                    beta[j]
                } else {
                    0.0
                }
            });
            let teig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| teig.eigenvalues[y].total_cmp(&teig.eigenvalues[x]));
            let residual = if invariant { 0.0 } else { b_k };
            let converged = order[..count]
                .iter()
                .all(|&k| (residual * teig.eigenvectors[(m - 1, k)]).abs() <= 1e-12 * norm);
            if converged || m == max_dim {
                let q_mat = DMatrix::from_columns(&basis);
                let ritz = q_mat * &teig.eigenvectors;
                return Ok(sorted(&teig.eigenvalues, &ritz, count));
            }
        }
        if m == max_dim {
            return Err(Error::numerical("Lanczos exhausted the space without convergence"));
        }
        if invariant {
            // Restart in a direction orthogonal to the current basis.
            beta.push(0.0);
            q = restart_vector(&basis, n)?;
        } else {
            beta.push(b_k);
            q = w / b_k;
        }
    }
}

fn restart_vector(basis: &[DVector<f64>], n: usize) -> Result<DVector<f64>> {
    for i in 0..n {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let proj = b.dot(&v);
                v.axpy(-proj, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            return Ok(v / norm);
        }
    }
    Err(Error::numerical("no direction left for a Lanczos restart"))
}

/// Dispatch on the configured solver; `count` is only used by Lanczos.
pub fn decompose(c: &DMatrix<f64>, solver: EigenSolver, count: usize) -> Result<EigenDecomposition> {
    match solver {
        EigenSolver::Dense => eig_sym(c),
        EigenSolver::Lanczos => eig_top_lanczos(c, count),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_spectrum() {
        let e = eig_sym(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.values.len(), 3);
        for v in &e.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let vtv = e.vectors.transpose() * &e.vectors;
        assert!((vtv - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn two_by_two() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let e = eig_sym(&c).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Sign rule: largest-magnitude entry positive. Ties resolve to the first entry.
        assert!((e.vectors[(0, 0)] - s).abs() < 1e-14);
        assert!((e.vectors[(1, 0)] - s).abs() < 1e-14);
        assert!((e.vectors[(0, 1)].abs() - s).abs() < 1e-14);
        assert!((e.vectors[(0, 1)] + e.vectors[(1, 1)]).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_finite() {
        let mut c = DMatrix::identity(2, 2);
        c[(0, 1)] = f64::NAN;
        assert!(eig_sym(&c).is_err());
        assert!(eig_top_lanczos(&c, 1).is_err());
    }

    #[test]
    fn lanczos_matches_dense() {
        // Smooth, rapidly decaying kernel, like a frequency covariance.
        let n = 120;
        let c = DMatrix::from_fn(n, n, |i, j| {
            let x = i as f64 / n as f64;
            let y = j as f64 / n as f64;
            (-(x - y).powi(2) / 0.1).exp() * (1.0 + x) * (1.0 + y)
        });
        let dense = eig_sym(&c).unwrap();
        let top = eig_top_lanczos(&c, 5).unwrap();
        for k in 0..5 {
            assert!(
                (dense.values[k] - top.values[k]).abs() <= 1e-10 * dense.values[0],
                "eigenvalue {k}: {} vs {}",
                dense.values[k],
                top.values[k]
            );
            let dot = dense.vectors.column(k).dot(&top.vectors.column(k));
            assert!((dot - 1.0).abs() < 1e-8, "eigenvector {k}: dot {dot}");
        }
    }
}
