//! Variable-band (skyline) LDLᵀ for complex symmetric matrices.
//!
//! The volume-conductor matrix is complex symmetric (not Hermitian) with a
//! positive definite real part, so elimination without pivoting is stable.
//! Unknowns are renumbered by reverse Cuthill-McKee before the profile is
//! laid out.

use std::collections::VecDeque;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of an undirected graph given as adjacency
/// lists. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree: Vec<usize> = adjacency.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // Start each component from its minimum-degree vertex.
        let start = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (degree[v], v))
            .expect("unvisited vertex exists");
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adjacency[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Lower-triangular profile: row `i` stores columns `first[i]..=i`
/// contiguously starting at `offset[i]`.
#[derive(Debug, Clone)]
pub struct Profile {
    pub first: Vec<usize>,
    pub offset: Vec<usize>,
    pub len: usize,
}

impl Profile {
    /// Build from the lower-triangle sparsity: `lowest[i]` is the smallest
    /// column index coupled to row `i` (at most `i`).
    pub fn new(lowest: &[usize]) -> Self {
        let n = lowest.len();
        let mut offset = Vec::with_capacity(n + 1);
        let mut len = 0;
        for (i, &f) in lowest.iter().enumerate() {
            debug_assert!(f <= i);
            offset.push(len);
            len += i - f + 1;
        }
        offset.push(len);
        Self {
            first: lowest.to_vec(),
            offset,
            len,
        }
    }

    pub fn size(&self) -> usize {
        self.first.len()
    }

    /// Storage index of entry (i, j), j ≤ i, inside the profile.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j >= self.first[i] && j <= i);
        self.offset[i] + (j - self.first[i])
    }

    /// y = A·x for the symmetric matrix whose lower profile is `values`.
    pub fn sym_matvec(&self, values: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
        let n = self.size();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let f = self.first[i];
            let row = &values[self.offset[i]..self.offset[i + 1]];
            let mut acc = row[i - f] * x[i];
            for (k, a) in row[..i - f].iter().enumerate() {
                let j = f + k;
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
        y
    }
}

/// In-place LDLᵀ factor of a complex symmetric profile matrix.
pub struct LdlFactor<'p> {
    profile: &'p Profile,
    /// Strict lower part holds L, the diagonal slot holds D.
    values: Vec<Complex64>,
}

impl<'p> LdlFactor<'p> {
    pub fn factor(profile: &'p Profile, mut values: Vec<Complex64>) -> Result<Self> {
        let n = profile.size();
        if values.len() != profile.len {
            return Err(Error::Dimension {
                what: "profile values",
                expected: profile.len,
                got: values.len(),
            });
        }
        let zero = Complex64::new(0.0, 0.0);
        let mut g = Vec::new();
        for i in 0..n {
            let fi = profile.first[i];
            let oi = profile.offset[i];
            let width = i - fi;
            g.clear();
            g.resize(width, zero);
            // g_ij = a_ij − Σ_k g_ik·L_jk  (g_ik = L_ik·D_k, not yet divided)
            for j in fi..i {
                let fj = profile.first[j];
                let oj = profile.offset[j];
                let start = fi.max(fj);
                let mut s = values[oi + (j - fi)];
                let gi = &g[start - fi..j - fi];
                let lj = &values[oj + (start - fj)..oj + (j - fj)];
                for (a, b) in gi.iter().zip(lj) {
                    s -= a * b;
                }
                g[j - fi] = s;
            }
            let mut d = values[oi + width];
            let diag_scale = d.norm();
            for j in fi..i {
                let dj = values[profile.offset[j] + (j - profile.first[j])];
                let l = g[j - fi] / dj;
                d -= l * g[j - fi];
                values[oi + (j - fi)] = l;
            }
            if !(d.norm() > 1e-13 * diag_scale) || !d.is_finite() {
                return Err(Error::numerical(format!(
                    "zero pivot at unknown {i} (|d| = {:e}, |a_ii| = {:e}); \
                     check that the problem has a grounded (Dirichlet) boundary",
                    d.norm(),
                    diag_scale
                )));
            }
            values[oi + width] = d;
        }
        Ok(Self { profile, values })
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let p = self.profile;
        let n = p.size();
        let mut x = rhs.to_vec();
        // L y = b
        for i in 0..n {
            let fi = p.first[i];
            let row = &self.values[p.offset[i]..p.offset[i] + (i - fi)];
            let mut s = x[i];
            for (l, xj) in row.iter().zip(&x[fi..i]) {
                s -= l * xj;
            }
            x[i] = s;
        }
        // D z = y
        for i in 0..n {
            x[i] /= self.values[p.offset[i] + (i - p.first[i])];
        }
        // Lᵀ x = z
        for i in (0..n).rev() {
            let fi = p.first[i];
            let xi = x[i];
            let row = &self.values[p.offset[i]..p.offset[i] + (i - fi)];
            for (l, xj) in row.iter().zip(&mut x[fi..i]) {
                *xj -= l * xi;
            }
        }
        x
    }
}
