//! Nested Clenshaw-Curtis rules and Smolyak sparse grids on `[−1, 1]^d`.
//!
//! Weights are normalized for the uniform probability density, so every rule
//! integrates the constant 1 to 1. Points of the nested hierarchy are keyed by
//! their integer index on the finest level involved; duplicate points from
//! different tensor products are merged by key, never by float comparison.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateRule {
    pub level: u32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Number of Clenshaw-Curtis nodes on `level`: 1, 3, 5, 9, 17, …
pub fn cc_size(level: u32) -> usize {
    if level == 0 {
        1
    } else {
        (1usize << level) + 1
    }
}

/// Node `k` of an `intervals`-interval Clenshaw-Curtis rule, `−cos(πk/intervals)`,
/// evaluated through a sine so that mirrored nodes are exact negatives.
fn cc_node(k: usize, intervals: usize) -> f64 {
    if intervals == 0 {
        return 0.0;
    }
    let twice = 2 * k as i64 - intervals as i64;
    if twice == 0 {
        0.0
    } else {
        (PI * twice as f64 / (2 * intervals) as f64).sin()
    }
}

pub fn cc_rule(level: u32) -> UnivariateRule {
    if level == 0 {
        return UnivariateRule {
            level,
            nodes: vec![0.0],
            weights: vec![1.0],
        };
    }
    let n = cc_size(level) - 1;
    let nodes = (0..=n).map(|k| cc_node(k, n)).collect();
    let mut weights = vec![0.0; n + 1];
    for (k, w) in weights.iter_mut().enumerate().take(n / 2 + 1) {
        let theta = k as f64 * PI / n as f64;
        let mut s = 0.0;
        for j in 1..=n / 2 {
            let b = if 2 * j == n { 1.0 } else { 2.0 };
            s += b / (4 * j * j - 1) as f64 * (2.0 * j as f64 * theta).cos();
        }
        let c = if k == 0 || k == n { 1.0 } else { 2.0 };
        // Lebesgue weights on [−1, 1] sum to 2; halve for the uniform density.
        *w = 0.5 * c / n as f64 * (1.0 - s);
    }
    for k in 0..n / 2 {
        weights[n - k] = weights[k];
    }
    UnivariateRule { level, nodes, weights }
}

/// Univariate abscissa families. Only Clenshaw-Curtis is nested and supported
/// by [`smolyak_rule_with`]; Gauss-Legendre is reserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissas {
    #[default]
    ClenshawCurtis,
    GaussLegendre,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseGridRule {
    pub dim: usize,
    pub level: u32,
    /// K×dim, row-major.
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SparseGridRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Points mapped affinely by `y = factor · x`.
    pub fn scaled_points(&self, factor: f64) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| p.iter().map(|x| factor * x).collect())
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All multi-indices in `N^dim` with entry sum exactly `total`, in
/// lexicographic order.
fn compositions(dim: usize, total: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=total {
            prefix.push(first);
            rec(dim - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(dim, total, &mut Vec::with_capacity(dim), &mut out);
    out
}

/// Smolyak combination of nested Clenshaw-Curtis rules:
///
/// ```text
/// A(L, d) = Σ_{L−d+1 ≤ |l| ≤ L} (−1)^{L−|l|} · C(d−1, L−|l|) · U^{l₁} ⊗ … ⊗ U^{l_d}
/// ```
///
/// with 0-based univariate levels `lₖ`.
pub fn smolyak_rule(dim: usize, level: u32) -> SparseGridRule {
    assert!(dim >= 1, "sparse grid dimension must be at least 1");
    let max_level = level;
    let fine_intervals = if max_level == 0 { 0 } else { 1usize << max_level };
    let univariate: Vec<UnivariateRule> = (0..=level).map(cc_rule).collect();
    // Global index of node k of level l on the finest level.
    let global = |l: u32, k: usize| -> usize {
        if l == 0 {
            fine_intervals / 2
        } else {
            k << (max_level - l)
        }
    };

    let mut acc: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let top = level as usize;
    let bottom = (top + 1).saturating_sub(dim);
    for total in bottom..=top {
        let gap = top - total;
        let coef = if gap % 2 == 0 { 1.0 } else { -1.0 } * binomial(dim - 1, gap);
        for multi in compositions(dim, total) {
            let rules: Vec<&UnivariateRule> = multi.iter().map(|&l| &univariate[l]).collect();
            let mut counter = vec![0usize; dim];
            loop {
                let mut key = Vec::with_capacity(dim);
                let mut w = coef;
                for (axis, rule) in rules.iter().enumerate() {
                    key.push(global(rule.level, counter[axis]));
                    w *= rule.weights[counter[axis]];
                }
                *acc.entry(key).or_insert(0.0) += w;
                // Odometer over the tensor product.
                let mut axis = 0;
                loop {
                    counter[axis] += 1;
                    if counter[axis] < rules[axis].nodes.len() {
                        break;
                    }
                    counter[axis] = 0;
                    axis += 1;
                    if axis == dim {
                        break;
                    }
                }
                if axis == dim {
                    break;
                }
            }
        }
    }

    let mut points = Vec::with_capacity(acc.len());
    let mut weights = Vec::with_capacity(acc.len());
    for (key, w) in acc {
        points.push(key.iter().map(|&k| cc_node(k, fine_intervals)).collect());
        weights.push(w);
    }
    SparseGridRule {
        dim,
        level,
        points,
        weights,
    }
}

pub fn smolyak_rule_with(dim: usize, level: u32, abscissas: Abscissas) -> Result<SparseGridRule> {
    match abscissas {
        Abscissas::ClenshawCurtis => Ok(smolyak_rule(dim, level)),
        Abscissas::GaussLegendre => Err(Error::config(
            "Gauss-Legendre abscissas are not nested; only clenshaw_curtis is supported",
        )),
    }
}

/// Σₖ wₖ·valuesₖ.
pub fn integrate(rule: &SparseGridRule, values: &[f64]) -> Result<f64> {
    check_len("quadrature values", rule.len(), values.len())?;
    Ok(rule.weights.iter().zip(values).map(|(w, v)| w * v).sum())
}

/// Mean and variance by the two-pass centered formula.
///
/// Negative Smolyak weights can produce a slightly negative variance for
/// (near-)constant integrands; values down to `−1e-12·mean²` are clamped to 0.
pub fn moments(rule: &SparseGridRule, values: &[f64]) -> Result<(f64, f64)> {
    let mean = integrate(rule, values)?;
    let centered: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = integrate(rule, &centered)?;
    if var >= 0.0 {
        Ok((mean, var))
    } else if var >= -1e-12 * mean * mean {
        Ok((mean, 0.0))
    } else {
        Err(Error::numerical(format!(
            "quadrature variance {var:e} is negative beyond round-off"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_levels_by_hand() {
        let r0 = cc_rule(0);
        assert_eq!(r0.nodes, vec![0.0]);
        assert_eq!(r0.weights, vec![1.0]);

        let r1 = cc_rule(1);
        assert_eq!(r1.nodes, vec![-1.0, 0.0, 1.0]);
        let expect = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        for (w, e) in r1.weights.iter().zip(expect) {
            assert!((w - e).abs() < 1e-15);
        }

        let r2 = cc_rule(2);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [-1.0, -h, 0.0, h, 1.0];
        for (x, e) in r2.nodes.iter().zip(expect) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn univariate_invariants() {
        for level in 0..8 {
            let r = cc_rule(level);
            assert_eq!(r.nodes.len(), cc_size(level));
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "level {level}: sum {s}");
            let n = r.nodes.len();
            for k in 0..n {
                assert_eq!(r.nodes[k], -r.nodes[n - 1 - k]);
            }
            if level < 7 {
                let finer = cc_rule(level + 1);
                for x in &r.nodes {
                    assert!(finer.nodes.contains(x), "level {level} node {x} not nested");
                }
            }
        }
    }

    #[test]
    fn point_counts() {
        let counts: Vec<usize> = (0..=3).map(|l| smolyak_rule(4, l).len()).collect();
        assert_eq!(counts, vec![1, 9, 41, 137]);
    }

    #[test]
    fn one_dimensional_collapse() {
        for level in 0..6 {
            let s = smolyak_rule(1, level);
            let u = cc_rule(level);
            let xs: Vec<f64> = s.points.iter().map(|p| p[0]).collect();
            assert_eq!(xs, u.nodes);
            for (a, b) in s.weights.iter().zip(&u.weights) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_dimensional_level_one() {
        let s = smolyak_rule(2, 1);
        assert_eq!(s.len(), 5);
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            pts,
            vec![
                vec![-1.0, 0.0],
                vec![0.0, -1.0],
                vec![0.0, 0.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0]
            ]
        );
    }

    #[test]
    fn moments_of_simple_functions() {
        let rule = smolyak_rule(4, 3);
        let ones = vec![1.0; rule.len()];
        assert!((integrate(&rule, &ones).unwrap() - 1.0).abs() < 1e-12);
        let y1: Vec<f64> = rule.points.iter().map(|p| p[0]).collect();
        assert!(integrate(&rule, &y1).unwrap().abs() < 1e-14);
        let y1sq: Vec<f64> = rule.points.iter().map(|p| p[0] * p[0]).collect();
        assert!((integrate(&rule, &y1sq).unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let c = vec![2.5; rule.len()];
        let (m, v) = moments(&rule, &c).unwrap();
        assert!((m - 2.5).abs() < 1e-13);
        assert!(v < 1e-24);
        let sum: Vec<f64> = rule.points.iter().map(|p| p[0] + p[1]).collect();
        let (m, v) = moments(&rule, &sum).unwrap();
        assert!(m.abs() < 1e-14);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);

        assert!(integrate(&rule, &[1.0]).is_err());
    }

    #[test]
    fn gauss_is_reserved() {
        assert!(smolyak_rule_with(2, 1, Abscissas::GaussLegendre).is_err());
        assert_eq!(
            smolyak_rule_with(2, 1, Abscissas::ClenshawCurtis).unwrap(),
            smolyak_rule(2, 1)
        );
    }
}
