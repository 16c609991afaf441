//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::collections::BTreeSet;

use tissue_uq::ffem::StimulusPulse;
use tissue_uq::sparse_grid::cc_size;

/// Points of the union of tensor grids with Σ levels ≤ L, each CC node
/// written as an integer on the finest dyadic lattice.
pub fn union_count(dim: usize, level: u32) -> usize {
    let fine = 1i64 << level.max(1);
    let nodes = |l: u32| -> Vec<i64> {
        if l == 0 {
            return vec![0];
        }
        let n = cc_size(l) as i64 - 1;
        // cos(π k / n) takes the same values on nested levels; key by k·fine/n.
        (0..=n).map(|k| k * fine / n).collect()
    };
    let mut set = BTreeSet::new();
    let mut levels = vec![0u32; dim];
    loop {
        if levels.iter().sum::<u32>() <= level {
            let mut tuples: Vec<Vec<i64>> = vec![vec![]];
            for &l in &levels {
                let ks = nodes(l);
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        ks.iter().map(move |k| {
                            let mut u = t.clone();
                            // Level 0 is the midpoint, fine/2 on the lattice.
                            u.push(if l == 0 { fine / 2 } else { *k });
                            u
                        })
                    })
                    .collect();
            }
            set.extend(tuples);
        }
        let mut i = 0;
        loop {
            if i == dim {
                return set.len();
            }
            levels[i] += 1;
            if levels[i] <= level {
                break;
            }
            levels[i] = 0;
            i += 1;
        }
    }
}

/// E[xᵏ] for x uniform on [−1, 1].
pub fn uniform_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        1.0 / (k as f64 + 1.0)
    }
}

/// Periodic steady state of τ·v' + v = i(t) by backward Euler with `sub`
/// steps per stimulus sample, read at sample midpoints.
pub fn rc_direct(pulse: &StimulusPulse, tau: f64, nt: usize, sub: usize) -> Vec<f64> {
    let dt = pulse.period / nt as f64;
    let h = dt / sub as f64;
    let input = |t: f64| {
        let t = t.rem_euclid(pulse.period);
        if t < pulse.pulse_width {
            -pulse.amplitude
        } else {
            0.0
        }
    };
    let mut v = 0.0;
    let mut out = vec![0.0; nt];
    for period in 0..4 {
        for j in 0..nt {
            for s in 0..sub {
                let t_next = (j * sub + s + 1) as f64 * h;
                v = (v + h / tau * input(t_next - 0.5 * h)) / (1.0 + h / tau);
                if period == 3 && s + 1 == sub / 2 {
                    out[j] = v;
                }
            }
        }
    }
    out
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Backward Euler of τ·v' + v = x at the stimulus step itself, driven by
/// the cell-averaged samples. States live on cell edges, so sample j is
/// read at the cell midpoint as (v_j + v_{j+1}) / 2.
pub fn rc_backward_euler(pulse: &StimulusPulse, tau: f64, nt: usize) -> Vec<f64> {
    let x = pulse.samples(nt).unwrap();
    let h = pulse.period / nt as f64;
    let mut v = 0.0;
    let mut out = vec![0.0; nt];
    for period in 0..4 {
        for j in 0..nt {
            let prev = v;
            v = (v + h / tau * x[j]) / (1.0 + h / tau);
            if period == 3 {
                out[j] = 0.5 * (prev + v);
            }
        }
    }
    out
}
