//! Smolyak rules over Clenshaw-Curtis nodes: sizes, exactness and moments.

use tissue_uq::sparse_grid::{integrate, moments, smolyak_rule};

fn main() -> tissue_uq::Result<()> {
    for level in 0..=3 {
        let r = smolyak_rule(4, level);
        let negative = r.weights.iter().filter(|w| **w < 0.0).count();
        println!(
            "dim 4, level {level}: {:>3} points, {negative} negative weights",
            r.len()
        );
    }

    // E[exp(x1 + x2/2)] for x uniform on [−1, 1]²: sinh(1)·2·sinh(1/2).
    let exact = 1f64.sinh() * 2.0 * 0.5f64.sinh();
    for level in 0..=4 {
        let r = smolyak_rule(2, level);
        let v: Vec<f64> = r.points.iter().map(|p| (p[0] + 0.5 * p[1]).exp()).collect();
        println!("level {level}: error {:.2e}", (integrate(&r, &v)? - exact).abs());
    }

    let r = smolyak_rule(4, 3);
    let v: Vec<f64> = r.scaled_points(3f64.sqrt()).iter().map(|y| y.iter().sum()).collect();
    let (mean, var) = moments(&r, &v)?;
    println!("sum of four unit-variance uniforms: mean {mean:.2e}, variance {var:.12}");
    Ok(())
}
