//! Build the Karhunen-Loève model of the random conductivity and look at its
//! spectrum and a few realizations.

use tissue_uq::kl::{kl_realize, truncation_error};
use tissue_uq::pipeline::{build_kl, StudyConfig};

fn main() -> tissue_uq::Result<()> {
    let cfg = StudyConfig::default();
    let kl = build_kl(&cfg)?;
    let model = &kl.model;
    println!(
        "grid: {} frequencies, {} samples, rank {}",
        model.grid.len(),
        cfg.kl.samples,
        model.rank()
    );

    let lam = &kl.eigen.values;
    for (m, l) in lam.iter().take(6).enumerate() {
        println!("lambda_{} = {l:.4e}  (ratio {:.2e})", m + 1, l / lam[0]);
    }
    let (err, _) = truncation_error(&kl.covariance, model)?;
    println!("max relative covariance error at rank {}: {err:.3e}", model.rank());

    let s = cfg.grid.scale;
    for y in [[0.0; 4], [s, 0.0, 0.0, 0.0], [-s, s, 0.0, 0.0]] {
        let g = kl_realize(model, &y)?;
        let n = g.len();
        println!(
            "y = {y:.2?}: kappa at f_min {:.5}, mid {:.5}, f_max {:.5}",
            g[0],
            g[n / 2],
            g[n - 1]
        );
    }
    Ok(())
}
