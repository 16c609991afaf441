//! Sparse-grid moments against Monte Carlo on the analytic point-source model.

use tissue_uq::pipeline::{build_kl, monte_carlo, PointSourceSurrogate, StudyConfig};
use tissue_uq::sparse_grid::smolyak_rule;

fn main() -> tissue_uq::Result<()> {
    let cfg = StudyConfig::default();
    let model = build_kl(&cfg)?.model;
    let s = PointSourceSurrogate::default();
    for level in 1..=3 {
        let rule = smolyak_rule(model.rank(), level);
        let (m, sd) = s.quadrature(&model, &rule, cfg.grid.scale)?;
        println!(
            "level {level} ({:>3} nodes): mean {:.6} mA, std {:.6} mA",
            rule.len(),
            m * 1e3,
            sd * 1e3
        );
    }
    let mc = monte_carlo(|y| s.threshold(&model, y), model.rank(), cfg.grid.scale, 10_000, 1)?;
    println!(
        "Monte Carlo (10^4):    mean {:.6} ± {:.6} mA, std {:.6} ± {:.6} mA",
        mc.mean * 1e3,
        mc.se_mean * 1e3,
        mc.std * 1e3,
        mc.se_std * 1e3
    );
    Ok(())
}
