//! Stochastic collocation of the activation thresholds.
//!
//! `cargo run --release --example uq_study -- 3` runs the full 137-node
//! study; the default level 1 (9 nodes) takes well under a minute.

use std::time::Instant;

use tissue_uq::pipeline::{report, run_study, StudyConfig};

fn main() -> tissue_uq::Result<()> {
    let mut cfg = StudyConfig::default();
    cfg.grid.level = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let t = Instant::now();
    let result = run_study(&cfg)?;
    println!(
        "level {}: {} nodes in {:.1} s, config {}",
        result.level,
        result.nodes.len(),
        t.elapsed().as_secs_f64(),
        &result.config_hash[..12]
    );
    print!("{}", report::table_csv(&result));
    Ok(())
}
