//! Activation thresholds of the ten axons in mean tissue, plus one
//! sub- and one supra-threshold simulation of the nearest axon.

use tissue_uq::pipeline::{mean_material, ForwardModel, StudyConfig, Threshold};

fn main() -> tissue_uq::Result<()> {
    let cfg = StudyConfig::default();
    let fwd = ForwardModel::new(&cfg)?;
    let resp = fwd.unit_response(&mean_material(&cfg)?)?;
    let found = fwd.thresholds(&resp, None)?;
    for (d, t) in cfg.axon.distances.iter().zip(&found) {
        match t {
            Threshold::Found(r) => println!(
                "{:>4.0} mm: {:>9.5} mA  ({} simulations)",
                d * 1e3,
                r.x * 1e3,
                r.evaluations
            ),
            Threshold::Unreachable { cap, .. } => println!("{:>4.0} mm: not activated up to {cap} A", d * 1e3),
        }
    }

    let unit = fwd.axon_signal(&resp, 0);
    let t0 = found[0].value().expect("nearest axon activates");
    for factor in [0.95, 1.05] {
        let sim = fwd.simulate(&unit, factor * t0)?;
        println!(
            "{factor:.2} x threshold: max phi_i_out {:+.4} V, activated {}",
            sim.metric, sim.activated
        );
    }
    Ok(())
}
