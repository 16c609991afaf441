//! Fourier finite-element response to the 130 Hz, 60 µs pulse train at the
//! centre of the 1 mm axon.

use tissue_uq::pipeline::{mean_material, ForwardModel, StudyConfig};

fn main() -> tissue_uq::Result<()> {
    let cfg = StudyConfig::default();
    let fwd = ForwardModel::new(&cfg)?;
    let resp = fwd.unit_response(&mean_material(&cfg)?)?;
    let centre = fwd.cable.len() / 2;
    let row = &resp.signal.values[centre];
    println!(
        "{} sweep frequencies, Nt = {}, dt = {:.2} us, discarded |Im| <= {:.1e} V/A",
        fwd.omega.len(),
        resp.signal.nt,
        resp.signal.dt * 1e6,
        resp.realness.max_imag
    );
    for j in (0..12).chain([20, 50, 100, 400, 767]) {
        println!(
            "t = {:>8.1} us  phi_e = {:>+9.3} V/A",
            j as f64 * resp.signal.dt * 1e6,
            row[j]
        );
    }
    let mean = row.iter().sum::<f64>() / row.len() as f64;
    println!("period mean {mean:+.4} V/A");
    Ok(())
}
