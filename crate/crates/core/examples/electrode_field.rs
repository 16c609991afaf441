//! Unit-current field of the lead in mean tissue at 1 kHz, sampled along
//! the axon plane.

use num_complex::Complex64;
use tissue_uq::conductor::{build_mesh, eval_at_points, point_source_oracle, FieldOperator, Geometry};
use tissue_uq::ffem::MaterialSpectrum;
use tissue_uq::pipeline::{mean_material, StudyConfig};

fn main() -> tissue_uq::Result<()> {
    let geom = Geometry::default();
    let mesh = build_mesh(&geom, 5_000)?;
    let op = FieldOperator::new(&mesh)?;
    println!(
        "{} nodes, {} triangles, {} unknowns, skyline {} entries",
        mesh.n_nodes(),
        mesh.n_triangles(),
        op.n_unknowns(),
        op.profile_len()
    );

    let w = 2.0 * std::f64::consts::PI * 1e3;
    let (enc, tissue) = mean_material(&StudyConfig::default())?.admittivities(w)?;
    let sol = op.solve(enc, tissue, w)?;
    println!("contact potential {:.3} V/A", op.contact_potential(&sol));

    let pts: Vec<[f64; 2]> = (1..=10).map(|k| [k as f64 * 1e-3, 0.0]).collect();
    let phi = eval_at_points(&sol, &mesh, &pts)?;
    println!("{:>6} {:>22} {:>12}", "r [mm]", "phi [V/A]", "point source");
    for (p, v) in pts.iter().zip(&phi) {
        let ps: Complex64 = point_source_oracle(tissue.value(), p[0])?;
        println!("{:>6.0} {:>10.3} {:>+10.3}j {:>12.3}", p[0] * 1e3, v.re, v.im, ps.re);
    }
    Ok(())
}
