//! Cole-Cole permittivity and conductivity of the mean tissue, and a few
//! draws from the ±10% parameter box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tissue_uq::dispersion::{
    admittivity, conductivity, permittivity, sample_params, ColeColeParams, RandomParamBox, N_PARAMS,
};

fn main() -> tissue_uq::Result<()> {
    let p = ColeColeParams::tissue_mean();
    println!("{:>10} {:>12} {:>10} {:>12}", "f [Hz]", "eps_r", "kappa", "|sigma*|");
    for f in [130.0, 1e3, 1e4, 1e5, 5e5] {
        let w = 2.0 * std::f64::consts::PI * f;
        let a = admittivity(&p, w, None)?.value();
        println!(
            "{f:>10.0} {:>12.4e} {:>10.5} {:>12.5}",
            permittivity(&p, w)?,
            conductivity(&p, w)?,
            a.norm()
        );
    }

    let pbox = RandomParamBox::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = 2.0 * std::f64::consts::PI * 1e3;
    print!("\nkappa(1 kHz) for five box samples:");
    for _ in 0..5 {
        let u: Vec<f64> = (0..N_PARAMS).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        print!(" {:.5}", conductivity(&sample_params(&pbox, &u)?, w)?);
    }
    println!();
    Ok(())
}
