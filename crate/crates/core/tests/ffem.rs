mod common;

use common::{rc_direct, rms};
use num_complex::Complex64;
use tissue_uq::ffem::{frequency_nodes, reconstruct_time, stimulus_spectrum, StimulusPulse, TransferFunction};

#[test]
fn one_pole_lowpass_matches_direct_stepping() {
    let pulse = StimulusPulse::default();
    let nt = 768;
    let tau = 100.0 * pulse.period / nt as f64;
    let nodes = frequency_nodes(130.0, 5e5, 200).unwrap();
    let tf = TransferFunction::from_fn(vec![[0.0, 0.0]], nodes, |_, w| {
        Complex64::new(1.0, 0.0) / Complex64::new(1.0, w * tau)
    });
    let c = stimulus_spectrum(&pulse, nt).unwrap();
    let ffem = reconstruct_time(&tf, &c, nt, pulse.period).unwrap();
    let direct = rc_direct(&pulse, tau, nt, 200);
    let diff: Vec<f64> = ffem.values[0].iter().zip(&direct).map(|(a, b)| a - b).collect();
    let rel = rms(&diff) / rms(&direct);
    assert!(rel <= 0.02, "relative RMS error {rel:.4}");
}

#[test]
fn reconstruction_is_linear_in_the_pulse() {
    let pulse = StimulusPulse::default();
    let twice = StimulusPulse {
        amplitude: 2.0,
        ..pulse
    };
    let nodes = frequency_nodes(130.0, 5e5, 40).unwrap();
    let tf = TransferFunction::from_fn(vec![[0.0, 0.0]], nodes, |_, w| {
        Complex64::new(1.0, 0.0) / Complex64::new(1.0, w * 3e-4)
    });
    let a = reconstruct_time(&tf, &stimulus_spectrum(&pulse, 512).unwrap(), 512, pulse.period).unwrap();
    let b = reconstruct_time(&tf, &stimulus_spectrum(&twice, 512).unwrap(), 512, pulse.period).unwrap();
    for (x, y) in a.values[0].iter().zip(&b.values[0]) {
        assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1e-3));
    }
}
