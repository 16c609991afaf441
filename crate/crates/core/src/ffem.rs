//! Fourier finite-element method: sweep the volume conductor over
//! log-spaced frequencies, interpolate the transfer function at the stimulus
//! harmonics and transform back to the time domain.
//!
//! The stimulus is periodic, so one period of Nt samples is represented by
//! its harmonics cₖ = (1/Nt)·Σⱼ xⱼ·e^(−2πijk/Nt), k = 0…Nt/2. The response at
//! an observation point is xⱼ = Σₖ cₖ·H(2πk/T)·e^(2πijk/T), completed with the
//! conjugate-symmetric half so that it is real.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::conductor::{eval_probes, FieldOperator, Probe};
use crate::dispersion::{permittivity, ColeColeParams, ComplexAdmittivity};
use crate::error::{check_len, Error, Result};
use crate::kl::KlModel;
use crate::spline::NaturalSpline;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Periodic cathodal square pulse: −I during the first `pulse_width` of each
/// period, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StimulusPulse {
    /// Current magnitude I [A]; the pulse applies −I.
    pub amplitude: f64,
    pub pulse_width: f64,
    pub period: f64,
}

impl Default for StimulusPulse {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            pulse_width: 60e-6,
            period: 1.0 / 130.0,
        }
    }
}

impl StimulusPulse {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_width > 0.0 && self.pulse_width < self.period) {
            return Err(Error::config(format!(
                "pulse width {} must lie in (0, period = {})",
                self.pulse_width, self.period
            )));
        }
        if !self.amplitude.is_finite() {
            return Err(Error::config("pulse amplitude must be finite"));
        }
        Ok(())
    }

    /// Sample j is the mean of the waveform over [j·dt, (j+1)·dt), so the
    /// sampled pulse carries exactly the charge −I·pulse_width per period.
    pub fn samples(&self, nt: usize) -> Result<Vec<f64>> {
        self.validate()?;
        check_nt(nt)?;
        let dt = self.period / nt as f64;
        if self.pulse_width < 2.0 * dt {
            return Err(Error::config(format!(
                "Nt = {nt} cannot resolve a {:e} s pulse (dt = {dt:e} s)",
                self.pulse_width
            )));
        }
        Ok((0..nt)
            .map(|j| {
                let t0 = j as f64 * dt;
                let covered = (self.pulse_width - t0).clamp(0.0, dt);
                -self.amplitude * covered / dt
            })
            .collect())
    }
}

fn check_nt(nt: usize) -> Result<()> {
    if nt < 8 || nt % 2 != 0 {
        return Err(Error::config(format!("Nt must be even and at least 8, got {nt}")));
    }
    Ok(())
}

/// Harmonic coefficients c₀ … c_{Nt/2} of the sampled pulse.
pub fn stimulus_spectrum(pulse: &StimulusPulse, nt: usize) -> Result<Vec<Complex64>> {
    let x = pulse.samples(nt)?;
    Ok(dft_half(&x))
}

fn dft_half(x: &[f64]) -> Vec<Complex64> {
    let nt = x.len();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(nt).process(&mut buf);
    buf.truncate(nt / 2 + 1);
    for c in buf.iter_mut() {
        *c /= nt as f64;
    }
    buf
}

/// Σₖ|cₖ|² over the full two-sided spectrum rebuilt from the half.
pub fn spectral_energy(half: &[Complex64], nt: usize) -> f64 {
    half.iter()
        .enumerate()
        .map(|(k, c)| {
            let mult = if k == 0 || 2 * k == nt { 1.0 } else { 2.0 };
            mult * c.norm_sqr()
        })
        .sum()
}

/// DC followed by `n` log-equidistant angular frequencies spanning
/// [2π·f_min, 2π·f_max].
pub fn frequency_nodes(f_min: f64, f_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_max > f_min && f_max.is_finite()) {
        return Err(Error::config(format!("invalid frequency range [{f_min}, {f_max}]")));
    }
    if n < 2 {
        return Err(Error::config(format!("need at least 2 frequency nodes, got {n}")));
    }
    let (w0, w1) = (TWO_PI * f_min, TWO_PI * f_max);
    let step = (w1 / w0).ln() / (n - 1) as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    out.extend((0..n).map(|k| match k {
        0 => w0,
        k if k == n - 1 => w1,
        k => w0 * (step * k as f64).exp(),
    }));
    Ok(out)
}

/// Admittivities (encapsulation, tissue) as functions of ω.
pub trait MaterialSpectrum {
    fn admittivities(&self, omega: f64) -> Result<(ComplexAdmittivity, ComplexAdmittivity)>;
}

/// Frequency-independent materials.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMaterial {
    pub encapsulation: ComplexAdmittivity,
    pub tissue: ComplexAdmittivity,
}

impl MaterialSpectrum for ConstantMaterial {
    fn admittivities(&self, _omega: f64) -> Result<(ComplexAdmittivity, ComplexAdmittivity)> {
        Ok((self.encapsulation, self.tissue))
    }
}

/// Random conductivity from one KL realization, deterministic permittivity
/// from a Cole-Cole set. The encapsulation admittivity is the tissue value
/// times a fixed factor.
#[derive(Debug, Clone)]
pub struct TissueSpectrum {
    kappa: NaturalSpline,
    permittivity: ColeColeParams,
    pub encapsulation_scale: f64,
}

impl TissueSpectrum {
    pub fn from_kl(model: &KlModel, y: &[f64], permittivity: ColeColeParams, encapsulation_scale: f64) -> Result<Self> {
        Self::new(model.realization_spline(y)?, permittivity, encapsulation_scale)
    }

    /// `kappa` is a spline over log₁₀ ω.
    pub fn new(kappa: NaturalSpline, permittivity: ColeColeParams, encapsulation_scale: f64) -> Result<Self> {
        if !(encapsulation_scale > 0.0) {
            return Err(Error::config("encapsulation scale must be positive"));
        }
        permittivity.validate()?;
        Ok(Self {
            kappa,
            permittivity,
            encapsulation_scale,
        })
    }

    /// Conductivity; ω = 0 uses the low-frequency end of the realization.
    pub fn kappa(&self, omega: f64) -> Result<f64> {
        let (lo, hi) = (self.kappa.x_min(), self.kappa.x_max());
        if omega == 0.0 {
            return self.kappa.eval(lo);
        }
        let x = omega.log10();
        // Accept round-off at the sweep end points.
        let slack = 1e-12 * (hi - lo);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::domain(format!(
                "ω = {omega:e} rad/s lies outside the conductivity realization"
            )));
        }
        self.kappa.eval(x.clamp(lo, hi))
    }

    pub fn tissue(&self, omega: f64) -> Result<ComplexAdmittivity> {
        let kappa = self.kappa(omega)?;
        if omega == 0.0 {
            return Ok(ComplexAdmittivity::real(kappa));
        }
        let eps_r = permittivity(&self.permittivity, omega)?;
        Ok(ComplexAdmittivity::from_parts(kappa, omega, eps_r))
    }
}

impl MaterialSpectrum for TissueSpectrum {
    fn admittivities(&self, omega: f64) -> Result<(ComplexAdmittivity, ComplexAdmittivity)> {
        let t = self.tissue(omega)?;
        Ok((t.scale(self.encapsulation_scale), t))
    }
}

/// Potential per ampere at each observation point and sweep node.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    pub points: Vec<[f64; 2]>,
    /// Sweep nodes, DC first.
    pub omega: Vec<f64>,
    /// points × nodes.
    pub h: Vec<Vec<Complex64>>,
}

impl TransferFunction {
    /// Builds from an analytic H(point index, ω).
    pub fn from_fn(points: Vec<[f64; 2]>, omega: Vec<f64>, f: impl Fn(usize, f64) -> Complex64) -> Self {
        let h = (0..points.len())
            .map(|p| omega.iter().map(|&w| f(p, w)).collect())
            .collect();
        Self { points, omega, h }
    }

    fn check(&self) -> Result<()> {
        if self.omega.len() < 3 || self.omega[0] != 0.0 {
            return Err(Error::domain("transfer function needs a DC node and two nonzero nodes"));
        }
        check_len("transfer function rows", self.points.len(), self.h.len())?;
        for row in &self.h {
            check_len("transfer function columns", self.omega.len(), row.len())?;
        }
        Ok(())
    }

    /// H at arbitrary ω ≥ 0 for every point.
    pub fn interpolator(&self) -> Result<Interpolator> {
        self.check()?;
        let logw: Vec<f64> = self.omega[1..].iter().map(|w| w.log10()).collect();
        let rows = self
            .h
            .iter()
            .map(|row| {
                let re: Vec<f64> = row[1..].iter().map(|c| c.re).collect();
                let im: Vec<f64> = row[1..].iter().map(|c| c.im).collect();
                Ok((row[0], NaturalSpline::new(&logw, &re)?, NaturalSpline::new(&logw, &im)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Interpolator {
            omega_first: self.omega[1],
            omega_last: *self.omega.last().unwrap(),
            rows,
        })
    }

    /// CSV with columns point, omega, re, im.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = String::from("point,omega,re,im\n");
        for (p, row) in self.h.iter().enumerate() {
            for (w, c) in self.omega.iter().zip(row) {
                s += &format!("{p},{w:e},{:e},{:e}\n", c.re, c.im);
            }
        }
        write_file(path.as_ref(), &s)
    }
}

pub struct Interpolator {
    omega_first: f64,
    omega_last: f64,
    rows: Vec<(Complex64, NaturalSpline, NaturalSpline)>,
}

impl Interpolator {
    /// H at `omega` for point `p`. Below the first nonzero node the value is
    /// blended linearly from the DC node; above the last node it is held.
    pub fn eval(&self, p: usize, omega: f64) -> Complex64 {
        let (dc, re, im) = &self.rows[p];
        if omega <= 0.0 {
            return *dc;
        }
        if omega < self.omega_first {
            let first = Complex64::new(re.values()[0], im.values()[0]);
            let t = omega / self.omega_first;
            return dc * (1.0 - t) + first * t;
        }
        let x = if omega >= self.omega_last {
            re.x_max()
        } else {
            omega.log10().clamp(re.x_min(), re.x_max())
        };
        Complex64::new(re.eval(x).unwrap(), im.eval(x).unwrap())
    }

    pub fn n_points(&self) -> usize {
        self.rows.len()
    }
}

/// One unit-current field solve per sweep node, evaluated at the probes.
pub fn sweep(
    op: &FieldOperator,
    material: &(impl MaterialSpectrum + Sync),
    omega: &[f64],
    points: &[[f64; 2]],
    probes: &[Probe],
) -> Result<TransferFunction> {
    check_len("probes", points.len(), probes.len())?;
    let columns: Vec<Vec<Complex64>> = omega
        .par_iter()
        .enumerate()
        .map(|(k, &w)| {
            let solve = || -> Result<Vec<Complex64>> {
                let (se, st) = material.admittivities(w)?;
                let sol = op.solve(se, st, w)?;
                Ok(eval_probes(&sol, probes))
            };
            solve().map_err(|e| Error::numerical(format!("sweep node {k} (ω = {w:e} rad/s): {e}")))
        })
        .collect::<Result<_>>()?;
    let h = (0..points.len())
        .map(|p| columns.iter().map(|col| col[p]).collect())
        .collect();
    Ok(TransferFunction {
        points: points.to_vec(),
        omega: omega.to_vec(),
        h,
    })
}

/// One period of a real signal per observation point.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub dt: f64,
    pub nt: usize,
    /// points × Nt [V].
    pub values: Vec<Vec<f64>>,
}

impl TimeSignal {
    pub fn period(&self) -> f64 {
        self.dt * self.nt as f64
    }

    /// Value at sample `j`, periodically extended.
    pub fn at(&self, point: usize, j: usize) -> f64 {
        self.values[point][j % self.nt]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dt: self.dt,
            nt: self.nt,
            values: self
                .values
                .iter()
                .map(|row| row.iter().map(|v| v * factor).collect())
                .collect(),
        }
    }

    /// CSV with a time column followed by one column per point.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut s = String::from("t");
        for p in 0..self.values.len() {
            s += &format!(",p{p}");
        }
        s.push('\n');
        for j in 0..self.nt {
            s += &format!("{:e}", j as f64 * self.dt);
            for row in &self.values {
                s += &format!(",{:e}", row[j]);
            }
            s.push('\n');
        }
        write_file(path.as_ref(), &s)
    }
}

pub(crate) fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Largest |Im| over all reconstructed samples, before it is discarded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realness {
    pub max_imag: f64,
    pub max_real: f64,
}

/// Inverse transform of cₖ·H(2πk/period) at every point.
pub fn reconstruct_time(tf: &TransferFunction, spectrum: &[Complex64], nt: usize, period: f64) -> Result<TimeSignal> {
    reconstruct_time_checked(tf, spectrum, nt, period).map(|(s, _)| s)
}

pub fn reconstruct_time_checked(
    tf: &TransferFunction,
    spectrum: &[Complex64],
    nt: usize,
    period: f64,
) -> Result<(TimeSignal, Realness)> {
    check_nt(nt)?;
    check_len("stimulus spectrum", nt / 2 + 1, spectrum.len())?;
    if !(period > 0.0) {
        return Err(Error::domain("period must be positive"));
    }
    let interp = tf.interpolator()?;
    let ifft = FftPlanner::new().plan_fft_inverse(nt);
    let mut realness = Realness {
        max_imag: 0.0,
        max_real: 0.0,
    };
    let mut values = Vec::with_capacity(interp.n_points());
    let mut buf = vec![Complex64::new(0.0, 0.0); nt];
    for p in 0..interp.n_points() {
        for (k, c) in spectrum.iter().enumerate() {
            let y = c * interp.eval(p, TWO_PI * k as f64 / period);
            if k == 0 || 2 * k == nt {
                // Self-conjugate bins of a real signal.
                buf[k] = Complex64::new(y.re, 0.0);
            } else {
                buf[k] = y;
                buf[nt - k] = y.conj();
            }
        }
        ifft.process(&mut buf);
        let mut row = Vec::with_capacity(nt);
        for z in &buf {
            realness.max_imag = realness.max_imag.max(z.im.abs());
            realness.max_real = realness.max_real.max(z.re.abs());
            row.push(z.re);
        }
        values.push(row);
    }
    Ok((
        TimeSignal {
            dt: period / nt as f64,
            nt,
            values,
        },
        realness,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout() {
        let w = frequency_nodes(130.0, 5e5, 3846).unwrap();
        assert_eq!(w.len(), 3847);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[1], TWO_PI * 130.0);
        assert_eq!(w[3846], TWO_PI * 5e5);
        let ratio = w[2] / w[1];
        for pair in w[1..].windows(2) {
            assert!((pair[1] / pair[0] / ratio - 1.0).abs() < 1e-12);
        }
        assert_eq!(
            frequency_nodes(10.0, 20.0, 2).unwrap(),
            vec![0.0, TWO_PI * 10.0, TWO_PI * 20.0]
        );
        assert!(frequency_nodes(20.0, 10.0, 4).is_err());
        assert!(frequency_nodes(10.0, 20.0, 1).is_err());
    }

    #[test]
    fn dc_coefficient_is_mean_of_pulse() {
        let c = stimulus_spectrum(&StimulusPulse::default(), 768).unwrap();
        assert!((c[0].re + 0.0078).abs() < 1e-15);
        assert_eq!(c[0].im, 0.0);
        assert_eq!(c.len(), 385);
    }

    #[test]
    fn zero_amplitude_spectrum() {
        let pulse = StimulusPulse {
            amplitude: 0.0,
            ..StimulusPulse::default()
        };
        assert!(stimulus_spectrum(&pulse, 768).unwrap().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn parseval() {
        let pulse = StimulusPulse::default();
        let x = pulse.samples(768).unwrap();
        let c = stimulus_spectrum(&pulse, 768).unwrap();
        let time = x.iter().map(|v| v * v).sum::<f64>() / 768.0;
        assert!((time - spectral_energy(&c, 768)).abs() <= 1e-12 * time);
    }

    #[test]
    fn unresolved_pulse_is_rejected() {
        assert!(stimulus_spectrum(&StimulusPulse::default(), 128)
            .unwrap_err()
            .is_config());
        assert!(stimulus_spectrum(&StimulusPulse::default(), 7).is_err());
    }

    #[test]
    fn resistive_medium_reproduces_waveform() {
        let pulse = StimulusPulse::default();
        let nodes = frequency_nodes(130.0, 5e5, 20).unwrap();
        let tf = TransferFunction::from_fn(vec![[1e-3, 0.0]], nodes, |_, _| Complex64::new(250.0, 0.0));
        let c = stimulus_spectrum(&pulse, 768).unwrap();
        let (sig, real) = reconstruct_time_checked(&tf, &c, 768, pulse.period).unwrap();
        let x = pulse.samples(768).unwrap();
        for (a, b) in sig.values[0].iter().zip(&x) {
            assert!((a - 250.0 * b).abs() <= 1e-12 * 250.0);
        }
        assert!(real.max_imag <= 1e-10 * real.max_real);
        assert!((sig.period() - pulse.period).abs() < 1e-12);
        assert_eq!(sig.at(0, 768), sig.at(0, 0));
    }

    #[test]
    fn interpolation_is_exact_at_nodes() {
        let nodes = frequency_nodes(130.0, 5e5, 30).unwrap();
        let tf = TransferFunction::from_fn(vec![[0.0, 0.0]], nodes.clone(), |_, w| {
            Complex64::new(1.0, 0.0) / Complex64::new(1.0, w * 1e-4)
        });
        let it = tf.interpolator().unwrap();
        for (k, &w) in nodes.iter().enumerate() {
            assert_eq!(it.eval(0, w), tf.h[0][k]);
        }
        assert_eq!(it.eval(0, 1e9), tf.h[0][30]);
    }

    #[test]
    fn zero_spectrum_gives_zero_signal() {
        let nodes = frequency_nodes(130.0, 5e5, 5).unwrap();
        let tf = TransferFunction::from_fn(vec![[0.0, 0.0]; 2], nodes, |_, _| Complex64::new(3.0, 1.0));
        let sig = reconstruct_time(&tf, &vec![Complex64::new(0.0, 0.0); 33], 64, 1.0).unwrap();
        assert!(sig.values.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn tissue_spectrum_dc_uses_low_end() {
        let x = [2.0, 3.0, 4.0];
        let spline = NaturalSpline::new(&x, &[0.1, 0.12, 0.15]).unwrap();
        let ts = TissueSpectrum::new(spline, ColeColeParams::tissue_mean(), 2.0).unwrap();
        let (enc, tis) = ts.admittivities(0.0).unwrap();
        assert_eq!(tis.0, Complex64::new(0.1, 0.0));
        assert_eq!(enc.0, Complex64::new(0.2, 0.0));
        let t = ts.tissue(1e3).unwrap();
        assert!((t.0.re - 0.12).abs() < 1e-15 && t.0.im > 0.0);
        assert!(ts.tissue(1e5).is_err());
    }
}
