//! Study configuration: one JSON document with a section per module.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::brent::ThresholdSearch;
use crate::axon::{AxonGeometry, MembraneConstants, RestConvention};
use crate::conductor::{Geometry, MeshOptions};
use crate::dispersion::{ColeColeParams, RandomParamBox};
use crate::error::{Error, Result};
use crate::ffem::StimulusPulse;
use crate::kl::{EigenSolver, LogBase};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub mean: ColeColeParams,
    pub rel_halfwidth: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            mean: ColeColeParams::tissue_mean(),
            rel_halfwidth: 0.10,
        }
    }
}

impl DispersionConfig {
    pub fn param_box(&self) -> Result<RandomParamBox> {
        RandomParamBox::new(self.mean, self.rel_halfwidth).map_err(|e| Error::config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KlConfig {
    /// Frequency band [Hz].
    pub f_min: f64,
    pub f_max: f64,
    pub log_step: f64,
    pub log_base: LogBase,
    pub samples: usize,
    pub seed: u64,
    pub rank: usize,
    pub solver: EigenSolver,
}

impl Default for KlConfig {
    fn default() -> Self {
        Self {
            f_min: 130.0,
            f_max: 5e5,
            log_step: 0.004,
            log_base: LogBase::Ten,
            samples: 1000,
            seed: 20240601,
            rank: 4,
            solver: EigenSolver::Dense,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub level: u32,
    /// Quadrature abscissa x ∈ [−1, 1] maps to KL coordinate y = scale·x.
    pub scale: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            level: 3,
            scale: 3f64.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub geometry: Geometry,
    pub target_elements: usize,
    pub mesh: MeshOptions,
    /// Nonzero sweep nodes; DC is added on top.
    pub sweep_nodes: usize,
    pub f_min: f64,
    pub f_max: f64,
    /// Encapsulation admittivity / tissue admittivity.
    pub encapsulation_scale: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            geometry: Geometry::default(),
            target_elements: 5000,
            mesh: MeshOptions::default(),
            sweep_nodes: 200,
            f_min: 130.0,
            f_max: 5e5,
            encapsulation_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StimulusConfig {
    pub pulse: StimulusPulse,
    /// Samples per period.
    pub nt: usize,
    /// Periods simulated per threshold evaluation.
    pub periods: usize,
}

impl Default for StimulusConfig {
    fn default() -> Self {
        Self {
            pulse: StimulusPulse::default(),
            nt: 768,
            periods: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AxonConfig {
    pub geometry: AxonGeometry,
    pub membrane: MembraneConstants,
    pub fiber_diameter: f64,
    /// Lateral axon-to-lead-axis distances [m].
    pub distances: Vec<f64>,
    pub rest_convention: RestConvention,
}

impl Default for AxonConfig {
    fn default() -> Self {
        Self {
            geometry: AxonGeometry::default(),
            membrane: MembraneConstants::default(),
            fiber_diameter: 5.7e-6,
            distances: (1..=10).map(|k| k as f64 * 1e-3).collect(),
            rest_convention: RestConvention::Zero,
        }
    }
}

/// What to do with a node whose threshold search finds no activation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailurePolicy {
    #[default]
    Abort,
    /// Drop the node and renormalize the remaining quadrature weights.
    Exclude,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub dispersion: DispersionConfig,
    pub kl: KlConfig,
    pub grid: GridConfig,
    pub field: FieldConfig,
    pub stimulus: StimulusConfig,
    pub axon: AxonConfig,
    pub threshold: ThresholdSearch,
    pub failure_policy: FailurePolicy,
}

impl StudyConfig {
    /// Mesh and sweep at the resolution of the original study (slow).
    pub fn paper_scale() -> Self {
        let mut c = Self::default();
        c.field.target_elements = 27_000;
        c.field.sweep_nodes = 3846;
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| if e.is_config() { e } else { Error::config(e.to_string()) };
        self.dispersion.param_box()?;
        let kl = &self.kl;
        if !(kl.f_min > 0.0 && kl.f_max > kl.f_min && kl.log_step > 0.0) {
            return Err(Error::config("kl band needs 0 < f_min < f_max and log_step > 0"));
        }
        if kl.samples < 2 || kl.rank == 0 {
            return Err(Error::config("kl needs at least two samples and rank ≥ 1"));
        }
        if !(self.grid.scale > 0.0) {
            return Err(Error::config("grid scale must be positive"));
        }
        let f = &self.field;
        f.geometry.validate().map_err(cfg)?;
        if f.target_elements < 100 || f.sweep_nodes < 2 {
            return Err(Error::config("field needs ≥ 100 target elements and ≥ 2 sweep nodes"));
        }
        if !(f.f_min > 0.0 && f.f_max > f.f_min && f.encapsulation_scale > 0.0) {
            return Err(Error::config(
                "field band needs 0 < f_min < f_max and a positive encapsulation scale",
            ));
        }
        self.stimulus.pulse.validate().map_err(cfg)?;
        if self.stimulus.nt < 8 || self.stimulus.periods == 0 {
            return Err(Error::config("stimulus needs nt ≥ 8 and at least one period"));
        }
        let dt = self.stimulus.pulse.period / self.stimulus.nt as f64;
        if self.stimulus.pulse.pulse_width < 2.0 * dt {
            return Err(Error::config(format!(
                "nt = {} gives dt = {dt:e} s, too coarse for a {:e} s pulse",
                self.stimulus.nt, self.stimulus.pulse.pulse_width
            )));
        }
        let nyquist = 0.5 * self.stimulus.nt as f64 / self.stimulus.pulse.period;
        if nyquist > f.f_max * (1.0 + 1e-9) {
            return Err(Error::config(format!(
                "nt = {} puts the Nyquist frequency {nyquist:.4e} Hz above the sweep band ({:e} Hz)",
                self.stimulus.nt, f.f_max
            )));
        }
        let a = &self.axon;
        a.geometry.validate().map_err(cfg)?;
        if !(a.fiber_diameter > 0.0) {
            return Err(Error::config("fiber diameter must be positive"));
        }
        if a.distances.is_empty() || a.distances[0] <= 0.0 || a.distances.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("axon distances must be positive and strictly increasing"));
        }
        let reach = f.geometry.domain_radius.min(0.5 * f.geometry.domain_height);
        if a.distances.last().copied().unwrap_or(0.0) >= reach {
            return Err(Error::config("axon distances must lie inside the volume conductor"));
        }
        self.threshold.validate()
    }

    /// Canonical JSON: object keys sorted, floats in shortest round-trip form.
    pub fn canonical_json(&self) -> Result<String> {
        // serde_json::Value keeps object keys in a BTreeMap.
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string(&value)?)
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.canonical_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
