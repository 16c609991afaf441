//! The full study: KL model, collocation plan, per-node forward and
//! threshold solves, moments and reports.
//!
//! Each collocation node costs one frequency sweep. Threshold searches reuse
//! that unit-current response and only rescale it, which is exact because
//! the field problem is linear in the injected current.

mod brent;
mod config;
pub mod report;
mod surrogate;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use brent::{brent, find_threshold, Root, Threshold, ThresholdSearch, MAX_ITERATIONS};
pub use config::{
    AxonConfig, DispersionConfig, FailurePolicy, FieldConfig, GridConfig, KlConfig, StimulusConfig, StudyConfig,
};
pub use report::{write_report, ReportFiles};
pub use surrogate::{monte_carlo, MonteCarloEstimate, PointSourceSurrogate};

use crate::axon::{build_axon_with, simulate_with, CableSystem, Simulation};
use crate::conductor::{build_mesh_with, probes, FieldOperator, Mesh, Probe};
use crate::dispersion::conductivity;
use crate::error::{Error, Result};
use crate::ffem::{
    frequency_nodes, reconstruct_time_checked, stimulus_spectrum, sweep, MaterialSpectrum, Realness, TimeSignal,
    TissueSpectrum, TransferFunction,
};
use crate::kl::{build_grid_with_base, build_model_from_box, KlBuild, KlModel};
use crate::sparse_grid::{integrate, smolyak_rule, SparseGridRule};
use crate::spline::NaturalSpline;

pub const RESULT_FORMAT: &str = "uq-result";
pub const RESULT_FORMAT_VERSION: u32 = 1;

/// KL model for the configured parameter box, grid and seed.
pub fn build_kl(cfg: &StudyConfig) -> Result<KlBuild> {
    let k = &cfg.kl;
    let two_pi = 2.0 * std::f64::consts::PI;
    let grid = build_grid_with_base(two_pi * k.f_min, two_pi * k.f_max, k.log_step, k.log_base)?;
    build_model_from_box(&cfg.dispersion.param_box()?, &grid, k.samples, k.seed, k.rank, k.solver)
}

/// Deterministic tissue: the mean Cole-Cole conductivity sampled on the KL
/// grid, with the mean permittivity.
pub fn mean_material(cfg: &StudyConfig) -> Result<TissueSpectrum> {
    let k = &cfg.kl;
    let two_pi = 2.0 * std::f64::consts::PI;
    let grid = build_grid_with_base(two_pi * k.f_min, two_pi * k.f_max, k.log_step, k.log_base)?;
    let kappa = grid
        .omega
        .iter()
        .map(|&w| conductivity(&cfg.dispersion.mean, w))
        .collect::<Result<Vec<f64>>>()?;
    TissueSpectrum::new(
        NaturalSpline::new(&grid.log10_omega(), &kappa)?,
        cfg.dispersion.mean,
        cfg.field.encapsulation_scale,
    )
}

/// Everything shared by all collocation nodes: mesh, factorizable operator,
/// probe locations along every axon, stimulus spectrum and cable model.
pub struct ForwardModel {
    pub config: StudyConfig,
    pub mesh: Mesh,
    pub operator: FieldOperator,
    /// Compartment centres of all axons, axon-major.
    pub points: Vec<[f64; 2]>,
    probes: Vec<Probe>,
    /// Angular sweep frequencies, DC first.
    pub omega: Vec<f64>,
    spectrum: Vec<num_complex::Complex64>,
    pub cable: CableSystem,
}

/// Unit-current extracellular potential along every axon for one material.
#[derive(Debug, Clone)]
pub struct UnitResponse {
    pub transfer: TransferFunction,
    pub signal: TimeSignal,
    pub realness: Realness,
}

impl ForwardModel {
    pub fn new(config: &StudyConfig) -> Result<Self> {
        config.validate()?;
        let f = &config.field;
        let mesh = build_mesh_with(&f.geometry, f.target_elements, &f.mesh)?;
        let operator = FieldOperator::new(&mesh)?;
        let a = &config.axon;
        let cable = build_axon_with(&a.geometry, a.fiber_diameter, &a.membrane)?;
        let points: Vec<[f64; 2]> = a
            .distances
            .iter()
            .flat_map(|&d| a.geometry.trajectory(a.fiber_diameter, d))
            .collect();
        let probes = probes(&mesh, &points)?;
        let omega = frequency_nodes(f.f_min, f.f_max, f.sweep_nodes)?;
        let spectrum = stimulus_spectrum(&config.stimulus.pulse, config.stimulus.nt)?;
        Ok(Self {
            config: config.clone(),
            mesh,
            operator,
            points,
            probes,
            omega,
            spectrum,
            cable,
        })
    }

    pub fn n_axons(&self) -> usize {
        self.config.axon.distances.len()
    }

    /// KL conductivity realization at coordinates `y` with the mean
    /// permittivity curve.
    pub fn material(&self, model: &KlModel, y: &[f64]) -> Result<TissueSpectrum> {
        TissueSpectrum::from_kl(
            model,
            y,
            self.config.dispersion.mean,
            self.config.field.encapsulation_scale,
        )
    }

    pub fn transfer(&self, material: &(impl MaterialSpectrum + Sync)) -> Result<TransferFunction> {
        sweep(&self.operator, material, &self.omega, &self.points, &self.probes)
    }

    pub fn reconstruct(&self, transfer: TransferFunction) -> Result<UnitResponse> {
        let s = &self.config.stimulus;
        let (signal, realness) = reconstruct_time_checked(&transfer, &self.spectrum, s.nt, s.pulse.period)?;
        Ok(UnitResponse {
            transfer,
            signal,
            realness,
        })
    }

    pub fn unit_response(&self, material: &(impl MaterialSpectrum + Sync)) -> Result<UnitResponse> {
        self.reconstruct(self.transfer(material)?)
    }

    /// Rows of `signal` belonging to axon `k`.
    pub fn axon_signal(&self, response: &UnitResponse, k: usize) -> TimeSignal {
        let n = self.cable.len();
        TimeSignal {
            dt: response.signal.dt,
            nt: response.signal.nt,
            values: response.signal.values[k * n..(k + 1) * n].to_vec(),
        }
    }

    pub fn simulate(&self, unit: &TimeSignal, amplitude: f64) -> Result<Simulation> {
        simulate_with(
            &self.cable,
            unit,
            amplitude,
            self.config.stimulus.periods,
            self.config.axon.rest_convention,
        )
    }

    pub fn threshold(&self, unit: &TimeSignal, hint: Option<f64>) -> Result<Threshold> {
        find_threshold(|i| Ok(self.simulate(unit, i)?.metric), &self.config.threshold, hint)
    }

    /// Thresholds of all axons, searched concurrently.
    pub fn thresholds(&self, response: &UnitResponse, hints: Option<&[Option<f64>]>) -> Result<Vec<Threshold>> {
        (0..self.n_axons())
            .into_par_iter()
            .map(|k| {
                let hint = hints.and_then(|h| h.get(k).copied().flatten());
                self.threshold(&self.axon_signal(response, k), hint)
                    .map_err(|e| Error::numerical(format!("axon {k}: {e}")))
            })
            .collect()
    }
}

/// KL model, quadrature rule and axon set of one study.
#[derive(Debug, Clone)]
pub struct CollocationPlan {
    pub kl_model: KlModel,
    pub rule: SparseGridRule,
    pub config: StudyConfig,
}

impl CollocationPlan {
    pub fn new(kl_model: KlModel, config: &StudyConfig) -> Result<Self> {
        config.validate()?;
        let rule = smolyak_rule(kl_model.rank(), config.grid.level);
        Ok(Self {
            kl_model,
            rule,
            config: config.clone(),
        })
    }

    /// KL coordinates of every node.
    pub fn coordinates(&self) -> Vec<Vec<f64>> {
        self.rule.scaled_points(self.config.grid.scale)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxonStatistics {
    pub distance: f64,
    /// [A].
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub y: Vec<f64>,
    pub weight: f64,
    /// One entry per axon; `None` when the axon was not activated below the cap.
    pub thresholds: Vec<Option<f64>>,
    /// Largest discarded imaginary part of the reconstructed unit response [V/A].
    pub max_imag: f64,
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UQResult {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub kl_seed: u64,
    pub level: u32,
    pub crate_version: String,
    pub axons: Vec<AxonStatistics>,
    pub nodes: Vec<NodeRecord>,
    pub config: StudyConfig,
}

impl UQResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.format != RESULT_FORMAT || r.version != RESULT_FORMAT_VERSION {
            return Err(Error::config(format!(
                "unsupported result document {} v{}",
                r.format, r.version
            )));
        }
        Ok(r)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Nodal thresholds of axon `k`, node order.
    pub fn axon_thresholds(&self, k: usize) -> Vec<Option<f64>> {
        self.nodes.iter().map(|n| n.thresholds[k]).collect()
    }

    pub fn n_excluded(&self) -> usize {
        self.nodes.iter().filter(|n| n.excluded).count()
    }
}

fn stage(node: usize, name: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Stage {
        node,
        stage: name,
        source: Box::new(e),
    }
}

fn solve_node(
    fwd: &ForwardModel,
    plan: &CollocationPlan,
    node: usize,
    y: &[f64],
    hints: Option<&[Option<f64>]>,
) -> Result<NodeRecord> {
    let material = fwd.material(&plan.kl_model, y).map_err(stage(node, "kl-realization"))?;
    let transfer = fwd.transfer(&material).map_err(stage(node, "sweep"))?;
    let response = fwd.reconstruct(transfer).map_err(stage(node, "reconstruction"))?;
    let found = fwd.thresholds(&response, hints).map_err(stage(node, "threshold"))?;
    let thresholds: Vec<Option<f64>> = found.iter().map(Threshold::value).collect();
    let unreachable: Vec<usize> = (0..thresholds.len()).filter(|&k| thresholds[k].is_none()).collect();
    if !unreachable.is_empty() && plan.config.failure_policy == FailurePolicy::Abort {
        return Err(stage(node, "threshold")(Error::numerical(format!(
            "axons {unreachable:?} not activated up to {:e} A",
            plan.config.threshold.cap
        ))));
    }
    Ok(NodeRecord {
        y: y.to_vec(),
        weight: plan.rule.weights[node],
        excluded: !unreachable.is_empty(),
        thresholds,
        max_imag: response.realness.max_imag,
    })
}

/// Mean and standard deviation over the kept nodes, with the weights of
/// excluded nodes removed and the rest renormalized to sum 1. Negative
/// Smolyak weights can turn solver noise into a small negative variance;
/// down to −(2·noise)²·Σ|w| it is read as zero.
pub fn node_moments(rule: &SparseGridRule, values: &[Option<f64>], noise: f64) -> Result<(f64, f64)> {
    let kept: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    if kept.is_empty() {
        return Err(Error::numerical("every collocation node was excluded"));
    }
    let total: f64 = kept.iter().map(|&i| rule.weights[i]).sum();
    let sub = SparseGridRule {
        dim: rule.dim,
        level: rule.level,
        points: kept.iter().map(|&i| rule.points[i].clone()).collect(),
        weights: kept.iter().map(|&i| rule.weights[i] / total).collect(),
    };
    let v: Vec<f64> = kept.iter().map(|&i| values[i].unwrap()).collect();
    let mean = integrate(&sub, &v)?;
    let sq: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = integrate(&sub, &sq)?;
    if var >= 0.0 {
        Ok((mean, var.sqrt()))
    } else if var >= -4.0 * noise * noise * sub.weights.iter().map(|w| w.abs()).sum::<f64>() - 1e-12 * mean * mean {
        Ok((mean, 0.0))
    } else {
        Err(Error::numerical(format!(
            "quadrature variance {var:e} is negative beyond the threshold tolerance"
        )))
    }
}

/// Runs every collocation node. The centre node goes first; its thresholds
/// seed the bracket scans of the others. Nodes then run in parallel and are
/// assembled in rule order.
pub fn run_collocation(plan: &CollocationPlan) -> Result<UQResult> {
    run_collocation_with(&ForwardModel::new(&plan.config)?, plan)
}

pub fn run_collocation_with(fwd: &ForwardModel, plan: &CollocationPlan) -> Result<UQResult> {
    let cfg = &plan.config;
    if fwd.config != *cfg {
        return Err(Error::config(
            "forward model and plan were built from different configurations",
        ));
    }
    if plan.rule.dim != plan.kl_model.rank() {
        return Err(Error::Dimension {
            what: "collocation rule dimension vs KL rank",
            expected: plan.kl_model.rank(),
            got: plan.rule.dim,
        });
    }
    let ys = plan.coordinates();
    let centre = ys.iter().position(|y| y.iter().all(|v| *v == 0.0));
    let first = match centre {
        Some(c) => Some(solve_node(fwd, plan, c, &ys[c], None)?),
        None => None,
    };
    let hints: Option<Vec<Option<f64>>> = match &first {
        Some(rec) => Some(rec.thresholds.iter().map(|t| t.map(|v| 0.8 * v)).collect()),
        None => None,
    };
    let mut nodes: Vec<Option<NodeRecord>> = (0..ys.len())
        .into_par_iter()
        .map(|i| {
            if Some(i) == centre {
                return Ok(None);
            }
            solve_node(fwd, plan, i, &ys[i], hints.as_deref()).map(Some)
        })
        .collect::<Result<_>>()?;
    if let (Some(c), Some(rec)) = (centre, first) {
        nodes[c] = Some(rec);
    }
    let nodes: Vec<NodeRecord> = nodes.into_iter().map(|n| n.expect("every node solved")).collect();

    let axons = cfg
        .axon
        .distances
        .iter()
        .enumerate()
        .map(|(k, &distance)| {
            let vals: Vec<Option<f64>> = nodes
                .iter()
                .map(|n| if n.excluded { None } else { n.thresholds[k] })
                .collect();
            let (mean, std) = node_moments(&plan.rule, &vals, cfg.threshold.tol)?;
            Ok(AxonStatistics { distance, mean, std })
        })
        .collect::<Result<_>>()?;
    Ok(UQResult {
        format: RESULT_FORMAT.into(),
        version: RESULT_FORMAT_VERSION,
        config_hash: cfg.hash()?,
        kl_seed: cfg.kl.seed,
        level: cfg.grid.level,
        crate_version: env!("CARGO_PKG_VERSION").into(),
        axons,
        nodes,
        config: cfg.clone(),
    })
}

/// KL build, plan and collocation in one call.
pub fn run_study(cfg: &StudyConfig) -> Result<UQResult> {
    let kl = build_kl(cfg)?;
    run_collocation(&CollocationPlan::new(kl.model, cfg)?)
}
