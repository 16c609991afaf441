//! Myelinated axon as a single cable of compartments.
//!
//! Nodes of Ranvier carry Hodgkin-Huxley type fast sodium, delayed-rectifier
//! potassium and leak currents; internodes are passive myelin. Each
//! compartment obeys
//!
//! ```text
//! c·dφ_m/dt + i_ion(φ_m) − g_A·Δ²φ_m = g_A·Δ²φ_e
//! ```
//!
//! with φ_m = φ_i − φ_e + φ_r and sealed ends. Time stepping advances the
//! gating variables by exponential integration at the old potential, then
//! solves one tridiagonal backward-Euler system for φ_m.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::ffem::TimeSignal;
use crate::tridiag;

/// Compartment layout. Lengths and diameters are given at the reference
/// fiber diameter and scale in proportion to the actual diameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AxonGeometry {
    pub n_nodes: usize,
    pub internode_segments: usize,
    /// Node-to-node distance at the reference diameter [m].
    pub node_spacing: f64,
    /// Length of a node of Ranvier at the reference diameter [m].
    pub node_length: f64,
    /// Nodal axon diameter / fiber diameter.
    pub node_diameter_ratio: f64,
    /// Internodal axon diameter / fiber diameter.
    pub axon_diameter_ratio: f64,
    pub reference_diameter: f64,
}

impl Default for AxonGeometry {
    fn default() -> Self {
        Self {
            n_nodes: 21,
            internode_segments: 10,
            node_spacing: 0.5e-3,
            node_length: 1e-6,
            node_diameter_ratio: 0.33,
            axon_diameter_ratio: 0.6,
            reference_diameter: 5.7e-6,
        }
    }
}

impl AxonGeometry {
    pub fn n_compartments(&self) -> usize {
        self.n_nodes + (self.n_nodes - 1) * self.internode_segments
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 2 || self.internode_segments == 0 {
            return Err(Error::config(
                "axon needs at least two nodes and one internodal segment",
            ));
        }
        for (name, v) in [
            ("node_spacing", self.node_spacing),
            ("node_length", self.node_length),
            ("node_diameter_ratio", self.node_diameter_ratio),
            ("axon_diameter_ratio", self.axon_diameter_ratio),
            ("reference_diameter", self.reference_diameter),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("axon geometry: {name} must be positive")));
            }
        }
        if self.node_length >= self.node_spacing {
            return Err(Error::config("axon geometry: node length exceeds node spacing"));
        }
        Ok(())
    }

    /// Position along the fiber of every compartment centre, with the middle
    /// of the fiber at 0 [m].
    pub fn centers(&self, fiber_diameter: f64) -> Vec<f64> {
        let k = fiber_diameter / self.reference_diameter;
        let spacing = self.node_spacing * k;
        let ln = self.node_length * k;
        let seg = (spacing - ln) / self.internode_segments as f64;
        let half = 0.5 * spacing * (self.n_nodes - 1) as f64;
        let mut s = Vec::with_capacity(self.n_compartments());
        for node in 0..self.n_nodes {
            let x = node as f64 * spacing - half;
            s.push(x);
            if node + 1 < self.n_nodes {
                for j in 0..self.internode_segments {
                    s.push(x + 0.5 * ln + (j as f64 + 0.5) * seg);
                }
            }
        }
        s
    }

    /// Compartment centres of a straight fiber crossing the plane of the
    /// active contact at lateral distance `distance` from the lead axis, as
    /// (r, z) points of the axisymmetric field.
    pub fn trajectory(&self, fiber_diameter: f64, distance: f64) -> Vec<[f64; 2]> {
        self.centers(fiber_diameter)
            .into_iter()
            .map(|s| [distance.hypot(s), 0.0])
            .collect()
    }
}

/// Membrane and axoplasm constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MembraneConstants {
    /// φ_r [V].
    pub resting: f64,
    /// Nodal capacitance [F/m²].
    pub c_node: f64,
    /// Maximal conductances [S/m²].
    pub g_na: f64,
    pub g_k: f64,
    pub g_leak: f64,
    /// Reversal potentials [V].
    pub e_na: f64,
    pub e_k: f64,
    /// Rate multiplier of the gating kinetics (temperature factor).
    pub rate_factor: f64,
    /// Myelin capacitance and conductance per area [F/m², S/m²].
    pub c_internode: f64,
    pub g_internode: f64,
    /// Axoplasmic resistivity [Ω·m].
    pub rho_axial: f64,
}

impl Default for MembraneConstants {
    fn default() -> Self {
        Self {
            resting: -80e-3,
            c_node: 0.02,
            g_na: 3.0e4,
            g_k: 9.0e3,
            g_leak: 75.0,
            e_na: 35e-3,
            e_k: -92e-3,
            // Q10 = 3 from 6.3 °C to 37 °C.
            rate_factor: 3f64.powf((37.0 - 6.3) / 10.0),
            c_internode: 5e-5,
            g_internode: 0.01,
            rho_axial: 0.7,
        }
    }
}

/// x / (exp(x/y) − 1) with its limit at x = 0.
fn vtrap(x: f64, y: f64) -> f64 {
    if (x / y).abs() < 1e-6 {
        y * (1.0 - 0.5 * x / y)
    } else {
        x / ((x / y).exp() - 1.0)
    }
}

/// (α, β) of m, h and n in 1/s at depolarization `u` [mV] above rest.
fn rates(u: f64, factor: f64) -> [(f64, f64); 3] {
    let k = 1e3 * factor;
    [
        (0.1 * vtrap(25.0 - u, 10.0) * k, 4.0 * (-u / 18.0).exp() * k),
        (0.07 * (-u / 20.0).exp() * k, k / ((0.1 * (30.0 - u)).exp() + 1.0)),
        (0.01 * vtrap(10.0 - u, 10.0) * k, 0.125 * (-u / 80.0).exp() * k),
    ]
}

fn steady_gates(u: f64, factor: f64) -> [f64; 3] {
    rates(u, factor).map(|(a, b)| a / (a + b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CableSystem {
    /// [F] per compartment.
    pub capacitance: Vec<f64>,
    /// [S] between compartments i and i+1.
    pub g_axial: Vec<f64>,
    /// Passive membrane conductance [S] (zero on active compartments).
    pub g_passive: Vec<f64>,
    /// Membrane area [m²] of active compartments, `None` for passive ones.
    pub active_area: Vec<Option<f64>>,
    pub membrane: MembraneConstants,
    /// Leak reversal making φ_r an exact resting state.
    pub e_leak: f64,
    /// Position of each compartment along the fiber [m].
    pub arc: Vec<f64>,
}

/// Builds the cable for a fiber of the given outer diameter.
pub fn build_axon(geom: &AxonGeometry, fiber_diameter: f64) -> Result<CableSystem> {
    build_axon_with(geom, fiber_diameter, &MembraneConstants::default())
}

pub fn build_axon_with(geom: &AxonGeometry, fiber_diameter: f64, mc: &MembraneConstants) -> Result<CableSystem> {
    geom.validate()?;
    if !(fiber_diameter > 0.0 && fiber_diameter < 1e-3) {
        return Err(Error::config(format!("non-physical fiber diameter {fiber_diameter} m")));
    }
    let positive = [
        mc.c_node,
        mc.g_na,
        mc.g_k,
        mc.g_leak,
        mc.rate_factor,
        mc.c_internode,
        mc.g_internode,
        mc.rho_axial,
    ];
    if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::config("membrane constants must be positive"));
    }
    let k = fiber_diameter / geom.reference_diameter;
    let ln = geom.node_length * k;
    let dn = geom.node_diameter_ratio * fiber_diameter;
    let di = geom.axon_diameter_ratio * fiber_diameter;
    let seg = (geom.node_spacing * k - ln) / geom.internode_segments as f64;
    let pi = std::f64::consts::PI;

    let n = geom.n_compartments();
    let mut capacitance = Vec::with_capacity(n);
    let mut g_passive = Vec::with_capacity(n);
    let mut active_area = Vec::with_capacity(n);
    // Axial resistance of each compartment, centre to centre halves summed below.
    let mut r_axial = Vec::with_capacity(n);
    for node in 0..geom.n_nodes {
        let area = pi * dn * ln;
        capacitance.push(mc.c_node * area);
        g_passive.push(0.0);
        active_area.push(Some(area));
        r_axial.push(mc.rho_axial * ln / (0.25 * pi * dn * dn));
        if node + 1 < geom.n_nodes {
            for _ in 0..geom.internode_segments {
                let area = pi * di * seg;
                capacitance.push(mc.c_internode * area);
                g_passive.push(mc.g_internode * area);
                active_area.push(None);
                r_axial.push(mc.rho_axial * seg / (0.25 * pi * di * di));
            }
        }
    }
    let g_axial = r_axial.windows(2).map(|w| 1.0 / (0.5 * w[0] + 0.5 * w[1])).collect();

    let g = steady_gates(0.0, mc.rate_factor);
    let (m, h, nn) = (g[0], g[1], g[2]);
    let i_na = mc.g_na * m.powi(3) * h * (mc.resting - mc.e_na);
    let i_k = mc.g_k * nn.powi(4) * (mc.resting - mc.e_k);
    let e_leak = mc.resting + (i_na + i_k) / mc.g_leak;

    Ok(CableSystem {
        capacitance,
        g_axial,
        g_passive,
        active_area,
        membrane: *mc,
        e_leak,
        arc: geom.centers(fiber_diameter),
    })
}

impl CableSystem {
    pub fn len(&self) -> usize {
        self.capacitance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capacitance.is_empty()
    }

    pub fn n_active(&self) -> usize {
        self.active_area.iter().filter(|a| a.is_some()).count()
    }

    /// A single passive compartment, for checks against the RC solution.
    pub fn single_passive(capacitance: f64, conductance: f64, resting: f64) -> Self {
        Self {
            capacitance: vec![capacitance],
            g_axial: vec![],
            g_passive: vec![conductance],
            active_area: vec![None],
            membrane: MembraneConstants {
                resting,
                ..MembraneConstants::default()
            },
            e_leak: resting,
            arc: vec![0.0],
        }
    }

    /// Same cable with every ionic and passive membrane current removed.
    pub fn without_membrane_currents(&self) -> Self {
        Self {
            g_passive: vec![0.0; self.len()],
            active_area: vec![None; self.len()],
            ..self.clone()
        }
    }

    /// Rest state: φ_m = φ_r, gates at steady state.
    pub fn rest_state(&self) -> MembraneState {
        let g = steady_gates(0.0, self.membrane.rate_factor);
        let gates = self.active_area.iter().map(|a| a.map(|_| g)).collect();
        MembraneState {
            phi_m: vec![self.membrane.resting; self.len()],
            gates,
        }
    }

    /// Nodal time constant c/g at rest over the myelin time constant, as
    /// (node, internode) [s].
    pub fn time_constants(&self) -> (f64, f64) {
        let mc = &self.membrane;
        let g = steady_gates(0.0, mc.rate_factor);
        let g_rest = mc.g_na * g[0].powi(3) * g[1] + mc.g_k * g[2].powi(4) + mc.g_leak;
        (mc.c_node / g_rest, mc.c_internode / mc.g_internode)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembraneState {
    /// Membrane potential per compartment [V].
    pub phi_m: Vec<f64>,
    /// (m, h, n) on active compartments.
    pub gates: Vec<Option<[f64; 3]>>,
}

/// Scratch buffers for repeated steps.
#[derive(Debug, Default)]
pub struct Workspace {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

const GATE_SLACK: f64 = 1e-6;

fn step_core(
    sys: &CableSystem,
    state: &mut MembraneState,
    phi_e: &[f64],
    injected: Option<&[f64]>,
    dt: f64,
    ws: &mut Workspace,
) -> Result<()> {
    let n = sys.len();
    let mc = &sys.membrane;
    ws.lower.resize(n, 0.0);
    ws.diag.resize(n, 0.0);
    ws.upper.resize(n, 0.0);
    ws.rhs.resize(n, 0.0);
    ws.scratch.resize(n, 0.0);

    for i in 0..n {
        let v = state.phi_m[i];
        let cdt = sys.capacitance[i] / dt;
        let (mut g, mut ge) = (sys.g_passive[i], sys.g_passive[i] * mc.resting);
        if let (Some(area), Some(gates)) = (sys.active_area[i], state.gates[i].as_mut()) {
            let u = 1e3 * (v - mc.resting);
            for (x, (a, b)) in gates.iter_mut().zip(rates(u, mc.rate_factor)) {
                let inf = a / (a + b);
                *x = inf + (*x - inf) * (-(a + b) * dt).exp();
                if !(*x >= -GATE_SLACK && *x <= 1.0 + GATE_SLACK) {
                    return Err(Error::numerical(format!(
                        "gating variable {x} left [0, 1] at compartment {i}"
                    )));
                }
            }
            let [m, h, nk] = *gates;
            let g_na = mc.g_na * m.powi(3) * h * area;
            let g_k = mc.g_k * nk.powi(4) * area;
            let g_l = mc.g_leak * area;
            g = g_na + g_k + g_l;
            ge = g_na * mc.e_na + g_k * mc.e_k + g_l * sys.e_leak;
        }
        ws.diag[i] = cdt + g;
        ws.rhs[i] = cdt * v + ge + injected.map_or(0.0, |s| s[i]);
        ws.lower[i] = 0.0;
        ws.upper[i] = 0.0;
    }
    for (i, &ga) in sys.g_axial.iter().enumerate() {
        ws.diag[i] += ga;
        ws.diag[i + 1] += ga;
        ws.upper[i] = -ga;
        ws.lower[i + 1] = -ga;
        // g_A·Δ²φ_e, sealed ends.
        let drive = ga * (phi_e[i + 1] - phi_e[i]);
        ws.rhs[i] += drive;
        ws.rhs[i + 1] -= drive;
    }
    tridiag::solve_in_place(&ws.lower, &ws.diag, &ws.upper, &mut ws.rhs, &mut ws.scratch);
    if let Some(i) = ws.rhs.iter().position(|v| !v.is_finite()) {
        return Err(Error::numerical(format!(
            "non-finite membrane potential at compartment {i}"
        )));
    }
    state.phi_m.copy_from_slice(&ws.rhs);
    Ok(())
}

/// One semi-implicit step with the extracellular potential held at
/// `phi_e_now` over [t, t + dt].
pub fn step_backward_euler(
    sys: &CableSystem,
    state: &MembraneState,
    phi_e_now: &[f64],
    dt: f64,
) -> Result<MembraneState> {
    step_with_injection(sys, state, phi_e_now, None, dt)
}

/// As [`step_backward_euler`] with an additional current [A] injected into
/// each compartment.
pub fn step_with_injection(
    sys: &CableSystem,
    state: &MembraneState,
    phi_e_now: &[f64],
    injected: Option<&[f64]>,
    dt: f64,
) -> Result<MembraneState> {
    check_step_inputs(sys, state, phi_e_now, dt)?;
    if let Some(s) = injected {
        check_len("injected current", sys.len(), s.len())?;
    }
    let mut next = state.clone();
    step_core(sys, &mut next, phi_e_now, injected, dt, &mut Workspace::default())?;
    Ok(next)
}

fn check_step_inputs(sys: &CableSystem, state: &MembraneState, phi_e: &[f64], dt: f64) -> Result<()> {
    check_len("membrane state", sys.len(), state.phi_m.len())?;
    check_len("gating state", sys.len(), state.gates.len())?;
    check_len("extracellular potential", sys.len(), phi_e.len())?;
    if !(dt > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dt}")));
    }
    Ok(())
}

/// Value of φ_r in the readout φ_i = φ_m + φ_e − φ_r. The membrane itself
/// always rests at [`MembraneConstants::resting`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestConvention {
    /// φ_r = 0: φ_i^out > 0 needs an overshooting action potential.
    #[default]
    Zero,
    /// φ_r = resting potential: φ_i^out > 0 for any net depolarization.
    Resting,
}

impl RestConvention {
    pub fn offset(self, mc: &MembraneConstants) -> f64 {
        match self {
            RestConvention::Zero => 0.0,
            RestConvention::Resting => mc.resting,
        }
    }
}

/// Result of driving the cable with a periodic extracellular potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub dt: f64,
    /// φ_i^out at the distal terminal compartment, one value per time sample.
    pub trace: Vec<f64>,
    /// φ_m at the same compartment.
    pub phi_m_out: Vec<f64>,
    /// max over time of `trace`.
    pub metric: f64,
    pub activated: bool,
    /// Diagnostic only: did the distal membrane potential cross 0 V.
    pub membrane_crossed_zero: bool,
}

/// Drives the cable with `amplitude`·`unit` (one period per compartment,
/// tiled `n_periods` times). Step n holds sample n over [tₙ, tₙ₊₁).
pub fn simulate(sys: &CableSystem, unit: &TimeSignal, amplitude: f64, n_periods: usize) -> Result<Simulation> {
    simulate_with(sys, unit, amplitude, n_periods, RestConvention::default())
}

pub fn simulate_with(
    sys: &CableSystem,
    unit: &TimeSignal,
    amplitude: f64,
    n_periods: usize,
    convention: RestConvention,
) -> Result<Simulation> {
    check_len("extracellular signal rows", sys.len(), unit.values.len())?;
    if n_periods == 0 {
        return Err(Error::domain("simulation needs at least one period"));
    }
    let nt = unit.nt;
    let steps = n_periods * nt;
    let out = sys.len() - 1;
    let rest = convention.offset(&sys.membrane);
    let mut state = sys.rest_state();
    let mut ws = Workspace::default();
    let mut phi_e = vec![0.0; sys.len()];
    let mut trace = Vec::with_capacity(steps + 1);
    let mut phi_m_out = Vec::with_capacity(steps + 1);
    let fill = |phi_e: &mut [f64], j: usize| {
        for (dst, row) in phi_e.iter_mut().zip(&unit.values) {
            *dst = amplitude * row[j % nt];
        }
    };
    fill(&mut phi_e, 0);
    trace.push(state.phi_m[out] - rest + phi_e[out]);
    phi_m_out.push(state.phi_m[out]);
    for n in 0..steps {
        step_core(sys, &mut state, &phi_e, None, unit.dt, &mut ws)
            .map_err(|e| Error::numerical(format!("step {n}: {e}")))?;
        fill(&mut phi_e, n + 1);
        trace.push(state.phi_m[out] - rest + phi_e[out]);
        phi_m_out.push(state.phi_m[out]);
    }
    let metric = activation_metric(&trace)?;
    Ok(Simulation {
        dt: unit.dt,
        membrane_crossed_zero: phi_m_out.iter().any(|&v| v > 0.0),
        activated: metric > 0.0,
        metric,
        trace,
        phi_m_out,
    })
}

/// max over time of φ_i^out.
pub fn activation_metric(trace: &[f64]) -> Result<f64> {
    if trace.is_empty() {
        return Err(Error::domain("empty trace"));
    }
    Ok(trace.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

impl Simulation {
    /// CSV with columns t, phi_m_out, phi_i_out.
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let mut s = String::from("t,phi_m_out,phi_i_out\n");
        for (j, (m, i)) in self.phi_m_out.iter().zip(&self.trace).enumerate() {
            s += &format!("{:e},{m:e},{i:e}\n", j as f64 * self.dt);
        }
        crate::ffem::write_file(path.as_ref(), &s)
    }
}
