//! Axisymmetric volume conductor around a DBS lead.
//!
//! Solves ∇·(σ∇φ) = 0 with complex admittivity σ = κ + jωε₀ε_r on linear
//! triangles in the (r, z) half-plane, weighting every integral by 2πr. The
//! active contact injects a uniform current density totalling 1 A, the rest
//! of the lead is insulating and the outer boundary is grounded.

mod mesh;
pub mod skyline;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dispersion::ComplexAdmittivity;
use crate::error::{Error, Result};

pub use mesh::{
    build_mesh, build_mesh_with, build_sphere_mesh, BoundaryEdge, BoundaryKind, Mesh, MeshOptions, PointLocator, Probe,
    Region, TARGET_BAND,
};
use skyline::{reverse_cuthill_mckee, LdlFactor, Profile};

/// Parametric lead geometry. The centre of the active contact sits at z = 0
/// and the lead runs along the positive z axis from its tip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Geometry {
    pub lead_radius: f64,
    pub contact_height: f64,
    pub contact_gap: f64,
    pub n_contacts: usize,
    /// 1-based, counted from the tip.
    pub active_contact: usize,
    pub encapsulation_thickness: f64,
    pub domain_radius: f64,
    pub domain_height: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Self {
            lead_radius: 0.635e-3,
            contact_height: 1.5e-3,
            contact_gap: 1.5e-3,
            n_contacts: 4,
            active_contact: 2,
            encapsulation_thickness: 0.2e-3,
            domain_radius: 50e-3,
            domain_height: 100e-3,
        }
    }
}

impl Geometry {
    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("lead_radius", self.lead_radius),
            ("contact_height", self.contact_height),
            ("contact_gap", self.contact_gap),
            ("encapsulation_thickness", self.encapsulation_thickness),
            ("domain_radius", self.domain_radius),
            ("domain_height", self.domain_height),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("geometry: {name} must be positive, got {v}")));
            }
        }
        if self.n_contacts == 0 || self.active_contact == 0 || self.active_contact > self.n_contacts {
            return Err(Error::config(format!(
                "geometry: active contact {} not in 1..={}",
                self.active_contact, self.n_contacts
            )));
        }
        if self.lead_radius + self.encapsulation_thickness >= self.domain_radius {
            return Err(Error::config(
                "geometry: lead and encapsulation exceed the domain radius",
            ));
        }
        let half = 0.5 * self.domain_height;
        let top = self.contact_z(self.n_contacts).1;
        if self.tip_z() - self.encapsulation_thickness <= -half || top >= half {
            return Err(Error::config(
                "geometry: contacts or encapsulation exceed the domain height",
            ));
        }
        Ok(())
    }

    fn pitch(&self) -> f64 {
        self.contact_height + self.contact_gap
    }

    /// z of the lead tip.
    pub fn tip_z(&self) -> f64 {
        -((self.active_contact - 1) as f64 * self.pitch() + 0.5 * self.contact_height)
    }

    /// z extent of contact `k` (1-based).
    pub fn contact_z(&self, k: usize) -> (f64, f64) {
        let lo = self.tip_z() + (k - 1) as f64 * self.pitch();
        (lo, lo + self.contact_height)
    }
}

/// Complex nodal potential for a unit injected current.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub omega: f64,
    pub phi: Vec<Complex64>,
}

/// Potential of a unit point current in an unbounded homogeneous medium.
pub fn point_source_oracle(sigma: Complex64, r: f64) -> Result<Complex64> {
    if !(r > 0.0) {
        return Err(Error::domain(format!(
            "point-source distance must be positive, got {r}"
        )));
    }
    if sigma.norm() == 0.0 {
        return Err(Error::domain("point-source admittivity must be non-zero"));
    }
    Ok(1.0 / (4.0 * PI * sigma * r))
}

/// Region stiffness matrices on a fixed mesh, laid out in skyline storage so
/// that each frequency only needs σ_enc·K_enc + σ_tis·K_tis and one factor.
pub struct FieldOperator {
    n_nodes: usize,
    /// Node → position in the reordered unknown vector (None on ground).
    dof: Vec<Option<usize>>,
    profile: Profile,
    k_enc: Vec<f64>,
    k_tis: Vec<f64>,
    load: Vec<f64>,
    has_encapsulation: bool,
}

impl FieldOperator {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let n_nodes = mesh.n_nodes();
        let ground = mesh.boundary_nodes(BoundaryKind::Ground);
        if ground.is_empty() {
            return Err(Error::numerical(
                "singular system: the mesh has no grounded boundary, the potential is undetermined",
            ));
        }
        let contact: Vec<&BoundaryEdge> = mesh
            .boundary
            .iter()
            .filter(|e| e.kind == BoundaryKind::ActiveContact)
            .collect();
        if contact.is_empty() {
            return Err(Error::numerical(
                "singular system: the mesh has no active contact edges",
            ));
        }

        let mut is_ground = vec![false; n_nodes];
        for &g in &ground {
            is_ground[g] = true;
        }
        let mut free_of = vec![None; n_nodes];
        let mut n_free = 0;
        for i in 0..n_nodes {
            if !is_ground[i] {
                free_of[i] = Some(n_free);
                n_free += 1;
            }
        }
        let mut adjacency = vec![Vec::new(); n_free];
        for tri in &mesh.triangles {
            for &a in tri {
                for &b in tri {
                    if let (Some(u), Some(v)) = (free_of[a], free_of[b]) {
                        if u != v {
                            adjacency[u].push(v);
                        }
                    }
                }
            }
        }
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        let perm = reverse_cuthill_mckee(&adjacency);
        let mut position = vec![0; n_free];
        for (new, &old) in perm.iter().enumerate() {
            position[old] = new;
        }
        let dof: Vec<Option<usize>> = free_of.iter().map(|f| f.map(|u| position[u])).collect();

        let mut lowest: Vec<usize> = (0..n_free).collect();
        for tri in &mesh.triangles {
            let d: Vec<usize> = tri.iter().filter_map(|&n| dof[n]).collect();
            for &i in &d {
                for &j in &d {
                    lowest[i] = lowest[i].min(j);
                }
            }
        }
        let profile = Profile::new(&lowest);
        let mut k_enc = vec![0.0; profile.len];
        let mut k_tis = vec![0.0; profile.len];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = tri.map(|i| mesh.nodes[i]);
            let area = mesh.area(t);
            let r_bar = (p[0][0] + p[1][0] + p[2][0]) / 3.0;
            let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
            let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
            let scale = 2.0 * PI * r_bar / (4.0 * area);
            let target = match mesh.regions[t] {
                Region::Encapsulation => &mut k_enc,
                Region::Tissue => &mut k_tis,
            };
            for a in 0..3 {
                let Some(i) = dof[tri[a]] else { continue };
                for bb in 0..3 {
                    let Some(j) = dof[tri[bb]] else { continue };
                    if j <= i {
                        target[profile.index(i, j)] += scale * (b[a] * b[bb] + c[a] * c[bb]);
                    }
                }
            }
        }

        // Uniform current density over the contact surface of revolution.
        let mut load = vec![0.0; n_free];
        let mut total = 0.0;
        for e in &contact {
            let [p, q] = e.nodes.map(|i| mesh.nodes[i]);
            let len = (p[0] - q[0]).hypot(p[1] - q[1]);
            let fp = 2.0 * PI * len * (2.0 * p[0] + q[0]) / 6.0;
            let fq = 2.0 * PI * len * (p[0] + 2.0 * q[0]) / 6.0;
            total += fp + fq;
            for (node, f) in [(e.nodes[0], fp), (e.nodes[1], fq)] {
                match dof[node] {
                    Some(i) => load[i] += f,
                    None => {
                        return Err(Error::numerical(
                            "singular system: the active contact touches the grounded boundary",
                        ))
                    }
                }
            }
        }
        if !(total > 0.0) {
            return Err(Error::numerical("active contact has zero surface area"));
        }
        for f in load.iter_mut() {
            *f /= total;
        }

        Ok(Self {
            n_nodes,
            dof,
            profile,
            has_encapsulation: mesh.regions.contains(&Region::Encapsulation),
            k_enc,
            k_tis,
            load,
        })
    }

    pub fn n_unknowns(&self) -> usize {
        self.profile.size()
    }

    /// Stored entries of the lower profile.
    pub fn profile_len(&self) -> usize {
        self.profile.len
    }

    pub fn solve(
        &self,
        sigma_enc: ComplexAdmittivity,
        sigma_tissue: ComplexAdmittivity,
        omega: f64,
    ) -> Result<FieldSolution> {
        for (name, s, used) in [
            ("encapsulation", sigma_enc.0, self.has_encapsulation),
            ("tissue", sigma_tissue.0, true),
        ] {
            if used && !(s.re > 0.0 && s.im.is_finite()) {
                return Err(Error::domain(format!(
                    "{name} admittivity must have a positive real part, got {s}"
                )));
            }
        }
        let (se, st) = (sigma_enc.0, sigma_tissue.0);
        let values: Vec<Complex64> = self
            .k_enc
            .iter()
            .zip(&self.k_tis)
            .map(|(&a, &b)| se * a + st * b)
            .collect();
        let rhs: Vec<Complex64> = self.load.iter().map(|&f| Complex64::new(f, 0.0)).collect();
        let factor = LdlFactor::factor(&self.profile, values.clone())
            .map_err(|e| Error::numerical(format!("{e} (ω = {omega:e} rad/s)")))?;
        let x = factor.solve(&rhs);
        let ax = self.profile.sym_matvec(&values, &x);
        let res = ax.iter().zip(&rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm = rhs.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
        if !(res <= 1e-10 * norm) {
            return Err(Error::numerical(format!(
                "field solve residual {res:e} exceeds 1e-10·‖f‖ = {:e} at ω = {omega:e} rad/s",
                1e-10 * norm
            )));
        }
        let phi = self
            .dof
            .iter()
            .map(|d| d.map_or(Complex64::new(0.0, 0.0), |i| x[i]))
            .collect();
        Ok(FieldSolution { omega, phi })
    }

    /// Re(∫σ|∇φ|² dV), the dissipated power for the given solution.
    pub fn dissipated_power(
        &self,
        sol: &FieldSolution,
        sigma_enc: ComplexAdmittivity,
        sigma_tissue: ComplexAdmittivity,
    ) -> f64 {
        let n = self.n_unknowns();
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for (node, d) in self.dof.iter().enumerate() {
            if let Some(i) = d {
                x[*i] = sol.phi[node];
            }
        }
        let energy = |k: &[f64]| {
            let vals: Vec<Complex64> = k.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let kx = self.profile.sym_matvec(&vals, &x);
            x.iter().zip(&kx).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
        };
        sigma_enc.0.re * energy(&self.k_enc) + sigma_tissue.0.re * energy(&self.k_tis)
    }

    /// Contact potential averaged with the injected current density.
    pub fn contact_potential(&self, sol: &FieldSolution) -> Complex64 {
        self.dof
            .iter()
            .enumerate()
            .filter_map(|(node, d)| d.map(|i| sol.phi[node] * self.load[i]))
            .sum()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }
}

/// Assembles and solves the unit-current problem at one frequency.
pub fn assemble_solve(
    mesh: &Mesh,
    sigma_enc: ComplexAdmittivity,
    sigma_tissue: ComplexAdmittivity,
    omega: f64,
) -> Result<FieldSolution> {
    FieldOperator::new(mesh)?.solve(sigma_enc, sigma_tissue, omega)
}

/// Locates each point once; reuse the probes for many solutions.
pub fn probes(mesh: &Mesh, points: &[[f64; 2]]) -> Result<Vec<Probe>> {
    let loc = PointLocator::new(mesh);
    points.iter().map(|&p| loc.locate(p)).collect()
}

pub fn eval_probes(sol: &FieldSolution, probes: &[Probe]) -> Vec<Complex64> {
    probes
        .iter()
        .map(|p| p.nodes.iter().zip(&p.weights).map(|(&n, &w)| sol.phi[n] * w).sum())
        .collect()
}

/// Barycentric interpolation of the solution at (r, z) points.
pub fn eval_at_points(sol: &FieldSolution, mesh: &Mesh, points: &[[f64; 2]]) -> Result<Vec<Complex64>> {
    if sol.phi.len() != mesh.n_nodes() {
        return Err(Error::Dimension {
            what: "solution length vs mesh nodes",
            expected: mesh.n_nodes(),
            got: sol.phi.len(),
        });
    }
    Ok(eval_probes(sol, &probes(mesh, points)?))
}
