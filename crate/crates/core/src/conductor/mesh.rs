//! Triangulations of the axisymmetric (r, z) half-plane.
//!
//! [`build_mesh`] produces a graded tensor-product mesh around the DBS lead
//! with the lead body cut out; [`build_sphere_mesh`] produces the polar mesh
//! of the spherical-electrode validation problem.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Geometry;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Encapsulation,
    Tissue,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Encapsulation => "encapsulation",
            Region::Tissue => "tissue",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Current-injecting contact.
    ActiveContact,
    /// Lead surface carrying no current (shaft, tip, passive contacts).
    Insulated,
    /// Outer boundary held at φ = 0.
    Ground,
    /// Symmetry axis r = 0.
    Axis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub kind: BoundaryKind,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    /// (r, z) [m].
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise in the (r, z) plane.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub boundary: Vec<BoundaryEdge>,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Signed area in the (r, z) plane.
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Longest edge.
    pub fn diameter(&self, t: usize) -> f64 {
        let p = self.triangles[t].map(|i| self.nodes[i]);
        let d = |u: [f64; 2], v: [f64; 2]| (u[0] - v[0]).hypot(u[1] - v[1]);
        d(p[0], p[1]).max(d(p[1], p[2])).max(d(p[2], p[0]))
    }

    pub fn boundary_nodes(&self, kind: BoundaryKind) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary
            .iter()
            .filter(|e| e.kind == kind)
            .flat_map(|e| e.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Largest element diameter among triangles touching the active contact.
    pub fn contact_diameter(&self) -> f64 {
        let on_contact = {
            let mut flag = vec![false; self.n_nodes()];
            for i in self.boundary_nodes(BoundaryKind::ActiveContact) {
                flag[i] = true;
            }
            flag
        };
        (0..self.n_triangles())
            .filter(|&t| self.triangles[t].iter().any(|&i| on_contact[i]))
            .map(|t| self.diameter(t))
            .fold(0.0, f64::max)
    }

    /// Checks r ≥ 0, positive areas, conformity and a complete boundary.
    pub fn validate(&self) -> Result<()> {
        if self.regions.len() != self.triangles.len() {
            return Err(Error::Dimension {
                what: "region tags",
                expected: self.triangles.len(),
                got: self.regions.len(),
            });
        }
        if let Some(i) = self.nodes.iter().position(|p| !(p[0] >= 0.0) || !p[1].is_finite()) {
            return Err(Error::domain(format!("node {i} has r < 0 or a non-finite coordinate")));
        }
        for t in 0..self.n_triangles() {
            if self.triangles[t].iter().any(|&i| i >= self.n_nodes()) {
                return Err(Error::domain(format!("triangle {t} references a missing node")));
            }
            if !(self.area(t) > 0.0) {
                return Err(Error::domain(format!("triangle {t} has non-positive area")));
            }
        }
        // Every edge is shared by two triangles with opposite orientation,
        // or is a tagged boundary edge.
        let mut edges = std::collections::HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edges.entry((a, b)).or_insert(0u32) += 1;
            }
        }
        let mut tagged = std::collections::HashSet::new();
        for e in &self.boundary {
            tagged.insert((e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1])));
        }
        for (&(a, b), &count) in &edges {
            if count != 1 {
                return Err(Error::domain(format!(
                    "edge ({a},{b}) used {count} times in one direction"
                )));
            }
            let interior = edges.contains_key(&(b, a));
            let is_tagged = tagged.contains(&(a.min(b), a.max(b)));
            if interior == is_tagged {
                return Err(Error::domain(format!(
                    "edge ({a},{b}): interior = {interior}, tagged boundary = {is_tagged}"
                )));
            }
        }
        Ok(())
    }

    /// Writes `nodes.csv` and `triangles.csv` into `dir`.
    pub fn write_csv(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, body: String| -> Result<()> {
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))
        };
        let mut s = String::from("id,r,z\n");
        for (i, p) in self.nodes.iter().enumerate() {
            s += &format!("{i},{:e},{:e}\n", p[0], p[1]);
        }
        write("nodes.csv", s)?;
        let mut s = String::from("id,n0,n1,n2,region\n");
        for (t, (tri, reg)) in self.triangles.iter().zip(&self.regions).enumerate() {
            s += &format!("{t},{},{},{},{}\n", tri[0], tri[1], tri[2], reg.as_str());
        }
        write("triangles.csv", s)
    }
}

/// Grading controls for [`build_mesh`]. At scale factor s the local element
/// size is s²·near_size + s·grade·(distance to the active contact region), so
/// the contact refines faster than the far field as s shrinks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshOptions {
    /// Element size at the contact for s = 1 [m].
    pub near_size: f64,
    /// Growth of the element size per metre of distance.
    pub grade: f64,
    /// Smallest admissible element size [m].
    pub min_size: f64,
    /// Element layers across the encapsulation sheath.
    pub min_layers: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            near_size: 0.1e-3,
            grade: 0.2,
            min_size: 1e-6,
            min_layers: 3,
        }
    }
}

/// Relative band the element count must land in.
pub const TARGET_BAND: f64 = 0.2;

/// Splits [x0, x1] into at least `n_min` cells equidistributing 1/h(x).
fn divide(x0: f64, x1: f64, n_min: usize, h: impl Fn(f64) -> f64) -> Vec<f64> {
    const FINE: usize = 512;
    let dx = (x1 - x0) / FINE as f64;
    let mut cum = Vec::with_capacity(FINE + 1);
    cum.push(0.0);
    for k in 0..FINE {
        let a = x0 + k as f64 * dx;
        cum.push(cum[k] + 0.5 * dx * (1.0 / h(a) + 1.0 / h(a + dx)));
    }
    let total = cum[FINE];
    let n = ((total - 1e-9).ceil() as usize).max(n_min).max(1);
    let mut out = Vec::with_capacity(n + 1);
    out.push(x0);
    let mut k = 0;
    for c in 1..n {
        let target = total * c as f64 / n as f64;
        while cum[k + 1] < target {
            k += 1;
        }
        let frac = (target - cum[k]) / (cum[k + 1] - cum[k]);
        out.push(x0 + (k as f64 + frac) * dx);
    }
    out.push(x1);
    out
}

fn divide_all(breaks: &[(f64, usize)], last: f64, h: &impl Fn(f64) -> f64) -> Vec<f64> {
    let mut out = vec![breaks[0].0];
    for (k, &(x0, n_min)) in breaks.iter().enumerate() {
        let x1 = breaks.get(k + 1).map_or(last, |b| b.0);
        out.extend_from_slice(&divide(x0, x1, n_min, h)[1..]);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Lead,
    Region(Region),
}

struct Layout {
    r: Vec<f64>,
    z: Vec<f64>,
    geom: Geometry,
}

impl Layout {
    fn new(geom: &Geometry, opts: &MeshOptions, s: f64) -> Self {
        let a = geom.lead_radius;
        let t = geom.encapsulation_thickness;
        let (za0, za1) = geom.contact_z(geom.active_contact);
        let h_near = s * s * opts.near_size;
        let grade = s * opts.grade;
        let layer = |w: f64| ((w / h_near).ceil() as usize).max(opts.min_layers);
        let hr = |r: f64| h_near + grade * (r - a - t).max(0.0);
        let hz = |z: f64| h_near + grade * (za0 - z).max(z - za1).max(0.0);

        let r = divide_all(&[(0.0, 2), (a, layer(t)), (a + t, 1)], geom.domain_radius, &hr);
        let z_tip = geom.tip_z();
        let half = 0.5 * geom.domain_height;
        let mut zb = vec![(-half, 1), (z_tip - t, layer(t)), (z_tip, 1)];
        for k in 1..=geom.n_contacts {
            let (lo, hi) = geom.contact_z(k);
            if lo > z_tip {
                zb.push((lo, 1));
            }
            zb.push((hi, 1));
        }
        // The active contact carries at least four cells.
        for b in zb.iter_mut() {
            if b.0 == za0 {
                b.1 = 4;
            }
        }
        let z = divide_all(&zb, half, &hz);
        Self {
            r,
            z,
            geom: geom.clone(),
        }
    }

    fn cell(&self, i: usize, j: usize) -> Cell {
        let rc = 0.5 * (self.r[i] + self.r[i + 1]);
        let zc = 0.5 * (self.z[j] + self.z[j + 1]);
        let a = self.geom.lead_radius;
        let t = self.geom.encapsulation_thickness;
        let z_tip = self.geom.tip_z();
        if rc < a && zc > z_tip {
            Cell::Lead
        } else if rc < a + t && zc > z_tip - t {
            Cell::Region(Region::Encapsulation)
        } else {
            Cell::Region(Region::Tissue)
        }
    }

    fn n_elements(&self) -> usize {
        let (nr, nz) = (self.r.len() - 1, self.z.len() - 1);
        let mut n = 0;
        for i in 0..nr {
            for j in 0..nz {
                if self.cell(i, j) != Cell::Lead {
                    n += 2;
                }
            }
        }
        n
    }

    fn into_mesh(self) -> Mesh {
        let (nr, nz) = (self.r.len() - 1, self.z.len() - 1);
        let grid = |i: usize, j: usize| i * (nz + 1) + j;
        let mut id = vec![usize::MAX; (nr + 1) * (nz + 1)];
        let mut nodes = Vec::new();
        let mut triangles = Vec::new();
        let mut regions = Vec::new();
        let mut boundary = Vec::new();
        let mut node = |i: usize, j: usize, nodes: &mut Vec<[f64; 2]>| {
            let g = grid(i, j);
            if id[g] == usize::MAX {
                id[g] = nodes.len();
                nodes.push([self.r[i], self.z[j]]);
            }
            id[g]
        };
        let (za0, za1) = self.geom.contact_z(self.geom.active_contact);
        for i in 0..nr {
            for j in 0..nz {
                let Cell::Region(reg) = self.cell(i, j) else {
                    continue;
                };
                let n00 = node(i, j, &mut nodes);
                let n10 = node(i + 1, j, &mut nodes);
                let n11 = node(i + 1, j + 1, &mut nodes);
                let n01 = node(i, j + 1, &mut nodes);
                triangles.push([n00, n10, n11]);
                triangles.push([n00, n11, n01]);
                regions.push(reg);
                regions.push(reg);

                let mut edge = |nodes: [usize; 2], kind| boundary.push(BoundaryEdge { nodes, kind });
                if i == 0 {
                    edge([n01, n00], BoundaryKind::Axis);
                } else if self.cell(i - 1, j) == Cell::Lead {
                    let on_contact = self.z[j] >= za0 && self.z[j + 1] <= za1;
                    let kind = if on_contact {
                        BoundaryKind::ActiveContact
                    } else {
                        BoundaryKind::Insulated
                    };
                    edge([n01, n00], kind);
                }
                if i + 1 == nr {
                    edge([n10, n11], BoundaryKind::Ground);
                }
                if j == 0 {
                    edge([n00, n10], BoundaryKind::Ground);
                }
                if j + 1 == nz {
                    edge([n11, n01], BoundaryKind::Ground);
                } else if self.cell(i, j + 1) == Cell::Lead {
                    edge([n11, n01], BoundaryKind::Insulated);
                }
            }
        }
        Mesh {
            nodes,
            triangles,
            regions,
            boundary,
        }
    }
}

/// Graded triangulation of the DBS geometry with about `target_elements`
/// triangles (within ±20%).
pub fn build_mesh(geom: &Geometry, target_elements: usize) -> Result<Mesh> {
    build_mesh_with(geom, target_elements, &MeshOptions::default())
}

pub fn build_mesh_with(geom: &Geometry, target_elements: usize, opts: &MeshOptions) -> Result<Mesh> {
    geom.validate()?;
    if target_elements == 0 {
        return Err(Error::config("target element count must be positive"));
    }
    let t = geom.encapsulation_thickness;
    if t / opts.min_layers as f64 <= opts.min_size {
        return Err(Error::config(format!(
            "infeasible grading: encapsulation of {t:e} m cannot hold {} layers above the minimum element size {:e} m",
            opts.min_layers, opts.min_size
        )));
    }
    let target = target_elements as f64;
    let count = |log_s: f64| Layout::new(geom, opts, log_s.exp()).n_elements() as f64;
    // Element count decreases with the scale factor.
    let (mut lo, mut hi) = (0.5 * (opts.min_size / opts.near_size).ln(), 8.0_f64.ln());
    let (c_lo, c_hi) = (count(lo), count(hi));
    if target > c_lo * (1.0 + TARGET_BAND) || target < c_hi * (1.0 - TARGET_BAND) {
        return Err(Error::config(format!(
            "target of {target_elements} elements is outside the reachable range [{c_hi}, {c_lo}]"
        )));
    }
    let mut best = (f64::INFINITY, lo);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let c = count(mid);
        let miss = (c / target - 1.0).abs();
        if miss < best.0 {
            best = (miss, mid);
        }
        if miss < 0.02 {
            break;
        }
        if c > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 > TARGET_BAND {
        return Err(Error::config(format!(
            "no grading within ±{}% of {target_elements} elements (closest miss {:.1}%)",
            TARGET_BAND * 100.0,
            best.0 * 100.0
        )));
    }
    let mesh = Layout::new(geom, opts, best.1.exp()).into_mesh();
    mesh.validate()?;
    Ok(mesh)
}

/// Spherical electrode of radius `radius` centred at the origin, embedded in
/// a grounded sphere of radius `outer`. The polar grid has `n_theta` cells
/// over [0, π]; radial cells grow geometrically to keep them near square.
pub fn build_sphere_mesh(radius: f64, outer: f64, n_theta: usize) -> Result<Mesh> {
    if !(radius > 0.0 && outer > radius) {
        return Err(Error::config("sphere mesh needs 0 < radius < outer"));
    }
    if n_theta < 4 {
        return Err(Error::config("sphere mesh needs at least 4 polar cells"));
    }
    let dtheta = std::f64::consts::PI / n_theta as f64;
    let n_rho = ((outer / radius).ln() / dtheta).ceil() as usize;
    let q = (outer / radius).powf(1.0 / n_rho as f64);
    let rho: Vec<f64> = (0..=n_rho)
        .map(|i| if i == n_rho { outer } else { radius * q.powi(i as i32) })
        .collect();
    let id = |i: usize, j: usize| i * (n_theta + 1) + j;
    let mut nodes = Vec::with_capacity((n_rho + 1) * (n_theta + 1));
    for &p in &rho {
        for j in 0..=n_theta {
            let th = j as f64 * dtheta;
            let r = if j == 0 || j == n_theta { 0.0 } else { p * th.sin() };
            nodes.push([r, p * th.cos()]);
        }
    }
    let mut triangles = Vec::new();
    let mut boundary = Vec::new();
    for i in 0..n_rho {
        for j in 0..n_theta {
            // (ρ, θ) → (r, z) reverses orientation.
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);
            if i == 0 {
                boundary.push(BoundaryEdge {
                    nodes: [a, d],
                    kind: BoundaryKind::ActiveContact,
                });
            }
            if i + 1 == n_rho {
                boundary.push(BoundaryEdge {
                    nodes: [b, c],
                    kind: BoundaryKind::Ground,
                });
            }
            if j == 0 {
                boundary.push(BoundaryEdge {
                    nodes: [a, b],
                    kind: BoundaryKind::Axis,
                });
            }
            if j + 1 == n_theta {
                boundary.push(BoundaryEdge {
                    nodes: [d, c],
                    kind: BoundaryKind::Axis,
                });
            }
        }
    }
    let mesh = Mesh {
        regions: vec![Region::Tissue; triangles.len()],
        nodes,
        triangles,
        boundary,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Barycentric weights of a point inside one triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub triangle: usize,
    pub nodes: [usize; 3],
    pub weights: [f64; 3],
}

/// Bucket index over the mesh bounding box for point location.
pub struct PointLocator<'m> {
    mesh: &'m Mesh,
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &mesh.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let side = (mesh.n_triangles() as f64).sqrt().ceil().max(1.0) as usize;
        let dims = [side, side];
        let cell = [0, 1].map(|k| ((hi[k] - lo[k]) / side as f64).max(f64::MIN_POSITIVE));
        let mut loc = Self {
            mesh,
            origin: lo,
            cell,
            dims,
            buckets: vec![Vec::new(); side * side],
        };
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut blo = [usize::MAX; 2];
            let mut bhi = [0; 2];
            for &n in tri {
                let b = loc.bucket_of(mesh.nodes[n]);
                for k in 0..2 {
                    blo[k] = blo[k].min(b[k]);
                    bhi[k] = bhi[k].max(b[k]);
                }
            }
            for i in blo[0]..=bhi[0] {
                for j in blo[1]..=bhi[1] {
                    loc.buckets[i * dims[1] + j].push(t);
                }
            }
        }
        loc
    }

    fn bucket_of(&self, p: [f64; 2]) -> [usize; 2] {
        [0, 1].map(|k| {
            let x = ((p[k] - self.origin[k]) / self.cell[k]).floor();
            (x.max(0.0) as usize).min(self.dims[k] - 1)
        })
    }

    fn weights(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let tri = self.mesh.triangles[t];
        let v = tri.map(|i| self.mesh.nodes[i]);
        if let Some(k) = v.iter().position(|q| *q == p) {
            let mut w = [0.0; 3];
            w[k] = 1.0;
            return w;
        }
        let det = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
        let l1 = ((p[0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (p[1] - v[0][1])) / det;
        let l2 = ((v[1][0] - v[0][0]) * (p[1] - v[0][1]) - (p[0] - v[0][0]) * (v[1][1] - v[0][1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    pub fn locate(&self, p: [f64; 2]) -> Result<Probe> {
        const TOL: f64 = 1e-10;
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::domain("non-finite probe point"));
        }
        let b = self.bucket_of(p);
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for &t in &self.buckets[b[0] * self.dims[1] + b[1]] {
            let w = self.weights(t, p);
            let worst = w.iter().copied().fold(f64::INFINITY, f64::min);
            if best.map_or(true, |(m, _, _)| worst > m) {
                best = Some((worst, t, w));
            }
        }
        match best {
            Some((worst, t, mut w)) if worst >= -TOL => {
                for x in w.iter_mut() {
                    if x.abs() < TOL {
                        *x = 0.0;
                    }
                }
                Ok(Probe {
                    triangle: t,
                    nodes: self.mesh.triangles[t],
                    weights: w,
                })
            }
            _ => Err(Error::domain(format!(
                "point (r = {:e}, z = {:e}) lies outside the mesh",
                p[0], p[1]
            ))),
        }
    }
}
