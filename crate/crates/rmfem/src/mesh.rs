//! Reference meshes and random node perturbation.
//!
//! 1D meshes discretize the unit interval with linear elements; 2D meshes are
//! structured quadrilateral grids on the strip (0,1) x (0,1/10) with square
//! elements. Perturbation displaces nodes by h^p * alpha with alpha uniform on
//! (-1/2, 1/2) per coordinate in 1D, or by a draw from the disk of radius
//! sqrt(2)/4 * h in 2D with boundary nodes projected back onto the boundary.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::rng::Stream;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const STRIP_HEIGHT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tag {
    Interior,
    Dirichlet,
    Neumann,
    Corner,
}

impl Tag {
    /// Nodes with an essential (zero) boundary condition.
    pub fn is_constrained(self) -> bool {
        matches!(self, Tag::Dirichlet | Tag::Corner)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PerturbationKind {
    UniformInterval1d,
    Disk2d,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationScheme {
    pub p: f64,
    pub kind: PerturbationKind,
    pub fixed_nodes: BTreeSet<usize>,
}

impl PerturbationScheme {
    pub fn new(p: f64, kind: PerturbationKind, fixed_nodes: BTreeSet<usize>) -> Self {
        assert!(p >= 1.0, "perturbation exponent must be >= 1");
        Self { p, kind, fixed_nodes }
    }

    pub fn uniform_1d() -> Self {
        Self::new(1.0, PerturbationKind::UniformInterval1d, BTreeSet::new())
    }

    pub fn disk_2d() -> Self {
        Self::new(1.0, PerturbationKind::Disk2d, BTreeSet::new())
    }

    pub fn with_fixed_nodes(mut self, fixed: BTreeSet<usize>) -> Self {
        self.fixed_nodes = fixed;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Reference,
    Perturbed { scheme: PerturbationScheme, stream: u64, redraws: u32 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Mesh {
    pub dim: u8,
    /// Node coordinates; the y entry is 0 for 1D meshes.
    pub nodes: Vec<[f64; 2]>,
    /// Connectivity: 2 node ids per 1D element, 4 (counter-clockwise) per quad.
    pub elements: Vec<Vec<usize>>,
    pub tags: Vec<Tag>,
    /// Nominal element size of the unperturbed grid.
    pub h: f64,
    pub provenance: Provenance,
}

/// Uniform 1D mesh of the unit interval with n elements.
pub fn uniform_mesh_1d(n: usize) -> Result<Mesh> {
    if n < 2 {
        return Err(Error::InvalidMesh(format!("need at least 2 elements, got {n}")));
    }
    let h = 1.0 / n as f64;
    // divide rather than multiply by h so the last node is exactly 1
    let nodes: Vec<[f64; 2]> = (0..=n).map(|i| [i as f64 / n as f64, 0.0]).collect();
    let elements = (0..n).map(|i| vec![i, i + 1]).collect();
    let mut tags = vec![Tag::Interior; n + 1];
    tags[0] = Tag::Dirichlet;
    tags[n] = Tag::Dirichlet;
    Ok(Mesh { dim: 1, nodes, elements, tags, h, provenance: Provenance::Reference })
}

/// Structured quad mesh on the strip (0,1) x (0,1/10) with square elements of
/// side 1/nx. Left/right edges are Dirichlet, top/bottom Neumann.
pub fn strip_mesh_2d(nx: usize) -> Result<Mesh> {
    if nx == 0 || !nx.is_multiple_of(10) {
        return Err(Error::InvalidMesh(format!(
            "nx must be a positive multiple of 10 for square strip elements, got {nx}"
        )));
    }
    let ny = nx / 10;
    let h = 1.0 / nx as f64;
    // column-major node numbering keeps the stiffness bandwidth at ny + 2
    let node_id = |ix: usize, iy: usize| ix * (ny + 1) + iy;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut tags = Vec::with_capacity((nx + 1) * (ny + 1));
    for ix in 0..=nx {
        for iy in 0..=ny {
            // divide so the right edge sits exactly at 1
            let x = ix as f64 / nx as f64;
            let y = iy as f64 / nx as f64;
            nodes.push([x, y]);
            let on_lr = ix == 0 || ix == nx;
            let on_tb = iy == 0 || iy == ny;
            tags.push(match (on_lr, on_tb) {
                (true, true) => Tag::Corner,
                (true, false) => Tag::Dirichlet,
                (false, true) => Tag::Neumann,
                (false, false) => Tag::Interior,
            });
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for ix in 0..nx {
        for iy in 0..ny {
            elements.push(vec![
                node_id(ix, iy),
                node_id(ix + 1, iy),
                node_id(ix + 1, iy + 1),
                node_id(ix, iy + 1),
            ]);
        }
    }
    Ok(Mesh { dim: 2, nodes, elements, tags, h, provenance: Provenance::Reference })
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_coords(&self, e: usize) -> Vec<[f64; 2]> {
        self.elements[e].iter().map(|&i| self.nodes[i]).collect()
    }

    /// Check the geometric invariants: strictly increasing 1D coordinates with
    /// exact endpoints, or strictly positive quad Jacobians at the quadrature
    /// points.
    pub fn validate(&self) -> Result<()> {
        match self.dim {
            1 => {
                for w in self.nodes.windows(2) {
                    if w[1][0] <= w[0][0] {
                        return Err(Error::InvalidMesh(format!(
                            "1D nodes not strictly increasing near x = {}",
                            w[0][0]
                        )));
                    }
                }
                if self.nodes[0][0] != 0.0 || self.nodes[self.nodes.len() - 1][0] != 1.0 {
                    return Err(Error::InvalidMesh("1D endpoints must be 0 and 1".into()));
                }
                Ok(())
            }
            2 => {
                let rule = gauss_legendre(4);
                for e in 0..self.elements.len() {
                    let coords = self.element_coords(e);
                    let coords: &[[f64; 2]; 4] = coords.as_slice().try_into().unwrap();
                    for &(xi, _) in &rule {
                        for &(eta, _) in &rule {
                            let (_, dn) = bilinear_shape(xi, eta);
                            let det = jacobian_det(coords, &dn);
                            if det <= 0.0 {
                                return Err(Error::InvalidMesh(format!(
                                    "non-positive Jacobian {det:.3e} in element {e}"
                                )));
                            }
                        }
                    }
                }
                Ok(())
            }
            d => Err(Error::InvalidMesh(format!("unsupported dimension {d}"))),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Mesh> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Values and reference gradients of the four bilinear shape functions on
/// [-1,1]^2, counter-clockwise node order.
#[inline]
pub fn bilinear_shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let n = [
        0.25 * (1.0 - xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 - eta),
        0.25 * (1.0 + xi) * (1.0 + eta),
        0.25 * (1.0 - xi) * (1.0 + eta),
    ];
    let dn = [
        [-0.25 * (1.0 - eta), -0.25 * (1.0 - xi)],
        [0.25 * (1.0 - eta), -0.25 * (1.0 + xi)],
        [0.25 * (1.0 + eta), 0.25 * (1.0 + xi)],
        [-0.25 * (1.0 + eta), 0.25 * (1.0 - xi)],
    ];
    (n, dn)
}

/// Jacobian of the bilinear map at a reference point, from the reference
/// gradients `dn`.
#[inline]
pub fn jacobian(coords: &[[f64; 2]; 4], dn: &[[f64; 2]; 4]) -> [[f64; 2]; 2] {
    let mut j = [[0.0; 2]; 2];
    for a in 0..4 {
        for r in 0..2 {
            for c in 0..2 {
                j[r][c] += dn[a][c] * coords[a][r];
            }
        }
    }
    j
}

#[inline]
pub fn jacobian_det(coords: &[[f64; 2]; 4], dn: &[[f64; 2]; 4]) -> f64 {
    let j = jacobian(coords, dn);
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Disk radius of the 2D perturbation scheme.
pub fn disk_radius(h: f64) -> f64 {
    0.25 * std::f64::consts::SQRT_2 * h
}

/// Apply the perturbation scheme to a reference mesh, drawing from `rng`.
pub fn perturb(mesh: &Mesh, scheme: &PerturbationScheme, rng: &mut Stream) -> Result<Mesh> {
    if mesh.provenance != Provenance::Reference {
        return Err(Error::InvalidMesh("can only perturb a reference mesh".into()));
    }
    match (mesh.dim, scheme.kind) {
        (1, PerturbationKind::UniformInterval1d) => perturb_1d(mesh, scheme, rng),
        (2, PerturbationKind::Disk2d) => perturb_2d(mesh, scheme, rng),
        (d, k) => Err(Error::InvalidMesh(format!(
            "perturbation kind {k:?} does not match mesh dimension {d}"
        ))),
    }
}

fn perturbable_1d(mesh: &Mesh, scheme: &PerturbationScheme) -> Vec<usize> {
    (0..mesh.num_nodes())
        .filter(|&i| mesh.tags[i] == Tag::Interior && !scheme.fixed_nodes.contains(&i))
        .collect()
}

fn perturb_1d(mesh: &Mesh, scheme: &PerturbationScheme, rng: &mut Stream) -> Result<Mesh> {
    let movable = perturbable_1d(mesh, scheme);
    if movable.is_empty() {
        return Err(Error::DegenerateScheme);
    }
    let step = mesh.h.powf(scheme.p);
    let mut out = mesh.clone();
    for &i in &movable {
        let alpha: f64 = rng.gen::<f64>() - 0.5;
        out.nodes[i][0] += step * alpha;
    }
    out.provenance = Provenance::Perturbed {
        scheme: scheme.clone(),
        stream: rng.get_stream(),
        redraws: 0,
    };
    out.validate()?;
    Ok(out)
}

fn perturb_2d(mesh: &Mesh, scheme: &PerturbationScheme, rng: &mut Stream) -> Result<Mesh> {
    let movable: Vec<usize> = (0..mesh.num_nodes())
        .filter(|&i| mesh.tags[i] != Tag::Corner && !scheme.fixed_nodes.contains(&i))
        .collect();
    if movable.is_empty() {
        return Err(Error::DegenerateScheme);
    }
    let r = disk_radius(mesh.h);
    // a worst-case draw combination near a pinned boundary can still invert an
    // element; redraw the whole mesh until the Jacobian invariant holds
    for attempt in 0..1000u32 {
        let mut out = mesh.clone();
        for &i in &movable {
            let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
            let rad = r * rng.gen::<f64>().sqrt();
            let (mut dx, mut dy) = (rad * theta.cos(), rad * theta.sin());
            match mesh.tags[i] {
                Tag::Dirichlet => dx = 0.0, // left/right edge: project onto x = const
                Tag::Neumann => dy = 0.0,   // top/bottom edge: project onto y = const
                _ => {}
            }
            out.nodes[i][0] += dx;
            out.nodes[i][1] += dy;
        }
        if out.validate().is_ok() {
            out.provenance = Provenance::Perturbed {
                scheme: scheme.clone(),
                stream: rng.get_stream(),
                redraws: attempt,
            };
            return Ok(out);
        }
    }
    Err(Error::InvalidMesh("could not draw a valid perturbed mesh in 1000 attempts".into()))
}

/// Node ids matching the observation locations, for use as fixed nodes.
pub fn fixed_observation_nodes(
    mesh: &Mesh,
    locations: &[[f64; 2]],
    tol: f64,
) -> Result<BTreeSet<usize>> {
    let mut out = BTreeSet::new();
    for loc in locations {
        let matches: Vec<usize> = (0..mesh.num_nodes())
            .filter(|&i| {
                let dx = mesh.nodes[i][0] - loc[0];
                let dy = if mesh.dim == 2 { mesh.nodes[i][1] - loc[1] } else { 0.0 };
                (dx * dx + dy * dy).sqrt() <= tol
            })
            .collect();
        if matches.len() != 1 {
            return Err(Error::UnmatchedObservation(loc[0], loc[1], tol));
        }
        out.insert(matches[0]);
    }
    Ok(out)
}

pub const OBSERVATION_TOL: f64 = 1e-9;
