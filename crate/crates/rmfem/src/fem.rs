//! Assembly and solution of the diffusion problem on a mesh.
//!
//! Linear shape functions in 1D, bilinear quads in 2D, 4-point Gauss-Legendre
//! quadrature per direction. Dirichlet rows and columns are eliminated;
//! Neumann edges are natural. The system is solved by a banded Cholesky
//! factorization.

use crate::error::{Error, Result};
use crate::field::{forcing, kappa, ParamVector};
use crate::linalg::BandedSpd;
use crate::mesh::{bilinear_shape, jacobian, Mesh};
use crate::quad::gauss_legendre;

/// Number of quadrature points per direction used in assembly.
pub const QUAD_POINTS: usize = 4;

#[derive(Clone, Debug)]
pub struct FemSolution {
    pub mesh: Mesh,
    pub params: ParamVector,
    /// Per-node solution coefficients; exactly 0 at constrained nodes.
    pub nodal_values: Vec<f64>,
    /// Assembled load, one entry per free node (in node order).
    pub force_vector: Vec<f64>,
    /// Total energy estimate u^T f over the free nodes.
    pub energy: f64,
}

/// Assemble the stiffness matrix and load vector on `mesh` for the diffusion
/// field given by `params`, and solve the resulting SPD system.
pub fn assemble_and_solve(mesh: &Mesh, params: &ParamVector) -> Result<FemSolution> {
    let n_nodes = mesh.num_nodes();
    // free dof numbering in node order
    let mut dof = vec![usize::MAX; n_nodes];
    let mut n_free = 0;
    for (i, tag) in mesh.tags.iter().enumerate() {
        if !tag.is_constrained() {
            dof[i] = n_free;
            n_free += 1;
        }
    }
    if n_free == 0 {
        return Err(Error::InvalidMesh("no free degrees of freedom".into()));
    }
    let mut bw = 0;
    for el in &mesh.elements {
        let dofs: Vec<usize> = el.iter().map(|&i| dof[i]).filter(|&d| d != usize::MAX).collect();
        for &a in &dofs {
            for &b in &dofs {
                bw = bw.max(a.abs_diff(b));
            }
        }
    }
    let mut stiffness = BandedSpd::zeros(n_free, bw);
    let mut force = vec![0.0; n_free];
    let rule = gauss_legendre(QUAD_POINTS);

    match mesh.dim {
        1 => {
            for el in &mesh.elements {
                let (a, b) = (el[0], el[1]);
                let (xa, xb) = (mesh.nodes[a][0], mesh.nodes[b][0]);
                let le = xb - xa;
                let mut k = 0.0;
                let mut fa = 0.0;
                let mut fb = 0.0;
                for &(t, w) in &rule {
                    let xq = 0.5 * (xa + xb) + 0.5 * le * t;
                    let wq = 0.5 * le * w;
                    k += wq * kappa(params, xq) / (le * le);
                    let fq = wq * forcing(xq);
                    fa += fq * (xb - xq) / le;
                    fb += fq * (xq - xa) / le;
                }
                let local = [[k, -k], [-k, k]];
                let fl = [fa, fb];
                let ids = [a, b];
                scatter(&mut stiffness, &mut force, &dof, &ids, &local, &fl);
            }
        }
        2 => {
            for e in 0..mesh.elements.len() {
                let coords_v = mesh.element_coords(e);
                let coords: &[[f64; 2]; 4] = coords_v.as_slice().try_into().unwrap();
                let mut local = [[0.0; 4]; 4];
                let mut fl = [0.0; 4];
                for &(xi, w1) in &rule {
                    for &(eta, w2) in &rule {
                        let (n, dn) = bilinear_shape(xi, eta);
                        let j = jacobian(coords, &dn);
                        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                        if det <= 0.0 {
                            return Err(Error::InvalidMesh(format!(
                                "non-positive Jacobian in element {e}"
                            )));
                        }
                        let inv = [
                            [j[1][1] / det, -j[0][1] / det],
                            [-j[1][0] / det, j[0][0] / det],
                        ];
                        // physical gradients: J^{-T} * dn
                        let mut grad = [[0.0; 2]; 4];
                        for a in 0..4 {
                            grad[a][0] = inv[0][0] * dn[a][0] + inv[1][0] * dn[a][1];
                            grad[a][1] = inv[0][1] * dn[a][0] + inv[1][1] * dn[a][1];
                        }
                        let mut xq = 0.0;
                        for a in 0..4 {
                            xq += n[a] * coords[a][0];
                        }
                        let wq = w1 * w2 * det;
                        let kq = wq * kappa(params, xq);
                        let fq = wq * forcing(xq);
                        for a in 0..4 {
                            fl[a] += fq * n[a];
                            for b in 0..=a {
                                let v = kq * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
                                local[a][b] += v;
                                if a != b {
                                    local[b][a] += v;
                                }
                            }
                        }
                    }
                }
                let ids: [usize; 4] = mesh.elements[e].as_slice().try_into().unwrap();
                scatter4(&mut stiffness, &mut force, &dof, &ids, &local, &fl);
            }
        }
        d => return Err(Error::InvalidMesh(format!("unsupported dimension {d}"))),
    }

    let chol = stiffness.cholesky()?;
    let u_free = chol.solve(&force);
    let energy: f64 = u_free.iter().zip(&force).map(|(u, f)| u * f).sum();
    let mut nodal_values = vec![0.0; n_nodes];
    for i in 0..n_nodes {
        if dof[i] != usize::MAX {
            nodal_values[i] = u_free[dof[i]];
        }
    }
    Ok(FemSolution {
        mesh: mesh.clone(),
        params: *params,
        nodal_values,
        force_vector: force,
        energy,
    })
}

fn scatter(
    stiffness: &mut BandedSpd,
    force: &mut [f64],
    dof: &[usize],
    ids: &[usize; 2],
    local: &[[f64; 2]; 2],
    fl: &[f64; 2],
) {
    for a in 0..2 {
        let da = dof[ids[a]];
        if da == usize::MAX {
            continue;
        }
        force[da] += fl[a];
        for b in 0..2 {
            let db = dof[ids[b]];
            if db != usize::MAX && da >= db {
                stiffness.add(da, db, local[a][b]);
            }
        }
    }
}

fn scatter4(
    stiffness: &mut BandedSpd,
    force: &mut [f64],
    dof: &[usize],
    ids: &[usize; 4],
    local: &[[f64; 4]; 4],
    fl: &[f64; 4],
) {
    for a in 0..4 {
        let da = dof[ids[a]];
        if da == usize::MAX {
            continue;
        }
        force[da] += fl[a];
        for b in 0..4 {
            let db = dof[ids[b]];
            if db != usize::MAX && da >= db {
                stiffness.add(da, db, local[a][b]);
            }
        }
    }
}

impl FemSolution {
    /// Interpolate the solution at physical points.
    pub fn evaluate(&self, points: &[[f64; 2]]) -> Result<Vec<f64>> {
        points.iter().map(|p| self.evaluate_one(*p)).collect()
    }

    fn evaluate_one(&self, p: [f64; 2]) -> Result<f64> {
        match self.mesh.dim {
            1 => self.evaluate_1d(p[0]),
            2 => self.evaluate_2d(p),
            _ => unreachable!(),
        }
    }

    fn evaluate_1d(&self, x: f64) -> Result<f64> {
        const TOL: f64 = 1e-12;
        if !((-TOL..=1.0 + TOL).contains(&x)) {
            return Err(Error::OutsideDomain(x, 0.0));
        }
        let x = x.clamp(0.0, 1.0);
        let nodes = &self.mesh.nodes;
        // index of the first node strictly greater than x
        let idx = nodes.partition_point(|n| n[0] <= x);
        let e = idx.clamp(1, nodes.len() - 1) - 1;
        let (xa, xb) = (nodes[e][0], nodes[e + 1][0]);
        let t = (x - xa) / (xb - xa);
        Ok((1.0 - t) * self.nodal_values[e] + t * self.nodal_values[e + 1])
    }

    fn evaluate_2d(&self, p: [f64; 2]) -> Result<f64> {
        const PAD: f64 = 1e-9;
        for e in 0..self.mesh.elements.len() {
            let coords_v = self.mesh.element_coords(e);
            let coords: &[[f64; 2]; 4] = coords_v.as_slice().try_into().unwrap();
            let (mut xmin, mut xmax, mut ymin, mut ymax) =
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
            for c in coords {
                xmin = xmin.min(c[0]);
                xmax = xmax.max(c[0]);
                ymin = ymin.min(c[1]);
                ymax = ymax.max(c[1]);
            }
            if p[0] < xmin - PAD || p[0] > xmax + PAD || p[1] < ymin - PAD || p[1] > ymax + PAD {
                continue;
            }
            if let Some((xi, eta)) = invert_bilinear(coords, p) {
                let (n, _) = bilinear_shape(xi, eta);
                let mut v = 0.0;
                for (na, &node) in n.iter().zip(&self.mesh.elements[e]) {
                    v += na * self.nodal_values[node];
                }
                return Ok(v);
            }
        }
        Err(Error::OutsideDomain(p[0], p[1]))
    }

    pub fn total_energy(&self) -> f64 {
        self.energy
    }
}

/// Newton inversion of the bilinear map; returns reference coordinates if the
/// point lies inside this element (within a small tolerance).
fn invert_bilinear(coords: &[[f64; 2]; 4], p: [f64; 2]) -> Option<(f64, f64)> {
    const TOL: f64 = 1e-12;
    const EDGE: f64 = 1.0 + 1e-9;
    let (mut xi, mut eta) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let (n, dn) = bilinear_shape(xi, eta);
        let mut r = [-p[0], -p[1]];
        for a in 0..4 {
            r[0] += n[a] * coords[a][0];
            r[1] += n[a] * coords[a][1];
        }
        let j = jacobian(coords, &dn);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let dxi = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let deta = (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        xi -= dxi;
        eta -= deta;
        if dxi.abs() < TOL && deta.abs() < TOL {
            break;
        }
    }
    if xi.abs() <= EDGE && eta.abs() <= EDGE {
        Some((xi.clamp(-1.0, 1.0), eta.clamp(-1.0, 1.0)))
    } else {
        None
    }
}
