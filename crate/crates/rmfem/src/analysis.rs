//! Diagnostics: displacement-error decomposition, energy distributions over
//! perturbed meshes, and posterior summary statistics.

use crate::error::{Error, Result};
use crate::fem::{assemble_and_solve, FemSolution};
use crate::field::{ParamVector, NUM_MODES};
use crate::inverse::{PosteriorSamples, REFERENCE_ELEMENTS};
use crate::mesh::{perturb, uniform_mesh_1d, Mesh, PerturbationScheme};
use crate::quad::gauss_legendre;
use crate::rng::Stream;
use serde::Serialize;

/// Decomposition of the L2 displacement error into its nodal share `zeta` and
/// interpolation share `eta = 1 - zeta`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ErrorReport {
    pub l2_error: f64,
    pub nodal_error: f64,
    pub zeta: f64,
    pub eta: f64,
}

/// Gauss points per quadrature subinterval of the error integral.
const ERROR_QUAD_POINTS: usize = 8;

pub fn error_report(solution: &FemSolution, reference: &FemSolution) -> Result<ErrorReport> {
    error_report_with_quad(solution, reference, ERROR_QUAD_POINTS)
}

pub fn error_report_with_quad(
    solution: &FemSolution,
    reference: &FemSolution,
    quad_points: usize,
) -> Result<ErrorReport> {
    if solution.params != reference.params {
        return Err(Error::ParamMismatch);
    }
    if solution.mesh.dim != 1 || reference.mesh.dim != 1 {
        return Err(Error::InvalidMesh("error decomposition is defined in 1D".into()));
    }
    let rule = gauss_legendre(quad_points);
    // composite quadrature of (u_ref - u_h)^2 over the coarse elements,
    // subdivided at the reference nodes so the integrand is smooth on every
    // subinterval
    let mut breaks: Vec<f64> = solution
        .mesh
        .nodes
        .iter()
        .chain(reference.mesh.nodes.iter())
        .map(|n| n[0])
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut l2_sq = 0.0;
    for seg in breaks.windows(2) {
        let (xa, xb) = (seg[0], seg[1]);
        let le = xb - xa;
        for &(t, w) in &rule {
            let xq = 0.5 * (xa + xb) + 0.5 * le * t;
            let diff = reference.evaluate(&[[xq, 0.0]])?[0] - solution.evaluate(&[[xq, 0.0]])?[0];
            l2_sq += 0.5 * le * w * diff * diff;
        }
    }
    let l2_error = l2_sq.sqrt();
    // weighted nodal norm with dual-cell weights
    let nodes = &solution.mesh.nodes;
    let m = nodes.len();
    let mut nodal_sq = 0.0;
    for i in 0..m {
        let left = if i > 0 { nodes[i][0] - nodes[i - 1][0] } else { 0.0 };
        let right = if i + 1 < m { nodes[i + 1][0] - nodes[i][0] } else { 0.0 };
        let weight = 0.5 * (left + right);
        let diff =
            reference.evaluate(&[nodes[i]])?[0] - solution.nodal_values[i];
        nodal_sq += weight * diff * diff;
    }
    let nodal_error = nodal_sq.sqrt();
    let zeta = if l2_error > 0.0 { nodal_error / l2_error } else { 0.0 };
    Ok(ErrorReport { l2_error, nodal_error, zeta, eta: 1.0 - zeta })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyDistribution {
    pub h: f64,
    pub samples: Vec<f64>,
    pub unperturbed: f64,
    pub reference: f64,
}

/// Energies of `n_samples` perturbed-mesh solves at `params`, alongside the
/// unperturbed estimate and the fine-mesh reference value.
pub fn energy_distribution(
    reference_mesh: &Mesh,
    scheme: &PerturbationScheme,
    params: &ParamVector,
    n_samples: usize,
    rng: &mut Stream,
) -> Result<EnergyDistribution> {
    assert!(n_samples >= 1);
    if reference_mesh.dim != 1 {
        return Err(Error::InvalidMesh("energy distribution is defined in 1D".into()));
    }
    let fine = uniform_mesh_1d(REFERENCE_ELEMENTS)?;
    let reference = assemble_and_solve(&fine, params)?.total_energy();
    let unperturbed = assemble_and_solve(reference_mesh, params)?.total_energy();
    let mut samples = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let p = perturb(reference_mesh, scheme, rng)?;
        samples.push(assemble_and_solve(&p, params)?.total_energy());
    }
    Ok(EnergyDistribution { h: reference_mesh.h, samples, unperturbed, reference })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SummaryRow {
    /// 1-based parameter index.
    pub param: usize,
    pub mean: f64,
    pub std: f64,
    pub error: f64,
}

/// Per-parameter mean, unbiased standard deviation and absolute error of the
/// posterior mean against the ground truth.
pub fn posterior_summary(samples: &PosteriorSamples, truth: &ParamVector) -> Vec<SummaryRow> {
    assert!(!samples.draws.is_empty());
    (0..NUM_MODES)
        .map(|k| {
            let xs: Vec<f64> = samples.draws.iter().map(|d| d[k]).collect();
            let (mean, std) = mean_std(&xs);
            SummaryRow { param: k + 1, mean, std, error: (truth.xi()[k] - mean).abs() }
        })
        .collect()
}

/// Sample mean and unbiased standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Batch-means standard error of the mean of a correlated sequence.
pub fn batch_means_se(xs: &[f64], n_batches: usize) -> f64 {
    assert!(n_batches >= 2 && xs.len() >= n_batches);
    let batch = xs.len() / n_batches;
    let means: Vec<f64> = (0..n_batches)
        .map(|b| xs[b * batch..(b + 1) * batch].iter().sum::<f64>() / batch as f64)
        .collect();
    let (_, sd) = mean_std(&means);
    sd / (n_batches as f64).sqrt()
}

/// Sarle's bimodality coefficient: (skewness^2 + 1) / kurtosis, where values
/// above 5/9 indicate departure from unimodality.
pub fn bimodality_coefficient(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let skew = m3 / m2.powf(1.5);
    let kurt = m4 / (m2 * m2);
    (skew * skew + 1.0) / kurt
}
