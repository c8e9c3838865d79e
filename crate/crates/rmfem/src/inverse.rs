//! Bayesian inverse problem: observation model, prior, deterministic and
//! mesh-marginal likelihoods, and random walk Metropolis samplers.

use crate::error::{Error, Result};
use crate::fem::assemble_and_solve;
use crate::field::{ParamVector, NUM_MODES};
use crate::mesh::{perturb, uniform_mesh_1d, Mesh, PerturbationScheme};
use crate::rng::{stream, Stream};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SIGMA_E: f64 = 1e-5;
/// Element count of the data-generation (reference) mesh.
pub const REFERENCE_ELEMENTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    OneD,
    TwoD,
}

/// The four observation locations: {i/5} on the interval, {(i/5, 1/20)} on
/// the strip.
pub fn observation_locations(domain: Domain) -> Vec<[f64; 2]> {
    (1..=4)
        .map(|i| {
            let x = i as f64 / 5.0;
            match domain {
                Domain::OneD => [x, 0.0],
                Domain::TwoD => [x, 0.05],
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservationSet {
    pub locations: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub sigma_e: f64,
    pub generation_seed: u64,
}

/// Solve the reference model at the ground-truth parameters and corrupt the
/// observed values with seeded Gaussian noise. The 2D set reuses the 1D
/// values verbatim; only the locations change.
pub fn synthesize_observations(domain: Domain, seed: u64) -> Result<ObservationSet> {
    synthesize_observations_with_sigma(domain, seed, DEFAULT_SIGMA_E)
}

pub fn synthesize_observations_with_sigma(
    domain: Domain,
    seed: u64,
    sigma_e: f64,
) -> Result<ObservationSet> {
    let mesh = uniform_mesh_1d(REFERENCE_ELEMENTS)?;
    let sol = assemble_and_solve(&mesh, &crate::field::reference_params())?;
    let locs_1d = observation_locations(Domain::OneD);
    let mut values = sol.evaluate(&locs_1d)?;
    let mut rng = stream(seed, 0);
    for v in &mut values {
        let z: f64 = rng.sample(StandardNormal);
        *v += sigma_e * z;
    }
    Ok(ObservationSet {
        locations: observation_locations(domain),
        values,
        sigma_e,
        generation_seed: seed,
    })
}

/// Standard normal prior over the parameter vector.
pub fn log_prior(params: &ParamVector) -> f64 {
    let sq: f64 = params.xi().iter().map(|x| x * x).sum();
    -0.5 * sq - 0.5 * NUM_MODES as f64 * (2.0 * std::f64::consts::PI).ln()
}

/// Log-density of `obs.values` under N(predicted, sigma_e^2 I).
pub fn gaussian_loglik(obs: &ObservationSet, predicted: &[f64]) -> f64 {
    let mut sq = 0.0;
    for (y, o) in obs.values.iter().zip(predicted) {
        let r = (y - o) / obs.sigma_e;
        sq += r * r;
    }
    -0.5 * sq
        - obs.values.len() as f64 * (obs.sigma_e * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

/// Deterministic FEM likelihood on a fixed mesh.
pub fn log_likelihood_fem(params: &ParamVector, obs: &ObservationSet, mesh: &Mesh) -> Result<f64> {
    let sol = assemble_and_solve(mesh, params)?;
    let predicted = sol.evaluate(&obs.locations)?;
    Ok(gaussian_loglik(obs, &predicted))
}

/// Max-shifted log-sum-exp.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Monte Carlo estimate of the mesh-marginal likelihood: the log of the
/// arithmetic mean of the per-mesh Gaussian densities over `m` fresh
/// perturbed meshes.
pub fn log_likelihood_mcwm(
    params: &ParamVector,
    obs: &ObservationSet,
    reference_mesh: &Mesh,
    scheme: &PerturbationScheme,
    m: usize,
    rng: &mut Stream,
) -> Result<f64> {
    assert!(m >= 1);
    let mut lls = Vec::with_capacity(m);
    for _ in 0..m {
        let perturbed = perturb(reference_mesh, scheme, rng)?;
        let sol = assemble_and_solve(&perturbed, params)?;
        let predicted = sol.evaluate(&obs.locations)?;
        lls.push(gaussian_loglik(obs, &predicted));
    }
    Ok(logsumexp(&lls) - (m as f64).ln())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum LikelihoodSpec {
    DeterministicFem,
    Mcwm { m: usize },
    Mwmc { m: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub initial_state: ParamVector,
    pub target_acceptance: f64,
    pub adapt_interval: usize,
    pub seed: u64,
}

impl ChainConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            burn_in: 10_000,
            samples: 10_000,
            initial_state: ParamVector::zeros(),
            target_acceptance: 0.3,
            adapt_interval: 200,
            seed,
        }
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        assert!(scale > 0.0);
        self.burn_in = ((self.burn_in as f64 * scale).round() as usize).max(1);
        self.samples = ((self.samples as f64 * scale).round() as usize).max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.burn_in == 0 || self.samples == 0 {
            return Err(Error::Config("burn_in and samples must be positive".into()));
        }
        if !(0.0 < self.target_acceptance && self.target_acceptance < 1.0) {
            return Err(Error::Config("target_acceptance must lie in (0,1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PosteriorSamples {
    pub draws: Vec<[f64; NUM_MODES]>,
    pub acceptance_ratio: f64,
    pub proposal_scale_final: f64,
    pub config: ChainConfig,
    pub likelihood: LikelihoodSpec,
}

#[inline]
fn metropolis_accept(rng: &mut Stream, log_post_proposal: f64, log_post_current: f64) -> bool {
    if log_post_proposal >= log_post_current {
        return true;
    }
    let u: f64 = rng.gen();
    u.ln() < log_post_proposal - log_post_current
}

/// Random walk Metropolis with isotropic Gaussian proposals.
///
/// The proposal scale starts at 1 (proposal covariance equal to the prior) and
/// adapts every `adapt_interval` steps during burn-in by
/// `s <- s * exp(rate - target)`; after burn-in it is frozen.
///
/// `log_post` may be a stochastic estimate drawing from the supplied stream.
/// With `refresh_current` the retained state's estimate is recomputed every
/// iteration (Monte Carlo within Metropolis); without it the accepted
/// estimate is carried, which is the pseudo-marginal discipline.
pub fn run_rwm<F>(
    mut log_post: F,
    refresh_current: bool,
    config: &ChainConfig,
    likelihood: LikelihoodSpec,
) -> Result<PosteriorSamples>
where
    F: FnMut(&ParamVector, &mut Stream) -> Result<f64>,
{
    config.validate()?;
    let mut rng = stream(config.seed, 0);
    let mut current = config.initial_state;
    let mut lp_current = log_post(&current, &mut rng)?;
    if !lp_current.is_finite() {
        return Err(Error::NonFiniteInit);
    }
    let mut scale = 1.0f64;
    let total = config.burn_in + config.samples;
    let mut draws = Vec::with_capacity(config.samples);
    let mut window_accepts = 0usize;
    let mut post_accepts = 0usize;
    for it in 0..total {
        if refresh_current {
            lp_current = log_post(&current, &mut rng)?;
        }
        let mut proposal = *current.xi();
        for p in &mut proposal {
            let z: f64 = rng.sample(StandardNormal);
            *p += scale * z;
        }
        let proposal = ParamVector::new(proposal);
        let lp_proposal = log_post(&proposal, &mut rng)?;
        if metropolis_accept(&mut rng, lp_proposal, lp_current) {
            current = proposal;
            lp_current = lp_proposal;
            window_accepts += 1;
            if it >= config.burn_in {
                post_accepts += 1;
            }
        }
        if it < config.burn_in {
            if (it + 1) % config.adapt_interval == 0 {
                let rate = window_accepts as f64 / config.adapt_interval as f64;
                scale *= (rate - config.target_acceptance).exp();
                window_accepts = 0;
            }
            if it + 1 == config.burn_in {
                window_accepts = 0;
            }
        } else {
            draws.push(*current.xi());
        }
    }
    Ok(PosteriorSamples {
        draws,
        acceptance_ratio: post_accepts as f64 / config.samples as f64,
        proposal_scale_final: scale,
        config: config.clone(),
        likelihood,
    })
}

/// Deterministic-likelihood posterior (prior + FEM likelihood on one mesh).
pub fn fem_log_posterior<'a>(
    obs: &'a ObservationSet,
    mesh: &'a Mesh,
) -> impl FnMut(&ParamVector, &mut Stream) -> Result<f64> + 'a {
    move |params, _rng| Ok(log_prior(params) + log_likelihood_fem(params, obs, mesh)?)
}

/// Mesh-marginal posterior estimate (prior + MCwM likelihood).
pub fn mcwm_log_posterior<'a>(
    obs: &'a ObservationSet,
    reference_mesh: &'a Mesh,
    scheme: &'a PerturbationScheme,
    m: usize,
) -> impl FnMut(&ParamVector, &mut Stream) -> Result<f64> + 'a {
    move |params, rng| {
        Ok(log_prior(params)
            + log_likelihood_mcwm(params, obs, reference_mesh, scheme, m, rng)?)
    }
}

/// Metropolis within Monte Carlo: one deterministic-likelihood chain per
/// perturbed mesh, pooled into a single sample set of `m * samples` draws.
pub fn run_mwmc(
    obs: &ObservationSet,
    reference_mesh: &Mesh,
    scheme: &PerturbationScheme,
    m: usize,
    config: &ChainConfig,
) -> Result<PosteriorSamples> {
    assert!(m >= 1);
    config.validate()?;
    // one perturbation stream and one seed per chain, all derived from the
    // experiment seed so results do not depend on scheduling
    let mut meshes = Vec::with_capacity(m);
    for j in 0..m {
        let mut rng = stream(config.seed, 1 + j as u64);
        meshes.push(perturb(reference_mesh, scheme, &mut rng)?);
    }
    let mut seeder = stream(config.seed, 0);
    let seeds: Vec<u64> = (0..m).map(|_| seeder.gen()).collect();
    use rayon::prelude::*;
    let chains: Result<Vec<PosteriorSamples>> = meshes
        .par_iter()
        .zip(seeds)
        .map(|(mesh, seed)| {
            let cfg = ChainConfig { seed, ..config.clone() };
            run_rwm(
                fem_log_posterior(obs, mesh),
                false,
                &cfg,
                LikelihoodSpec::DeterministicFem,
            )
        })
        .collect();
    let chains = chains?;
    let mut draws = Vec::with_capacity(m * config.samples);
    let mut acc = 0.0;
    let mut scale = 0.0;
    for c in &chains {
        draws.extend_from_slice(&c.draws);
        acc += c.acceptance_ratio;
        scale += c.proposal_scale_final;
    }
    Ok(PosteriorSamples {
        draws,
        acceptance_ratio: acc / m as f64,
        proposal_scale_final: scale / m as f64,
        config: config.clone(),
        likelihood: LikelihoodSpec::Mwmc { m },
    })
}
