//! Experiment orchestration: seeded end-to-end runs emitting machine-readable
//! CSV artifacts with JSON provenance sidecars.

use crate::analysis::{energy_distribution, error_report, posterior_summary, SummaryRow};
use crate::error::{Error, Result};
use crate::fem::{assemble_and_solve, FemSolution};
use crate::field::{reference_params, ParamVector};
use crate::inverse::{
    fem_log_posterior, mcwm_log_posterior, observation_locations, run_rwm,
    synthesize_observations, ChainConfig, Domain, LikelihoodSpec, ObservationSet,
    PosteriorSamples, REFERENCE_ELEMENTS,
};
use crate::mesh::{
    fixed_observation_nodes, perturb, strip_mesh_2d, uniform_mesh_1d, Mesh, PerturbationScheme,
    OBSERVATION_TOL,
};
use crate::rng::stream;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    ForwardDemo,
    Posterior,
    Interpolation,
    Energy,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fem,
    Rmfem,
    RmfemFixedObs,
}

impl Method {
    fn label(&self, domain: Domain) -> &'static str {
        match (self, domain) {
            (Method::Fem, _) => "fem",
            (Method::Rmfem, Domain::OneD) => "rmfem_1d",
            (Method::Rmfem, Domain::TwoD) => "rmfem_2d",
            (Method::RmfemFixedObs, _) => "rmfem_fixed_obs_1d",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub domain: Domain,
    pub method: Method,
    /// Element counts n (h = 1/n).
    pub h_list: Vec<usize>,
    /// Perturbed meshes per likelihood evaluation.
    pub m: usize,
    pub chain: ChainConfig,
    pub seed: u64,
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub scale: f64,
    #[serde(skip)]
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            domain: Domain::OneD,
            method: Method::Fem,
            h_list: vec![10, 20, 40],
            m: 10,
            chain: ChainConfig::new(0),
            seed: 0,
            out_dir: PathBuf::from("out"),
            scale: 1.0,
            threads: 0,
        }
    }

    /// Chain configuration after applying the run scale factor.
    pub fn scaled_chain(&self) -> ChainConfig {
        self.chain.clone().scaled(self.scale)
    }

    pub fn validate(&self) -> Result<()> {
        if self.h_list.is_empty() {
            return Err(Error::Config("h_list must be nonempty".into()));
        }
        if !self.scale.is_finite() || self.scale <= 0.0 {
            return Err(Error::Config("scale must be positive".into()));
        }
        if self.m < 1 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        for &n in &self.h_list {
            if n < 2 {
                return Err(Error::Config(format!("h = 1/{n} is too coarse")));
            }
            if self.domain == Domain::TwoD && n % 10 != 0 {
                return Err(Error::Config(format!(
                    "2D strip meshes need n to be a multiple of 10, got {n}"
                )));
            }
        }
        if self.method == Method::RmfemFixedObs {
            // observation points must be nodal on every requested mesh
            let locations = observation_locations(self.domain);
            for &n in &self.h_list {
                let mesh = build_mesh(self.domain, n)
                    .map_err(|e| Error::Config(e.to_string()))?;
                fixed_observation_nodes(&mesh, &locations, OBSERVATION_TOL).map_err(|e| {
                    Error::Config(format!(
                        "fixed-observation method needs nodal observation points: {e}"
                    ))
                })?;
            }
        }
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }

    /// Apply `key = value` settings from a flat config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            pairs.insert(k.trim().to_string(), v.trim().to_string());
        }
        for (k, v) in pairs {
            self.apply_key(&k, &v)?;
        }
        Ok(())
    }

    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid {what}: {value}"));
        match key {
            "domain" => {
                self.domain = match value {
                    "1d" => Domain::OneD,
                    "2d" => Domain::TwoD,
                    _ => return Err(bad("domain")),
                }
            }
            "method" => {
                self.method = match value {
                    "fem" => Method::Fem,
                    "rmfem" => Method::Rmfem,
                    "rmfem_fixed_obs" => Method::RmfemFixedObs,
                    _ => return Err(bad("method")),
                }
            }
            "h_list" => {
                self.h_list = value
                    .split(',')
                    .map(|s| s.trim().parse::<usize>().map_err(|_| bad("h_list")))
                    .collect::<Result<_>>()?;
            }
            "m" => self.m = value.parse().map_err(|_| bad("m"))?,
            "burn_in" => self.chain.burn_in = value.parse().map_err(|_| bad("burn_in"))?,
            "samples" => self.chain.samples = value.parse().map_err(|_| bad("samples"))?,
            "target_acceptance" => {
                self.chain.target_acceptance =
                    value.parse().map_err(|_| bad("target_acceptance"))?
            }
            "adapt_interval" => {
                self.chain.adapt_interval = value.parse().map_err(|_| bad("adapt_interval"))?
            }
            "seed" => {
                self.seed = value.parse().map_err(|_| bad("seed"))?;
                self.chain.seed = self.seed;
            }
            "scale" => self.scale = value.parse().map_err(|_| bad("scale"))?,
            "threads" => self.threads = value.parse().map_err(|_| bad("threads"))?,
            "out" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

fn build_mesh(domain: Domain, n: usize) -> Result<Mesh> {
    match domain {
        Domain::OneD => uniform_mesh_1d(n),
        Domain::TwoD => strip_mesh_2d(n),
    }
}

fn build_scheme(domain: Domain, mesh: &Mesh, method: Method, obs: &ObservationSet) -> Result<PerturbationScheme> {
    let base = match domain {
        Domain::OneD => PerturbationScheme::uniform_1d(),
        Domain::TwoD => PerturbationScheme::disk_2d(),
    };
    if method == Method::RmfemFixedObs {
        let fixed = fixed_observation_nodes(mesh, &obs.locations, OBSERVATION_TOL)?;
        Ok(base.with_fixed_nodes(fixed))
    } else {
        Ok(base)
    }
}

/// Run one posterior chain for a (method, domain, h) combination.
pub fn run_method_chain(
    method: Method,
    domain: Domain,
    n: usize,
    obs: &ObservationSet,
    m: usize,
    chain: &ChainConfig,
) -> Result<PosteriorSamples> {
    let mesh = build_mesh(domain, n)?;
    match method {
        Method::Fem => run_rwm(
            fem_log_posterior(obs, &mesh),
            false,
            chain,
            LikelihoodSpec::DeterministicFem,
        ),
        Method::Rmfem | Method::RmfemFixedObs => {
            let scheme = build_scheme(domain, &mesh, method, obs)?;
            run_rwm(
                mcwm_log_posterior(obs, &mesh, &scheme, m),
                true,
                chain,
                LikelihoodSpec::Mcwm { m },
            )
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TableRow {
    pub method: &'static str,
    pub n: usize,
    pub param: usize,
    pub mean: f64,
    pub std: f64,
    pub error: f64,
}

#[derive(Clone, Debug)]
pub struct TableOutput {
    pub rows: Vec<TableRow>,
    pub acceptance: Vec<(&'static str, usize, f64)>,
}

/// The four Table-1 method columns.
pub const TABLE_COLUMNS: [(Method, Domain); 4] = [
    (Method::Fem, Domain::OneD),
    (Method::Rmfem, Domain::OneD),
    (Method::RmfemFixedObs, Domain::OneD),
    (Method::Rmfem, Domain::TwoD),
];

/// Run all method columns over all h values and emit the combined summary.
pub fn cmd_table(config: &ExperimentConfig) -> Result<TableOutput> {
    config.validate()?;
    let truth = reference_params();
    let obs_1d = synthesize_observations(Domain::OneD, config.seed)?;
    let obs_2d = synthesize_observations(Domain::TwoD, config.seed)?;
    let chain = config.scaled_chain();
    let jobs: Vec<(usize, (Method, Domain), usize)> = TABLE_COLUMNS
        .iter()
        .flat_map(|&col| config.h_list.iter().map(move |&n| (col, n)))
        .enumerate()
        .map(|(i, (col, n))| (i, col, n))
        .collect();
    let results: Result<Vec<(PosteriorSamples, Vec<SummaryRow>)>> = jobs
        .par_iter()
        .map(|&(job, (method, domain), n)| {
            let obs = match domain {
                Domain::OneD => &obs_1d,
                Domain::TwoD => &obs_2d,
            };
            let mut cfg = chain.clone();
            cfg.seed = stream(config.seed, 100 + job as u64).gen();
            let samples = run_method_chain(method, domain, n, obs, config.m, &cfg)?;
            let summary = posterior_summary(&samples, &truth);
            Ok((samples, summary))
        })
        .collect();
    let results = results?;
    let mut rows = Vec::with_capacity(jobs.len() * 4);
    let mut acceptance = Vec::new();
    for (&(_, (method, domain), n), (samples, summary)) in jobs.iter().zip(&results) {
        let label = method.label(domain);
        acceptance.push((label, n, samples.acceptance_ratio));
        for s in summary {
            rows.push(TableRow {
                method: label,
                n,
                param: s.param,
                mean: s.mean,
                std: s.std,
                error: s.error,
            });
        }
    }
    let mut csv = String::from("method,h,param,mean,std,error\n");
    for r in &rows {
        writeln!(csv, "{},1/{},{},{},{},{}", r.method, r.n, r.param, r.mean, r.std, r.error)
            .unwrap();
    }
    write_artifact(config, "table.csv", &csv)?;
    Ok(TableOutput { rows, acceptance })
}

/// Reference solution, unperturbed FEM fit and 100 perturbed-mesh samples.
pub fn cmd_forward_demo(config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    let params = reference_params();
    let n = config.h_list[0];
    let obs = synthesize_observations(Domain::OneD, config.seed)?;
    let reference = assemble_and_solve(&uniform_mesh_1d(REFERENCE_ELEMENTS)?, &params)?;
    let mesh = uniform_mesh_1d(n)?;
    let fem = assemble_and_solve(&mesh, &params)?;
    let scheme = PerturbationScheme::uniform_1d();
    let mut curves = String::from("curve,x,u\n");
    let emit = |csv: &mut String, name: &str, sol: &FemSolution| {
        for (node, u) in sol.mesh.nodes.iter().zip(&sol.nodal_values) {
            writeln!(csv, "{},{},{}", name, node[0], u).unwrap();
        }
    };
    emit(&mut curves, "reference", &reference);
    emit(&mut curves, "fem", &fem);
    let mut rng = stream(config.seed, 1);
    for i in 0..100 {
        let p = perturb(&mesh, &scheme, &mut rng)?;
        let sol = assemble_and_solve(&p, &params)?;
        emit(&mut curves, &format!("sample_{i:03}"), &sol);
    }
    write_artifact(config, "forward_curves.csv", &curves)?;
    let mut obs_csv = String::from("x,y\n");
    for (loc, y) in obs.locations.iter().zip(&obs.values) {
        writeln!(obs_csv, "{},{}", loc[0], y).unwrap();
    }
    write_artifact(config, "forward_observations.csv", &obs_csv)?;
    Ok(())
}

/// Full MCMC pipeline for the configured method over each h; writes draws and
/// a summary.
pub fn cmd_posterior(config: &ExperimentConfig) -> Result<Vec<(usize, Vec<SummaryRow>)>> {
    config.validate()?;
    let truth = reference_params();
    let obs = synthesize_observations(config.domain, config.seed)?;
    let chain = config.scaled_chain();
    let results: Result<Vec<(usize, PosteriorSamples)>> = config
        .h_list
        .par_iter()
        .enumerate()
        .map(|(job, &n)| {
            let mut cfg = chain.clone();
            cfg.seed = stream(config.seed, 100 + job as u64).gen();
            let samples = run_method_chain(config.method, config.domain, n, &obs, config.m, &cfg)?;
            Ok((n, samples))
        })
        .collect();
    let results = results?;
    let label = config.method.label(config.domain);
    let mut summary_csv = String::from("method,h,param,mean,std,error\n");
    let mut out = Vec::new();
    for (n, samples) in &results {
        let mut draws_csv = String::from("xi1,xi2,xi3,xi4\n");
        for d in &samples.draws {
            writeln!(draws_csv, "{},{},{},{}", d[0], d[1], d[2], d[3]).unwrap();
        }
        let name = format!("posterior_{label}_n{n}.csv");
        write_artifact(config, &name, &draws_csv)?;
        let sidecar = serde_json::json!({
            "seed": samples.config.seed,
            "config": samples.config,
            "likelihood": samples.likelihood,
            "acceptance_ratio": samples.acceptance_ratio,
            "proposal_scale_final": samples.proposal_scale_final,
        });
        std::fs::write(
            config.out_dir.join(format!("{name}.meta.json")),
            serde_json::to_string_pretty(&sidecar)?,
        )?;
        let summary = posterior_summary(samples, &truth);
        for s in &summary {
            writeln!(
                summary_csv,
                "{},1/{},{},{},{},{}",
                label, n, s.param, s.mean, s.std, s.error
            )
            .unwrap();
        }
        out.push((*n, summary));
    }
    write_artifact(config, "posterior_summary.csv", &summary_csv)?;
    Ok(out)
}

/// Error decomposition at the ground truth plus the posterior-mean curves on
/// the unperturbed mesh and on a single perturbed mesh.
pub fn cmd_interpolation(config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    let params = reference_params();
    let reference = assemble_and_solve(&uniform_mesh_1d(REFERENCE_ELEMENTS)?, &params)?;
    let mut report_csv = String::from("h,l2,nodal,zeta,eta\n");
    for &n in &config.h_list {
        let sol = assemble_and_solve(&uniform_mesh_1d(n)?, &params)?;
        let r = error_report(&sol, &reference)?;
        writeln!(report_csv, "1/{},{},{},{},{}", n, r.l2_error, r.nodal_error, r.zeta, r.eta)
            .unwrap();
    }
    write_artifact(config, "interpolation_report.csv", &report_csv)?;

    // posterior-mean curves on the unperturbed and a single perturbed mesh
    let n = config.h_list[0];
    let mesh = uniform_mesh_1d(n)?;
    let perturbed = perturb(&mesh, &PerturbationScheme::uniform_1d(), &mut stream(config.seed, 1))?;
    let obs = synthesize_observations(Domain::OneD, config.seed)?;
    let chain = config.scaled_chain();
    let mut curves = String::from("curve,x,u\n");
    let emit = |csv: &mut String, name: &str, sol: &FemSolution| {
        for (node, u) in sol.mesh.nodes.iter().zip(&sol.nodal_values) {
            writeln!(csv, "{},{},{}", name, node[0], u).unwrap();
        }
    };
    emit(&mut curves, "reference", &reference);
    for (idx, (name, m)) in [("unperturbed", &mesh), ("perturbed", &perturbed)]
        .into_iter()
        .enumerate()
    {
        emit(&mut curves, &format!("fem_{name}"), &assemble_and_solve(m, &params)?);
        let mut cfg = chain.clone();
        cfg.seed = stream(config.seed, 200 + idx as u64).gen();
        let samples = run_rwm(
            fem_log_posterior(&obs, m),
            false,
            &cfg,
            LikelihoodSpec::DeterministicFem,
        )?;
        let summary = posterior_summary(&samples, &params);
        let mut mean = [0.0; 4];
        for (k, s) in summary.iter().enumerate() {
            mean[k] = s.mean;
        }
        let mean_sol = assemble_and_solve(m, &ParamVector::new(mean))?;
        emit(&mut curves, &format!("postmean_{name}"), &mean_sol);
    }
    write_artifact(config, "interpolation_curves.csv", &curves)?;
    Ok(())
}

/// Energy distributions over perturbed meshes for each h.
pub fn cmd_energy(config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    let params = reference_params();
    let scheme = PerturbationScheme::uniform_1d();
    let n_samples = (500.0 * config.scale).ceil().max(1.0) as usize;
    for (idx, &n) in config.h_list.iter().enumerate() {
        let mesh = uniform_mesh_1d(n)?;
        let mut rng = stream(config.seed, 300 + idx as u64);
        let d = energy_distribution(&mesh, &scheme, &params, n_samples, &mut rng)?;
        let mut csv = String::from("h,sample_id,energy\n");
        for (i, e) in d.samples.iter().enumerate() {
            writeln!(csv, "1/{n},{i},{e}").unwrap();
        }
        writeln!(csv, "1/{n},unperturbed,{}", d.unperturbed).unwrap();
        writeln!(csv, "1/{n},reference,{}", d.reference).unwrap();
        write_artifact(config, &format!("energy_n{n}.csv"), &csv)?;
    }
    Ok(())
}

/// Write a CSV artifact plus its JSON provenance sidecar.
fn write_artifact(config: &ExperimentConfig, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(&config.out_dir)?;
    let path = config.out_dir.join(name);
    std::fs::write(&path, content)?;
    let sidecar = serde_json::json!({
        "config_hash": config.config_hash(),
        "seed": config.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
    });
    std::fs::write(
        config.out_dir.join(format!("{name}.json")),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}

/// Dispatch an experiment inside a thread pool of the configured size.
pub fn run(config: &ExperimentConfig) -> Result<()> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match config.experiment {
        Experiment::ForwardDemo => cmd_forward_demo(config),
        Experiment::Posterior => cmd_posterior(config).map(|_| ()),
        Experiment::Interpolation => cmd_interpolation(config),
        Experiment::Energy => cmd_energy(config),
        Experiment::Table => cmd_table(config).map(|_| ()),
    })
}
