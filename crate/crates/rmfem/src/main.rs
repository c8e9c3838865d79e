use clap::{Args, Parser, Subcommand};
use rmfem::cli::{run, Experiment, ExperimentConfig};
use rmfem::Error;
use std::path::PathBuf;
use std::process::ExitCode;

/// Random-mesh FEM experiments for a diffusion inverse problem.
#[derive(Parser)]
#[command(name = "rmfem", version)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reference solution, FEM fit and 100 perturbed-mesh forward samples.
    ForwardDemo(Common),
    /// Posterior sampling for one method over the configured mesh sizes.
    Posterior(Common),
    /// Displacement-error decomposition and posterior-mean curves.
    Interpolation(Common),
    /// Total-energy distributions over perturbed meshes.
    Energy(Common),
    /// All four method columns over all mesh sizes, in one summary table.
    Table(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV artifacts and sidecars.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Uniformly divides burn-in and sample counts (e.g. 0.01 for smoke runs).
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    threads: Option<usize>,
    /// fem | rmfem | rmfem_fixed_obs
    #[arg(long)]
    method: Option<String>,
    /// 1d | 2d
    #[arg(long)]
    domain: Option<String>,
    /// Comma-separated element counts, e.g. 10,20,40
    #[arg(long = "h")]
    h_list: Option<String>,
    /// Perturbed meshes per likelihood evaluation.
    #[arg(long)]
    m: Option<usize>,
}

fn build_config(experiment: Experiment, common: &Common) -> rmfem::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::new(experiment);
    if let Some(path) = &common.config {
        config.apply_file(path)?;
    }
    if let Some(seed) = common.seed {
        config.apply_key("seed", &seed.to_string())?;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(scale) = common.scale {
        config.apply_key("scale", &scale.to_string())?;
    }
    if let Some(threads) = common.threads {
        config.apply_key("threads", &threads.to_string())?;
    }
    if let Some(method) = &common.method {
        config.apply_key("method", method)?;
    }
    if let Some(domain) = &common.domain {
        config.apply_key("domain", domain)?;
    }
    if let Some(h) = &common.h_list {
        config.apply_key("h_list", h)?;
    }
    if let Some(m) = common.m {
        config.apply_key("m", &m.to_string())?;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let args = CliArgs::parse();
    let (experiment, common) = match &args.command {
        Command::ForwardDemo(c) => (Experiment::ForwardDemo, c),
        Command::Posterior(c) => (Experiment::Posterior, c),
        Command::Interpolation(c) => (Experiment::Interpolation, c),
        Command::Energy(c) => (Experiment::Energy, c),
        Command::Table(c) => (Experiment::Table, c),
    };
    let config = match build_config(experiment, common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
