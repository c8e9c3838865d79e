//! Command-level contracts: artifact shapes, validation failures, exit codes
//! and reproducibility, all at reduced chain scale.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use rmfem::cli::{self, Experiment, ExperimentConfig, Method};
use rmfem::error::Error;
use rmfem::inverse::Domain;

fn config(experiment: Experiment, dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(experiment);
    c.seed = 9001;
    c.scale = 0.01;
    c.out_dir = dir.to_path_buf();
    c
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn forward_demo_emits_reference_fem_and_100_samples() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::ForwardDemo, dir.path());
    cfg.h_list = vec![10];
    cli::cmd_forward_demo(&cfg).unwrap();

    let curves = read(dir.path(), "forward_curves.csv");
    let names: BTreeSet<&str> =
        curves.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names.len(), 102);
    assert!(names.contains("reference") && names.contains("fem"));
    let sample_rows =
        curves.lines().filter(|l| l.starts_with("sample_042,")).count();
    assert_eq!(sample_rows, 11);

    let obs = read(dir.path(), "forward_observations.csv");
    assert_eq!(obs.lines().count(), 5); // header + 4 observation points
}

#[test]
fn forward_demo_is_deterministic() {
    let outputs: Vec<String> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = config(Experiment::ForwardDemo, dir.path());
            cfg.h_list = vec![10];
            cli::cmd_forward_demo(&cfg).unwrap();
            read(dir.path(), "forward_curves.csv")
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn fixed_obs_off_grid_mesh_is_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Posterior, dir.path());
    cfg.method = Method::RmfemFixedObs;
    cfg.h_list = vec![16]; // nodes at j/16 miss the observation points i/5
    match cli::cmd_posterior(&cfg) {
        Err(Error::Config(_)) => {}
        other => panic!("expected config error, got {other:?}"),
    }
    assert!(!dir.path().join("posterior_summary.csv").exists());
}

#[test]
fn posterior_draws_are_seed_reproducible() {
    let outputs: Vec<String> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let mut cfg = config(Experiment::Posterior, dir.path());
            cfg.h_list = vec![10];
            cli::cmd_posterior(&cfg).unwrap();
            read(dir.path(), "posterior_fem_n10.csv")
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
    assert!(outputs[0].starts_with("xi1,xi2,xi3,xi4\n"));
}

#[test]
fn posterior_writes_chain_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Posterior, dir.path());
    cfg.method = Method::Rmfem;
    cfg.h_list = vec![10];
    cli::cmd_posterior(&cfg).unwrap();
    let meta: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "posterior_rmfem_1d_n10.csv.meta.json")).unwrap();
    assert!(meta["acceptance_ratio"].is_number());
    assert_eq!(meta["likelihood"]["Mcwm"]["m"], 10);
}

#[test]
fn energy_emits_one_distribution_per_h() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Energy, dir.path());
    cfg.scale = 0.2; // 100 energy samples per h
    cli::cmd_energy(&cfg).unwrap();
    let mut medians = Vec::new();
    for n in [10usize, 20, 40] {
        let csv = read(dir.path(), &format!("energy_n{n}.csv"));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 100 + 2);
        let value = |l: &str| l.rsplit(',').next().unwrap().parse::<f64>().unwrap();
        let reference = value(lines[lines.len() - 1]);
        assert!(lines[lines.len() - 1].contains("reference"));
        let mut samples: Vec<f64> = lines[1..101].iter().map(|l| value(l)).collect();
        samples.sort_by(f64::total_cmp);
        assert!(samples.iter().all(|&e| e < reference));
        medians.push(samples[50]);
    }
    // refinement shifts the whole distribution toward the reference energy
    assert!(medians[0] < medians[1] && medians[1] < medians[2]);
}

/// Piecewise-linear evaluation of a named curve from the curves CSV.
fn interp(csv: &str, curve: &str, x: f64) -> f64 {
    let pts: Vec<(f64, f64)> = csv
        .lines()
        .filter(|l| l.starts_with(&format!("{curve},")))
        .map(|l| {
            let mut it = l.split(',').skip(1);
            (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
        })
        .collect();
    let i = pts.partition_point(|p| p.0 <= x).clamp(1, pts.len() - 1);
    let ((x0, u0), (x1, u1)) = (pts[i - 1], pts[i]);
    u0 + (u1 - u0) * (x - x0) / (x1 - x0)
}

#[test]
fn interpolation_reports_and_mismatched_posterior_mean() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Interpolation, dir.path());
    cfg.scale = 0.1;
    cli::cmd_interpolation(&cfg).unwrap();

    let report = read(dir.path(), "interpolation_report.csv");
    assert_eq!(report.lines().count(), 4); // header + one row per h
    let first: Vec<&str> = report.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(first[0], "1/10");
    let eta: f64 = first[4].parse().unwrap();
    assert!(eta > 0.8);

    // fitting on a perturbed mesh leaves a visibly larger data mismatch at
    // the observation points than fitting on the uniform mesh
    let curves = read(dir.path(), "interpolation_curves.csv");
    let mismatch = |curve: &str| {
        (1..=4)
            .map(|i| {
                let x = i as f64 / 5.0;
                (interp(&curves, curve, x) - interp(&curves, "reference", x)).abs()
            })
            .fold(0.0, f64::max)
    };
    assert!(mismatch("postmean_perturbed") > mismatch("postmean_unperturbed"));
}

#[test]
fn table_emits_all_48_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Experiment::Table, dir.path());
    let out = cli::cmd_table(&cfg).unwrap();
    assert_eq!(out.rows.len(), 48);
    assert_eq!(out.acceptance.len(), 12);
    let csv = read(dir.path(), "table.csv");
    assert_eq!(csv.lines().count(), 49);
    for method in ["fem", "rmfem_1d", "rmfem_fixed_obs_1d", "rmfem_2d"] {
        assert_eq!(out.rows.iter().filter(|r| r.method == method).count(), 12);
    }
}

#[test]
fn artifacts_carry_provenance_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Experiment::Table, dir.path());
    cli::cmd_table(&cfg).unwrap();
    let sidecar: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "table.csv.json")).unwrap();
    assert_eq!(sidecar["seed"], 9001);
    assert_eq!(sidecar["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(sidecar["config"]["experiment"], "table");
}

#[test]
fn binary_exit_codes_separate_config_errors() {
    let bin = env!("CARGO_BIN_EXE_rmfem");
    let dir = tempfile::tempdir().unwrap();

    let ok = Command::new(bin)
        .args(["energy", "--h", "10", "--scale", "0.01", "--seed", "1"])
        .args(["--out".as_ref(), dir.path().as_os_str()])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let bad = Command::new(bin)
        .args(["posterior", "--method", "rmfem_fixed_obs", "--h", "16"])
        .args(["--out".as_ref(), dir.path().as_os_str()])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2), "{}", String::from_utf8_lossy(&bad.stderr));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let bin = env!("CARGO_BIN_EXE_rmfem");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "seed = 5\nscale = 0.01\nh_list = 10\n").unwrap();

    for (extra, expected_seed) in [(None, 5u64), (Some(["--seed", "6"]), 6)] {
        let out_dir = tempfile::tempdir().unwrap();
        let mut cmd = Command::new(bin);
        cmd.args(["energy".as_ref(), "--config".as_ref(), cfg_path.as_os_str()])
            .args(["--out".as_ref(), out_dir.path().as_os_str()]);
        if let Some(extra) = extra {
            cmd.args(extra);
        }
        assert!(cmd.output().unwrap().status.success());
        let sidecar: serde_json::Value =
            serde_json::from_str(&read(out_dir.path(), "energy_n10.csv.json")).unwrap();
        assert_eq!(sidecar["seed"], expected_seed);
    }
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let bin = env!("CARGO_BIN_EXE_rmfem");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "frobnicate = yes\n").unwrap();
    let out = Command::new(bin)
        .args(["energy".as_ref(), "--config".as_ref(), cfg_path.as_os_str()])
        .args(["--out".as_ref(), dir.path().as_os_str()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn two_d_posterior_round_trips_at_tiny_scale() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(Experiment::Posterior, dir.path());
    cfg.method = Method::Rmfem;
    cfg.domain = Domain::TwoD;
    cfg.h_list = vec![10];
    let summaries = cli::cmd_posterior(&cfg).unwrap();
    assert_eq!(summaries.len(), 1);
    assert_eq!(summaries[0].1.len(), 4);
    assert!(dir.path().join("posterior_rmfem_2d_n10.csv").exists());
}
