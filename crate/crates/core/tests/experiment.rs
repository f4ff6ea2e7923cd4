use std::fs;
use std::path::Path;

use stochpm::config::ExperimentConfig;
use stochpm::experiment::{run, Command};
use stochpm::Error;

fn small(dir: &Path, extra: &[&str]) -> ExperimentConfig {
    let mut ov: Vec<String> = [
        "run.horizon=20.0",
        "noise.n_past=1500",
        "noise.spinup=500",
        "diagnostics.t1=5.0",
        "diagnostics.t2=20.0",
        "diagnostics.burnin=2.0",
        "diagnostics.acf_max_lag=2.0",
        "pullback.xi_points=3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    ov.push(format!("output={:?}", dir.display().to_string()));
    ov.extend(extra.iter().map(|s| s.to_string()));
    ExperimentConfig::load(None, &ov).unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn every_subcommand_writes_csv_and_manifest() {
    for cmd in Command::ALL {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small(tmp.path(), &[]);
        let a = run(cmd, &cfg).unwrap_or_else(|e| panic!("{}: {e}", cmd.name()));
        assert!(!a.files.is_empty(), "{}", cmd.name());
        for f in &a.files {
            let text = fs::read_to_string(f).unwrap();
            assert!(text.lines().count() >= 2, "{} has no rows", f.display());
        }
        let m = manifest(&a.dir);
        assert_eq!(m["command"], cmd.name());
        assert_eq!(m["seed"], 1);
        assert!(m["error"].is_null());
        assert_eq!(m["noise_digest"].as_str().unwrap().len(), 64);
    }
}

#[test]
fn dumped_noise_reproduces_the_run() {
    let a_dir = tempfile::tempdir().unwrap();
    let b_dir = tempfile::tempdir().unwrap();
    let a = run(Command::SimulateReduced, &small(a_dir.path(), &["noise.dump=true", "noise.seed=7"])).unwrap();
    let bin = a.dir.join("noise.bin");
    assert!(bin.exists());
    let load = format!("noise.load={:?}", bin.display().to_string());
    // a different seed is ignored once increments are loaded
    let b = run(Command::SimulateReduced, &small(b_dir.path(), &[&load, "noise.seed=99"])).unwrap();
    let read = |d: &Path| fs::read(d.join("reduced.csv")).unwrap();
    assert_eq!(read(&a.dir), read(&b.dir));
    assert_eq!(manifest(&a.dir)["noise_digest"], manifest(&b.dir)["noise_digest"]);
}

#[test]
fn loaded_noise_with_wrong_shape_is_rejected() {
    let a_dir = tempfile::tempdir().unwrap();
    let b_dir = tempfile::tempdir().unwrap();
    run(Command::SimulateReduced, &small(a_dir.path(), &["noise.dump=true"])).unwrap();
    let load = format!("noise.load={:?}", a_dir.path().join("noise.bin").display().to_string());
    let err = run(Command::SimulateReduced, &small(b_dir.path(), &[&load, "run.horizon=40.0"])).unwrap_err();
    assert_eq!(err.exit_code(), 2, "{err}");
}

#[test]
fn subcritical_deterministic_run_decays() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(
        tmp.path(),
        &["model.sigma=0.0", "model.lambda_factor=0.5", "run.u0=[[1, 0.1]]", "run.horizon=200.0", "diagnostics.t2=200.0"],
    );
    let a = run(Command::SimulateSpde, &cfg).unwrap();
    let s = &a.summary;
    assert_eq!(s["decaying"], true);
    assert!(s["final_energy"].as_f64().unwrap() < 1e-3 * s["initial_energy"].as_f64().unwrap());
    // a lone first mode decays at β₁ = λ − λ_c = −0.5λ_c
    let beta1 = -0.5 * 0.32;
    let rate = s["growth_rate"].as_f64().unwrap();
    assert!((rate - beta1).abs() < 0.01 * beta1.abs(), "rate {rate}");
}

#[test]
fn memory_stats_reports_bounds_and_flags_inadmissible_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run(Command::MemoryStats, &small(tmp.path(), &[])).unwrap();
    let reps = a.summary["reports"].as_array().unwrap();
    assert_eq!(reps.len(), 2);
    let first = &reps[0];
    assert!((first["g"].as_f64().unwrap() - 1.824).abs() < 1e-9);
    assert!((first["sigma_sharp"].as_f64().unwrap() - 1.3506).abs() < 1e-4);
    let s_star = first["sigma_star"].as_f64().unwrap();
    assert!((s_star - (2.0f64 * 1.824).sqrt()).abs() < 1e-12);
    assert!((s_star - 1.9105).abs() < 1e-3);
    assert_eq!(first["admissible_variance"], true);

    // σ_# < σ < σ_* for the first gap: mean exists, variance does not
    let tmp = tempfile::tempdir().unwrap();
    let err = run(Command::MemoryStats, &small(tmp.path(), &["model.sigma=1.5"])).unwrap_err();
    assert!(matches!(err, Error::Gap { .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
    let m = manifest(tmp.path());
    assert!(m["error"].is_string());
    assert_eq!(m["summary"]["reports"][0]["admissible_mean"], true);
    assert_eq!(m["summary"]["reports"][0]["admissible_variance"], false);
}

#[test]
fn invalid_parameters_map_to_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let d = format!("output={:?}", tmp.path().display().to_string());
    for bad in ["model.nu=-1.0", "grid.dt=0.0", "run.decimation=0", "reduction.variant=\"nope\"", "model.bogus=1"] {
        let err = ExperimentConfig::load(None, &[d.clone(), bad.to_string()]).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{bad}: {err}");
    }
}

#[test]
fn defect_sweep_table_has_one_row_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small(
        tmp.path(),
        &["sweep.lambda_factors=[1.5, 3.0]", "sweep.sigmas=[0.2]", "sweep.q=[1, 2, 3]", "sweep.tau=[2.0, 4.0]"],
    );
    let a = run(Command::Defect, &cfg).unwrap();
    let matrix = fs::read_to_string(a.dir.join("defect_matrix.csv")).unwrap();
    let mut lines = matrix.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 3 + 3);
    assert_eq!(lines.count(), 2 * 2);
    for p in a.summary["points"].as_array().unwrap() {
        for row in p["rows"].as_array().unwrap() {
            for q in row["qbar"].as_array().unwrap() {
                let v = q.as_f64().unwrap();
                assert!(v.is_finite() && v >= 0.0);
            }
        }
    }
}
