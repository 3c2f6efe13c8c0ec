use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "helmdd-scenario 1
geometry.cavity = false
geometry.wavenumber = 6.0
geometry.half_width = 0.5
geometry.half_height = 0.4
geometry.pml_thickness = 0.2
discretization.order = 1
discretization.mesh_size = 0.1
solver.random_x0 = true
";

fn helmdd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helmdd")).args(args).output().unwrap()
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_then_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", &format!("{SMALL}diagnostics.spectrum = true\noutput.dir = run\n"));
    let out = helmdd(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("iterations = 1"));
    let run = dir.path().join("run");
    for f in ["residuals.csv", "hr.csv", "plateaus.csv", "spectrum.csv", "manifest.json"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let out = helmdd(&["plot", run.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(run.join("residuals.svg").exists());
    assert!(run.join("spectrum_hr.svg").exists());
}

#[test]
fn out_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "s.cfg", SMALL);
    let target = dir.path().join("elsewhere");
    let out = helmdd(&["run", &cfg, "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("manifest.json").exists());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", &format!("{SMALL}solver.bogus = 1\n"));
    let out = helmdd(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("solver.bogus"));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(helmdd(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(helmdd(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_3_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "adef.cfg",
        &format!("{SMALL}preconditioner.variant = adef\noutput.dir = run\n"),
    );
    let out = helmdd(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let manifest = std::fs::read_to_string(dir.path().join("run/manifest.json")).unwrap();
    assert!(manifest.contains("\"error_kind\": \"numerical\""));
}

#[test]
fn sweep_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "s.cfg",
        &format!("{SMALL}decomposition.subdomains = 2\noutput.dir = run\n"),
    );
    let out = helmdd(&["sweep", &cfg, "--compositions", "0,0;4,0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("n_cs,n_def,iterations,converged,error"));
    assert_eq!(stdout.lines().count(), 3);
    assert_eq!(helmdd(&["sweep", &cfg, "--compositions", "x"]).status.code(), Some(2));

    let out = helmdd(&["export-matrix", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let a = std::fs::read_to_string(dir.path().join("run/A.mtx")).unwrap();
    assert!(a.starts_with("%%MatrixMarket matrix coordinate complex general"));
}
