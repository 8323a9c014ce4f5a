use std::f64::consts::FRAC_1_SQRT_2;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn glsd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glsd")).args(args).env_remove("GLSD_OUT_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).take_while(|l| !l.is_empty()).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn solve_square() {
    let o = glsd(&["solve", "--lattice", "square", "--H", "0.3", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!((v["internal"].as_f64().unwrap() - 0.167132).abs() < 1e-6);
    assert_eq!(v["vanishing"], Value::Bool(false));
    assert!(v["bkn_defect"].as_f64().unwrap() < 1e-8);
    assert!((v["zero_x"].as_f64().unwrap() - 0.5).abs() < 1.0 / 64.0);
}

#[test]
fn solve_at_the_bifurcation_point() {
    let o = glsd(&["solve", "--lattice", "square", "--H", "0.7071068", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["vanishing"], Value::Bool(true));
    assert_eq!(v["branch"], "normal_limit");
    assert_eq!(v["density"].as_f64(), Some(0.0));
}

#[test]
fn solve_hexagonal_fine_grid() {
    let o = glsd(&["solve", "--lattice", "hex", "--H", "0.3", "--grid", "128", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["grid"].as_i64(), Some(128));
    for key in ["d_plus_residual", "field_residual", "final_residual"] {
        assert!(v[key].as_f64().unwrap() < 1e-8, "{key}");
    }
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(glsd(&["solve", "--H", "0.8"]).status.code(), Some(2));
    assert_eq!(glsd(&["solve"]).status.code(), Some(2));
    assert_eq!(glsd(&["solve", "--H", "abc"]).status.code(), Some(2));
    assert_eq!(glsd(&["solve", "--H", "0.3", "--grid", "7"]).status.code(), Some(2));
    assert_eq!(glsd(&["solve", "--H", "0.3", "--lattice", "hex", "--u", "1.1"]).status.code(), Some(2));
    assert_eq!(glsd(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "H = 0.3\ncolour = red\n").unwrap();
    let o = glsd(&["solve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn solver_failure_reports_diagnostics() {
    let o = glsd(&["solve", "--H", "0.3", "--tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(3));
    let diag: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(diag["error"], "solver");
    assert!(diag["residual_history"].as_array().unwrap().len() > 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# solve settings\nlattice = square\nH = 0.5\ngrid = 32\nformat = json\n").unwrap();
    let o = glsd(&["solve", "--config", cfg.to_str().unwrap(), "--H", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["H_int"].as_f64(), Some(0.3));
    assert_eq!(v["grid"].as_i64(), Some(32));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_glsd"))
        .args(["solve", "--H", "0.3"])
        .env("GLSD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    assert!(text.starts_with("u,w,grid,H_int"));
}

#[test]
fn chi_sweep_single_point() {
    let o = glsd(&["chi-sweep", "--H-grid", "0.3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("H_int,chi,curl_energy\n"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    let summary: Value = serde_json::from_slice(&o.stderr).unwrap();
    let chi: f64 = rows[0][1].parse().unwrap();
    assert_eq!(summary["S_grid_sup"].as_f64(), Some(chi));
    assert_eq!(summary["S_extrapolated"].as_f64(), Some(chi));
}

#[test]
fn chi_sweep_default_grid_is_monotone_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, jobs) in [(&a, "1"), (&b, "3")] {
        let o = glsd(&["chi-sweep", "--lattice", "square", "--out", d.to_str().unwrap(), "--jobs", jobs]);
        assert_eq!(o.status.code(), Some(0));
    }
    let ta = fs::read(a.join("chi_sweep.csv")).unwrap();
    assert_eq!(ta, fs::read(b.join("chi_sweep.csv")).unwrap());
    let rows = csv_rows(std::str::from_utf8(&ta).unwrap());
    assert_eq!(rows.len(), 17);
    let chis: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(chis.windows(2).all(|w| w[1] > w[0]));
    assert!(chis.iter().all(|c| *c > 0.0 && *c < 1.0));
}

#[test]
fn partial_sweep_keeps_completed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = glsd(&["chi-sweep", "--H-grid", "0.3,0.01", "--out", dir.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let rows = csv_rows(&fs::read_to_string(dir.path().join("chi_sweep.csv")).unwrap());
    assert_eq!(rows.len(), 1);
}

#[test]
fn phase_diagram_and_classification() {
    let o = glsd(&["phase", "--classify", "1.0,0.71", "--classify", "0.5,0.9", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    let diagram = v["diagram"].as_array().unwrap();
    let triple = diagram.iter().find(|r| (r["k"].as_f64().unwrap() - FRAC_1_SQRT_2).abs() < 1e-11).unwrap();
    for key in ["hc1_lower", "hc1_upper", "hc2"] {
        assert!((triple[key].as_f64().unwrap() - FRAC_1_SQRT_2).abs() < 1e-11, "{key}");
    }
    let classes = v["classification"].as_array().unwrap();
    assert_eq!(classes[0]["phase"], "Mixed");
    assert_eq!(classes[1]["phase"], "Normal");

    let dir = tempfile::tempdir().unwrap();
    let o = glsd(&["phase", "--classify", "1.0,0.71", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("phase.csv")).unwrap();
    assert!(csv.starts_with("k,hc1_lower,hc1_upper,hc2\n"));
    assert!(csv.contains("\n7.07106781187e-1,7.07106781187e-1,7.07106781187e-1,7.07106781187e-1\n"));
    assert!(Path::new(&dir.path().join("classify.csv")).exists());
}

fn checks(v: &Value) -> Vec<(String, bool)> {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["name"].as_str().unwrap().to_string(), c["pass"].as_bool().unwrap()))
        .collect()
}

#[test]
fn verify_default_passes() {
    let o = glsd(&["verify"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["passed"], Value::Bool(true));
    assert!(checks(&v).iter().all(|(_, p)| *p));
    let bkn = v["checks"].as_array().unwrap().iter().filter(|c| c["name"].as_str().unwrap().starts_with("bkn"));
    assert!(bkn.map(|c| c["value"].as_f64().unwrap()).all(|x| x < 1e-8));
    assert!(v["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn verify_coarse_grid_warns() {
    let o = glsd(&["verify", "--grid", "8"]);
    assert_eq!(o.status.code(), Some(4));
    let v = json(&o);
    assert!(v["refinement_drift"].as_f64().unwrap() > 1e-6);
    assert!(v["warnings"].as_array().unwrap().iter().any(|w| w.as_str().unwrap().contains("coarse")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn verify_fault_injection_separates_identities() {
    let o = glsd(&["verify", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(4));
    let c = checks(&json(&o));
    assert!(c.iter().filter(|(n, _)| n.starts_with("bkn")).all(|(_, p)| *p));
    assert!(c.iter().filter(|(n, _)| n.starts_with("identity.density")).all(|(_, p)| !*p));
}
