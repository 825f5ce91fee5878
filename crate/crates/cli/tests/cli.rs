use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn smms(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smms"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("SMMS_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn gaussian_model_is_quasi_einstein() {
    let dir = tempfile::tempdir().unwrap();
    let o = smms(dir.path(), &["model", "--family", "gaussian", "--n", "4", "--m", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "model_summary.json");
    assert!((f(&j["lambda"]) - 1.0).abs() < 1e-8);
    assert!(f(&j["qe_residual"]["max"]) < 1e-8);
    assert!(f(&j["mu_spread"]) < 1e-8);
    let csv = fs::read_to_string(dir.path().join("model_profile.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("r,psi,v,f,K_rad"));
    assert_eq!(lines.count(), 511);
}

#[test]
fn euclidean_model_is_flat_and_infinite_m_has_no_density_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = smms(dir.path(), &["model", "--family", "euclidean", "--m", "0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "model_summary.json");
    assert!(f(&j["lambda"]).abs() < 1e-12);
    assert!(j["mu"].is_null());

    let o = smms(dir.path(), &["model", "--family", "gaussian", "--m", "inf"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "model_summary.json");
    assert_eq!(j["m"], "inf");
    assert!((f(&j["lambda"]) - 1.0).abs() < 1e-8);
    let csv = fs::read_to_string(dir.path().join("model_profile.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "nan");
}

#[test]
fn energy_at_the_characteristic_constant_is_minimized_by_constants() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["energy", "--family", "sphere", "--n", "4", "--m", "2", "--mu", "0.6", "--grid", "257", "--init", "random", "--seed", "3"];
    let o = smms(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "energy_report.json");
    assert_eq!(j["converged"], true);
    assert!(f(&j["final_value"]) <= f(&j["initial_value"]));
    assert!(f(&j["el_residual"]) < 1e-4);
    let csv = fs::read_to_string(dir.path().join("energy_minimizer.csv")).unwrap();
    let w: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let (lo, hi) = w.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!((hi - lo) / hi < 1e-3, "minimizer not constant: [{lo}, {hi}]");
}

#[test]
fn energy_with_zero_iterations_reports_the_initial_guess() {
    let dir = tempfile::tempdir().unwrap();
    let o = smms(dir.path(), &["energy", "--family", "sphere", "--m", "2", "--mu", "0.6", "--grid", "129", "--max-iter", "0"]);
    let j = json(dir.path(), "energy_report.json");
    assert_eq!(j["iterations"], 0);
    assert_eq!(j["initial_value"], j["final_value"]);
    // A constant is already critical on the sphere; otherwise exit 1.
    let expected = if j["converged"] == true { 0 } else { 1 };
    assert_eq!(code(&o), expected);
}

#[test]
fn negative_sigma_gives_zero_renormalized_energy() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["energy", "--family", "sphere", "--n", "4", "--m", "0.5", "--v-amp", "6", "--mu", "1", "--optimize-tau", "--grid", "257"];
    let o = smms(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "energy_report.json");
    assert!(f(&j["sigma"]) < 0.0);
    assert_eq!(f(&j["lambda_bar"]), 0.0);
}

#[test]
fn verify_is_deterministic_and_catches_perturbations() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["verify", "--grid", "129", "--trials", "4", "--seed", "7"];
    let oa = smms(a.path(), &[&args[..], &["--jobs", "1"]].concat());
    let ob = smms(b.path(), &[&args[..], &["--jobs", "3"]].concat());
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stdout));
    assert_eq!(code(&ob), 0);
    let ja = fs::read(a.path().join("verify_report.json")).unwrap();
    let jb = fs::read(b.path().join("verify_report.json")).unwrap();
    assert_eq!(ja, jb);

    let c = tempfile::tempdir().unwrap();
    let oc = smms(c.path(), &["verify", "--grid", "129", "--trials", "4", "--perturb", "0.1"]);
    assert_eq!(code(&oc), 0, "negative controls must fail as expected");
    let text = fs::read_to_string(c.path().join("verify_report.json")).unwrap();
    assert!(text.contains("\"fail\""));
}

#[test]
fn qe_solve_recovers_the_hyperbolic_model() {
    let dir = tempfile::tempdir().unwrap();
    let (n, m) = (4.0, 3.0);
    let k2: f64 = 6.0;
    let mu = format!("{}", (m - 1.0) / k2);
    let f2 = format!("{}", (m + n - 2.0) / k2);
    let o = smms(dir.path(), &["qe-solve", "--n", "4", "--m", "3", "--mu", &mu, "--f2", &f2, "--r-end", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "qe_residual.json");
    assert!((f(&j["lambda"]) - 1.0).abs() < 1e-10);
    assert!(f(&j["qe_scale_residual"]["max"]) < 1e-7);
    let csv = fs::read_to_string(dir.path().join("qe_solution.csv")).unwrap();
    let k = k2.sqrt();
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        assert!((v[1] - k * (v[0] / k).sinh()).abs() < 1e-8);
    }
}

#[test]
fn qe_solve_refinement_is_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = smms(dir.path(), &["qe-solve", "--n", "4", "--m", "3", "--mu", "0.3333333333333333", "--f2", "1.5", "--r-end", "2", "--grid", "129", "--refine", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "qe_residual.json");
    let orders = j["orders"].as_array().unwrap();
    assert_eq!(orders.len(), 2);
    assert!(orders.iter().all(|p| f(p) >= 1.7), "{orders:?}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["qe-solve", "--m", "3", "--mu", "-1"][..],
        &["qe-solve", "--m", "3"],
        &["model", "--n", "2"],
        &["model", "--grid", "10"],
        &["model", "--family", "torus"],
        &["model", "--no-such-flag"],
    ] {
        let o = smms(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "no output on error");
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"family": "gaussian", "n": 3, "m": 5, "grid": 129}"#).unwrap();
    let o = smms(dir.path(), &["model", "--config", cfg.to_str().unwrap(), "--n", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "model_summary.json");
    assert_eq!(j["n"], 5);
    assert_eq!(j["grid"], 129);
    assert_eq!(f(&j["m"]), 5.0);

    fs::write(&cfg, r#"{"grdi": 129}"#).unwrap();
    let o = smms(dir.path(), &["model", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn environment_sets_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_smms"))
        .args(["model", "--grid", "129"])
        .env("SMMS_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("model_summary.json").exists());
}

#[test]
fn sweep_over_m_keeps_value_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = smms(dir.path(), &["sweep", "--param", "m", "--values", "2,5,10", "--grid", "129", "--jobs", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j = json(dir.path(), "sweep.json");
    let values: Vec<f64> = j["points"].as_array().unwrap().iter().map(|p| f(&p["value"])).collect();
    assert_eq!(values, vec![2.0, 5.0, 10.0]);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}
