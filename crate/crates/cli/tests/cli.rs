use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ebb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebb"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ebb(&args)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn config(potential: &str, length: usize, thermo: &str, sweep: &str) -> String {
    format!(
        r#"{{
  "sample": {{"length": {length}, "potential": {potential}}},
  "lead_l": {{"kind": "laplacian", "hopping": 1.0, "coupling": 1.0}},
  "lead_r": {{"kind": "laplacian"}},
  "thermo": {thermo},
  "sweep": {sweep}
}}"#
    )
}

const NONEQ: &str = r#"{"beta_l": 1.0, "beta_r": 1.0, "mu_l": 0.5, "mu_r": -0.5}"#;
const EQ: &str = r#"{"beta_l": 2.0, "beta_r": 2.0, "mu_l": 0.1, "mu_r": 0.1}"#;

#[test]
fn fluxes_equilibrium_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eq.json", &config(r#"{"kind": "zero"}"#, 10, EQ, "{}"));
    let out = dir.path().join("out");
    let o = run("fluxes", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out.join("fluxes.json"));
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys.len(), 6);
    for k in ["energy_flux_l", "charge_flux_l", "entropy_flux"] {
        assert!(v[k].as_f64().unwrap().abs() < 1e-12, "{k} = {}", v[k]);
    }
    assert_eq!(v["no_open_channel"], false);
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "fluxes");
    assert_eq!(manifest["config"]["quadrature"]["edge_margin"], 1e-6);
    assert!(manifest["timestamp_unix"].as_u64().unwrap() > 0);
}

#[test]
fn fluxes_nonequilibrium_positive_entropy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &config(r#"{"kind": "zero"}"#, 10, NONEQ, "{}"));
    let out = dir.path().join("out");
    let o = run("fluxes", &cfg, &out, &["--threads", "2"]);
    assert!(o.status.success());
    let v = read_json(&out.join("fluxes.json"));
    assert!(v["entropy_flux"].as_f64().unwrap() > 0.0);
    assert!(v["charge_flux_l"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_errors_exit_two_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = NONEQ.replace("\"beta_l\": 1.0", "\"beta_l\": -1.0");
    let cfg = write_config(dir.path(), "bad.json", &config(r#"{"kind": "zero"}"#, 10, &bad, "{}"));
    let o = run("fluxes", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("thermo.beta_l"));

    let o = run("fluxes", &dir.path().join("missing.json"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_e_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#"{"grid": {"start": -1.9, "stop": 1.9, "count": 500}}"#;
    let anderson = r#"{"kind": "anderson", "amplitude": 1.0, "seed": 42}"#;
    let cfg = write_config(dir.path(), "c.json", &config(anderson, 200, NONEQ, sweep));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("sweep-e", &cfg, &a, &["--threads", "1"]).status.success());
    assert!(run("sweep-e", &cfg, &b, &["--threads", "3"]).status.success());
    let csv_a = std::fs::read(a.join("sweep_e.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("sweep_e.csv")).unwrap());
    let text = String::from_utf8(csv_a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("E,transmission,phi_l,j_l,sigma,unitarity_residual"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 500);
    assert!(rows.iter().all(|r| r[5] < 1e-10 && (0.0..=1.0).contains(&r[1])));

    let other = dir.path().join("c");
    assert!(run("sweep-e", &cfg, &other, &["--seed-override", "43"]).status.success());
    assert_ne!(
        std::fs::read(a.join("sweep_e.csv")).unwrap(),
        std::fs::read(other.join("sweep_e.csv")).unwrap()
    );
    assert_eq!(read_json(&other.join("manifest.json"))["seeds"][0], 43);
}

#[test]
fn sweep_l_anderson_vanishes() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#"{"energy": 0.5}"#;
    let anderson = r#"{"kind": "anderson", "amplitude": 2.0, "seed": 7}"#;
    let cfg = write_config(dir.path(), "c.json", &config(anderson, 2000, NONEQ, sweep));
    let out = dir.path().join("out");
    let o = run("sweep-l", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out.join("sweep_l.csv")).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("L,sigma_density,transmission,log_transfer_norm,resonance_flag")
    );
    assert_eq!(text.lines().count(), 17);
    let v = read_json(&out.join("sweep_l.json"));
    assert_eq!(v["classification"]["label"], "vanishing");
    assert!(v["ratio_band"]["decades"].as_f64().unwrap() >= 0.0);
}

#[test]
fn sweep_l_outside_band_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &config(r#"{"kind": "zero"}"#, 100, NONEQ, r#"{"energy": 2.5}"#));
    assert_eq!(run("sweep-l", &cfg, &dir.path().join("out"), &[]).status.code(), Some(2));
}

#[test]
fn equivalence_free_chain() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = r#"{"grid": {"start": -1.8, "stop": 1.8, "count": 10}}"#;
    let cfg = write_config(dir.path(), "c.json", &config(r#"{"kind": "zero"}"#, 500, NONEQ, sweep));
    let out = dir.path().join("out");
    let o = run("equivalence", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&out.join("equivalence.json"));
    assert_eq!(v["persistent"], 10);
    assert_eq!(v["contradictions"], 0);
    let csv = std::fs::read_to_string(out.join("equivalence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn validate_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &config(r#"{"kind": "zero"}"#, 10, NONEQ, "{}"));
    let out = dir.path().join("out");
    let o = run("validate", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let v = read_json(&out.join("validate.json"));
    assert_eq!(v["passed"], true);
    assert!(!String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}
