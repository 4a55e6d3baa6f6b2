use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_acimresp"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = configs().join("doubling.json");
    let cfg = cfg.to_str().unwrap();
    for cmd in ["check", "psi", "kappa", "spectrum"] {
        let a = run(&[cmd, "--config", cfg]);
        let b = run(&[cmd, "--config", cfg]);
        assert!(a.status.success(), "{cmd}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{cmd}");
        assert!(!a.stdout.is_empty());
    }
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&d1, &d2] {
        let o = run(&["psi", "--config", cfg, "--out", d.to_str().unwrap(), "--plot-data"]);
        assert!(o.status.success());
    }
    for f in ["psi.csv", "psi.json", "plot_psi.csv"] {
        assert_eq!(std::fs::read(d1.join(f)).unwrap(), std::fs::read(d2.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn every_row_carries_the_config_hash() {
    let cfg = configs().join("tripling.json");
    let o = run(&["kappa", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,decomposition,raw,quadrature,config_hash");
    let hashes: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(hashes.len(), 13);
    assert!(hashes.iter().all(|h| h.len() == 16 && *h == hashes[0]));
}

#[test]
fn pole_is_reported_as_metadata() {
    let cfg = configs().join("doubling.json");
    let o = run(&["psi", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let row = text.lines().find(|l| l.starts_with("0.5,")).unwrap();
    assert!(row.starts_with("0.5,,,pole,2.0,"), "{row}");
}

#[test]
fn zero_field_gives_zero_kappa() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "zero.json",
        r#"{"schema_version": 1, "map": {"family": "chebyshev", "m": 2}, "n": 24,
            "x": [0.0], "a": [0.0, 0.0, 1.0], "kappa_max": 5}"#,
    );
    let o = run(&["kappa", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        for c in &cells[1..4] {
            assert!(c.is_empty() || c.parse::<f64>().unwrap() == 0.0, "{line}");
        }
    }
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();
    let good = configs().join("doubling.json");
    assert_eq!(run(&["check", "--config", good.to_str().unwrap()]).status.code(), Some(0));
    // usage errors
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["check"]).status.code(), Some(2));
    assert_eq!(
        run(&["check", "--config", good.to_str().unwrap(), "--n", "4"]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("nope.json");
    assert_eq!(run(&["check", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let wrong_schema = write_config(
        dir.path(),
        "v2.json",
        r#"{"schema_version": 2, "map": {"family": "chebyshev", "m": 2}, "x": [1.0], "a": [1.0]}"#,
    );
    assert_eq!(run(&["psi", "--config", wrong_schema.to_str().unwrap()]).status.code(), Some(2));
    let unknown = write_config(
        dir.path(),
        "unknown.json",
        r#"{"schema_version": 1, "map": {"family": "chebyshev", "m": 2}, "x": [1.0], "a": [1.0], "colour": 3}"#,
    );
    assert_eq!(run(&["psi", "--config", unknown.to_str().unwrap()]).status.code(), Some(2));
    // numerical failures
    let ill = write_config(
        dir.path(),
        "ill.json",
        r#"{"schema_version": 1, "map": {"family": "chebyshev", "m": 3}, "n": 32,
            "x": [1.0], "a": [0.0, 0.0, 0.0, 1.0], "pade": {"l": 8, "m": 8}}"#,
    );
    let o = run(&["pade", "--config", ill.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ill-conditioned"));
    let broken = write_config(
        dir.path(),
        "broken.json",
        r#"{"schema_version": 1, "map": {"family": "explicit", "m": 2, "coeffs": [0.0, 0.0, 0.5]},
            "x": [1.0], "a": [1.0]}"#,
    );
    assert_eq!(run(&["check", "--config", broken.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn respond_compares_with_finite_differences() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("doubling_bump.json");
    let o = run(&["respond", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("respond.json")).unwrap()).unwrap();
    assert!(report["psi_at_one"].as_f64().unwrap().abs() < 1e-9);
    let ratio = report["oracle"]["step_ratio"].as_f64().unwrap();
    assert!((3.0..=5.0).contains(&ratio));
}

#[test]
fn acim_writes_density_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("doubling.json");
    let o = run(&["acim", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--plot-data"]);
    assert!(o.status.success());
    let rho = std::fs::read_to_string(dir.path().join("rho.csv")).unwrap();
    // x = 0 is the middle row; ρ(0) = 1/π
    let mid = rho.lines().find(|l| l.starts_with("0.0,")).unwrap();
    let v: f64 = mid.split(',').nth(1).unwrap().parse().unwrap();
    assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-9);
    assert!(dir.path().join("plot_rho.csv").exists());
    assert_eq!(std::fs::read_to_string(dir.path().join("sigma0.csv")).unwrap().lines().count(), 33);
}
