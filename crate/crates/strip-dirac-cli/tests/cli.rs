use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_strip-dirac");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, out: &Path, workers: Option<&str>) -> Output {
    let mut c = Command::new(BIN);
    c.args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out);
    c.env_remove("STRIP_DIRAC_WORKERS");
    if let Some(w) = workers {
        c.env("STRIP_DIRAC_WORKERS", w);
    }
    c.output().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

const SMALL: &str = r#"{
  "delta": 1.0,
  "h": [0.2],
  "curvature": { "kind": "zero" },
  "dispersion": { "branches": 3, "points": 21 }
}"#;

#[test]
fn help_documents_exit_codes() {
    let o = Command::new(BIN).arg("--help").output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("Exit codes") && text.contains("4 assumption"));
}

#[test]
fn config_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        SMALL.replace("\"branches\": 3", "\"branches\": 0"),
        SMALL.replace("[0.2]", "[0.2, 0.3]"),
        SMALL.replace("\"delta\": 1.0", "\"delta\": -1.0"),
        SMALL.replace("\"points\": 21", "\"points\": 21, \"colour\": 1"),
        "{ not json".to_string(),
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("c{i}.json"), text);
        let o = run(
            &["dispersion"],
            &cfg,
            &dir.path().join(format!("o{i}")),
            None,
        );
        assert_eq!(
            o.status.code(),
            Some(3),
            "case {i}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let o = run(&["a0"], &dir.path().join("missing.json"), dir.path(), None);
    assert_eq!(o.status.code(), Some(3));
    let o = run(
        &["--workers", "0", "a0"],
        &configs().join("straight.json"),
        dir.path(),
        None,
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn solver_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "\"dispersion\"",
        "\"tolerances\": { \"poisson_residual\": 1e-300 },\n  \"dispersion\"",
    );
    let cfg = write_config(dir.path(), "tight.json", &text);
    let out = dir.path().join("out");
    let o = run(&["potential"], &cfg, &out, None);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let m = read_json(&out.join("manifest.json"));
    assert!(m["status"].as_str().unwrap().starts_with("solver failure"));
}

#[test]
fn straight_strip_effective_exits_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["effective"],
        &configs().join("straight.json"),
        dir.path(),
        None,
    );
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn dispersion_output_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small.json", SMALL);
    let (a, b) = (dir.path().join("w1"), dir.path().join("w3"));
    assert!(run(&["dispersion"], &cfg, &a, Some("1")).status.success());
    assert!(run(&["dispersion"], &cfg, &b, Some("3")).status.success());
    for f in [
        "dispersion_h0.2.csv",
        "dispersion_h0.2.svg",
        "dispersion.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let csv = std::fs::read_to_string(a.join("dispersion_h0.2.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "xi,neg_1,neg_2,neg_3,pos_1,pos_2,pos_3"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    for r in &rows {
        assert!(r[1..4].iter().all(|v| *v < 0.0) && r[4..].iter().all(|v| *v > 0.0));
    }
    let (ma, mb) = (
        read_json(&a.join("manifest.json")),
        read_json(&b.join("manifest.json")),
    );
    assert_eq!(ma["workers"], 1);
    assert_eq!(mb["workers"], 3);
    assert_eq!(ma["config_hash"], mb["config_hash"]);
}

#[test]
fn config_hash_ignores_formatting_but_not_content() {
    let dir = tempfile::tempdir().unwrap();
    let hash = |name: &str, text: &str| {
        let cfg = write_config(dir.path(), name, text);
        let out = dir.path().join(name.replace(".json", ""));
        assert!(run(&["a0"], &cfg, &out, None).status.success());
        read_json(&out.join("manifest.json"))["config_hash"]
            .as_str()
            .unwrap()
            .to_string()
    };
    let a = hash("a.json", SMALL);
    let b = hash("b.json", &SMALL.replace('\n', " ").replace("  ", " "));
    let c = hash("c.json", &SMALL.replace("\"points\": 21", "\"points\": 23"));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 64);
}

#[test]
fn potential_and_conformal_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("bump.json");
    assert!(run(&["potential"], &cfg, dir.path(), None).status.success());
    let p = read_json(&dir.path().join("potential.json"));
    assert_eq!(p["minimum"]["assumptions_hold"], true);
    assert!(p["minimum"]["phi_min"].as_f64().unwrap() < -0.5);
    let grid = std::fs::read_to_string(dir.path().join("potential_grid.csv")).unwrap();
    assert_eq!(grid.lines().next().unwrap(), "s,t,phi");
    let (ns, nt) = (p["n_s"].as_u64().unwrap(), p["n_t"].as_u64().unwrap());
    assert_eq!(grid.lines().count() as u64, ns * nt + 1);
    assert!(run(&["conformal"], &cfg, dir.path(), None).status.success());
    let c = read_json(&dir.path().join("conformal.json"));
    assert!(c.is_object());
    let m = read_json(&dir.path().join("manifest.json"));
    assert_eq!(m["command"], "conformal");
    assert_eq!(m["status"], "ok");
}

#[test]
fn report_contains_every_section() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report"], &configs().join("bump.json"), dir.path(), None);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&dir.path().join("report.json"));
    for key in [
        "delta",
        "potential",
        "conformal",
        "thresholds",
        "effective",
        "warnings",
    ] {
        assert!(!r[key].is_null(), "missing {key}");
    }
    let entries = r["effective"]["report"]["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
}
