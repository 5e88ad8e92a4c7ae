use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn stabcert(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stabcert"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("STABCERT_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

const DOUBLE_INTEGRATOR: &str = r#"{"kind":"matrix","a":[[0.0,1.0],[0.0,0.0]],"b":[[0.0],[1.0]]}"#;

#[test]
fn malformed_spec_exits_3() {
    let dir = TempDir::new().unwrap();
    let o = stabcert(&["weakobs", "--system", r#"{"kind":"matrix","a":[[0,1]"#], dir.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("system spec"));

    let file = dir.path().join("bad.json");
    fs::write(&file, r#"{"kind":"matrix","a":[[1.0]],"b":[[1.0]],"extra":1}"#).unwrap();
    let o = stabcert(&["weakobs", "--system", file.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3));

    let o = stabcert(&["weakobs", "--system", "/nonexistent/spec.json"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_flags_exit_3() {
    let dir = TempDir::new().unwrap();
    let o = stabcert(&["weakobs", "--system", DOUBLE_INTEGRATOR, "--tol", "quadrature=1e-3"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = stabcert(&["weakobs", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(3));
    let o = stabcert(&["stabilize", "--system", DOUBLE_INTEGRATOR], dir.path());
    assert_eq!(o.status.code(), Some(3), "missing --mu");
}

#[test]
fn point_heat_logs_convergent() {
    let dir = TempDir::new().unwrap();
    let o = stabcert(
        &["example", "point-heat", "--x0", "cf", "--depth", "3", "--modes", "8", "--check", "weakobs"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("2981/5963"));
    let r = report(dir.path());
    assert_eq!(r["continued_fraction"]["convergent"], "2981/5963");
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["verdict"], "certified");
    assert_eq!(r["certificates"].as_array().unwrap().len(), 20);
    assert!(dir.path().join("certificates/weakobs.csv").exists());
}

#[test]
fn periodic_witness_is_mode_four() {
    let dir = TempDir::new().unwrap();
    let o = stabcert(
        &["example", "periodic-l2", "--modes", "10", "--refute-null-controllability", "--m", "1", "--C", "10"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    let r = report(dir.path());
    assert_eq!(r["witness"]["n"], 4);
    let lhs = r["witness"]["lhs"].as_f64().unwrap();
    assert!((lhs - (-4f64).exp()).abs() < 1e-12);

    // larger C pushes the witness further out
    let o = stabcert(
        &["example", "periodic-l2", "--modes", "10", "--refute-null-controllability", "--m", "1", "--big-c", "1e6"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(report(dir.path())["witness"]["n"].as_u64().unwrap() > 4);
}

#[test]
fn periodic_check_certifies_small_k() {
    let dir = TempDir::new().unwrap();
    for k in ["1", "2", "3"] {
        let o = stabcert(&["periodic", "--system", r#"{"kind":"periodic_l2","modes":10}"#, "--k", k], dir.path());
        assert_eq!(o.status.code(), Some(0), "k = {k}");
    }
    let csv = fs::read_to_string(dir.path().join("certificates/periodic_modes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
}

#[test]
fn weakobs_exit_codes() {
    let dir = TempDir::new().unwrap();
    let o = stabcert(&["weakobs", "--system", DOUBLE_INTEGRATOR], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let blocked = r#"{"kind":"matrix","a":[[1.0]],"b":[[0.0]]}"#;
    let o = stabcert(&["weakobs", "--system", blocked], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(report(dir.path())["verdict"], "refuted");
    let o = stabcert(
        &["weakobs", "--system", blocked, "--d", "1", "--horizon", "1", "--alpha", "1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reports_are_deterministic() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["weakobs", "--system", DOUBLE_INTEGRATOR, "--seed", "7", "--alpha-grid", "1,2", "--t-grid", "0.5,1"];
    stabcert(&args, a.path());
    let o = Command::new(env!("CARGO_BIN_EXE_stabcert"))
        .args(args)
        .arg("--out")
        .arg(b.path())
        .env("STABCERT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["report.json", "certificates/weakobs.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn csv_floats_have_17_digits() {
    let dir = TempDir::new().unwrap();
    let o = stabcert(&["gramian", "--system", DOUBLE_INTEGRATOR, "--horizon", "1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("certificates/gramian.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("row,col,value"));
    // G(1) = [[1/3, 1/2], [1/2, 1]] for the double integrator
    let vals: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    for (v, want) in vals.iter().zip([1.0 / 3.0, 0.5, 0.5, 1.0]) {
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
    }
    let first = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap();
    let mantissa = first.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn stabilize_writes_gain_and_decay() {
    let dir = TempDir::new().unwrap();
    let o = stabcert(
        &["stabilize", "--system", r#"{"kind":"matrix","a":[[1.0]],"b":[[1.0]]}"#, "--mu", "1.5", "--beta", "0.5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    let fb = &r["feedback"];
    // scalar shifted Riccati: 2(a+μ)p − p² + 1 = 0 with a + μ = 2.5
    let p = fb["riccati_p"][0][0].as_f64().unwrap();
    assert!((p - (2.5 + 7.25f64.sqrt())).abs() < 1e-10);
    assert!(fb["measured_rate"].as_f64().unwrap() >= 1.5);
    assert_eq!(fb["selection"]["k_mu"], 2);
    assert_eq!(r["concatenated"]["report"]["contraction_holds"], true);
    for f in ["decay/gain.csv", "decay/closed_loop.csv", "decay/concatenated.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn stabilize_rejects_blocked_mode() {
    let dir = TempDir::new().unwrap();
    let sys = r#"{"kind":"matrix","a":[[1.0,0.0],[0.0,-1.0]],"b":[[0.0],[1.0]]}"#;
    let o = stabcert(&["stabilize", "--system", sys, "--mu", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn constants_certify_point_heat() {
    let dir = TempDir::new().unwrap();
    let sys = r#"{"kind":"point_heat","x0":0.7071067811865476,"c":5.0,"modes":16}"#;
    let o = stabcert(&["constants", "--system", sys], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(dir.path());
    let formulas: Vec<&str> = r["constants"].as_array().unwrap().iter().map(|c| c["formula"].as_str().unwrap()).collect();
    assert!(formulas.contains(&"spectral-inequality") && formulas.contains(&"truncated-observability"));
    assert!(r["constants"][0]["validity"]["T_min"].as_f64().is_some());
}

#[test]
fn verify_all_passes_by_default_and_flags_tight_tolerance() {
    let dir = TempDir::new().unwrap();
    let o = stabcert(&["verify-all"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.matches("[PASS]").count(), 8);

    let o = stabcert(&["verify-all", "--tol", "gramian=1e-17"], dir.path());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout.contains("[FAIL] 2."), "{stdout}");
    assert_eq!(report(dir.path())["all_passed"], false);
}
