use assert_cmd::Command;
use serde_json::Value;
use std::fs;
use std::path::Path;

fn bin() -> Command {
    Command::cargo_bin("ancient-ovals").unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn cylinder_run_all_passes_and_writes_the_tree() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cyl");
    bin().args(["run-all", "--scenario", "cylinder", "--out"]).arg(&out).assert().success();
    assert_eq!(header(&out.join("profile_final.csv")), "z,f");
    assert_eq!(header(&out.join("history.csv")), "t,r_max,d_tip_left,d_tip_right,R_tip_left,R_tip_right");
    assert_eq!(header(&out.join("bryant.csv")), "r,phi,z,k_orb,k_rad,R");
    assert_eq!(header(&out.join("barrier_a20.csv")), "s,psi,N_of_psi");
    assert_eq!(header(&out.join("lemma_scan.csv")), "item,t_or_y,ratio");
    assert_eq!(header(&out.join("bound_checks.csv")), "mu,lhs,rhs,pass");
    let r = json(&out.join("report.json"));
    for key in ["parabolic", "intermediate", "tip_left", "tip_right", "star_conditions", "bootstrap_map", "mode_dominance", "barrier_checks"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["pass"], Value::Bool(true));
    assert_eq!(r["barrier_checks"].as_array().unwrap().len(), 3);
}

#[test]
fn sphere_flags_the_regime_fits() {
    let dir = tempfile::tempdir().unwrap();
    bin().args(["regimes", "--scenario", "sphere", "--out"]).arg(dir.path()).assert().success();
    let r = json(&dir.path().join("regimes.json"));
    assert!(r["tip_left"].is_null() && r["tip_right"].is_null());
    assert!(r["parabolic"].is_null());
    assert!(!r["notes"].as_array().unwrap().is_empty());
    let e = json(&dir.path().join("evolve.json"));
    assert_eq!(e["exact"]["pass"], Value::Bool(true));
}

#[test]
fn config_file_env_default_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# short heat-kernel survey\nscenario = cylinder\nheat_draws = 3   # fewer\nheat_mu = 0.1, 0.2\n").unwrap();
    let root = dir.path().join("from-env");
    bin()
        .env("ANCIENT_OVALS_OUT", &root)
        .args(["heatkernel", "--seed", "11", "--tol", "kernel_tol=1e-13", "--config"])
        .arg(&cfg)
        .assert()
        .success();
    let rows = fs::read_to_string(root.join("bound_checks.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 2);
}

#[test]
fn configuration_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "scenario = cylinder\npoints = 10\n").unwrap();
    let out = bin().args(["evolve", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).assert().code(2);
    let err: Value = serde_json::from_slice(&out.get_output().stderr).unwrap();
    assert_eq!(err["error"]["kind"], "configuration");
    assert_eq!(err["error"]["exit_code"], 2);
    bin().args(["evolve", "--scenario", "torus", "--out"]).arg(dir.path()).assert().code(2);
    bin().args(["evolve", "--tol", "points=3", "--out"]).arg(dir.path()).assert().code(2);
}

#[test]
fn compare_detects_perturbations_and_schema_changes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    bin().args(["evolve", "--scenario", "sphere", "--threads", "1", "--out"]).arg(&a).assert().success();
    bin().args(["evolve", "--scenario", "sphere", "--threads", "8", "--out"]).arg(&b).assert().success();
    bin().arg("compare").arg(&a).arg(&b).args(["--rel-tol", "0"]).assert().success();

    let hist = fs::read_to_string(b.join("history.csv")).unwrap();
    let mut lines: Vec<String> = hist.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[2].split(',').map(String::from).collect();
    let v: f64 = cells[1].parse().unwrap();
    cells[1] = (v * (1.0 + 1e-3)).to_string();
    lines[2] = cells.join(",");
    fs::write(b.join("history.csv"), lines.join("\n") + "\n").unwrap();
    let out = bin().arg("compare").arg(&a).arg(&b).args(["--rel-tol", "1e-6"]).assert().code(1);
    let text = String::from_utf8_lossy(&out.get_output().stdout).to_string();
    assert!(text.contains("history.csv:row 2:r_max"), "{text}");

    fs::write(b.join("evolve.json"), "{\"scenario\": \"sphere\"}").unwrap();
    let out = bin().arg("compare").arg(&a).arg(&b).assert().code(1);
    let err: Value = serde_json::from_slice(&out.get_output().stderr).unwrap();
    assert_eq!(err["error"]["kind"], "incompatible");
}

#[test]
fn short_oval_window_produces_the_spectral_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("oval.cfg");
    fs::write(&cfg, "scenario = oval-tau10\ndtau = 0.6\nshoot = false\n").unwrap();
    let out = bin().args(["spectral", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).assert();
    assert!(matches!(out.get_output().status.code(), Some(0 | 1)));
    assert_eq!(header(&dir.path().join("spectral.csv")), "tau,alpha,gamma_plus,gamma_zero,gamma_minus,delta,rho_max");
    let s = json(&dir.path().join("spectral.json"));
    assert_eq!(s["rows"].as_array().unwrap().len(), 13);
    assert!(s["mode_dominance"].is_string());
}
