use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_endotrust"));
    c.env_remove("ENDOTRUST_OUT_DIR");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stdout: {}\nstderr: {}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr));
}

#[test]
fn every_bundled_config_validates() {
    let mut seen = 0;
    for entry in fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let out = bin().args(["validate", "--config"]).arg(&path).output().unwrap();
        ok(&out);
        seen += 1;
    }
    assert!(seen >= 5);
}

#[test]
fn invalid_config_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = fs::read_to_string(configs().join("three_groups.toml")).unwrap().replace("topics = 500", "topics = 0");
    fs::write(&bad, text).unwrap();
    let out = bin().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("topics"));

    let out = bin().args(["run", "--config"]).arg(&bad).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert!(!out.status.success());
    assert!(!dir.path().join("o").exists());
}

#[test]
fn run_writes_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("single_intelligent.toml");
    for sub in ["a", "b"] {
        let out = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join(sub)).output().unwrap();
        ok(&out);
    }
    let trace = fs::read_to_string(dir.path().join("a/trace.csv")).unwrap();
    assert!(trace.starts_with("topic,round,agent,belief\n"));
    assert!(fs::read_to_string(dir.path().join("a/weights.csv")).unwrap().starts_with("topic,row,col,weight\n"));
    for f in ["trace.csv", "weights.csv", "report.json"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn seed_override_and_env_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["--seed", "99", "--threads", "2", "run", "--config"])
        .arg(configs().join("homophily.toml"))
        .env("ENDOTRUST_OUT_DIR", dir.path())
        .output()
        .unwrap();
    ok(&out);
    // the override collapses the seed list to one run
    let report = fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"seed\": 99"));
    assert!(!dir.path().join("seed-0").exists());
}

#[test]
fn replications_get_subdirectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["run", "--config"]).arg(configs().join("homophily.toml")).arg("--out").arg(dir.path()).output().unwrap();
    ok(&out);
    for s in 0..4 {
        assert!(dir.path().join(format!("seed-{s}/report.json")).exists());
    }
}

#[test]
fn sweep_writes_long_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["sweep", "--config"])
        .arg(configs().join("opposition.toml"))
        .args(["--param", "initial_weights.b", "--grid", "0.01,0.025,0.09", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    ok(&out);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("param,value,seed,"));
    // coefficient vanishes where the cross weights match
    let coef: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
    assert!(coef.abs() < 1e-10);

    let out = bin()
        .args(["sweep", "--config"])
        .arg(configs().join("opposition.toml"))
        .args(["--param", "trust.delta", "--grid", ","])
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn reproduce_reports_and_rejects_unknown_targets() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["reproduce", "fig-socinf", "--out"]).arg(dir.path()).output().unwrap();
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fig-socinf: PASS"));
    assert!(dir.path().join("socinf.csv").exists());
    assert!(dir.path().join("report.json").exists());

    let out = bin().args(["reproduce", "fig-unknown", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown reproduce target"));
}
