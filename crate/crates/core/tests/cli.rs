use codebook_learn::config::{parse_config, ScenarioConfig};
use codebook_learn::Error;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn cbl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbl")).args(args).output().expect("binary runs")
}

fn config_file(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn quick_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/quick.toml")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn minimal_config_fills_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&config_file(dir.path(), "m = 8\n")).unwrap();
    assert_eq!(cfg, ScenarioConfig { m: 8, ..Default::default() });
}

#[test]
fn out_of_range_resolution_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let err = parse_config(&config_file(dir.path(), "m = 8\n# comment\nr = 9\n")).unwrap_err();
    assert!(matches!(err, Error::Config { line: Some(3), .. }), "{err:?}");
    let err = parse_config(&config_file(dir.path(), "m = 8\nantennas = 3\n")).unwrap_err();
    assert!(matches!(err, Error::Config { line: Some(2), .. }), "{err:?}");
}

#[test]
fn manifest_echoes_config_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), "m = 8\nn = 4\nbudget = 50\n");
    let out = dir.path().join("run");
    let res = cbl(&["synth", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let m = manifest(&out);
    let expect = ScenarioConfig { m: 8, n: 4, budget: 50, seed: 5, ..Default::default() };
    assert_eq!(m["config"], serde_json::to_value(&expect).unwrap());
    assert_eq!(m["command"], "synth");
    assert_eq!(m["seed"], 5);
    assert_eq!(m["outputs"], serde_json::json!(["scenario.json", "manifest.json"]));
    // the echoed config is itself a valid config that resolves to the same run
    let echoed: ScenarioConfig = serde_json::from_value(m["config"].clone()).unwrap();
    assert_eq!(ScenarioConfig::from_toml_str(&echoed.to_toml_string()).unwrap(), expect);
}

#[test]
fn training_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        let res = cbl(&[
            "train",
            "--config",
            quick_config().to_str().unwrap(),
            "--seed",
            "7",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        out
    };
    let (a, b) = (run("a", "1"), run("b", "3"));
    for f in ["codebook_bs0.csv", "codebook_bs1.csv", "training_log_bs0.csv", "training_log_bs1.csv", "clusters.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(manifest(&a)["schedule"]["order"], "round-robin");
}

#[test]
fn zero_roc_trials_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("roc");
    let res = cbl(&["roc", "--trials", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(cbl(&["train", "--policy", "greedy"]).status.code(), Some(2));
    assert_eq!(cbl(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(cbl(&["synth", "--workers", "0", "--out", "/nonexistent/x"]).status.code(), Some(2));
    assert_eq!(cbl(&["synth", "--config", "/nonexistent/run.toml"]).status.code(), Some(2));
}

#[test]
fn failed_run_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eval");
    let empty = dir.path().join("nothing-here");
    std::fs::create_dir(&empty).unwrap();
    let res = cbl(&["eval-sir", "--codebooks", empty.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    assert!(!out.exists());
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers, vec![std::ffi::OsString::from("nothing-here")]);
}

#[test]
fn commands_chain_through_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let cfg = cfg.to_str().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    assert!(cbl(&["synth", "--config", cfg, "--out", &p("synth")]).status.success());
    let dataset = p("synth/scenario.json");
    for (cmd, out) in [("cluster", "cluster"), ("train", "train")] {
        let res = cbl(&[cmd, "--config", cfg, "--dataset", &dataset, "--out", &p(out)]);
        assert!(res.status.success(), "{cmd}: {}", String::from_utf8_lossy(&res.stderr));
    }
    let res = cbl(&["eval-sir", "--config", cfg, "--dataset", &dataset, "--codebooks", &p("train"), "--out", &p("eval")]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert!(summary["median_avg_sir_db"].is_number());
    let sir_rows = std::fs::read_to_string(dir.path().join("eval/sir_map.csv")).unwrap().lines().count();
    assert_eq!(sir_rows, 1 + 6 * 8);
    let res = cbl(&["pattern", "--config", cfg, "--dataset", &dataset, "--codebooks", &p("train"), "--out", &p("pattern")]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(dir.path().join("pattern/bs1/pattern_annotations.csv").exists());
    let res = cbl(&["roc", "--config", cfg, "--dataset", &dataset, "--trials", "50", "--out", &p("roc")]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    // the dataset keeps the path descriptions the ROC ground truth needs;
    // one header plus a curve per P in {1, 3, 5, 10}
    let roc_rows = std::fs::read_to_string(dir.path().join("roc/roc.csv")).unwrap().lines().count();
    assert_eq!(roc_rows, 1 + 4 * 43);
}

#[test]
fn theory_audit_reports_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("audit");
    let res = cbl(&["theory-audit", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let s: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(s["prop1_violations"], 0);
    assert_eq!(s["weyl_violations"], 0);
    assert_eq!(s["rayleigh_violations"], 0);
    assert!(s["monte_carlo_max_rel_error"].as_f64().unwrap() < 0.02);
    let rows = std::fs::read_to_string(out.join("closed_form_vs_monte_carlo.csv")).unwrap().lines().count();
    assert_eq!(rows, 51);
}
