use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn qlsm(args: &[&str], config: &Value, dir: &Path, env_seed: Option<&str>) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, serde_json::to_string_pretty(config).unwrap()).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qlsm"));
    cmd.args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("QLSM_SEED");
    if let Some(s) = env_seed {
        cmd.env("QLSM_SEED", s);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Data rows of a CSV artifact, skipping `#` lines and the header.
fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

fn small_lsm() -> Value {
    json!({
        "seed": 4,
        "lsm": {
            "nodes": 4,
            "connectivity": 0.6,
            "field_scale": 3.0,
            "leak": 0.1,
            "signal": { "length": 150, "step_fraction": 0.5 },
            "task": { "delay": 3, "washout": 10, "regularization": 1e-6 },
            "separation": { "pairs": 5, "length": 20, "threshold": 1e-6 },
            "fading": { "pairs": 10, "base_length": 30, "windows": [1, 2, 4, 8] }
        }
    })
}

fn adiabatic_config(times: Value) -> Value {
    json!({
        "seed": 1,
        "adiabatic": {
            "instance": data("unique3.cnf"),
            "total_times": times,
            "steps_per_unit": 10,
            "gap_samples": 11
        }
    })
}

#[test]
fn adiabatic_sweep_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let times = json!([1, 2, 4, 8, 16, 32, 64, 128]);
    let out = qlsm(&["adiabatic"], &adiabatic_config(times), dir.path(), None);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("out/overlap.csv"));
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[1])));
    assert!(rows[7][1] >= rows[0][1]);
    let spectrum = csv_rows(&dir.path().join("out/spectrum.csv"));
    assert_eq!(spectrum.len(), 11);
    let header = std::fs::read_to_string(dir.path().join("out/spectrum.csv")).unwrap();
    assert!(header.lines().any(|l| l == "s,value"));
}

#[test]
fn empty_time_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlsm(&["adiabatic"], &adiabatic_config(json!([])), dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("adiabatic.total_times"), "{}", stderr(&out));
}

#[test]
fn unknown_and_mistyped_fields_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = adiabatic_config(json!([1, 2]));
    cfg["adiabatic"]["steps_per_units"] = json!(10);
    let out = qlsm(&["adiabatic"], &cfg, dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("steps_per_units"), "{}", stderr(&out));

    let mut cfg = small_lsm();
    cfg["lsm"]["nodes"] = json!("six");
    let out = qlsm(&["lsm"], &cfg, dir.path(), None);
    assert!(stderr(&out).contains("lsm.nodes"), "{}", stderr(&out));
}

#[test]
fn missing_input_fails_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "seed": 0, "solve": { "cnf": "does-not-exist.cnf" } });
    let out = qlsm(&["solve"], &cfg, dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("solve.cnf"), "{}", stderr(&out));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn missing_section_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlsm(&["learn"], &json!({ "seed": 0 }), dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("learn"));
}

#[test]
fn solve_satisfiable_and_contradiction() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlsm(&["solve"], &json!({ "solve": { "cnf": data("satisfiable.cnf") } }), dir.path(), None);
    assert!(out.status.success(), "{}", stderr(&out));
    let s = &read_json(&dir.path().join("out/solve.json"))["solve"];
    assert_eq!(s["decision"], json!(true));
    assert!(s["count"].as_u64().unwrap() > 0);
    assert_eq!(s["count"], s["brute_force_count"]);
    for key in ["n", "decision", "count", "iterations", "trace_hash"] {
        assert!(s.get(key).is_some(), "{key}");
    }
    assert!(!dir.path().join("out/diff.json").exists());

    let out = qlsm(&["solve"], &json!({ "solve": { "cnf": data("contradiction.cnf") } }), dir.path(), None);
    assert!(out.status.success());
    let s = &read_json(&dir.path().join("out/solve.json"))["solve"];
    assert_eq!(s["decision"], json!(false));
    assert_eq!(s["count"], json!(0));
}

#[test]
fn solve_truth_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlsm(&["solve"], &json!({ "solve": { "truth_table": data("parity3.tt") } }), dir.path(), None);
    assert!(out.status.success());
    assert_eq!(read_json(&dir.path().join("out/solve.json"))["solve"]["count"], json!(4));

    let bad = dir.path().join("bad.tt");
    std::fs::write(&bad, "0\n1\n1\n").unwrap();
    let out = qlsm(&["solve"], &json!({ "solve": { "truth_table": bad } }), dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("3 lines"), "{}", stderr(&out));

    let both = json!({ "solve": { "truth_table": data("parity3.tt"), "cnf": data("unique3.cnf") } });
    assert_eq!(qlsm(&["solve"], &both, dir.path(), None).status.code(), Some(1));
}

#[test]
fn lsm_pipeline_reports_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlsm(&["lsm"], &small_lsm(), dir.path(), None);
    assert!(out.status.success(), "{}", stderr(&out));
    let record = read_json(&dir.path().join("out/result.json"));
    for key in ["separation_pass_rate", "test_nrmse", "baseline_nrmse", "fading_certified"] {
        assert!(record["metrics"].get(key).is_some(), "{key}");
    }
    assert_eq!(csv_rows(&dir.path().join("out/divergence.csv")).len(), 4);
    assert_eq!(csv_rows(&dir.path().join("out/trajectory.csv")).len(), 150);
    let model = read_json(&dir.path().join("out/model.json"));
    assert_eq!(model["model"]["coefficients"].as_array().unwrap().len(), 20);
}

#[test]
fn lsm_rejects_invalid_signal_with_sample_index() {
    let dir = tempfile::tempdir().unwrap();
    let signal = dir.path().join("u.csv");
    std::fs::write(&signal, "t,u\n0,0\n0.05,0.1\n0.1,0.9\n0.15,0.9\n").unwrap();
    let mut cfg = small_lsm();
    cfg["lsm"]["signal"] = json!({ "path": signal });
    let out = qlsm(&["lsm"], &cfg, dir.path(), None);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("domain error") && err.contains("sample 2"), "{err}");
}

#[test]
fn seed_precedence_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "seed": 5, "solve": { "cnf": data("unique3.cnf") } });
    qlsm(&["solve"], &cfg, dir.path(), None);
    let r = read_json(&dir.path().join("out/result.json"));
    assert_eq!((r["seed"].clone(), r["seed_source"].clone()), (json!(5), json!("config")));
    qlsm(&["solve"], &cfg, dir.path(), Some("6"));
    let r = read_json(&dir.path().join("out/result.json"));
    assert_eq!((r["seed"].clone(), r["seed_source"].clone()), (json!(6), json!("env")));
    qlsm(&["solve", "--seed", "7"], &cfg, dir.path(), Some("6"));
    let r = read_json(&dir.path().join("out/result.json"));
    assert_eq!((r["seed"].clone(), r["seed_source"].clone()), (json!(7), json!("flag")));

    let hash = r["config_hash"].as_str().unwrap().to_string();
    let csv = std::fs::read_to_string(dir.path().join("out/true_counts.csv")).unwrap();
    assert!(csv.contains("# seed = 7") && csv.contains(&hash));
    let solve = read_json(&dir.path().join("out/solve.json"));
    assert_eq!(solve["seed"], json!(7));
    assert_eq!(solve["config_hash"], json!(hash));
}

#[test]
fn learn_two_patterns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "seed": 2,
        "learn": {
            "nodes": 6, "connectivity": 0.5, "leak": 0.1,
            "patterns": [[0.9, -0.9], [-0.9, 0.9]],
            "pattern_length": 20, "stream": [0, 1, 0, 1], "epochs": 2,
            "hebbian": { "rate": 0.05, "weight_cap": 0.5, "decay": 0.001 },
            "vigilance": 0.9, "art_learning_rate": 0.5
        }
    });
    let out = qlsm(&["learn"], &cfg, dir.path(), None);
    assert!(out.status.success(), "{}", stderr(&out));
    let rows = csv_rows(&dir.path().join("out/learn.csv"));
    assert_eq!(rows.len(), 2 * 4 * 19);
    let categories: std::collections::BTreeSet<u64> = rows.iter().map(|r| r[1] as u64).collect();
    assert!(categories.len() >= 2);
    assert!(rows.iter().all(|r| r[2..].iter().all(|w| w.abs() <= 0.5)));

    let mut cfg = cfg;
    cfg["learn"]["epochs"] = json!(0);
    let out = qlsm(&["learn"], &cfg, dir.path(), None);
    assert!(out.status.success());
    assert!(csv_rows(&dir.path().join("out/learn.csv")).is_empty());
    let before = read_json(&dir.path().join("out/graph_initial.json"));
    let after = read_json(&dir.path().join("out/graph_final.json"));
    assert_eq!(before, after);
    let r = read_json(&dir.path().join("out/result.json"));
    assert_eq!(r["checks"]["zero_epochs_leave_graph_unchanged"], json!(true));
}

#[test]
fn props_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qlsm(&["props"], &json!({ "seed": 3, "props": { "trials": 5 } }), dir.path(), None);
    assert!(out.status.success(), "{}", stderr(&out));
    let props = read_json(&dir.path().join("out/props.json"));
    assert!(props["checks"].as_array().unwrap().iter().all(|c| c["passed"] == json!(true)));
}

#[test]
fn bundled_configs_parse() {
    for entry in std::fs::read_dir(data("configs")).unwrap() {
        let path = entry.unwrap().path();
        qlsm::cli::ExperimentConfig::from_file(&path).unwrap();
    }
}
