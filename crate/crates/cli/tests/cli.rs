use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn popleak(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_popleak"))
        .args(args)
        .env_remove("POPLEAK_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.pp", "species A detect\nreaction A + -> B + C\n");
    let out = popleak(&["validate", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2, column"));

    let missing = dir.path().join("missing.pp");
    assert_eq!(popleak(&["validate", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(popleak(&["steady", "--n", "0"]).status.code(), Some(1));
    assert_eq!(popleak(&["steady", "--strategy", "sideways"]).status.code(), Some(1));
    assert_eq!(popleak(&["--bogus"]).status.code(), Some(1));
    assert_eq!(popleak(&["--help"]).status.code(), Some(0));

    // A horizon too short to settle is an experiment failure.
    let out = popleak(&["mix", "--n", "1000", "--time", "1", "--runs", "2", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validate_reports_catalysts() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "ok.pp",
        "species A detect\nspecies B detect\nspecies C detect\nspecies D detect\n\
         reaction A + C -> B + C\nreaction A + B -> A + D\n",
    );
    let out = popleak(&["validate", &file]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("species: 4"));
    assert!(text.contains("reactions: 2"));
    assert!(text.contains("catalytic: C\n"));
    assert!(text.contains("non-catalytic: A, B, D"));
}

#[test]
fn empty_file_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "empty.pp", "");
    let out = popleak(&["validate", &file]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn generated_protocol_validates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rd.pp");
    let out = popleak(&["generate", "--s", "3", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let out = popleak(&["validate", path.to_str().unwrap()]);
    let text = stdout(&out);
    assert!(text.contains("species: 5"));
    assert!(text.contains("catalytic: D\n"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = [
        "simulate", "--n", "500", "--k", "0", "--beta", "0.5", "--strategy", "fp", "--time", "20",
        "--seed", "42", "--runs", "3",
    ];
    let (a, b) = (popleak(&args), popleak(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let by_env = Command::new(env!("CARGO_BIN_EXE_popleak"))
        .args(&args[..args.len() - 4])
        .args(["--runs", "3"])
        .env("POPLEAK_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(by_env.stdout, a.stdout);

    let other = popleak(&[&args[..args.len() - 3], &["43", "--runs", "3"]].concat());
    assert_ne!(other.stdout, a.stdout);
}

#[test]
fn zero_horizon_gives_initial_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t0.csv");
    let out = popleak(&["simulate", "--n", "100", "--k", "2", "--s", "3", "--time", "0", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["t,parallel_time,D,X1,X2,X3,N,detect_fraction", "0,0,2,0,0,0,98,0.02"]);
}

fn check_levels(doc: &Value, s: usize) {
    let levels = doc["levels"].as_array().unwrap();
    assert_eq!(levels.len(), s + 1);
    let mut prev = 0.0;
    for (i, l) in levels.iter().enumerate() {
        assert_eq!(l["i"].as_u64(), Some(i as u64));
        let c = l["p_leq"].as_f64().unwrap();
        assert!(c >= prev && c <= 1.0);
        prev = c;
    }
    assert_eq!(doc["detect_probability"].as_f64(), Some(prev));
}

#[test]
fn figure1_preset_has_three_profiles() {
    let docs = json(&popleak(&["steady", "--preset", "figure1", "--format", "json"]));
    let docs = docs.as_array().unwrap();
    let conditions: Vec<(u64, u64, f64, &str)> = docs
        .iter()
        .map(|d| {
            let p = &d["params"];
            assert_eq!(p["n"].as_u64(), Some(10_000));
            assert_eq!(p["s"].as_u64(), Some(14));
            check_levels(d, 14);
            (p["n"].as_u64().unwrap(), p["k"].as_u64().unwrap(), p["beta"].as_f64().unwrap(), d["mode"].as_str().unwrap())
        })
        .collect();
    assert_eq!(
        conditions,
        [
            (10_000, 1, 0.0, "no_leak"),
            (10_000, 0, 0.01, "false_positive"),
            (10_000, 0, 0.1, "false_positive")
        ]
    );
}

#[test]
fn preset_writes_directory_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("fig1");
    let out = popleak(&["steady", "--preset", "figure1", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let text = std::fs::read_to_string(out_dir.join(f.as_str().unwrap())).unwrap();
        assert!(text.starts_with("i,p_leq,p\n"));
        assert_eq!(text.lines().count(), 16);
    }
}

#[test]
fn steady_sweeps_levels() {
    let out = popleak(&["steady", "--s", "14,17", "--format", "json"]);
    let docs = json(&out);
    let docs = docs.as_array().unwrap();
    assert_eq!(docs.len(), 2);
    check_levels(&docs[0], 14);
    check_levels(&docs[1], 17);
}

fn check_figure2(preset: &str, s: usize, beta: f64) {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join(preset);
    let out = popleak(&[
        "simulate", "--preset", preset, "--format", "json", "--seed", "5", "--out", out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let mut plateaus = Vec::new();
    for f in manifest["files"].as_array().unwrap() {
        let doc: Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join(f.as_str().unwrap())).unwrap()).unwrap();
        let p = &doc["params"];
        assert_eq!(p["n"].as_u64(), Some(10_000));
        assert_eq!(p["s"].as_u64(), Some(s as u64));
        let snaps = doc["snapshots"].as_array().unwrap();
        assert_eq!(snaps[0]["counts"].as_array().unwrap().len(), s + 2);
        let tail: Vec<f64> = snaps[snaps.len() / 2..]
            .iter()
            .map(|x| x["detect_fraction"].as_f64().unwrap())
            .collect();
        plateaus.push((p["k"].as_u64().unwrap(), p["beta"].as_f64().unwrap(), tail.iter().sum::<f64>() / tail.len() as f64));
    }
    assert_eq!(plateaus.len(), 2);
    assert_eq!((plateaus[0].0, plateaus[0].1), (1, 0.0));
    assert_eq!((plateaus[1].0, plateaus[1].1), (0, beta));
    // The leak-only run stays far below the single-detector plateau.
    assert!(plateaus[1].2 < plateaus[0].2 / 4.0, "{plateaus:?}");
}

#[test]
fn figure2a_preset() {
    check_figure2("figure2a", 14, 0.1);
}

#[test]
fn figure2b_preset() {
    check_figure2("figure2b", 17, 0.01);
}

#[test]
fn custom_strategy_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let map = write(dir.path(), "map.txt", "X1 -> X2\nX2 -> X2\nN -> X1\n");
    let spec = format!("custom:{map}");
    let out = popleak(&["simulate", "--n", "50", "--k", "0", "--s", "2", "--beta", "1", "--strategy", &spec, "--time", "5", "--format", "json"]);
    let doc = json(&out);
    assert_eq!(doc["params"]["strategy"].as_str(), Some(spec.as_str()));
}

#[test]
fn clean_and_stabilize_run() {
    let doc = json(&popleak(&["clean", "--n", "200", "--s", "5", "--runs", "5", "--format", "json", "--seed", "3"]));
    assert!(doc["max_pair_contraction"].as_f64().unwrap() <= 2.0 / 3.0 + 1e-12);
    assert_eq!(doc["report"]["cleared_by_t_star"].as_u64(), Some(5));

    let out = popleak(&[
        "stabilize", "--n", "1000", "--k", "1", "--remove-at", "50", "--readd-at", "90", "--runs", "3", "--seed", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("run,drop_time,recover_time\n"));
}
