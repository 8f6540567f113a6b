use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn multishift(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_multishift"))
        .current_dir(dir)
        .env_remove("MULTISHIFT_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn matrix(v: &Value) -> Vec<Vec<(f64, f64)>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap())).collect())
        .collect()
}

#[test]
fn swapped_pochhammer_problem_is_similar() {
    let dir = tempfile::tempdir().unwrap();
    let gen = multishift(
        dir.path(),
        &[
            "gen",
            "pochhammer",
            "--lambda",
            "1",
            "--mu",
            "2",
            "--lambda2",
            "2",
            "--mu2",
            "1",
            "--N",
            "24",
            "--out",
            "p.json",
        ],
    );
    assert!(gen.status.success());
    assert_eq!(read_json(&dir.path().join("p.json"))["ground_truth"], "similar");

    let run = multishift(dir.path(), &["run", "p.json"]);
    assert_eq!(run.status.code(), Some(0));
    let report = read_json(&dir.path().join("p.report.json"));
    assert_eq!(report["verdict"], "SIMILAR_EVIDENCE");
    assert!(report["timing"]["seconds"].is_number());
    assert_eq!(report["options"]["N"], 24);
    // C is proportional to the swap
    let c = matrix(&report["certificate"]["C"]);
    let scale = (c[0][1].0.powi(2) + c[0][1].1.powi(2)).sqrt();
    assert!(scale > 0.0);
    for (i, j) in [(0, 0), (1, 1)] {
        assert!((c[i][j].0.powi(2) + c[i][j].1.powi(2)).sqrt() <= 1e-6 * scale);
    }
    assert!(report["certificate"]["log_ratio"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["verification"]["passed"], true);
    assert_eq!(report["growth"]["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn distinct_pochhammer_problem_grows() {
    let dir = tempfile::tempdir().unwrap();
    let gen = multishift(
        dir.path(),
        &[
            "gen",
            "pochhammer",
            "--lambda",
            "1",
            "--mu",
            "2",
            "--lambda2",
            "1",
            "--mu2",
            "3",
            "--N",
            "32",
            "--out",
            "q.json",
        ],
    );
    assert!(gen.status.success());
    assert_eq!(read_json(&dir.path().join("q.json"))["ground_truth"], "not_similar");
    let run = multishift(dir.path(), &["run", "q.json", "--degrees", "8,16,24,32", "--out", "r.json"]);
    assert_eq!(run.status.code(), Some(0));
    let report = read_json(&dir.path().join("r.json"));
    assert_eq!(report["verdict"], "NOT_SIMILAR_EVIDENCE");
    assert_eq!(report["options"]["degrees"], serde_json::json!([8, 16, 24, 32]));
}

#[test]
fn identical_explicit_systems_are_unitarily_equivalent() {
    let dir = tempfile::tempdir().unwrap();
    let gram = r#"{"index": [0], "logscale": 0.5, "matrix": [[[2, 0], [0, 1]], [[0, -1], [3, 0]]]}"#;
    let up = r#"{"index": [1], "logscale": 1.0, "matrix": [[[1, 0], [0.5, 0]], [[0.5, 0], [1, 0]]]}"#;
    let system = format!(r#"{{"type": "moments", "d": 1, "N": 1, "fiber_dim": 2, "grams": [{gram}, {up}]}}"#);
    let text = format!(r#"{{"version": 1, "kind": "unitary", "systems": [{system}, {system}]}}"#);
    std::fs::write(dir.path().join("u.json"), text).unwrap();
    let run = multishift(dir.path(), &["run", "u.json", "--no-timing"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report = read_json(&dir.path().join("u.report.json"));
    assert_eq!(report["verdict"], "YES");
    assert!(report.get("timing").is_none());
    let v = matrix(&report["V"]);
    for (i, row) in v.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((z.0 - expected).abs() <= 1e-12 && z.1.abs() <= 1e-12);
        }
    }
}

#[test]
fn missing_fiber_dim_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"{"version": 1, "kind": "unitary", "systems": [
        {"type": "moments", "d": 1, "N": 0, "grams": []},
        {"type": "moments", "d": 1, "N": 0, "fiber_dim": 1, "grams": []}]}"#;
    std::fs::write(dir.path().join("bad.json"), text).unwrap();
    let run = multishift(dir.path(), &["run", "bad.json"]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains("systems[0].fiber_dim"));
    assert!(!dir.path().join("bad.report.json").exists());
}

#[test]
fn indefinite_gram_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let system = r#"{"type": "moments", "d": 1, "N": 0, "fiber_dim": 1,
        "grams": [{"index": [0], "logscale": 0, "matrix": [[[-1, 0]]]}]}"#;
    let text = format!(r#"{{"version": 1, "kind": "unitary", "systems": [{system}, {system}]}}"#);
    std::fs::write(dir.path().join("neg.json"), text).unwrap();
    assert_eq!(multishift(dir.path(), &["run", "neg.json"]).status.code(), Some(2));
    assert_eq!(multishift(dir.path(), &["validate", "neg.json"]).status.code(), Some(2));
}

#[test]
fn missing_problem_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(multishift(dir.path(), &["run", "absent.json"]).status.code(), Some(1));
}

#[test]
fn noncommuting_weights_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let id = "[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]";
    let shear = "[[[1, 0], [1, 0]], [[0, 0], [1, 0]]]";
    let flip = "[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]";
    let weight = |idx: &str, j: usize, m: &str| format!(r#"{{"index": {idx}, "direction": {j}, "matrix": {m}}}"#);
    let weights = [
        weight("[0, 0]", 0, shear),
        weight("[0, 0]", 1, id),
        weight("[1, 0]", 0, id),
        weight("[1, 0]", 1, flip),
        weight("[0, 1]", 0, id),
        weight("[0, 1]", 1, id),
    ]
    .join(", ");
    let system = format!(
        r#"{{"type": "weights", "d": 2, "N": 2, "fiber_dim": 2, "g0": {{"logscale": 0, "matrix": {id}}}, "weights": [{weights}]}}"#
    );
    std::fs::write(
        dir.path().join("w.json"),
        format!(r#"{{"version": 1, "kind": "validate", "systems": [{system}]}}"#),
    )
    .unwrap();
    let run = multishift(dir.path(), &["validate", "w.json", "--out", "w.out.json"]);
    assert_eq!(run.status.code(), Some(2));
    let report = read_json(&dir.path().join("w.out.json"));
    assert_eq!(report["verdict"], "INVALID");
    assert_eq!(report["systems"][0]["weights"]["passed"], false);
}

#[test]
fn unitary_congruence_records_hidden_unitary() {
    let dir = tempfile::tempdir().unwrap();
    let gen = multishift(
        dir.path(),
        &["gen", "unitary-congruence", "--d", "2", "--N", "4", "--n", "3", "--seed", "7", "--out", "c.json"],
    );
    assert!(gen.status.success());
    let answer = read_json(&dir.path().join("c.answer.json"));
    assert_eq!(matrix(&answer["V0"]).len(), 3);
    assert_eq!(answer["seed"], 7);
    let run = multishift(dir.path(), &["--threads", "2", "run", "c.json", "--quiet"]);
    assert_eq!(run.status.code(), Some(0));
    assert!(run.stdout.is_empty());
    let report = read_json(&dir.path().join("c.report.json"));
    assert_eq!(report["verdict"], "YES");
    assert!(report["residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn perturbation_embeds_a_passing_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let gen =
        multishift(dir.path(), &["gen", "perturb", "--base", "pochhammer:1,2", "--replace0", "4", "--out", "x.json"]);
    assert!(gen.status.success());
    let problem = read_json(&dir.path().join("x.json"));
    assert_eq!(problem["certificate"]["log_m1"].as_f64().unwrap(), -(4f64.ln()));
    assert_eq!(problem["certificate"]["log_m2"].as_f64().unwrap(), 0.0);
    let run = multishift(dir.path(), &["run", "x.json", "--no-timing"]);
    assert_eq!(run.status.code(), Some(0));
    let report = read_json(&dir.path().join("x.report.json"));
    assert_eq!(report["verdict"], "SIMILAR_EVIDENCE");
    assert_eq!(report["supplied_certificate"]["verification"]["passed"], true);
}

#[test]
fn oracle_problem_checks_sampled_intertwiners() {
    let dir = tempfile::tempdir().unwrap();
    let gen = multishift(
        dir.path(),
        &[
            "gen",
            "pochhammer",
            "--lambda",
            "1",
            "--mu",
            "2",
            "--lambda2",
            "1",
            "--mu2",
            "3",
            "--N",
            "3",
            "--kind",
            "oracle",
            "--out",
            "o.json",
        ],
    );
    assert!(gen.status.success());
    let run = multishift(dir.path(), &["run", "o.json", "--seed", "5"]);
    assert_eq!(run.status.code(), Some(0));
    let report = read_json(&dir.path().join("o.report.json"));
    assert_eq!(report["verdict"], "CONSISTENT");
    assert_eq!(report["dimension"], 10 * 4);
    assert_eq!(report["options"]["seed"], 5);
    assert!(report["diagonal_intertwiner"]["membership_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn thread_count_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let gen = multishift(
        dir.path(),
        &[
            "gen",
            "pochhammer",
            "--lambda",
            "1",
            "--mu",
            "2",
            "--lambda2",
            "2",
            "--mu2",
            "1",
            "--N",
            "8",
            "--out",
            "t.json",
        ],
    );
    assert!(gen.status.success());
    let run = Command::new(env!("CARGO_BIN_EXE_multishift"))
        .current_dir(dir.path())
        .env("MULTISHIFT_THREADS", "0")
        .args(["run", "t.json"])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn generator_rejects_bad_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let out = multishift(
        dir.path(),
        &[
            "gen",
            "pochhammer",
            "--lambda",
            "-1",
            "--mu",
            "2",
            "--lambda2",
            "2",
            "--mu2",
            "1",
            "--N",
            "8",
            "--out",
            "p.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = multishift(dir.path(), &["gen", "perturb", "--base", "szego", "--replace0", "2", "--out", "p.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("p.json").exists());
}
