use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zetahess")).args(args).env_remove("ZETAHESS_PRECISION").output().expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn validate(schema: &str, doc: &Value) {
    let text = std::fs::read_to_string(root().join("schemas").join(schema)).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let v = jsonschema::validator_for(&schema).expect("schema compiles");
    let errs: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errs.is_empty(), "{schema}: {errs:#?}");
}

#[test]
fn theorem2_check_passes_and_validates() {
    let out = run(&["theorem2", "--check"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("PASS").count(), 6);
    assert!(text.contains("6/6"));
    let doc = json_of(&["theorem2", "--check", "--format", "json"]);
    validate("theorem2.schema.json", &doc);
    validate("manifest.schema.json", &doc["manifest"]);
    // round trip through the wire form
    let back: Vec<zetahess::expr::TensorExprJson> =
        ["a", "b", "c", "d", "e", "f"].iter().map(|k| serde_json::from_value(doc["patterns"][k]["expr"].clone()).unwrap()).collect();
    let table = zetahess::heat_symbol::theorem2_table().unwrap();
    for (j, (_, e)) in back.iter().zip(table.iter()) {
        let parsed = zetahess::expr::TensorExpr::try_from(j).unwrap();
        assert!(zetahess::expr::expr_equal(e, &parsed));
    }
}

#[test]
fn latex_is_a_document() {
    let out = run(&["theorem2", "--format", "latex"]);
    let t = String::from_utf8(out.stdout).unwrap();
    assert!(t.starts_with("\\documentclass") && t.trim_end().ends_with("\\end{document}"));
    assert_eq!(t.matches("\\begin{").count(), t.matches("\\end{").count());
    assert_eq!(t.matches('{').count(), t.matches('}').count());
}

#[test]
fn us_conformal_regression() {
    let doc = json_of(&["us", "--spec", "conformal", "--n", "3", "--s", "0", "--xi", "1,0,0", "--h", "1,0,0;0,-1,0;0,0,0", "--format", "json"]);
    validate("us.schema.json", &doc);
    let m = &doc["matrix"];
    let re = |i: usize, j: usize| m[i][j][0].as_f64().unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(re(i, j), re(j, i));
            assert_eq!(m[i][j][1].as_f64().unwrap(), 0.0);
        }
    }
    // locked after the first verified run
    assert!((re(1, 1) + 4.1322479263751835e-4).abs() < 1e-15);
    assert!((re(2, 2) - 4.1322479263751835e-4).abs() < 1e-15);
    assert_eq!(re(0, 0), 0.0);
    // a spec file gives the same numbers as the built-in table
    let spec = root().join("inputs/conformal-n3.json");
    let file = json_of(&["us", "--spec", spec.to_str().unwrap(), "--s", "0", "--xi", "1,0,0", "--h", "1,0,0;0,-1,0;0,0,0", "--format", "json"]);
    assert_eq!(file["matrix"], doc["matrix"]);
}

#[test]
fn us_errors_exit_nonzero() {
    let pole = run(&["us", "--spec", "conformal", "--n", "3", "--s", "2.5,0", "--xi", "1,0,0", "--h", "1,0,0;0,-1,0;0,0,0"]);
    assert_eq!(pole.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&pole.stderr).contains("pole"));
    let zero = run(&["us", "--spec", "conformal", "--n", "3", "--s", "0", "--xi", "0,0,0", "--h", "1,0,0;0,-1,0;0,0,0"]);
    assert_eq!(zero.status.code(), Some(2));
    let bad = run(&["us", "--spec", "conformal", "--n", "3", "--s", "0;1", "--xi", "1,0,0", "--h", "1,0,0;0,-1,0;0,0,0"]);
    assert_eq!(bad.status.code(), Some(2));
    let asym = run(&["us", "--spec", "conformal", "--n", "2", "--s", "0", "--xi", "1,0", "--h", "1,1/2;0,1"]);
    assert_eq!(asym.status.code(), Some(2));
}

#[test]
fn verify_usage_and_exit_code() {
    assert_eq!(run(&["verify", ""]).status.code(), Some(2));
    assert_eq!(run(&["verify", "nonsense"]).status.code(), Some(2));
    let dir = std::env::temp_dir().join(format!("zetahess-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("rows.csv");
    let out = run(&["verify", "identities", "--format", "json", "--csv", csv.to_str().unwrap()]);
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    validate("report.schema.json", &doc);
    let failures = doc["failures"].as_u64().unwrap();
    assert_eq!(out.status.code(), Some(failures as i32));
    let names: Vec<&str> = doc["rows"].as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("gamma-integral identity n=")).count(), 25);
    let lines = std::fs::read_to_string(&csv).unwrap().lines().count();
    assert_eq!(lines, names.len() + 1);
}

#[test]
fn torus_hessian_and_heat_trace_validate() {
    let problem = root().join("inputs/circle-cos3.json");
    let p = problem.to_str().unwrap();
    let doc = json_of(&["torus-hessian", "--problem", p, "--s", "3", "--format", "json"]);
    validate("torus-hessian.schema.json", &doc);
    assert!(doc["rel_difference"].as_f64().unwrap() < 1e-6);
    let flags = json_of(&["torus-hessian", "--mode", "3", "--s", "3", "--format", "json"]);
    assert_eq!(flags["value"], doc["value"]);

    let ext = json_of(&["torus-hessian", "--problem", p, "--s", "3", "--format", "json", "--precision", "extended"]);
    let x: f64 = ext["extended"].as_str().unwrap().parse().unwrap();
    assert!((x / ext["value"][0].as_f64().unwrap() - 1.0).abs() < 1e-6);

    let heat = json_of(&["heat-trace", "--problem", p, "--format", "json"]);
    validate("heat-trace.schema.json", &heat);
    assert_eq!(heat["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn precision_comes_from_the_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_zetahess"))
        .args(["torus-hessian", "--mode", "3", "--s", "3", "--format", "json"])
        .env("ZETAHESS_PRECISION", "extended")
        .output()
        .unwrap();
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["manifest"]["precision"], "extended");
    assert!(doc["extended"].is_string());
    let bad = Command::new(env!("CARGO_BIN_EXE_zetahess")).args(["theorem2"]).env("ZETAHESS_PRECISION", "quad").output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_results() {
    let a = json_of(&["torus-hessian", "--n", "2", "--cutoff", "12", "--mode", "1,2", "--e", "1,0;0,-1", "--s", "4", "--format", "json", "--threads", "1"]);
    let b = json_of(&["torus-hessian", "--n", "2", "--cutoff", "12", "--mode", "1,2", "--e", "1,0;0,-1", "--s", "4", "--format", "json", "--threads", "3"]);
    let c = json_of(&["torus-hessian", "--n", "2", "--cutoff", "12", "--mode", "1,2", "--e", "1,0;0,-1", "--s", "4", "--format", "json", "--sequential"]);
    assert_eq!(a["value"], b["value"]);
    assert_eq!(a["value"], c["value"]);
}

#[test]
fn split_validates() {
    let doc = json_of(&["split", "--q", "exponential", "--n", "3", "--s", "1.2", "--k-max", "0", "--l-max", "0", "--format", "json"]);
    validate("split.schema.json", &doc);
    assert_eq!(run(&["split", "--q", "bogus", "--n", "3", "--s", "1.2"]).status.code(), Some(2));
}

#[test]
fn input_files_match_their_schemas() {
    let load = |f: &str| -> Value { serde_json::from_str(&std::fs::read_to_string(root().join("inputs").join(f)).unwrap()).unwrap() };
    validate("operator-spec.schema.json", &load("conformal-n3.json"));
    validate("torus-problem.schema.json", &load("circle-cos3.json"));
}
