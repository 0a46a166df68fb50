use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chordmink"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

fn cube_measure(dir: &Path) {
    let atoms: Vec<String> = [
        "[1,0,0]", "[-1,0,0]", "[0,1,0]", "[0,-1,0]", "[0,0,1]", "[0,0,-1]",
    ]
    .iter()
    .map(|v| format!("{{\"v\":{v},\"alpha\":4}}"))
    .collect();
    write(dir, "cube.json", &format!("{{\"dim\":3,\"atoms\":[{}]}}", atoms.join(",")));
}

#[test]
fn solve_recovers_the_cube() {
    let dir = tempfile::tempdir().unwrap();
    cube_measure(dir.path());
    let out = run(&["solve", "--measure", "cube.json", "--p", "0.5", "--q", "1", "--out", "r.json"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert!(r["max_rel"].as_f64().unwrap() < 0.02);
    for h in r["polytope"]["offsets"].as_array().unwrap() {
        assert!((h.as_f64().unwrap() - 1.0).abs() < 0.02);
    }
}

#[test]
fn hemisphere_measure_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", r#"{"dim":2,"atoms":[{"v":[1,0],"alpha":1},{"v":[0,1],"alpha":1}]}"#);
    let out = run(&["measure-check", "--measure", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["hemisphere"], Value::Bool(false));
    let out = run(&["solve", "--measure", "bad.json", "--p", "0.5", "--q", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn chord_of_unit_square_at_q3() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sq.json", r#"{"normals":[[1,0],[-1,0],[0,1],[0,-1]],"offsets":[1,0,1,0]}"#);
    let out = run(&["chord", "--polytope", "sq.json", "--q", "3"], dir.path());
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let i = r["I_q"]["value"].as_f64().unwrap();
    assert!((i - 3.0 / std::f64::consts::PI).abs() < 1e-12, "{i}");
    assert_eq!(r["F_q"].as_array().unwrap().len(), 4);
}

#[test]
fn bad_arguments_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["solve", "--p", "x"], dir.path()).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(2));
    let out = run(&["chord", "--polytope", "missing.json", "--q", "1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn same_arguments_give_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "sq.json", r#"{"normals":[[1,0],[-1,0],[0,1],[0,-1]],"offsets":[1,1,1,1]}"#);
    let args = ["--seed", "5", "chord", "--polytope", "sq.json", "--q", "1.5", "--method", "monte-carlo", "--samples", "20000"];
    let a = run(&args, dir.path());
    let b = run(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn emit_plot_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    cube_measure(dir.path());
    let out = run(
        &["--emit-plot", "solve", "--measure", "cube.json", "--p", "0.5", "--q", "1", "--out", "r.json"],
        dir.path(),
    );
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("r.plot.csv")).unwrap();
    assert!(csv.starts_with("facet,"));
    assert!(csv.lines().count() > 12);
}

#[test]
fn discretize_preserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "u.json", r#"{"family":"uniform","dim":2,"mass":3.0}"#);
    let out = run(&["discretize", "--density", "u.json", "--m", "4"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = String::from_utf8_lossy(&out.stdout);
    let v: Value = serde_json::from_str(&s).unwrap();
    let atoms = find_atoms(&v).expect("atoms in output");
    let total: f64 = atoms.iter().map(|a| a["alpha"].as_f64().unwrap()).sum();
    assert!((total - 3.0).abs() < 1e-12, "{total}");
}

fn find_atoms(v: &Value) -> Option<&Vec<Value>> {
    match v {
        Value::Object(m) => m
            .get("atoms")
            .and_then(Value::as_array)
            .filter(|a| a.first().is_some_and(|x| x.get("alpha").is_some()))
            .or_else(|| m.values().find_map(find_atoms)),
        _ => None,
    }
}
