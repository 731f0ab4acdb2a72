use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nilops::gmod::{free_unstable, suspend};
use nilops::io::module_json;
use nilops::library::{projective_infinity, rp2};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nilops"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

#[test]
fn check_module_on_free_module() {
    let dir = tempfile::tempdir().unwrap();
    let gen = run(&["gen", "free", "--n", "3", "--window", "0,24", "--json"]);
    assert!(gen.status.success());
    let p = dir.path().join("f3.json");
    std::fs::write(&p, &gen.stdout).unwrap();
    let out = run(&["check-module", p.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["violations"], Value::Array(vec![]));
}

#[test]
fn check_module_reports_instability() {
    let dir = tempfile::tempdir().unwrap();
    // Sq^2 on a class of degree 1.
    let p = write(
        dir.path(),
        "m.json",
        r#"{"window":[0,3],"complete":true,"dims":{"1":1,"3":1},"sq":[{"i":2,"from_degree":1,"rows":["1"]}]}"#,
    );
    let out = run(&["check-module", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Sq2 nonzero on degree 1"));
}

#[test]
fn nilfilt_of_rp2() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "rp2.json", &module_json(&rp2()));
    let out = run(&["nilfilt", "--smax", "6", p.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    // u ∈ degree 1 generates; Sq¹u = u² is the only nonzero square.
    assert_eq!(r["nil"]["1"], serde_json::json!({"1": 1, "2": 1}));
    assert_eq!(r["nil"]["2"], serde_json::json!({"2": 1}));
    for s in 3..=7 {
        assert_eq!(r["nil"][s.to_string()], serde_json::json!({}), "s = {s}");
    }
    assert_eq!(r["layers"][1]["dims"], serde_json::json!({"0": 1}));
    assert_eq!(r["layers"][2]["dims"], serde_json::json!({"0": 1}));
}

#[test]
fn obstruction_on_double_suspension_of_free_module() {
    let dir = tempfile::tempdir().unwrap();
    let m = suspend(&free_unstable(1, 30), 2);
    let p = write(dir.path(), "m.json", &module_json(&m));
    let args = ["obstruction", "--n", "2", "--module", p.to_str().unwrap(), "--kmax", "3", "--json"];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let r = json_of(&first);
    assert_eq!(r["verdict"], "fires");
    assert_eq!(r["f1"]["dims"], serde_json::json!([0, 1, 2, 3]));
    let second = run(&args);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn obstruction_on_builtin_functors() {
    let full = run(&["obstruction", "--n", "2", "--f1", "id", "--kernel", "full", "--json"]);
    assert_eq!(full.status.code(), Some(0));
    assert_eq!(json_of(&full)["verdict"], "fires");
    let zero = run(&["obstruction", "--n", "2", "--f1", "id", "--kernel", "zero", "--json"]);
    assert_eq!(zero.status.code(), Some(0));
    assert_eq!(json_of(&zero)["verdict"], "consistent");
}

#[test]
fn localized_projective_space_fails_the_hypothesis() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bz2.json", &module_json(&projective_infinity(16)));
    let l = run(&["localize", p.to_str().unwrap(), "--kmax", "3", "--json", "--trust-policy", "warn"]);
    assert_eq!(l.status.code(), Some(0));
    assert_eq!(json_of(&l)["functor"]["dims"], serde_json::json!([0, 1, 3, 7]));
    let strict = run(&["localize", p.to_str().unwrap(), "--kmax", "3"]);
    assert_eq!(strict.status.code(), Some(2));
    let f = write(dir.path(), "l.json", &String::from_utf8(l.stdout).unwrap());
    let out = run(&["obstruction", "--n", "2", "--f1", f.to_str().unwrap(), "--json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["verdict"], "hypothesis-not-met");
}

#[test]
fn functor_subcommands() {
    let deg = run(&["functor", "degree", "--builtin", "lambda2", "--json"]);
    assert_eq!(json_of(&deg)["degree"], serde_json::json!({"kind": "exactly", "value": 2}));
    let split = run(&["functor", "split", "--builtin", "phi", "--json"]);
    assert_eq!(json_of(&split)["splits"], false);
    let split = run(&["functor", "split", "--builtin", "split", "--json"]);
    assert_eq!(json_of(&split)["splits"], true);
    let e1 = run(&["functor", "ext2", "--builtin", "e1", "--json"]);
    assert_eq!(json_of(&e1)["nonzero"], true);
    let det = run(&["functor", "detect", "--builtin", "lambda2-t2", "--d", "2", "--json"]);
    assert_eq!(json_of(&det)["composite_is_identity"], true);

    let dir = tempfile::tempdir().unwrap();
    let show = run(&["functor", "show", "--builtin", "phi", "--kmax", "2"]);
    let p = write(dir.path(), "phi.json", &String::from_utf8(show.stdout).unwrap());
    let split = run(&["functor", "split", p.to_str().unwrap(), "--json"]);
    assert_eq!(json_of(&split)["splits"], false);
}

#[test]
fn malformed_input_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bad.json", "{\"window\": [0, 2],\n \"complete\": tru }");
    let out = run(&["nilfilt", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2 column"));
}

#[test]
fn window_flag_restricts_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "f1.json", &module_json(&free_unstable(1, 16)));
    let out = run(&["op", "suspend", "--by", "1", p.to_str().unwrap(), "--window", "0,8", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["dims"], serde_json::json!({"2": 1, "3": 1, "5": 1, "9": 1}));
    assert_eq!(r["window"], serde_json::json!([1, 9]));
    let bad = run(&["op", "suspend", "--by", "1", p.to_str().unwrap(), "--window", "0,40"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn thread_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "bz2.json", &module_json(&projective_infinity(12)));
    let a = bin().args(["localize", p.to_str().unwrap(), "--json"]).env("NILOPS_THREADS", "1").output().unwrap();
    let b = bin().args(["localize", p.to_str().unwrap(), "--json"]).env("NILOPS_THREADS", "4").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let bad = bin().args(["localize", p.to_str().unwrap()]).env("NILOPS_THREADS", "many").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}
