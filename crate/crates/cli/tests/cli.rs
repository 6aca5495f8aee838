use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use expost_cli::{run, CommandOutcome};
use expost_core::formats::{self, instance_to_json, matching_to_json, matrix_to_json};
use expost_core::gen::{fixtures, gen_example1};
use expost_core::max_stable_decomposition;
use serde_json::{json, Value};
use tempfile::TempDir;

fn put(dir: &Path, name: &str, v: &Value) -> String {
    let path = dir.join(name);
    fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn cli(args: &[&str]) -> CommandOutcome {
    run(std::iter::once("expost").chain(args.iter().copied()))
}

struct Ex1 {
    _dir: TempDir,
    instance: String,
    uniform: String,
    improved: String,
    m1: String,
}

fn ex1() -> Ex1 {
    let dir = TempDir::new().unwrap();
    let ex = gen_example1();
    let d = dir.path();
    Ex1 {
        instance: put(d, "instance.json", &instance_to_json(&ex.instance)),
        uniform: put(d, "uniform.json", &matrix_to_json(&ex.p_uniform)),
        improved: put(d, "improved.json", &matrix_to_json(&ex.p_improved)),
        m1: put(d, "m1.json", &matching_to_json(&ex.m1, ex.instance.agents(), ex.instance.items())),
        _dir: dir,
    }
}

fn agree2(dir: &Path) -> (String, String) {
    let inst = fixtures::agree2();
    (
        put(dir, "agree2.json", &instance_to_json(&inst)),
        put(dir, "half.json", &matrix_to_json(&fixtures::half_half(&inst))),
    )
}

#[test]
fn expost_on_improved_matrix() {
    let e = ex1();
    let out = cli(&["expost", "--instance", &e.instance, "--matrix", &e.improved]);
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.stdout["stable_probability"], "1");
    assert_eq!(out.stdout["is_expost_stable"], true);
}

#[test]
fn expost_is_a_thin_adapter() {
    let e = ex1();
    let out = cli(&["expost", "--instance", &e.instance, "--matrix", &e.uniform]);
    let ex = gen_example1();
    let direct = formats::expost_to_json(&max_stable_decomposition(&ex.instance, &ex.p_uniform).unwrap());
    assert_eq!(out.stdout, direct);
    assert_eq!(out.render(), serde_json::to_string_pretty(&direct).unwrap());
}

#[test]
fn expost_on_agree2_half_fails_with_half() {
    let dir = TempDir::new().unwrap();
    let (inst, half) = agree2(dir.path());
    let out = cli(&["expost", "--instance", &inst, "--matrix", &half]);
    assert_eq!(out.exit_code, 3);
    assert_eq!(out.stdout["stable_probability"], "1/2");
}

#[test]
fn oracle_flag_reports_agreement() {
    let dir = TempDir::new().unwrap();
    let (inst, half) = agree2(dir.path());
    for cmd in ["expost", "expost-strong", "robust", "fractional", "consistent-stable"] {
        let out = cli(&[cmd, "--instance", &inst, "--matrix", &half, "--oracle"]);
        assert_eq!(out.stdout["oracle"]["agrees"], true, "{cmd}");
        assert!(out.exit_code == 0 || out.exit_code == 3, "{cmd}");
    }
}

#[test]
fn emit_decomposition_writes_the_decomposition() {
    let e = ex1();
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("d.json");
    let out = cli(&[
        "expost",
        "--instance",
        &e.instance,
        "--matrix",
        &e.improved,
        "--emit-decomposition",
        target.to_str().unwrap(),
    ]);
    let written: Value = serde_json::from_str(&fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(written, out.stdout["decomposition"]);
}

#[test]
fn cap_exceeded_exits_4() {
    let e = ex1();
    let out = cli(&["expost", "--instance", &e.instance, "--matrix", &e.uniform, "--cap", "1"]);
    assert_eq!(out.exit_code, 4);
    assert_eq!(out.stdout["error"]["kind"], "cap-exceeded");
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = cli(&["frobnicate"]);
    assert_eq!((out.exit_code, &out.stdout["error"]["kind"]), (2, &json!("usage")));

    let missing = dir.path().join("nope.json");
    let out = cli(&["da", "--instance", missing.to_str().unwrap()]);
    assert_eq!((out.exit_code, &out.stdout["error"]["kind"]), (2, &json!("io")));

    let broken = put(dir.path(), "broken.json", &json!({"agents": ["a"]}));
    let out = cli(&["da", "--instance", &broken]);
    assert_eq!((out.exit_code, &out.stdout["error"]["kind"]), (2, &json!("parse")));

    let e = ex1();
    let floats = put(dir.path(), "floats.json", &json!({"n": 4, "entries": [{"agent": "a", "item": "o1", "p": 0.5}]}));
    let out = cli(&["expost", "--instance", &e.instance, "--matrix", &floats]);
    assert_eq!(out.exit_code, 2);
}

#[test]
fn robust_on_a_stable_zero_one_matrix() {
    let e = ex1();
    let dir = TempDir::new().unwrap();
    let ex = gen_example1();
    let p = put(dir.path(), "m1.json", &matrix_to_json(&ex.m1.to_matrix(ex.instance.agents(), ex.instance.items())));
    let out = cli(&["robust", "--instance", &e.instance, "--matrix", &p]);
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.stdout, json!({"robust": true, "witness": null}));
}

#[test]
fn robust_witnesses_block() {
    let dir = TempDir::new().unwrap();
    let (inst, half) = agree2(dir.path());
    let out = cli(&["robust", "--instance", &inst, "--matrix", &half, "--all-witnesses"]);
    assert_eq!(out.exit_code, 3);
    assert_eq!(out.stdout["witness"]["agent"], "a");
    assert_eq!(out.stdout["witness"]["item"], "x");
    let m = put(dir.path(), "w.json", &json!({"matching": out.stdout["witness"]["matching"]}));
    let check = cli(&["check-stable", "--instance", &inst, "--matching", &m]);
    assert_eq!(check.exit_code, 3);
    assert_eq!(check.stdout["blocking_pairs"][0], json!({"agent": "a", "item": "x", "kind": "weak-block"}));
    assert!(!out.stdout["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn check_stable_weak_and_strong() {
    let e = ex1();
    let weak = cli(&["check-stable", "--instance", &e.instance, "--matching", &e.m1]);
    assert_eq!(weak.exit_code, 0);
    let strong = cli(&["check-stable", "--instance", &e.instance, "--matching", &e.m1, "--strong"]);
    assert_eq!(strong.exit_code, 3);
}

#[test]
fn fractional_strong_fails_on_improved() {
    let e = ex1();
    let weak = cli(&["fractional", "--instance", &e.instance, "--matrix", &e.improved]);
    assert_eq!(weak.exit_code, 0);
    let strong = cli(&["fractional", "--instance", &e.instance, "--matrix", &e.improved, "--strong", "--oracle"]);
    assert_eq!(strong.exit_code, 3);
    assert_eq!(strong.stdout["oracle"]["agrees"], true);
    let strong_expost = cli(&["expost-strong", "--instance", &e.instance, "--matrix", &e.improved]);
    assert_eq!(strong_expost.exit_code, 3);
    assert_eq!(strong_expost.stdout["decomposition"], Value::Null);
}

#[test]
fn validate_reports_violations() {
    let dir = TempDir::new().unwrap();
    let bad = json!({
        "agents": ["a", "b"],
        "items": ["x"],
        "preferences": {"a": [["x"]], "b": [["x", "x"]]},
        "priorities": {"x": [["a"]]},
        "complete": true,
    });
    let out = cli(&["validate", "--instance", &put(dir.path(), "bad.json", &bad)]);
    assert_eq!(out.exit_code, 3);
    assert_eq!(out.stdout["ok"], false);
    assert!(!out.stdout["instance"]["violations"].as_array().unwrap().is_empty());

    let e = ex1();
    let good = cli(&["validate", "--instance", &e.instance, "--matrix", &e.uniform]);
    assert_eq!(good.exit_code, 0);
}

#[test]
fn da_is_stable_and_seeded() {
    let e = ex1();
    let a = cli(&["da", "--instance", &e.instance, "--seed", "7", "--oracle"]);
    assert_eq!(a.exit_code, 0);
    assert_eq!(a.stdout["oracle"]["agrees"], true);
    let b = cli(&["da", "--instance", &e.instance, "--seed", "7"]);
    assert_eq!(a.stdout["matching"], b.stdout["matching"]);
}

#[test]
fn birkhoff_standalone_and_annotated() {
    let e = ex1();
    let plain = cli(&["birkhoff", "--matrix", &e.improved]);
    assert_eq!(plain.exit_code, 0);
    let named = cli(&["birkhoff", "--matrix", &e.improved, "--instance", &e.instance]);
    assert_eq!(named.stdout["stable_probability"], "1");
    assert_eq!(named.stdout["terms"].as_array().unwrap().len(), plain.stdout["terms"].as_array().unwrap().len());
}

#[test]
fn consistent_stable_on_x3c1() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("red");
    let gen =
        cli(&["gen", "x3c", "--fixture", "x3c1", "--variant", "consistent", "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(gen.stdout["has_cover"], true);
    let inst = out_dir.join("instance.json");
    let p = out_dir.join("matrix.json");
    let out = cli(&["consistent-stable", "--instance", inst.to_str().unwrap(), "--matrix", p.to_str().unwrap()]);
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.stdout["found"], true);
}

#[test]
fn deg3_reduction_through_completion() {
    let dir = TempDir::new().unwrap();
    let raw = dir.path().join("raw");
    let done = dir.path().join("done");
    let x3c = put(dir.path(), "x.json", &formats::x3c_to_json(&fixtures::x3c1()));
    cli(&["gen", "x3c", "--x3c", &x3c, "--variant", "deg3", "--out-dir", raw.to_str().unwrap()]);
    let arg = |d: &PathBuf, f: &str| d.join(f).to_str().unwrap().to_string();
    let c = cli(&[
        "complete",
        "--instance",
        &arg(&raw, "instance.json"),
        "--matrix",
        &arg(&raw, "matrix.json"),
        "--out-dir",
        done.to_str().unwrap(),
    ]);
    assert_eq!(c.exit_code, 0);
    let out = cli(&["expost", "--instance", &arg(&done, "instance.json"), "--matrix", &arg(&done, "matrix.json")]);
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.stdout["stable_probability"], "1");
}

#[test]
fn generators() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().join("ex1");
    let ex = gen_example1();
    cli(&["gen", "example1", "--out-dir", out_dir.to_str().unwrap()]);
    let inst = formats::parse_instance(&fs::read_to_string(out_dir.join("instance.json")).unwrap()).unwrap();
    assert_eq!(inst, ex.instance);
    let inst_path = out_dir.join("instance.json");
    let inst_arg = inst_path.to_str().unwrap();

    let ps = cli(&["gen", "ps", "--instance", inst_arg]);
    assert_eq!(ps.stdout["matrix"], matrix_to_json(&ex.p_improved));

    let mix = cli(&["gen", "mixture", "--instance", inst_arg, "--k", "4", "--seed", "3"]);
    let p = put(dir.path(), "mix.json", &mix.stdout["matrix"]);
    assert_eq!(cli(&["expost", "--instance", inst_arg, "--matrix", &p]).exit_code, 0);

    let a = cli(&["gen", "random", "--n", "4", "--model", "weak", "--seed", "9"]);
    let b = cli(&["gen", "random", "--n", "4", "--model", "weak", "--seed", "9"]);
    assert_eq!(a, b);
    assert_eq!(cli(&["gen", "random", "--n", "4", "--model", "lumpy"]).exit_code, 2);
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (inst, half) = agree2(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_expost"))
        .args(["expost", "--instance", &inst, "--matrix", &half])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["max_stable_probability"], "1/2");

    let help = Command::new(env!("CARGO_BIN_EXE_expost")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("expost-strong"));
}
