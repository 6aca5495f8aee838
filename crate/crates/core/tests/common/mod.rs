#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use expost_core::gen::{gen_random_bistochastic, gen_random_instance, gen_random_mixture, TieModel};
use expost_core::{Instance, RandomMatching};
use serde_json::Value;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

/// Compares against `tests/fixtures/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &Value) {
    let path = fixture_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        let mut text = serde_json::to_string_pretty(actual).unwrap();
        text.push('\n');
        fs::write(&path, text).unwrap();
        return;
    }
    let stored: Value = serde_json::from_str(&read_fixture(name)).unwrap();
    assert_eq!(&stored, actual, "golden file {name} differs; rerun with UPDATE_GOLDEN=1 if intended");
}

pub const MODELS: [TieModel; 3] = [TieModel::Strict, TieModel::Dichotomous, TieModel::Weak];

/// A seeded complete instance with `2 ≤ n ≤ max_n` and a matrix that is a
/// stable mixture for even seeds and an arbitrary bistochastic matrix for
/// odd ones.
pub fn seeded_case(seed: u64, max_n: usize, model: TieModel) -> (Instance, RandomMatching) {
    let n = 2 + (seed as usize / 2) % (max_n - 1);
    let inst = gen_random_instance(n, model, 1.0, seed);
    let k = 1 + (seed as usize) % 4;
    let p = if seed.is_multiple_of(2) {
        gen_random_mixture(&inst, k, seed ^ 0x9e37).unwrap()
    } else {
        gen_random_bistochastic(&inst, k, seed ^ 0x7f4a).unwrap()
    };
    (inst, p)
}
