#![allow(dead_code)]

use std::path::PathBuf;

use cmif::document::{load_function, FunctionDocument};
use cmif::function::{GeneratedFn, SetValuedFn};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(name: &str) -> (FunctionDocument, SetValuedFn) {
    load_function(&fixture_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn function(name: &str) -> SetValuedFn {
    load(name).1
}

pub fn generated(name: &str) -> GeneratedFn {
    match function(name) {
        SetValuedFn::Generated(g) => g,
        SetValuedFn::Finite(_) => panic!("{name} is not generated"),
    }
}

pub const ALL: &[&str] = &[
    "bennet",
    "bennet_scaled",
    "cond3_fail",
    "constant_half",
    "identity",
    "tau_example_f",
    "tau_example_g",
    "tent",
    "tent_flipped",
    "tent_quarter",
    "xxx",
    "xxxx",
    "zigzag",
];

/// Generated fixtures that are countably Markov.
pub const MARKOV: &[&str] = &[
    "bennet",
    "bennet_scaled",
    "identity",
    "tau_example_f",
    "tau_example_g",
    "tent",
    "tent_flipped",
    "tent_quarter",
    "zigzag",
];
