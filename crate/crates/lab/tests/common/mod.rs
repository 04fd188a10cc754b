#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Output;

use cmc_lab::{FamilyConfig, Mode, PreWarp};
use serde_json::Value;

pub fn family(band_limit: usize, modes: &[(usize, i64, f64)], amplitudes: &[f64]) -> FamilyConfig {
    FamilyConfig {
        band_limit,
        modes: modes.iter().map(|&(l, m, amp)| Mode { l, m, amp }).collect(),
        amplitudes: amplitudes.to_vec(),
        pre_warp: None,
        alpha: 0.25,
        seed: 0,
    }
}

pub fn warped(mut c: FamilyConfig, v: [f64; 3]) -> FamilyConfig {
    c.pre_warp = Some(PreWarp { v, ..PreWarp::default() });
    c
}

/// Write `config` to a fresh file under the target temp directory.
pub fn write_config(name: &str, config: &FamilyConfig) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cmc-lab-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

pub fn lab(args: &[&str]) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_lab"))
        .args(args)
        .output()
        .unwrap()
}

/// Largest absolute difference between matching numbers of two JSON trees; `None` if the shapes differ.
pub fn max_numeric_diff(a: &Value, b: &Value) -> Option<f64> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => Some((x.as_f64()? - y.as_f64()?).abs()),
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => x
            .iter()
            .zip(y)
            .try_fold(0.0_f64, |m, (x, y)| Some(m.max(max_numeric_diff(x, y)?))),
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => x
            .iter()
            .try_fold(0.0_f64, |m, (k, x)| Some(m.max(max_numeric_diff(x, y.get(k)?)?))),
        (x, y) => (x == y).then_some(0.0),
    }
}
