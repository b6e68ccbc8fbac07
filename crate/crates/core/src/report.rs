//! JSON reports emitted by the command-line tool.
//!
//! Object keys come out sorted, and every number is printed by the same
//! shortest round-trip formatter, so a report depends only on its inputs.
//! `timing_ms` is the one field that varies between runs.

use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::hosvd::SpectraWitness;
use crate::io::unitaries_value;
use crate::symsearch::{SearchConfig, SolutionSource, Verdict};

pub const TOOL_NAME: &str = "lu-equiv";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Key excluded when comparing reports across runs.
pub const TIMING_KEY: &str = "timing_ms";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        }
    }
}

pub fn config_value(cfg: &SearchConfig) -> Value {
    json!({
        "tol_residual": cfg.tol_residual,
        "tol_spectra": cfg.tol_spectra,
        "n_starts": cfg.n_starts,
        "max_iters": cfg.max_iters,
        "seed": cfg.seed,
        "budget_ms": cfg.budget_ms,
        "degeneracy_tol": cfg.degeneracy_tol,
        "zero_tol": cfg.zero_tol,
    })
}

pub fn witness_value(w: &SpectraWitness) -> Value {
    json!({ "subset": w.subset.labels(), "mode": w.mode, "gap": w.gap })
}

fn base(command: &str, inputs: &[InputDigest]) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), json!({ "name": TOOL_NAME, "version": TOOL_VERSION }));
    m.insert("command".into(), json!(command));
    m.insert(
        "inputs".into(),
        Value::Array(
            inputs
                .iter()
                .map(|d| json!({ "path": d.path, "sha256": d.sha256 }))
                .collect(),
        ),
    );
    m
}

/// Report of `check`. `unitaries` sits at the top level so the report itself
/// can be handed to `verify`.
pub fn check_report(inputs: &[InputDigest], cfg: &SearchConfig, verdict: &Verdict, timing_ms: u128) -> Value {
    let mut m = base("check", inputs);
    m.insert("config".into(), config_value(cfg));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert("verdict".into(), json!(verdict.label()));
    match verdict {
        Verdict::Equivalent(e) => {
            m.insert(
                "residuals".into(),
                json!({ "certificate": e.residual, "tensor": e.tensor_residual }),
            );
            m.insert("unitaries".into(), unitaries_value(&e.units));
            m.insert(
                "charts".into(),
                serde_json::to_value(&e.charts).expect("charts serialize"),
            );
            let rotations: Vec<Vec<Vec<f64>>> = e
                .rotations
                .iter()
                .map(|r| {
                    let m = r.matrix();
                    (0..3).map(|i| (0..3).map(|j| m[(i, j)]).collect()).collect()
                })
                .collect();
            m.insert("rotations".into(), json!(rotations));
            let source = match e.source {
                SolutionSource::Discrete(i) => json!({ "kind": "discrete", "index": i }),
                SolutionSource::Refined(i) => json!({ "kind": "refined", "start": i }),
            };
            m.insert("source".into(), source);
        }
        Verdict::Inequivalent(w) => {
            m.insert("witness".into(), witness_value(w));
        }
        Verdict::Inconclusive {
            best_residual,
            starts_used,
            budget_exhausted,
        } => {
            m.insert("residuals".into(), json!({ "best_tensor": best_residual }));
            m.insert(
                "search".into(),
                json!({ "starts_used": starts_used, "budget_exhausted": budget_exhausted }),
            );
        }
    }
    m.insert(TIMING_KEY.into(), json!(timing_ms));
    let mut v = Value::Object(m);
    positive_zeros(&mut v);
    v
}

/// Print `-0.0` as `0.0`.
fn positive_zeros(v: &mut Value) {
    match v {
        Value::Number(n) if n.as_f64() == Some(0.0) && n.is_f64() => *v = json!(0.0),
        Value::Array(xs) => xs.iter_mut().for_each(positive_zeros),
        Value::Object(m) => m.values_mut().for_each(positive_zeros),
        _ => {}
    }
}

pub fn verify_report(inputs: &[InputDigest], tol_residual: f64, residual: f64, timing_ms: u128) -> Value {
    let mut m = base("verify", inputs);
    m.insert("tol_residual".into(), json!(tol_residual));
    m.insert("residual".into(), json!(residual));
    m.insert("verified".into(), json!(residual <= tol_residual));
    m.insert(TIMING_KEY.into(), json!(timing_ms));
    Value::Object(m)
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Report text with `timing_ms` removed, for run-to-run comparison.
pub fn without_timing(text: &str) -> crate::Result<String> {
    let mut v: Value = serde_json::from_str(text)?;
    if let Value::Object(m) = &mut v {
        m.remove(TIMING_KEY);
    }
    Ok(to_pretty(&v))
}
