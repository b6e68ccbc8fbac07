//! JSON formats: states, unitary tuples, and the canonical tensor and
//! fingerprint listings.
//!
//! Complex matrices are row-major arrays of `[re, im]` pairs. Canonical
//! listings print every real with 17 significant digits so equal values
//! produce equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bloch::TensorFamily;
use crate::error::{Error, Result};
use crate::hosvd::SpectraFingerprint;
use crate::qstate::{validate_density, CMatrix, DensityMatrix, LocalUnitaryTuple, Mat2};

type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StateFile {
    n_qubits: usize,
    matrix: RawMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct UnitariesFile {
    unitaries: Vec<RawMatrix>,
}

fn to_complex(raw: &RawMatrix, rows: usize, cols: usize) -> Result<CMatrix> {
    if raw.len() != rows || raw.iter().any(|r| r.len() != cols) {
        let got_cols = raw.first().map_or(0, Vec::len);
        return Err(Error::DimensionMismatch {
            expected: rows,
            rows: raw.len(),
            cols: got_cols,
        });
    }
    let mut m = CMatrix::zeros(rows, cols);
    for (i, row) in raw.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::NonFinite(i, j));
            }
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

fn from_complex<'a>(rows: usize, cols: usize, at: impl Fn(usize, usize) -> &'a Complex64) -> RawMatrix {
    (0..rows)
        .map(|i| (0..cols).map(|j| [at(i, j).re, at(i, j).im]).collect())
        .collect()
}

/// Parsed state file; `seed` is present on generated files.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDoc {
    pub state: DensityMatrix,
    pub seed: Option<u64>,
}

pub fn parse_state(text: &str) -> Result<StateDoc> {
    let f: StateFile = serde_json::from_str(text)?;
    if f.n_qubits == 0 || f.n_qubits > crate::qstate::MAX_QUBITS {
        return Err(Error::InvalidQubitCount(f.n_qubits));
    }
    let dim = 1usize << f.n_qubits;
    let m = to_complex(&f.matrix, dim, dim)?;
    Ok(StateDoc {
        state: validate_density(m, f.n_qubits)?,
        seed: f.seed,
    })
}

pub fn read_state(path: impl AsRef<Path>) -> Result<DensityMatrix> {
    Ok(parse_state(&std::fs::read_to_string(path)?)?.state)
}

pub fn state_to_json(rho: &DensityMatrix, seed: Option<u64>, note: Option<&str>) -> String {
    let m = rho.matrix();
    let f = StateFile {
        n_qubits: rho.n_qubits(),
        matrix: from_complex(m.nrows(), m.ncols(), |i, j| &m[(i, j)]),
        seed,
        note: note.map(str::to_owned),
    };
    let mut s = serde_json::to_string_pretty(&f).expect("state serializes");
    s.push('\n');
    s
}

pub fn parse_unitaries(text: &str) -> Result<LocalUnitaryTuple> {
    let f: UnitariesFile = serde_json::from_str(text)?;
    let units = f
        .unitaries
        .iter()
        .map(|raw| {
            let m = to_complex(raw, 2, 2)?;
            Ok(Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
        })
        .collect::<Result<Vec<_>>>()?;
    LocalUnitaryTuple::new(units)
}

/// `[[[re, im], ...], ...]` per unitary.
pub fn unitaries_value(u: &LocalUnitaryTuple) -> Value {
    let list: Vec<RawMatrix> = u
        .units()
        .iter()
        .map(|m| from_complex(2, 2, |i, j| &m[(i, j)]))
        .collect();
    serde_json::to_value(list).expect("unitaries serialize")
}

pub fn unitaries_to_json(u: &LocalUnitaryTuple) -> String {
    let mut s = serde_json::to_string_pretty(&serde_json::json!({ "unitaries": unitaries_value(u) }))
        .expect("unitaries serialize");
    s.push('\n');
    s
}

/// 17 significant digits, negative zero printed as zero.
pub fn canonical_number(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn canonical_list(out: &mut String, xs: impl IntoIterator<Item = f64>) {
    out.push('[');
    for (i, x) in xs.into_iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&canonical_number(x));
    }
    out.push(']');
}

fn labels(s: &crate::bloch::Subset) -> String {
    serde_json::to_string(s.labels()).expect("labels serialize")
}

/// One `{"subset": [...], "data": [...]}` object per line, subsets in order.
pub fn tensors_json(family: &TensorFamily) -> String {
    let mut out = String::from("[\n");
    let n = family.len();
    for (i, (s, t)) in family.iter().enumerate() {
        let _ = write!(out, "  {{\"subset\": {}, \"data\": ", labels(s));
        canonical_list(&mut out, t.data().iter().copied());
        out.push('}');
        out.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    out.push_str("]\n");
    out
}

pub fn fingerprint_json(fp: &SpectraFingerprint) -> String {
    let mut out = format!("{{\n  \"n_qubits\": {},\n  \"subsets\": [\n", fp.n_qubits);
    let n = fp.per_subset.len();
    for (i, (s, modes)) in fp.per_subset.iter().enumerate() {
        let _ = write!(out, "    {{\"subset\": {}, \"spectra\": [", labels(s));
        for (k, triple) in modes.iter().enumerate() {
            if k > 0 {
                out.push_str(", ");
            }
            canonical_list(&mut out, triple.iter().copied());
        }
        out.push_str("]}");
        out.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}
