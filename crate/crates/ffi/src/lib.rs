//! C ABI for `lu-equiv`.
//!
//! States and verdicts are opaque handles owned by the caller and released
//! with their `_free` function. Every fallible call returns an [`LuStatus`];
//! on failure a message is available from [`lu_last_error`] until the next
//! call on the same thread. Complex matrices cross the boundary as separate
//! real and imaginary `double` arrays in row-major order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use lu_equiv::bloch::all_tensors;
use lu_equiv::hosvd::fingerprint;
use lu_equiv::io::{fingerprint_json, parse_state, tensors_json};
use lu_equiv::qstate::{lu_residual, validate_density, CMatrix, DensityMatrix, LocalUnitaryTuple, Mat2, MAX_QUBITS};
use lu_equiv::symsearch::{decide, SearchConfig, Verdict};
use lu_equiv::Error;
use num_complex::Complex64;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LuStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    InvalidState = 3,
    InvalidUnitaries = 4,
    InvalidConfig = 5,
    BufferTooSmall = 6,
    WrongVerdict = 7,
    Numerical = 8,
    Internal = 9,
    Panic = 10,
}

/// Outcome of [`lu_decide`]. The values match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LuVerdictKind {
    Equivalent = 0,
    Inequivalent = 1,
    Inconclusive = 2,
}

/// Search settings. Obtain defaults from [`lu_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuConfig {
    pub tol_residual: f64,
    pub tol_spectra: f64,
    pub n_starts: usize,
    pub max_iters: usize,
    pub seed: u64,
    /// Wall-clock budget in milliseconds; 0 means unlimited.
    pub budget_ms: u64,
    pub degeneracy_tol: f64,
    pub zero_tol: f64,
}

impl From<&LuConfig> for SearchConfig {
    fn from(c: &LuConfig) -> Self {
        SearchConfig {
            tol_residual: c.tol_residual,
            tol_spectra: c.tol_spectra,
            n_starts: c.n_starts,
            max_iters: c.max_iters,
            seed: c.seed,
            budget_ms: (c.budget_ms > 0).then_some(c.budget_ms),
            degeneracy_tol: c.degeneracy_tol,
            zero_tol: c.zero_tol,
        }
    }
}

/// Spectral witness of inequivalence.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LuWitness {
    /// Bit `k - 1` is set when subsystem `k` belongs to the subset.
    pub subset_mask: u32,
    /// 1-based tensor mode.
    pub mode: usize,
    /// Max-norm gap between the two singular-value triples.
    pub gap: f64,
}

/// Opaque validated density matrix.
pub struct LuState {
    inner: DensityMatrix,
}

/// Opaque decision result.
pub struct LuVerdict {
    inner: Verdict,
}

struct Failure(LuStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => LuStatus::Parse,
            Error::DimensionMismatch { .. }
            | Error::NotHermitian(_)
            | Error::TraceNotOne(_)
            | Error::NotPositive(_)
            | Error::NonFinite(..)
            | Error::InvalidQubitCount(_) => LuStatus::InvalidState,
            Error::NotUnitary(_) | Error::ArityMismatch { .. } => LuStatus::InvalidUnitaries,
            Error::InvalidConfig(_) => LuStatus::InvalidConfig,
            Error::SvdFailure | Error::NotRotation { .. } | Error::NonRealExpectation(_) => LuStatus::Numerical,
            _ => LuStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: LuStatus, msg: &str) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LuStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LuStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside lu-equiv");
            LuStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes either null or a valid pointer.
    unsafe { p.as_ref() }.ok_or_else(|| Failure(LuStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or_else(|| Failure(LuStatus::NullPointer, format!("{what} is null")))
}

unsafe fn read_parts<'a>(re: *const f64, im: *const f64, len: usize) -> Result<(&'a [f64], &'a [f64]), Failure> {
    if re.is_null() || im.is_null() {
        return fail(LuStatus::NullPointer, "matrix data is null");
    }
    // SAFETY: caller guarantees both arrays hold `len` doubles.
    unsafe { Ok((std::slice::from_raw_parts(re, len), std::slice::from_raw_parts(im, len))) }
}

unsafe fn read_units(re: *const f64, im: *const f64, n_units: usize) -> Result<LocalUnitaryTuple, Failure> {
    let (re, im) = unsafe { read_parts(re, im, 4 * n_units)? };
    let units = (0..n_units)
        .map(|k| Mat2::from_fn(|i, j| Complex64::new(re[4 * k + 2 * i + j], im[4 * k + 2 * i + j])))
        .collect();
    Ok(LocalUnitaryTuple::new(units)?)
}

fn into_c_string(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let out = unsafe { out_ptr(out, "output string")? };
    let c = CString::new(s).map_err(|_| Failure(LuStatus::Internal, "interior NUL in output".into()))?;
    *out = c.into_raw();
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lu_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty if it succeeded.
/// The pointer stays valid until the next call into this library.
#[no_mangle]
pub extern "C" fn lu_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn lu_config_default() -> LuConfig {
    let d = SearchConfig::default();
    LuConfig {
        tol_residual: d.tol_residual,
        tol_spectra: d.tol_spectra,
        n_starts: d.n_starts,
        max_iters: d.max_iters,
        seed: d.seed,
        budget_ms: d.budget_ms.unwrap_or(0),
        degeneracy_tol: d.degeneracy_tol,
        zero_tol: d.zero_tol,
    }
}

/// Parse a state document (`{"n_qubits": N, "matrix": [[[re, im], ...], ...]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn lu_state_from_json(json: *const c_char, out: *mut *mut LuState) -> LuStatus {
    guard(|| {
        let out = unsafe { out_ptr(out, "out")? };
        if json.is_null() {
            return fail(LuStatus::NullPointer, "json is null");
        }
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let text = unsafe { CStr::from_ptr(json) }
            .to_str()
            .map_err(|_| Failure(LuStatus::Parse, "json is not valid UTF-8".into()))?;
        let doc = parse_state(text)?;
        *out = Box::into_raw(Box::new(LuState { inner: doc.state }));
        Ok(())
    })
}

/// Build a state from row-major `2^n x 2^n` real and imaginary parts.
///
/// # Safety
/// `re` and `im` must each hold `4^n_qubits` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lu_state_from_parts(
    n_qubits: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut LuState,
) -> LuStatus {
    guard(|| {
        let out = unsafe { out_ptr(out, "out")? };
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidQubitCount(n_qubits).into());
        }
        let dim = 1usize << n_qubits;
        let (re, im) = unsafe { read_parts(re, im, dim * dim)? };
        let raw = CMatrix::from_fn(dim, dim, |i, j| Complex64::new(re[i * dim + j], im[i * dim + j]));
        let state = validate_density(raw, n_qubits)?;
        *out = Box::into_raw(Box::new(LuState { inner: state }));
        Ok(())
    })
}

/// # Safety
/// `state` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lu_state_free(state: *mut LuState) {
    if !state.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Number of qubits, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lu_state_n_qubits(state: *const LuState) -> usize {
    unsafe { state.as_ref() }.map_or(0, |s| s.inner.n_qubits())
}

/// Correlation tensors as canonical JSON. Free the result with [`lu_string_free`].
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lu_state_tensors_json(state: *const LuState, out: *mut *mut c_char) -> LuStatus {
    guard(|| {
        let s = unsafe { deref(state, "state")? };
        into_c_string(tensors_json(&all_tensors(&s.inner)?), out)
    })
}

/// Singular-spectrum fingerprint as canonical JSON. Free with [`lu_string_free`].
///
/// # Safety
/// `state` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lu_state_fingerprint_json(state: *const LuState, out: *mut *mut c_char) -> LuStatus {
    guard(|| {
        let s = unsafe { deref(state, "state")? };
        let fp = fingerprint(&all_tensors(&s.inner)?)?;
        into_c_string(fingerprint_json(&fp), out)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lu_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: created by CString::into_raw in this library.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Decide whether `b` is a local-unitary image of `a`. A null `config`
/// selects the defaults.
///
/// # Safety
/// `a` and `b` must be live handles, `config` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lu_decide(
    a: *const LuState,
    b: *const LuState,
    config: *const LuConfig,
    out: *mut *mut LuVerdict,
) -> LuStatus {
    guard(|| {
        let out = unsafe { out_ptr(out, "out")? };
        let (a, b) = unsafe { (deref(a, "a")?, deref(b, "b")?) };
        let cfg = match unsafe { config.as_ref() } {
            Some(c) => SearchConfig::from(c),
            None => SearchConfig::default(),
        };
        let verdict = decide(&a.inner, &b.inner, &cfg)?;
        *out = Box::into_raw(Box::new(LuVerdict { inner: verdict }));
        Ok(())
    })
}

/// # Safety
/// `verdict` must be null or a handle from [`lu_decide`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lu_verdict_free(verdict: *mut LuVerdict) {
    if !verdict.is_null() {
        // SAFETY: created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(verdict) });
    }
}

/// # Safety
/// `verdict` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lu_verdict_kind(verdict: *const LuVerdict, out: *mut LuVerdictKind) -> LuStatus {
    guard(|| {
        let v = unsafe { deref(verdict, "verdict")? };
        let out = unsafe { out_ptr(out, "out")? };
        *out = match v.inner {
            Verdict::Equivalent(_) => LuVerdictKind::Equivalent,
            Verdict::Inequivalent(_) => LuVerdictKind::Inequivalent,
            Verdict::Inconclusive { .. } => LuVerdictKind::Inconclusive,
        };
        Ok(())
    })
}

/// Certificate residual of an equivalent verdict, or the best tensor residual
/// of an inconclusive one. Fails with `WRONG_VERDICT` for an inequivalent one.
///
/// # Safety
/// `verdict` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lu_verdict_residual(verdict: *const LuVerdict, out: *mut f64) -> LuStatus {
    guard(|| {
        let v = unsafe { deref(verdict, "verdict")? };
        let out = unsafe { out_ptr(out, "out")? };
        *out = match &v.inner {
            Verdict::Equivalent(e) => e.residual,
            Verdict::Inconclusive { best_residual, .. } => *best_residual,
            Verdict::Inequivalent(_) => return fail(LuStatus::WrongVerdict, "verdict has no residual"),
        };
        Ok(())
    })
}

/// Copy the certified unitaries of an equivalent verdict. Unitary `k` occupies
/// entries `4k .. 4k + 4` of `re` and `im`, row-major. `len` is the capacity of
/// each array in doubles; it must be at least `4 * n_qubits`.
///
/// # Safety
/// `verdict` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lu_verdict_unitaries(
    verdict: *const LuVerdict,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> LuStatus {
    guard(|| {
        let v = unsafe { deref(verdict, "verdict")? };
        let Verdict::Equivalent(e) = &v.inner else {
            return fail(LuStatus::WrongVerdict, "verdict has no unitaries");
        };
        let units = e.units.units();
        if len < 4 * units.len() {
            return Err(Failure(
                LuStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", 4 * units.len()),
            ));
        }
        if re.is_null() || im.is_null() {
            return fail(LuStatus::NullPointer, "output arrays are null");
        }
        // SAFETY: caller guarantees both arrays hold `len` doubles.
        let (re, im) = unsafe {
            (
                std::slice::from_raw_parts_mut(re, len),
                std::slice::from_raw_parts_mut(im, len),
            )
        };
        for (k, u) in units.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    re[4 * k + 2 * i + j] = u[(i, j)].re;
                    im[4 * k + 2 * i + j] = u[(i, j)].im;
                }
            }
        }
        Ok(())
    })
}

/// Witness of an inequivalent verdict.
///
/// # Safety
/// `verdict` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lu_verdict_witness(verdict: *const LuVerdict, out: *mut LuWitness) -> LuStatus {
    guard(|| {
        let v = unsafe { deref(verdict, "verdict")? };
        let out = unsafe { out_ptr(out, "out")? };
        let Verdict::Inequivalent(w) = &v.inner else {
            return fail(LuStatus::WrongVerdict, "verdict has no witness");
        };
        *out = LuWitness {
            subset_mask: w.subset.labels().iter().fold(0, |m, &k| m | 1 << (k - 1)),
            mode: w.mode,
            gap: w.gap,
        };
        Ok(())
    })
}

/// Compute `max |b - (xU) a (xU)^dag|` for `n_units` unitaries laid out as in
/// [`lu_verdict_unitaries`].
///
/// # Safety
/// `a`, `b` must be live handles; `re`, `im` hold `4 * n_units` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lu_verify(
    a: *const LuState,
    b: *const LuState,
    re: *const f64,
    im: *const f64,
    n_units: usize,
    out: *mut f64,
) -> LuStatus {
    guard(|| {
        let (a, b) = unsafe { (deref(a, "a")?, deref(b, "b")?) };
        let out = unsafe { out_ptr(out, "out")? };
        let units = unsafe { read_units(re, im, n_units)? };
        *out = lu_residual(&a.inner, &b.inner, &units)?;
        Ok(())
    })
}
