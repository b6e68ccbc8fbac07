use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use lu_equiv::io::state_to_json;
use lu_equiv::oracle::{make_lu_pair, random_density, Seed};
use lu_equiv::qstate::DensityMatrix;
use lu_equiv_ffi::*;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(lu_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn load_json(text: &str) -> *mut LuState {
    let c = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { lu_state_from_json(c.as_ptr(), &mut s) },
        LuStatus::Ok,
        "{}",
        last_error()
    );
    s
}

fn load(rho: &DensityMatrix) -> *mut LuState {
    load_json(&state_to_json(rho, None, None))
}

fn load_file(name: &str) -> *mut LuState {
    load_json(&std::fs::read_to_string(fixture(name)).unwrap())
}

fn decide_default(a: *const LuState, b: *const LuState) -> (*mut LuVerdict, LuVerdictKind) {
    let mut v = ptr::null_mut();
    assert_eq!(
        unsafe { lu_decide(a, b, ptr::null(), &mut v) },
        LuStatus::Ok,
        "{}",
        last_error()
    );
    let mut kind = LuVerdictKind::Inconclusive;
    assert_eq!(unsafe { lu_verdict_kind(v, &mut kind) }, LuStatus::Ok);
    (v, kind)
}

#[test]
fn example_pair_is_certified() {
    let (a, b) = (load_file("rho_example.json"), load_file("sigma_example.json"));
    assert_eq!(unsafe { lu_state_n_qubits(a) }, 3);
    let (v, kind) = decide_default(a, b);
    assert_eq!(kind, LuVerdictKind::Equivalent);

    let mut residual = 1.0;
    assert_eq!(unsafe { lu_verdict_residual(v, &mut residual) }, LuStatus::Ok);
    assert!(residual <= 1e-8);

    let (mut re, mut im) = ([0.0; 12], [0.0; 12]);
    assert_eq!(
        unsafe { lu_verdict_unitaries(v, re.as_mut_ptr(), im.as_mut_ptr(), 11) },
        LuStatus::BufferTooSmall
    );
    assert!(last_error().contains("12"));
    assert_eq!(
        unsafe { lu_verdict_unitaries(v, re.as_mut_ptr(), im.as_mut_ptr(), 12) },
        LuStatus::Ok
    );
    let mut check = 1.0;
    assert_eq!(
        unsafe { lu_verify(a, b, re.as_ptr(), im.as_ptr(), 3, &mut check) },
        LuStatus::Ok
    );
    assert!(check <= 1e-8);

    let mut w = LuWitness {
        subset_mask: 0,
        mode: 0,
        gap: 0.0,
    };
    assert_eq!(unsafe { lu_verdict_witness(v, &mut w) }, LuStatus::WrongVerdict);
    unsafe {
        lu_verdict_free(v);
        lu_state_free(a);
        lu_state_free(b);
    }
}

#[test]
fn maximally_mixed_gives_witness() {
    let (a, b) = (load_file("rho_example.json"), load_file("maximally_mixed.json"));
    let (v, kind) = decide_default(a, b);
    assert_eq!(kind, LuVerdictKind::Inequivalent);
    let mut w = LuWitness {
        subset_mask: 0,
        mode: 0,
        gap: 0.0,
    };
    assert_eq!(unsafe { lu_verdict_witness(v, &mut w) }, LuStatus::Ok);
    assert_eq!(w.subset_mask, 0b001);
    assert_eq!(w.mode, 1);
    assert!((w.gap - 3.0 / 17.0).abs() < 1e-12);
    let mut r = 0.0;
    assert_eq!(unsafe { lu_verdict_residual(v, &mut r) }, LuStatus::WrongVerdict);
    let (mut re, mut im) = ([0.0; 12], [0.0; 12]);
    assert_eq!(
        unsafe { lu_verdict_unitaries(v, re.as_mut_ptr(), im.as_mut_ptr(), 12) },
        LuStatus::WrongVerdict
    );
    unsafe {
        lu_verdict_free(v);
        lu_state_free(a);
        lu_state_free(b);
    }
}

#[test]
fn generated_pairs_round_trip() {
    for k in 0..5u64 {
        let n = 2 + k as usize % 2;
        let rho = random_density(n, 1 + k as usize % (1 << n), Seed(k)).unwrap();
        let (sigma, _) = make_lu_pair(&rho, Seed(100 + k)).unwrap();
        let (a, b) = (load(&rho), load(&sigma));
        let mut cfg = lu_config_default();
        cfg.seed = k;
        let mut v = ptr::null_mut();
        assert_eq!(unsafe { lu_decide(a, b, &cfg, &mut v) }, LuStatus::Ok);
        let mut kind = LuVerdictKind::Inconclusive;
        unsafe { lu_verdict_kind(v, &mut kind) };
        assert_eq!(kind, LuVerdictKind::Equivalent, "pair {k}");
        unsafe {
            lu_verdict_free(v);
            lu_state_free(a);
            lu_state_free(b);
        }
    }
}

#[test]
fn state_from_parts_matches_json() {
    let rho = random_density(2, 3, Seed(9)).unwrap();
    let m = rho.matrix();
    let re: Vec<f64> = (0..4).flat_map(|i| (0..4).map(move |j| m[(i, j)].re)).collect();
    let im: Vec<f64> = (0..4).flat_map(|i| (0..4).map(move |j| m[(i, j)].im)).collect();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { lu_state_from_parts(2, re.as_ptr(), im.as_ptr(), &mut s) },
        LuStatus::Ok
    );
    let j = load(&rho);

    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    assert_eq!(unsafe { lu_state_tensors_json(s, &mut a) }, LuStatus::Ok);
    assert_eq!(unsafe { lu_state_tensors_json(j, &mut b) }, LuStatus::Ok);
    let (ta, tb) = unsafe {
        (
            CStr::from_ptr(a).to_str().unwrap().to_owned(),
            CStr::from_ptr(b).to_str().unwrap().to_owned(),
        )
    };
    unsafe {
        lu_string_free(a);
        lu_string_free(b);
    }
    let va: Vec<Value> = serde_json::from_str(&ta).unwrap();
    let vb: Vec<Value> = serde_json::from_str(&tb).unwrap();
    assert_eq!(va.len(), 3);
    for (x, y) in va.iter().zip(&vb) {
        assert_eq!(x["subset"], y["subset"]);
        let (dx, dy) = (x["data"].as_array().unwrap(), y["data"].as_array().unwrap());
        for (p, q) in dx.iter().zip(dy) {
            assert!((p.as_f64().unwrap() - q.as_f64().unwrap()).abs() < 1e-12);
        }
    }
    unsafe {
        lu_state_free(s);
        lu_state_free(j);
    }
}

#[test]
fn invalid_inputs_are_reported() {
    let bad = CString::new("{\"n_qubits\": 1, \"matrix\": [[[0.5,0],[0,0]],[[0,0],[0.6,0]]]}").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { lu_state_from_json(bad.as_ptr(), &mut s) },
        LuStatus::InvalidState
    );
    assert!(s.is_null());
    assert!(last_error().contains("trace"));

    let junk = CString::new("[1, 2").unwrap();
    assert_eq!(unsafe { lu_state_from_json(junk.as_ptr(), &mut s) }, LuStatus::Parse);
    assert_eq!(
        unsafe { lu_state_from_json(ptr::null(), &mut s) },
        LuStatus::NullPointer
    );

    let zeros = [0.0; 4];
    assert_eq!(
        unsafe { lu_state_from_parts(0, zeros.as_ptr(), zeros.as_ptr(), &mut s) },
        LuStatus::InvalidState
    );

    let a = load_file("rho_example.json");
    let mut cfg = lu_config_default();
    cfg.tol_residual = -1.0;
    let mut v = ptr::null_mut();
    assert_eq!(unsafe { lu_decide(a, a, &cfg, &mut v) }, LuStatus::InvalidConfig);
    assert!(v.is_null());

    let (re, im) = ([2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0], [0.0; 12]);
    let mut r = 0.0;
    assert_eq!(
        unsafe { lu_verify(a, a, re.as_ptr(), im.as_ptr(), 3, &mut r) },
        LuStatus::InvalidUnitaries
    );
    assert_eq!(
        unsafe { lu_verify(a, a, re[4..].as_ptr(), im.as_ptr(), 2, &mut r) },
        LuStatus::InvalidUnitaries
    );
    unsafe { lu_state_free(a) };
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lu_equiv.h")).unwrap();
    for name in [
        "lu_version",
        "lu_last_error",
        "lu_config_default",
        "lu_state_from_json",
        "lu_state_from_parts",
        "lu_state_free",
        "lu_state_n_qubits",
        "lu_state_tensors_json",
        "lu_state_fingerprint_json",
        "lu_string_free",
        "lu_decide",
        "lu_verdict_free",
        "lu_verdict_kind",
        "lu_verdict_residual",
        "lu_verdict_unitaries",
        "lu_verdict_witness",
        "lu_verify",
        "typedef struct LuState LuState",
        "LU_STATUS_OK = 0",
        "LU_VERDICT_KIND_INCONCLUSIVE = 2",
    ] {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn c_program_links_and_runs() {
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("liblu_equiv_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler runs");
    assert!(status.success());
    let out = Command::new(&exe)
        .arg(fixture("rho_example.json"))
        .arg(fixture("sigma_example.json"))
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{}{}", text, String::from_utf8_lossy(&out.stderr));
    assert!(text.starts_with(&format!("ok {} 3 ", env!("CARGO_PKG_VERSION"))));
}
