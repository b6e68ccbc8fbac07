use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lu_equiv::io::{parse_state, parse_unitaries, read_state};
use lu_equiv::qstate::lu_residual;
use lu_equiv::report::without_timing;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lu-equiv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_example_emits_verifiable_unitaries() {
    let (a, b) = (fixture("rho_example.json"), fixture("sigma_example.json"));
    let out = run(&["check", s(&a), s(&b), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let v: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["verdict"], "equivalent");
    assert_eq!(v["seed"], 0);
    assert_eq!(v["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(v["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let u = parse_unitaries(&text).unwrap();
    let r = lu_residual(&read_state(&a).unwrap(), &read_state(&b).unwrap(), &u).unwrap();
    assert!(r <= 1e-8);

    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    std::fs::write(&report, &text).unwrap();
    let out = run(&["verify", s(&a), s(&b), s(&report)]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}

#[test]
fn check_against_maximally_mixed_gives_witness() {
    let out = run(&[
        "check",
        s(&fixture("rho_example.json")),
        s(&fixture("maximally_mixed.json")),
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["verdict"], "inequivalent");
    assert_eq!(v["witness"]["subset"], serde_json::json!([1]));
    assert!(v.get("unitaries").is_none());
}

#[test]
fn malformed_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let ok = fixture("rho_example.json");
    let out = run(&["check", s(&ok), s(&bad)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let two = dir.path().join("two.json");
    std::fs::write(&two, "{\"n_qubits\": 1, \"matrix\": [[[1,0],[0,0]],[[0,0],[0,0]]]}").unwrap();
    assert_eq!(run(&["check", s(&ok), s(&two)]).status.code(), Some(3));
    assert_eq!(run(&["check", s(&ok)]).status.code(), Some(3));
    assert_eq!(
        run(&["tensors", s(&dir.path().join("missing.json"))]).status.code(),
        Some(3)
    );
    assert_eq!(
        run(&["check", s(&ok), s(&ok), "--tol-residual", "-1"]).status.code(),
        Some(3)
    );
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    assert_eq!(
        run(&[
            "generate",
            "--mode",
            "lu-pair",
            "--n-qubits",
            "3",
            "--seed",
            "4",
            "--out-dir",
            d
        ])
        .status
        .code(),
        Some(0)
    );
    let (rho, sigma, units) = (
        dir.path().join("rho.json"),
        dir.path().join("sigma.json"),
        dir.path().join("unitaries.json"),
    );
    let out = run(&["verify", s(&rho), s(&sigma), s(&units), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["residual"].as_f64().unwrap() <= 1e-12);

    let identity = dir.path().join("identity.json");
    let one = "[[[1,0],[0,0]],[[0,0],[1,0]]]";
    std::fs::write(&identity, format!("{{\"unitaries\": [{one}, {one}, {one}]}}")).unwrap();
    assert_eq!(
        run(&["verify", s(&rho), s(&sigma), s(&identity)]).status.code(),
        Some(1)
    );

    let scaled = dir.path().join("scaled.json");
    let two = "[[[2,0],[0,0]],[[0,0],[1,0]]]";
    std::fs::write(&scaled, format!("{{\"unitaries\": [{two}, {one}, {one}]}}")).unwrap();
    let out = run(&["verify", s(&rho), s(&sigma), s(&scaled)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unitary"));

    std::fs::write(&scaled, format!("{{\"unitaries\": [{one}, {one}]}}")).unwrap();
    assert_eq!(run(&["verify", s(&rho), s(&sigma), s(&scaled)]).status.code(), Some(3));
}

#[test]
fn tensors_of_maximally_mixed_are_zero() {
    let out = run(&["tensors", s(&fixture("maximally_mixed.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let list = v.as_array().unwrap();
    assert_eq!(list.len(), 7);
    for e in list {
        assert!(e["data"].as_array().unwrap().iter().all(|x| x.as_f64() == Some(0.0)));
    }
    assert_eq!(list[0]["subset"], serde_json::json!([1]));
    assert_eq!(list[6]["subset"], serde_json::json!([3]));
}

#[test]
fn fingerprint_output_is_byte_stable() {
    let a = run(&["fingerprint", s(&fixture("rho_example.json"))]);
    let b = run(&["fingerprint", s(&fixture("rho_example.json"))]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["n_qubits"], 3);
    assert_eq!(v["subsets"].as_array().unwrap().len(), 7);
    assert!(stdout(&a).contains("1.7647058823529410e-1"));
}

#[test]
fn generate_is_reproducible() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = run(&["generate", "--mode", "lu-pair", "--seed", "7", "--out-dir", s(d.path())]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["rho.json", "sigma.json", "unitaries.json"] {
        let a = std::fs::read(d1.path().join(name)).unwrap();
        let b = std::fs::read(d2.path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let doc = parse_state(&std::fs::read_to_string(d1.path().join("rho.json")).unwrap()).unwrap();
    assert_eq!(doc.seed, Some(7));

    let out = run(&[
        "generate",
        "--mode",
        "random",
        "--n-qubits",
        "2",
        "--rank",
        "1",
        "--seed",
        "3",
        "--out-dir",
        s(d1.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rho = read_state(d1.path().join("state.json")).unwrap();
    assert!((rho.purity() - 1.0).abs() < 1e-10);
    let out = run(&[
        "generate",
        "--mode",
        "random",
        "--n-qubits",
        "2",
        "--rank",
        "9",
        "--out-dir",
        s(d1.path()),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn perturbed_pair_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    let out = run(&[
        "generate",
        "--mode",
        "perturbed-pair",
        "--n-qubits",
        "2",
        "--seed",
        "1",
        "--eps",
        "1e-3",
        "--out-dir",
        d,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "check",
        s(&dir.path().join("rho.json")),
        s(&dir.path().join("sigma.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("inequivalent"));
}

#[test]
fn reports_repeat_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    run(&[
        "generate",
        "--mode",
        "lu-pair",
        "--n-qubits",
        "3",
        "--rank",
        "2",
        "--seed",
        "11",
        "--out-dir",
        d,
    ]);
    let (rho, sigma) = (dir.path().join("rho.json"), dir.path().join("sigma.json"));
    let args = ["check", s(&rho), s(&sigma), "--json", "--seed", "3", "--starts", "12"];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(without_timing(&a).unwrap(), without_timing(&b).unwrap());
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["config"]["n_starts"], 12);
    assert_eq!(v["seed"], 3);
    assert!(v["timing_ms"].is_u64());
}

#[test]
fn report_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = run(&[
        "check",
        s(&fixture("rho_example.json")),
        s(&fixture("sigma_example.json")),
        "--json",
        "--report",
        s(&path),
    ]);
    assert_eq!(stdout(&out), std::fs::read_to_string(&path).unwrap());
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let v = run(&["--version"]);
    assert_eq!(v.status.code(), Some(0));
    assert!(stdout(&v).contains(env!("CARGO_PKG_VERSION")));
}
