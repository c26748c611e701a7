use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn conerisk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conerisk"))
        .args(args)
        .env_remove("CONERISK_THREADS")
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> (i32, Value) {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = conerisk(&full);
    let json = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)));
    (out.status.code().unwrap(), json)
}

fn path(name: &str) -> String {
    fixture(name).display().to_string()
}

#[test]
fn rho_of_a_fair_coin() {
    let out = conerisk(&["rho", &path("coin.json"), "--claim", "[4,-2]", "--t", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1");
}

#[test]
fn avar_is_not_stable() {
    let (code, r) = report(&["check-stability", &path("avar_quad.json"), "--recheck"]);
    assert_eq!(code, 1);
    assert_eq!(r["verdict"], false);
    assert_eq!(r["result"]["certificate"]["rightInLeft"]["holds"], "false");
    assert!(r["result"]["certificate"]["rightInLeft"]["separator"].is_array());
    assert_eq!(r["recheck"]["passed"], true);
}

#[test]
fn f4_equivalence_has_both_certificates() {
    let (code, r) = report(&[
        "verify-equivalence",
        &path("f4.json"),
        "--epsilon",
        "1/10",
        "--recheck",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"], true);
    for side in ["leftInRight", "rightInLeft"] {
        assert_eq!(r["result"]["certificate"][side]["holds"], "true", "{side}");
    }
    assert_eq!(r["recheck"]["passed"], true);
}

#[test]
fn report_header_and_digest() {
    let file = fixture("coin.json");
    let (_, r) = report(&["validate", &path("coin.json")]);
    let digest = hex::encode(Sha256::digest(std::fs::read(&file).unwrap()));
    assert_eq!(r["tool"], "conerisk");
    assert_eq!(r["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r["input"]["sha256"], digest);
    assert!(r.get("timings").is_none());
    let (_, timed) = report(&["validate", &path("coin.json"), "--timings"]);
    assert!(timed["timings"]["total_ms"].is_number());
}

#[test]
fn output_file_matches_stdout_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let args = [
        "superhedge",
        &path("f4.json"),
        "--claim",
        "[0,1,0,1]",
        "--format",
        "json",
    ];
    let first = conerisk(&[&args[..], &["--output", out_path.to_str().unwrap()]].concat());
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(std::fs::read(&out_path).unwrap(), first.stdout);
    assert_eq!(conerisk(&args).stdout, first.stdout);
}

#[test]
fn arbitrage_exits_one_with_a_witness() {
    let (code, r) = report(&["check-arbitrage", &path("round_trip.json"), "--recheck"]);
    assert_eq!(code, 1);
    assert!(r["result"]["arbitrage"]["witness"]["claim"].is_array());
    let (code, _) = report(&["superhedge", &path("round_trip.json"), "--claim", "[1,0,0,0]"]);
    assert_eq!(code, 1);
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"T\": 1,\n \"nodes\": [}").unwrap();
    let out = conerisk(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    for args in [
        vec!["rho", "missing.json", "--claim", "[1]"],
        vec!["rho", &path("coin.json"), "--claim", "[0.5, 1]"],
        vec!["rho", &path("coin.json"), "--claim", "[1, 2, 3]"],
        vec!["augment", &path("f4.json"), "--epsilon", "3/2"],
        vec!["augment", &path("coin.json")],
        vec!["sweep", "--d", "3"],
    ] {
        assert_eq!(conerisk(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn extracted_scenarios_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (code, r) = report(&["extract-scenarios", &path("f4.json"), "--recheck"]);
    assert_eq!(code, 0);
    let fx = dir.path().join("scenarios.json");
    std::fs::write(&fx, r["result"]["fixture"].to_string()).unwrap();
    let (code, s) = report(&["check-stability", fx.to_str().unwrap()]);
    assert_eq!((code, &s["verdict"]), (0, &Value::Bool(true)));
}

#[test]
fn sweep_passes_and_ignores_thread_count() {
    let args = ["sweep", "--seed", "0", "--instances", "20", "--format", "json"];
    let single = Command::new(env!("CARGO_BIN_EXE_conerisk"))
        .args(args)
        .env("CONERISK_THREADS", "1")
        .output()
        .unwrap();
    let many = Command::new(env!("CARGO_BIN_EXE_conerisk"))
        .args(args)
        .env("CONERISK_THREADS", "4")
        .output()
        .unwrap();
    assert_eq!(single.status.code(), Some(0));
    assert_eq!(single.stdout, many.stdout);
    let r: Value = serde_json::from_slice(&single.stdout).unwrap();
    assert!(r["result"]["counterexamples"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_degenerate_and_unstable() {
    let (code, r) = report(&["sweep", "--horizon", "0", "--instances", "3"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["verdicts"]["stable"], 3);
    let (code, r) = report(&["sweep", "--recipe", "unstable", "--instances", "6"]);
    assert_eq!(code, 0);
    assert_eq!(r["result"]["verdicts"]["unstable"], 6);
}
