//! End-to-end tests of the command-line harness: scenario ingestion, exit
//! codes, and byte-stable JSON reports.

use std::path::PathBuf;
use std::process::{Command, Output};

fn write_scenario(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("residue2d-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(cmd: &str, scenario: &PathBuf, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_residue2d"))
        .arg(cmd)
        .arg("--scenario")
        .arg(scenario)
        .args(extra)
        .output()
        .unwrap()
}

fn result_of(out: &Output) -> serde_json::Value {
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    v["result"].clone()
}

#[test]
fn residue_fixture_at_special_prime() {
    // oracle: dt/(t-5) has standard residue -1 at (pi), i.e. 5^20 - 1
    let sc = write_scenario(
        "res_special.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [1], "den": [-5, 1]},
            "prime": {"kind": "special"}}"#,
    );
    let out = run("residue", &sc, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = result_of(&out);
    assert_eq!(r["residue"]["digits"], "95367431640624");
    assert_eq!(r["loss"], 0);
}

#[test]
fn residue_of_integral_form_is_zero() {
    let sc = write_scenario(
        "res_integral.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [1], "den": [1]},
            "prime": {"kind": "cluster", "poly": [0, 1]}}"#,
    );
    let out = run("residue", &sc, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(result_of(&out)["residue"]["digits"], "0");
}

#[test]
fn reciprocity_single_and_byte_stable() {
    let sc = write_scenario(
        "recip.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [1], "den": [-5, 1]}}"#,
    );
    let a = run("reciprocity", &sc, &[]);
    let b = run("reciprocity", &sc, &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "reports must be byte-identical");
    let r = result_of(&a);
    assert_eq!(r["verdict"], "zero-at-precision");
    assert_eq!(r["residues"].as_array().unwrap().len(), 2);
}

#[test]
fn reciprocity_corpus_mode() {
    let sc = write_scenario(
        "corpus.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "corpus": {"seed": 7, "count": 10, "degree": 4}}"#,
    );
    let out = run("reciprocity", &sc, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = result_of(&out);
    assert_eq!(r["passed"], 10);
    // --count override changes the corpus size
    let out = run("reciprocity", &sc, &["--count", "3"]);
    assert_eq!(result_of(&out)["passed"], 3);
}

#[test]
fn malformed_denominator_exits_2() {
    let sc = write_scenario(
        "bad_den.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [1], "den": [0]}}"#,
    );
    let out = run("reciprocity", &sc, &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_schema_exits_2() {
    let sc = write_scenario("bad_schema.json", r#"{"field": {"p": 5}}"#);
    let out = run("reciprocity", &sc, &[]);
    assert_eq!(out.status.code(), Some(2));
    let sc = write_scenario(
        "bad_prime.json",
        r#"{"field": {"p": 4, "precision": 20}, "form": {"num": [1], "den": [-5, 1]}}"#,
    );
    let out = run("reciprocity", &sc, &[]);
    assert_eq!(out.status.code(), Some(2), "composite p is an input error");
}

#[test]
fn reconstruct_fixture_and_mismatch_exit_codes() {
    // t dt at P = t-5, depth 1: coefficients (5, 1); exit 0
    let sc = write_scenario(
        "recon.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [0, 1], "den": [1]},
            "prime": {"kind": "cluster", "poly": [-5, 1]}, "depth": 1}"#,
    );
    let out = run("reconstruct", &sc, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = result_of(&out);
    assert_eq!(r["match"], true);
    let rows = r["coefficients"].as_array().unwrap();
    assert_eq!(rows[0]["reconstructed"]["coords"][0]["digits"], "1");
    assert_eq!(rows[0]["reconstructed"]["coords"][0]["val"], 1); // 5^1
    assert_eq!(rows[1]["reconstructed"]["coords"][0]["digits"], "1");
    assert_eq!(rows[1]["reconstructed"]["coords"][0]["val"], 0);

    // a form with an unaccounted pole at another cluster reconstructs
    // wrongly: verdict violation, exit 1
    let sc = write_scenario(
        "recon_bad.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [1], "den": [-25, 1]},
            "prime": {"kind": "cluster", "poly": [-5, 1]}, "depth": 1}"#,
    );
    let out = run("reconstruct", &sc, &[]);
    assert_eq!(out.status.code(), Some(1));

    // truncation exhaustion surfaces as an arithmetic error, exit 3
    let sc = write_scenario(
        "recon_deep.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 8},
            "form": {"num": [0, 1], "den": [1]},
            "prime": {"kind": "cluster", "poly": [-5, 1]}, "depth": 30}"#,
    );
    let out = run("reconstruct", &sc, &[]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("TruncationExhausted"), "stderr names the variant: {err}");
}

#[test]
fn witness_perturbed_and_diagonal() {
    let sc = write_scenario(
        "wit.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [1], "den": [-5, 1]},
            "grid": {"n": 2, "i": 2},
            "perturb": {"cluster": 0, "exponent": 0}}"#,
    );
    let out = run("witness", &sc, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = result_of(&out);
    assert_eq!(r["witness"]["monomial"], serde_json::json!([0, 1, 0]));

    let sc = write_scenario(
        "wit_diag.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [1], "den": [-5, 1]},
            "grid": {"n": 2, "i": 2}}"#,
    );
    let out = run("witness", &sc, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = result_of(&out);
    assert!(r["witness"].is_null());
    assert_eq!(r["searched"]["n"], 2);
}

#[test]
fn weierstrass_and_expand() {
    // 5t^2 + t^3(1 + t^3-ish): t^3 + 5t^2 = t^2 (t + 5): pi^0, factors
    // (t, 2), (t+5, 1)
    let sc = write_scenario(
        "wei.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "poly": [0, 0, 5, 1]}"#,
    );
    let out = run("weierstrass", &sc, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = result_of(&out);
    assert_eq!(r["pi_power"], 0);
    let factors = r["factors"].as_array().unwrap();
    assert_eq!(factors.len(), 2);

    let sc = write_scenario(
        "expand.json",
        r#"{"field": {"p": 5, "precision": 12, "tmax": 8},
            "form": {"num": [1], "den": [-5, 1]},
            "prime": {"kind": "special"}}"#,
    );
    let out = run("expand", &sc, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = result_of(&out);
    // 1/(t-5) = sum_k 5^k t^{-1-k}: the t^{-1} coefficient is 1
    let coeffs = r["expansion"]["window"]["coeffs"].as_array().unwrap();
    let c_m1 = coeffs.iter().find(|c| c["exp"] == -1).unwrap();
    assert_eq!(c_m1["coeff"]["digits"], "1");
    assert_eq!(c_m1["coeff"]["val"], 0);
}

#[test]
fn unknown_command_and_json_out() {
    let sc = write_scenario(
        "recip2.json",
        r#"{"field": {"p": 5, "precision": 20, "tmax": 32},
            "form": {"num": [1], "den": [-5, 1]}}"#,
    );
    let out = run("frobnicate", &sc, &[]);
    assert_eq!(out.status.code(), Some(2));

    let target = std::env::temp_dir().join("residue2d-cli-tests").join("out.json");
    let out = run(
        "reciprocity",
        &sc,
        &["--json-out", target.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let on_disk = std::fs::read(&target).unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), String::from_utf8_lossy(&on_disk));
}
