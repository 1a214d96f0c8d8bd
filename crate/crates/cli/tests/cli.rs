use std::io::Write;
use std::process::Command;

use ptrdual::ptr::build_ptr;
use ptrdual_cli::document::parse_circuit;
use ptrdual_cli::{run, EXIT_NUMERICAL, EXIT_PASS, EXIT_RESIDUAL, EXIT_USAGE};
use serde_json::Value;

const SINGLE_PDC: &str =
    r#"{"s_paths":1,"i_paths":1,"elements":[{"type":"pdc","s":0,"i":0,"r":0.5}]}"#;

fn su11_pi() -> String {
    let pi = std::f64::consts::PI;
    format!(
        r#"{{"s_paths":1,"i_paths":1,"elements":[
            {{"type":"pdc","s":0,"i":0,"r":0.7}},
            {{"type":"phase_s","path":0,"phi":{}}},
            {{"type":"phase_i","path":0,"phi":{}}},
            {{"type":"pdc","s":0,"i":0,"r":0.7}}]}}"#,
        0.4 * pi,
        0.6 * pi
    )
}

fn two_path() -> String {
    let g = std::f64::consts::FRAC_1_SQRT_2;
    format!(
        r#"{{"s_paths":2,"i_paths":2,"elements":[
            {{"type":"pdc","s":0,"i":0,"r":0.3}},
            {{"type":"linear_s","matrix":[[[{g},0],[0,{g}]],[[0,{g}],[{g},0]]]}},
            {{"type":"pdc","s":1,"i":1,"r":0.2}},
            {{"type":"linear_i","matrix":[[[{g},0],[{g},0]],[[{g},0],[-{g},0]]]}}]}}"#
    )
}

fn file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut all = vec!["ptrdual"];
    all.extend_from_slice(args);
    let code = run(all, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json_call(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.push("--json");
    let (code, out, err) = call(&all);
    let v = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out} / {err}"));
    (code, v)
}

fn pair(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn ptr_of_cancelled_interferometer_has_unit_coefficient() {
    let f = file(&su11_pi());
    let (code, v) = json_call(&["ptr", "--circuit", f.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
    let (re, im) = pair(&v["nc"]);
    assert!((re - 1.0).abs() < 1e-10 && im.abs() < 1e-10, "{re} {im}");
    assert_eq!(v["beta_factors"].as_array().unwrap().len(), 2);
    let (code, text, _) = call(&["ptr", "--circuit", f.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS);
    assert!(text.contains("nc = +1.000000000000000"), "{text}");
}

#[test]
fn ptr_document_round_trips_the_network() {
    let text = two_path();
    let f = file(&text);
    let (_, v) = json_call(&["ptr", "--circuit", f.path().to_str().unwrap()]);
    let p = build_ptr(&parse_circuit(&text).unwrap()).unwrap();
    for (name, block) in [
        ("ss", &p.scattering.ss),
        ("si", &p.scattering.si),
        ("is", &p.scattering.is),
        ("ii", &p.scattering.ii),
    ] {
        for (j, row) in v["u"][name].as_array().unwrap().iter().enumerate() {
            for (k, z) in row.as_array().unwrap().iter().enumerate() {
                let (re, im) = pair(z);
                assert!(
                    (re - block[[j, k]].re).abs() <= 1e-15
                        && (im - block[[j, k]].im).abs() <= 1e-15
                );
            }
        }
    }
}

#[test]
fn verify_single_pdc_passes() {
    let f = file(SINGLE_PDC);
    let p = f.path().to_str().unwrap();
    let (code, _, err) = call(&[
        "verify",
        "--circuit",
        p,
        "--max-photons",
        "4",
        "--tol",
        "1e-8",
    ]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let (code, v) = json_call(&[
        "verify",
        "--circuit",
        p,
        "--max-photons",
        "2",
        "--cutoff",
        "40",
    ]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["cap"], 40);
    assert!(v["max_scaled_residual"].as_f64().unwrap() < 1e-8);
    let (code, v) = json_call(&["verify", "--circuit", p, "--samples", "5", "--seed", "3"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["cases"], 5);
}

#[test]
fn amp_reports_both_sides() {
    let f = file(&two_path());
    let (code, v) = json_call(&[
        "amp",
        "--circuit",
        f.path().to_str().unwrap(),
        "--input",
        "1,0/0,1",
        "--output",
        "0,1/1,0",
    ]);
    assert_eq!(code, EXIT_PASS);
    let (a, b) = (pair(&v["nonlinear"]), pair(&v["dual"]));
    assert!((a.0 - b.0).abs() < 1e-10 && (a.1 - b.1).abs() < 1e-10);
    let (code, _, err) = call(&[
        "amp",
        "--circuit",
        f.path().to_str().unwrap(),
        "--input",
        "1,0",
        "--output",
        "0,1/1,0",
    ]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("occupation"));
}

#[test]
fn qfunc_and_awp() {
    let f = file(&two_path());
    let p = f.path().to_str().unwrap();
    let (code, v) = json_call(&["qfunc", "--circuit", p, "--points", "20", "--seed", "1"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["points"].as_array().unwrap().len(), 20);
    let (code, v) = json_call(&["awp", "--circuit", p]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["cases"].as_array().unwrap().len(), 9);
}

#[test]
fn residual_above_tolerance_exits_one() {
    let f = file(&two_path());
    let (code, _, err) = call(&[
        "qfunc",
        "--circuit",
        f.path().to_str().unwrap(),
        "--tol",
        "1e-300",
    ]);
    assert_eq!(code, EXIT_RESIDUAL);
    assert!(err.contains("tolerance"));
}

#[test]
fn numerical_failure_exits_three() {
    let f = file(r#"{"s_paths":1,"i_paths":1,"elements":[{"type":"pdc","s":0,"i":0,"r":1.0}]}"#);
    let (code, out, err) = call(&[
        "amp",
        "--circuit",
        f.path().to_str().unwrap(),
        "--input",
        "0/0",
        "--output",
        "1/1",
        "--cutoff",
        "4",
    ]);
    assert_eq!(code, EXIT_NUMERICAL, "{err}");
    assert!(out.is_empty());
}

#[test]
fn usage_and_parse_errors_exit_two() {
    let (code, out, err) = call(&["teleportate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(out.is_empty() && err.contains("Usage"), "{err}");
    let (code, _, err) = call(&["ptr"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("--circuit"));
    let bad = file(
        r#"{"s_paths":2,"i_paths":1,"elements":[{"type":"linear_s","matrix":[[[1.1,0],[0,0]],[[0,0],[1,0]]]}]}"#,
    );
    let (code, _, err) = call(&["ptr", "--circuit", bad.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("row norm 1.1"), "{err}");
    let (code, _, _) = call(&["ptr", "--circuit", "/nonexistent/circuit.json"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = call(&[
        "verify",
        "--circuit",
        bad.path().to_str().unwrap(),
        "--tol",
        "-1",
    ]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn teleport_and_examples_pass() {
    let (code, v) = json_call(&["teleport", "--count", "2", "--seed", "4"]);
    assert_eq!(code, EXIT_PASS);
    assert_eq!(v["reports"].as_array().unwrap().len(), 3);
    let (code, text, _) = call(&["examples"]);
    assert_eq!(code, EXIT_PASS, "{text}");
    assert_eq!(text.matches("[PASS]").count(), 4);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_ptrdual");
    let st = Command::new(bin).arg("nonsense").output().unwrap();
    assert_eq!(st.status.code(), Some(EXIT_USAGE));
    assert!(st.stdout.is_empty());
    let f = file(SINGLE_PDC);
    let st = Command::new(bin)
        .args(["ptr", "--circuit", f.path().to_str().unwrap(), "--json"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(EXIT_PASS));
    let v: Value = serde_json::from_slice(&st.stdout).unwrap();
    let t = pair(&v["nc"]).0;
    assert!((t - 1.0 / 0.5f64.cosh()).abs() < 1e-15);
}
