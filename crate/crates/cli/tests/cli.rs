use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newton-sos"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = run(&all);
    let v = serde_json::from_slice(&out.stdout).expect("valid JSON on stdout");
    (out.status.code().expect("exit code"), v)
}

fn data(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn sufficient_emits_certificate() {
    let (code, v) = json(&["sufficient", "x^16 + y^10 - x^13*y^2"]);
    assert_eq!(code, 0);
    assert_eq!(v["status"], "pass");
    assert_eq!(v["certificate"]["target"], "y^10 - x^13*y^2 + x^16");
    assert!(!v["certificate"]["unit_residuals"].as_array().unwrap().is_empty());
}

#[test]
fn odd_vertex_is_a_failure() {
    let (code, v) = json(&["necessary", "x^3"]);
    assert_eq!(code, 1);
    let ev = &v["clauses"][0]["evidence"][0];
    assert_eq!(ev["kind"], "odd_vertex");
    assert_eq!(ev["vertex"], serde_json::json!([3]));
}

#[test]
fn pop_file_certifies() {
    let (code, v) = json(&["pop-certify", &data("pop1.pop")]);
    assert_eq!(code, 0);
    assert_eq!(v["lambda"], serde_json::json!(["3/4"]));
    assert_eq!(v["division"]["d"], 4);
    assert_eq!(v["division"]["r0_diagram"], "3*y^2 + z^2 + 7/4*w^4");
    assert_eq!(v["second_order_positive_definite"], false);
}

#[test]
fn divide_reports_essential_data() {
    let (code, v) = json(&[
        "divide",
        "3x+3y-3x^2-3y^2+z^2+x^3+y^3+w^4",
        "--by",
        "4x+4y-6x^2-6y^2+4x^3+4y^3-x^4-y^4-z^4-w^4",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["d"], 4);
    assert_eq!(v["division"]["u"], "0");
}

#[test]
fn bconv_exit_codes() {
    assert_eq!(run(&["bconv", "(13,2)", "x^16 + y^10"]).status.code(), Some(0));
    assert_eq!(run(&["bconv", "(1,0)", "x^2 + y^2"]).status.code(), Some(1));
}

#[test]
fn input_errors_exit_three() {
    let out = run(&["sufficient", "x^2 +"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("position"));
    assert_eq!(run(&["sufficient", "x^2 + 1"]).status.code(), Some(3));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(run(&["--eps-grid", "nope", "diagram", "x^2"]).status.code(), Some(3));
}

#[test]
fn file_input_with_vars_header() {
    let dir = std::env::temp_dir().join(format!("newton-sos-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f.txt");
    std::fs::write(&path, "vars: y, x\nx^2 + y^4\n").unwrap();
    let (code, v) = json(&["diagram", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["variables"], serde_json::json!(["y", "x"]));
    assert_eq!(v["vertices"], serde_json::json!([[0, 2], [4, 0]]));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn output_is_deterministic() {
    let a = run(&["--json", "sufficient", "2x^6+2y^6+2z^6+x*y^3*z^3+x^2*y^4*z^3"]);
    let b = run(&["--json", "sufficient", "2x^6+2y^6+2z^6+x*y^3*z^3+x^2*y^4*z^3"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}
