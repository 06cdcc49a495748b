use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nclmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nclmi"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn doc(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

const POINT: &str = r#"{"n":1,"g":2,"matrices":[[[0.5]],[[0.3]]]}"#;

#[test]
fn eval_reports_value_and_signature() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", POINT);
    let out = nclmi(&["eval", "--poly", "catalog:ball", "--tuple", &x]);
    assert_eq!(out.status.code(), Some(0));
    let d = doc(&out);
    assert!((d["value"][0][0].as_f64().unwrap() - 0.66).abs() < 1e-12);
    assert_eq!(d["signature"]["positive"], 1);
}

#[test]
fn member_poly_and_pencil_agree() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", POINT);
    let out = nclmi(&["member", "--poly", "catalog:ball", "--tuple", &x]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(doc(&out)["status"], "Inside");

    let lmi = doc(&nclmi(&["lmi2", "--poly", "catalog:ball"]));
    let pencil = write(dir.path(), "l.json", &lmi["pencil"].to_string());
    let out = nclmi(&["member", "--pencil", &pencil, "--tuple", &x]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(doc(&out)["inside"], true);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", r#"{"n":1,"g":2,"matrices":[[[0.5]]]}"#);
    let out = nclmi(&["eval", "--poly", "catalog:ball", "--tuple", &x]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(doc(&out)["error"], "input");

    let out = nclmi(&["eval", "--poly", "catalog:nope", "--tuple", &x]);
    assert_eq!(out.status.code(), Some(2));

    let out = nclmi(&["eval", "--poly", "/definitely/missing.json", "--tuple", &x]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn randomized_commands_require_seed() {
    for args in [
        &["synth", "--poly", "catalog:interval"][..],
        &["falsify-convexity", "--poly", "catalog:tv"][..],
        &["min-degree-witness", "--poly", "catalog:ball"][..],
        &["demo", "tvscreen", "--alpha", "1"][..],
    ] {
        let out = nclmi(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn boundary_vanish_dominate_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", POINT);
    let out = nclmi(&["boundary", "--poly", "catalog:ball", "--direction", &x, "--compress", "half"]);
    assert_eq!(out.status.code(), Some(0));
    let d = doc(&out);
    assert_eq!(d["sizes"]["nu"], 7);
    let pairs = write(dir.path(), "pairs.json", &d["pairs"].to_string());

    let out = nclmi(&["vanish", "--pairs", &pairs, "--degree", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(doc(&out)["dim"], 2);

    let out = nclmi(&["dominate", "--pairs", &pairs, "--degree", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(doc(&out)["vanishing_dim"], 2);
}

#[test]
fn separate_off_boundary_is_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let x = write(dir.path(), "x.json", POINT);
    let out = nclmi(&["separate", "--poly", "catalog:ball", "--point", &x, "--seed", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn separate_on_boundary_embeds_seed() {
    let dir = tempfile::tempdir().unwrap();
    let s = 1.0 / 0.34f64.sqrt();
    let x = write(
        dir.path(),
        "xb.json",
        &format!(r#"{{"n":1,"g":2,"matrices":[[[{}]],[[{}]]]}}"#, 0.5 * s, 0.3 * s),
    );
    let out = nclmi(&["separate", "--poly", "catalog:ball", "--point", &x, "--seed", "4", "--samples", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let d = doc(&out);
    assert_eq!(d["seed"], 4);
    assert!(d["interior_margin"].as_f64().unwrap() > 0.0);
}

#[test]
fn synth_is_deterministic_and_writes_out() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let out = nclmi(&[
            "synth", "--poly", "catalog:interval", "--seed", "3", "--samples", "50", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let d: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(d["report"]["seed"], 3);
    assert_eq!(d["budget"], 60);
    assert_eq!(d["report"]["agreement"]["disagreements"], 0);
}

#[test]
fn falsifier_witness_exits_3() {
    let out = nclmi(&[
        "falsify-convexity", "--poly", "catalog:tv", "--seed", "2", "--levels", "2", "--budget", "5000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let d = doc(&out);
    assert_eq!(d["config"]["seed"], 2);
    assert_eq!(d["report"]["witness"]["kind"], "midpoint");
}

#[test]
fn falsifier_on_ball_finds_nothing() {
    let out = nclmi(&[
        "falsify-convexity", "--poly", "catalog:ball", "--seed", "0", "--levels", "2", "--budget", "500",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(doc(&out)["report"]["witness"].is_null());
}

#[test]
fn min_degree_witness_on_ball() {
    let out = nclmi(&["min-degree-witness", "--poly", "catalog:ball", "--seed", "1", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(doc(&out)["dimension"].as_u64().unwrap() >= 1);
}

#[test]
fn demos_pass() {
    let out = nclmi(&["demo", "bandf", "--grid", "41"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(doc(&out)["passed"], true);

    let out = nclmi(&[
        "demo", "tvscreen", "--alpha", "1.0", "--grid", "41", "--samples", "20", "--levels", "1,2", "--seed", "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(doc(&out)["passed"], true);
}
