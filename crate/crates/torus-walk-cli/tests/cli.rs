use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_torus-walk")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn exact_sigma_reports_gap() {
    let out = cli(&["exact-sigma", "--p", "3,3", "--n", "1,1"]);
    assert!(out.status.success());
    let v = json(&out);
    let r = &v["result"];
    assert_eq!(r["sigma2_xhat_exact"], "14313149/65287730");
    assert_eq!(r["limit_value"], "1/3");
    assert!(r["gap"].as_f64().unwrap() > 0.0);
    assert_eq!(v["config"]["exact-sigma"]["torus"]["p"], serde_json::json!([3, 3]));
}

#[test]
fn volume_suite_checks_pairs() {
    let out = cli(&["verify", "--suite", "volume", "--p", "3,3", "--n", "1,1"]);
    assert!(out.status.success());
    let r = &json(&out)["result"][0];
    assert_eq!(r["passed"], true);
    assert!(r["checked"].as_u64().unwrap() > 0);
}

#[test]
fn render_two_loops() {
    let out = cli(&["render", "--p", "38,38", "--n", "2,2", "--shape", "random", "--seed", "7"]);
    assert!(out.status.success());
    let svg = String::from_utf8(out.stdout).unwrap();
    assert_eq!(svg.matches(r#"class="loop""#).count(), 2);
    assert!(svg.contains("<!-- torus-walk-cli"));
}

#[test]
fn render_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("shape.json");
    // the staircase shape on the 2x2 torus
    std::fs::write(&path, r#"{"edges": [0, 1, 3, 4]}"#).unwrap();
    let out = cli(&["render", "--p", "1,1", "--shape", "file", "--file", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = String::from_utf8(out.stdout).unwrap();
    assert_eq!(svg.matches(r#"class="loop""#).count(), 1);
}

#[test]
fn exit_codes() {
    assert_eq!(cli(&["params", "--p", "0,3"]).status.code(), Some(2));
    assert_eq!(cli(&["params", "--p", "3"]).status.code(), Some(2));
    assert_eq!(cli(&["enumerate", "--p", "30,30", "--loop-cap", "1000"]).status.code(), Some(3));
    assert_eq!(cli(&["render", "--p", "2,2", "--shape", "index", "--index", "100000"]).status.code(), Some(2));
}
