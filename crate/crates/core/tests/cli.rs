use qmcert::cli::run;

fn qm(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qmcert").chain(args.iter().copied());
    let code = run(argv.map(std::ffi::OsString::from), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn tmp(name: &str, text: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qmcert-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn norm_output_is_byte_identical_and_replayable() {
    let args = ["norm", "--preset", "row_ball:1", "--poly", "z", "--n", "2", "--restarts", "4", "--seed", "3"];
    let (c1, a, _) = qm(&args);
    let (c2, b, _) = qm(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);

    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["config"]["params"]["seed"], 3);
    assert_eq!(v["config"]["params"]["d"], 2);
    let path = tmp("replay.json", &serde_json::to_string(&v["config"]).unwrap());
    let (c3, replay, _) = qm(&["norm", "--problem", path.to_str().unwrap()]);
    assert_eq!(c3, 0);
    assert_eq!(replay, a);
}

#[test]
fn seeds_default_to_zero_and_are_echoed() {
    let (code, out, _) = qm(&["member", "--preset", "free_group:1", "--poly", "2 - z - z^*"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["params"]["seed"], 0);
    assert_eq!(v["config"]["params"]["eps"], 1e-6);
    assert_eq!(v["result"]["status"], "certificate");
}

#[test]
fn butterfly_rows_follow_the_farey_count() {
    let (code, out, _) = qm(&["butterfly", "--qmax", "5", "--grid", "16"]);
    assert_eq!(code, 0);
    // 1 + Σ_{q ≤ 5} φ(q) = 1 + 1 + 1 + 2 + 2 + 4.
    assert_eq!(out.lines().count(), 1 + 11);
}

#[test]
fn input_errors_exit_2_and_name_the_field() {
    let (code, _, err) = qm(&["norm", "--preset", "free_group:1", "--poly", "z z"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());

    let (code, _, err) = qm(&["norm", "--preset", "nope:1", "--poly", "z"]);
    assert_eq!(code, 2);
    assert!(err.contains("nope"), "{err}");

    let bad = tmp("bad.json", r#"{"query": "norm", "module": {"preset": "free_group:1"}, "poly": "z", "params": {"degree": 4}}"#);
    let (code, _, err) = qm(&["norm", "--problem", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("degree"), "{err}");

    let (code, _, err) = qm(&["member", "--problem", tmp("q.json", r#"{"query": "norm"}"#).to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("norm"), "{err}");

    let (code, _, _) = qm(&["norm", "--frobnicate"]);
    assert_eq!(code, 2);
    let (code, out, _) = qm(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("norm"));
}

#[test]
fn flags_override_problem_file_parameters() {
    let file = tmp(
        "member.json",
        r#"{"query": "member", "module": {"preset": "free_group:1"}, "poly": "2 - z - z^*", "params": {"d": 4, "eps": 0.5}}"#,
    );
    let (code, out, _) = qm(&["member", "--problem", file.to_str().unwrap(), "--eps", "0.25"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["config"]["params"]["d"], 4);
    assert_eq!(v["config"]["params"]["eps"], 0.25);
}

#[test]
fn hull_scan_and_dilation() {
    let (code, out, _) = qm(&["hull", "--preset", "heisenberg", "--scan", "8", "--radius", "0.5"]);
    assert_eq!(code, 0, "{out}");
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("index,x,y,status,value"));
    assert_eq!(lines.count(), 8);

    let (code, out, _) = qm(&["dilate", "--matrix", "0.5 0; 0 0.5i"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["result"]["unitarity_residual"].as_f64().unwrap() < 1e-12);
    let (code, _, _) = qm(&["dilate", "--matrix", "2 0; 0 1"]);
    assert_eq!(code, 2);
}
