//! End-to-end tests of the command-line interface: exit codes, determinism
//! of structured output, and the verify round trip.

use std::process::{Command, Output};

fn plcert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plcert"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn corpus_list_names_every_builtin() {
    let out = plcert(&["corpus", "list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["tent", "remark1", "remark2:2", "remark4", "example7"] {
        assert!(text.contains(name), "missing {name} in corpus list");
    }
}

#[test]
fn periods_reports_the_remark2_claim() {
    let out = plcert(&["periods", "remark2:2", "--max", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("5: present (1 orbit)"));
    assert!(text.contains("3: absent"));
    assert!(text.contains("PASS"));
}

#[test]
fn turbulence_prints_the_tent_halves() {
    let out = plcert(&["turbulence", "tent"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("J0 = [0, 1/2]"));
    assert!(text.contains("J1 = [1/2, 1]"));
}

#[test]
fn turbulence_negative_exits_one() {
    let out = plcert(&["turbulence", "remark2:2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("not turbulent"));
}

#[test]
fn unknown_map_is_a_usage_error() {
    let out = plcert(&["analyze", "nosuchmap"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_exhaustion_exits_three() {
    let out = plcert(&[
        "periods", "tent", "--max", "12", "--max-pieces", "8",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn structured_output_is_deterministic() {
    let a = plcert(&["analyze", "remark4", "--format", "json"]);
    let b = plcert(&["analyze", "remark4", "--format", "json"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let c = plcert(&["cover", "tent", "--K", "1/4", "1/2", "--L", "0", "1", "--format", "json"]);
    let d = plcert(&["cover", "tent", "--K", "1/4", "1/2", "--L", "0", "1", "--format", "json"]);
    assert_eq!(stdout(&c), stdout(&d));
}

#[test]
fn rationals_in_structured_output_are_num_den_strings() {
    let out = plcert(&["analyze", "tent", "--format", "json"]);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let cuts = value["markov"]["cuts"].as_array().unwrap();
    assert_eq!(cuts[1], serde_json::json!("1/2"));
}

#[test]
fn cover_matches_the_expected_threshold() {
    let out = plcert(&[
        "cover", "tent", "--K", "1/4", "1/2", "--L", "0", "1", "--horizon", "10",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("first_N = 2"));
}

#[test]
fn scramble_certificate_round_trips_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let build = plcert(&[
        "scramble", "tent", "--stages", "1", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(build.status.success());
    let verify = plcert(&["verify", path.to_str().unwrap()]);
    assert!(verify.status.success());
    assert!(stdout(&verify).contains("PASSED"));

    // Outputs written twice are byte-identical.
    let first = std::fs::read(&path).unwrap();
    let rebuild = plcert(&[
        "scramble", "tent", "--stages", "1", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(rebuild.status.success());
    assert_eq!(first, std::fs::read(&path).unwrap());
}

#[test]
fn tampered_certificate_fails_verification_with_pinpoint() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let build = plcert(&[
        "scramble", "tent", "--stages", "1", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(build.status.success());
    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    // Move one leaf far away.
    assert_eq!(value["kind"], "scramble");
    value["stages"][0]["leaves"][0]["interval"]["lo"] = "0".into();
    value["stages"][0]["leaves"][0]["interval"]["hi"] = "1/1000".into();
    std::fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
    let verify = plcert(&["verify", path.to_str().unwrap()]);
    assert_eq!(verify.status.code(), Some(1));
    let err = String::from_utf8_lossy(&verify.stderr).into_owned();
    assert!(err.contains("FAILED"), "stderr: {err}");
}

#[test]
fn map_files_load_like_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mymap.plmap");
    std::fs::write(&path, "map mymap\ndomain 0 1\nnode 0 0\nnode 1/2 1\nnode 1 0\nselfmap\n")
        .unwrap();
    let out = plcert(&["analyze", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("COND1"));
}

#[test]
fn orbit_dump_is_tabular() {
    let out = plcert(&["analyze", "remark1", "--dump-orbit", "1", "--steps", "9"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for v in ["1", "4", "7", "2", "5", "8", "3", "6", "9"] {
        assert!(text.contains(&format!("\t{v}")));
    }
}

#[test]
fn corpus_show_round_trips() {
    let out = plcert(&["corpus", "show", "remark4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("map remark4\n"));
    assert!(text.contains("node 1/4 1"));
}
