//! End-to-end runs of the `discordium` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discordium")).args(args).output().unwrap()
}

fn json_stdout(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name).to_string_lossy().into_owned();
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    assert!(run(&full).status.success());
    path
}

fn close(v: &Value, want: f64, tol: f64) {
    let got = v.as_f64().unwrap();
    assert!((got - want).abs() < tol, "{got} vs {want}");
}

#[test]
fn analyze_bell_and_mixture() {
    let dir = tempfile::tempdir().unwrap();
    let bell = gen(dir.path(), "bell.json", &["bell"]);
    let v = json_stdout(&["analyze", &bell, "--kt", "2"]);
    assert_eq!(v["schema"], "discordium/1");
    close(&v["report"]["discord"], 1.0, 1e-9);
    close(&v["ledger"]["advantage"], 2.0, 1e-9);
    assert_eq!(v["converged"], true);

    let mix = gen(dir.path(), "eq9b.json", &["mixture"]);
    let v = json_stdout(&["analyze", &mix]);
    close(&v["optimization"]["minimum"], 0.0, 1e-6);
}

#[test]
fn analyze_werner_half_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let w = gen(dir.path(), "werner.json", &["werner", "--z", "0.5"]);
    let v = json_stdout(&["analyze", &w]);
    close(&v["optimization"]["minimum"], 0.262483183764, 1e-9);
}

#[test]
fn validation_errors_exit_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"layout":[["S",2],["A",2]],"re":[[1,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,1]],"im":[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]}"#).unwrap();
    let out = run(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["schema"], "discordium/1");
    assert_eq!(err["error"]["kind"], "NotUnitTrace");

    let out = run(&["sweep-werner", "--z-min", "0.8", "--z-max", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "BadRange");
}

#[test]
fn unconverged_search_still_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let state = gen(dir.path(), "r.json", &["random", "--dims", "2,3", "--seed", "4"]);
    let report = dir.path().join("report.json");
    let out = run(&["analyze", &state, "--max-evals", "5", "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["converged"], false);
    assert!(v["optimization"]["minimum"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn sweep_csv_header_endpoints_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        assert!(run(&["sweep-werner", "--steps", "11", "--seed", "3", "--out", p.to_str().unwrap()]).status.success());
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let mut reader = csv::Reader::from_reader(text.as_slice());
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["z", "least_discord", "least_discord_alt", "deficit_lower_bound", "h_joint", "mutual_i"]
    );
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert!(rows[0][1].abs() < 1e-6);
    assert!((rows[10][1] - 1.0).abs() < 1e-6 && (rows[10][3] - 1.0).abs() < 1e-6);
}

#[test]
fn demon_reports() {
    let v = json_stdout(&["demon", "--alpha", "0.7071", "--beta", "0.7071", "--decohere"]);
    assert_eq!(v["schema"], "discordium/1");
    let rho_a = &v["outcome"]["rho_a"];
    close(&rho_a["re"][0][0], 0.5, 1e-12);
    close(&rho_a["re"][1][1], 0.5, 1e-12);
    close(&rho_a["re"][0][1], 0.0, 1e-12);
    close(&v["outcome"]["ledger"]["shortfall"], 1.0, 1e-9);

    let v = json_stdout(&["demon", "--alpha", "1", "--beta", "0"]);
    for h in ["h_s", "h_d", "h_a"] {
        close(&v["outcome"][h], 0.0, 1e-12);
    }

    let v = json_stdout(&["demon", "--classical", "--decohere"]);
    close(&v["outcome"]["ledger"]["harvested"], 1.0, 1e-10);

    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("s.json");
    std::fs::write(&scen, r#"{"alpha_re":0.6,"alpha_im":0.0,"beta_re":0.0,"beta_im":0.8,"decohere":true}"#).unwrap();
    let v = json_stdout(&["demon", "--scenario", scen.to_str().unwrap()]);
    close(&v["outcome"]["rho_a"]["re"][0][0], 0.36, 1e-12);

    let out = run(&["demon", "--alpha", "1", "--beta", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn locc_preset_and_fixed_strategy() {
    let v = json_stdout(&["locc", "--preset", "staircase-2", "--order", "A,B"]);
    assert_eq!(v["schema"], "discordium/1");
    assert_eq!(v["rounds_to_exhaust"], 2);
    assert_eq!(v["trace"]["accessible_entropy_by_round"].as_array().unwrap().len(), 3);

    let dir = tempfile::tempdir().unwrap();
    let bases = dir.path().join("bases.json");
    std::fs::write(
        &bases,
        r#"[{"target":"A","re":[[1,0],[0,1]],"im":[[0,0],[0,0]]},{"target":"B","re":[[1,0],[0,1]],"im":[[0,0],[0,0]]}]"#,
    )
    .unwrap();
    let v = json_stdout(&["locc", "--preset", "staircase-2", "--strategy", "fixed", "--bases", bases.to_str().unwrap()]);
    assert!(v["rounds_to_exhaust"].is_null());

    let out = run(&["locc", "--preset", "staircase-2", "--order", "A,A"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "DuplicateSide");

    let table = run(&["locc", "--preset", "staircase-3", "--format", "table"]);
    assert!(String::from_utf8(table.stdout).unwrap().contains("exhausted after 3 round(s)"));
}

#[test]
fn generated_states_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.json", &["preset", "staircase-2"]);
    let b = gen(dir.path(), "b.json", &["preset", "staircase-2"]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(v["schema"], "discordium/1");
    let v = json_stdout(&["locc", "--state", &a, "--order", "A,B"]);
    assert_eq!(v["rounds_to_exhaust"], 2);
}
