use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::io::Write;

use serde_json::{json, Value};

fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures")).join(rel)
}

fn athena(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_athena"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn athena")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn pincast_run_writes_metrics_report_and_archive() {
    let dir = tempfile::tempdir().unwrap();
    let script = fixture("pincast/run.json");
    let out = athena(&["run", "--script", script.to_str().unwrap(), "--json"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["status"], "findings");

    let out_dir = dir.path().join("out");
    assert_eq!(read_json(&out_dir.join("metrics.json")), json!({"views": 6, "lines_of_code": 402}));
    let report = read_json(&out_dir.join("report.json"));
    assert_eq!(report["navigation"]["total"], 6);
    assert!(out_dir.join("Pincast.zip").is_file());
    assert!(out_dir.join("project/Pincast/Sources/Views/SignInView.swift").is_file());

    // A second run over the same script writes the same archive byte for byte.
    let again = tempfile::tempdir().unwrap();
    let out2 = athena(&["run", "--script", script.to_str().unwrap(), "--out", "second"], again.path());
    assert_eq!(out2.status.code(), Some(2));
    assert_eq!(
        std::fs::read(out_dir.join("Pincast.zip")).unwrap(),
        std::fs::read(again.path().join("second/Pincast.zip")).unwrap()
    );

    // The written project and storyboard check the same as the run did.
    let check = athena(
        &["check", "out/project", "--storyboard", "out/storyboard.json", "--json"],
        dir.path(),
    );
    assert_eq!(check.status.code(), Some(2));
    let checked: Value = serde_json::from_slice(&check.stdout).unwrap();
    assert_eq!(checked, report);
}

/// The Pincast responses up to code generation, with the sign-in screen
/// dropped from the generated code.
fn pincast_without_changes(dir: &Path) -> PathBuf {
    let script = read_json(&fixture("pincast/script.json"));
    let responses = script["responses"].as_array().unwrap();
    let mut kept: Vec<Value> = responses[..9].to_vec();
    let mut code = responses.last().unwrap().clone();
    let views = code["body"]["generatedProject"]["views"].as_array_mut().unwrap();
    views.retain(|v| v["swiftUIViewName"] != "SignInView");
    kept.push(code);
    std::fs::write(dir.join("script.json"), json!({"responses": kept}).to_string()).unwrap();
    std::fs::copy(fixture("pincast/providers.json"), dir.join("providers.json")).unwrap();
    let run = json!({"appName": "Pincast", "initialPrompt": "A podcast app.", "providers": "providers.json"});
    let path = dir.join("run.json");
    std::fs::write(&path, run.to_string()).unwrap();
    path
}

#[test]
fn run_without_change_prompts() {
    let dir = tempfile::tempdir().unwrap();
    let script = pincast_without_changes(dir.path());
    let out = athena(&["run", "--script", script.to_str().unwrap(), "--out", "o", "--json"], dir.path());
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["metrics"]["views"], 5, "{summary}");
    assert!(dir.path().join("o/project/Pincast/Sources/Views/HomeView.swift").is_file());
    assert!(!dir.path().join("o/project/Pincast/Sources/Views/SignInView.swift").exists());
}

#[test]
fn check_exit_codes_follow_findings() {
    let dir = tempfile::tempdir().unwrap();
    let storyboard = fixture("navigation/storyboard.json");
    let sb = storyboard.to_str().unwrap();

    let seeded = athena(
        &["check", fixture("navigation/seeded_project").to_str().unwrap(), "--storyboard", sb, "--report", "r.json"],
        dir.path(),
    );
    assert_eq!(seeded.status.code(), Some(2));
    assert_eq!(read_json(&dir.path().join("r.json"))["navigation"]["total"], 7);
    let text = String::from_utf8(seeded.stdout).unwrap();
    assert!(text.contains("MissingNavigationView"), "{text}");

    let clean = athena(&["check", fixture("navigation/clean_project").to_str().unwrap(), "--storyboard", sb], dir.path());
    assert_eq!(clean.status.code(), Some(0));

    let missing = athena(&["check", "nowhere", "--storyboard", "absent.json"], dir.path());
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn bad_input_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(athena(&["run"], dir.path()).status.code(), Some(3));
    assert_eq!(athena(&["run", "--script", "absent.json"], dir.path()).status.code(), Some(3));

    std::fs::write(dir.path().join("blank.json"), r#"{"initialPrompt": "  "}"#).unwrap();
    let out = athena(&["run", "--script", "blank.json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("initialPrompt"));

    let unknown = athena(
        &["run", "--script", fixture("pincast/run.json").to_str().unwrap(), "--provider", "nope"],
        dir.path(),
    );
    assert_eq!(unknown.status.code(), Some(3));
    assert_eq!(athena(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn failing_stage_exits_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let script = pincast_without_changes(dir.path());
    let mut responses = read_json(&dir.path().join("script.json"));
    responses["responses"][2]["failStatus"] = json!(500);
    std::fs::write(dir.path().join("script.json"), responses.to_string()).unwrap();
    let out = athena(&["run", "--script", script.to_str().unwrap(), "--json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["status"], "failed");
    assert_eq!(summary["stage"], "data_model");
}

#[test]
fn chat_session_generates_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let providers = fixture("finance/providers.json");
    let mut child = Command::new(env!("CARGO_BIN_EXE_athena"))
        .args(["chat", "--providers", providers.to_str().unwrap(), "--data-dir", "data", "--app", "Kitty"])
        .current_dir(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let input = "/ir\n\
        I want to build a finance management app for savings groups.\n\
        Please add sign up to the flow\n\
        /ir skeletons/SignUpView\n\
        /bogus\n\
        /generate\n\
        /check\n\
        /export exported\n\
        /quit\n";
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[Editing]"), "{text}");
    assert!(text.contains("\"viewName\": \"SignUpView\""), "{text}");
    assert!(text.contains("unknown command /bogus"), "{text}");
    assert!(text.contains("generated 6 views"), "{text}");
    assert!(text.contains("navigation: 0"), "{text}");
    assert!(dir.path().join("exported/Kitty/Sources/Views/SignUpView.swift").is_file());

    // The session persisted; the export subcommand reads it back.
    let id = text.split_whitespace().nth(1).unwrap().trim_end_matches('.').to_string();
    let export = athena(&["export", "--data-dir", "data", "--session", &id, "--out", "again"], dir.path());
    assert_eq!(export.status.code(), Some(0), "{}", String::from_utf8_lossy(&export.stderr));
    assert_eq!(
        std::fs::read(dir.path().join("exported/Kitty/Sources/Views/SignUpView.swift")).unwrap(),
        std::fs::read(dir.path().join("again/Kitty/Sources/Views/SignUpView.swift")).unwrap()
    );
    let unknown = athena(&["export", "--data-dir", "data", "--session", "missing", "--out", "x"], dir.path());
    assert_eq!(unknown.status.code(), Some(3));
}
