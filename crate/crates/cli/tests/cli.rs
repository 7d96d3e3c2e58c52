//! Exit codes and outputs of the `teachlens` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn teachlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teachlens")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn text(out: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
}

fn synth(scenario: &str, dir: &Path, seed: &str) {
    let out = teachlens(&["synth", scenario, dir.to_str().unwrap(), "--seed", seed]);
    assert_eq!(code(&out), 0, "{}", text(&out));
}

fn edit_manifest(dir: &Path, edit: impl FnOnce(&mut Value)) {
    let path = dir.join("session.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    edit(&mut v);
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

#[test]
fn analyze_writes_three_artifacts_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let session = tmp.path().join("s");
    synth("stationary", &session, "4");
    let out_a = tmp.path().join("a");
    let out = teachlens(&["analyze", session.to_str().unwrap(), "--out", out_a.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", text(&out));
    for f in ["summary.json", "timeline.json", "windows.csv"] {
        assert!(out_a.join(f).is_file(), "{f}");
    }
    assert!(!out_a.join("tracking.json").exists());

    let out_b = tmp.path().join("b");
    let out = teachlens(&["analyze", session.to_str().unwrap(), "--out", out_b.to_str().unwrap(), "--dump-tracking"]);
    assert_eq!(code(&out), 0);
    assert!(out_b.join("tracking.json").is_file());
    for f in ["summary.json", "timeline.json", "windows.csv"] {
        assert_eq!(std::fs::read(out_a.join(f)).unwrap(), std::fs::read(out_b.join(f)).unwrap(), "{f}");
    }

    let out = teachlens(&["analyze", session.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(session.join("summary.json").is_file());
}

#[test]
fn analyze_config_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let session = tmp.path().join("s");
    synth("stationary", &session, "4");
    let cfg = tmp.path().join("cfg.toml");
    std::fs::write(&cfg, "[windows]\nfine_seconds = 20.0\n").unwrap();
    let out_dir = tmp.path().join("o");
    let args = ["analyze", session.to_str().unwrap(), "--config", cfg.to_str().unwrap(), "--set", "analytics.heatmap_rows=6", "--out", out_dir.to_str().unwrap()];
    let out = teachlens(&args);
    assert_eq!(code(&out), 0, "{}", text(&out));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(s["windows"]["fine"].as_array().unwrap().len(), 3);
    assert_eq!(s["heatmap"]["rows"], 6);
    assert_eq!(s["provenance"]["config"]["windows"]["fine_seconds"], 20.0);
    assert_eq!(s["provenance"]["version"], env!("CARGO_PKG_VERSION"));

    std::fs::write(&cfg, "[windows]\nfine_seconds = 20.0\nsurprise = 1\n").unwrap();
    assert_eq!(code(&teachlens(&["analyze", session.to_str().unwrap(), "--config", cfg.to_str().unwrap()])), 3);
    assert_eq!(code(&teachlens(&["analyze", session.to_str().unwrap(), "--set", "no.such=1"])), 3);
}

#[test]
fn analyze_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = teachlens(&["analyze", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(text(&out).contains("session.json"));

    let session = tmp.path().join("s");
    synth("crossing", &session, "1");
    std::fs::write(session.join("detections.jsonl"), "{\"frame_index\": 0, broken\n").unwrap();
    let out = teachlens(&["analyze", session.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", text(&out));
    assert!(text(&out).contains("line 1"));

    let session = tmp.path().join("empty_track");
    synth("crossing", &session, "1");
    std::fs::write(session.join("detections.jsonl"), "").unwrap();
    let out = teachlens(&["analyze", session.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", text(&out));
}

#[test]
fn synth_scenarios() {
    let tmp = tempfile::tempdir().unwrap();
    for s in ["stationary", "crossing", "exit_reentry", "lecture_audio"] {
        let dir = tmp.path().join(s);
        synth(s, &dir, "9");
        for f in ["session.json", "detections.jsonl", "audio.wav", "annotations.tsv", "ground_truth.json"] {
            assert!(dir.join(f).is_file(), "{s}: {f}");
        }
    }
    let truth: Value = serde_json::from_str(&std::fs::read_to_string(tmp.path().join("lecture_audio/ground_truth.json")).unwrap()).unwrap();
    assert!(!truth["bursts"].as_array().unwrap().is_empty());

    let again = tmp.path().join("again");
    synth("crossing", &again, "9");
    for f in ["detections.jsonl", "audio.wav", "ground_truth.json"] {
        assert_eq!(std::fs::read(again.join(f)).unwrap(), std::fs::read(tmp.path().join("crossing").join(f)).unwrap());
    }

    let out = teachlens(&["synth", "volcano", tmp.path().join("v").to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(text(&out).contains("volcano"));
}

#[test]
fn validate_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let session = tmp.path().join("s");
    synth("crossing", &session, "2");
    assert_eq!(code(&teachlens(&["validate", session.to_str().unwrap()])), 0);

    edit_manifest(&session, |v| {
        v["zones"][1]["polygon"] = serde_json::json!([[0.0, 0.5], [1.0, 0.5]]);
    });
    let out = teachlens(&["validate", session.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let zone = {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(session.join("session.json")).unwrap()).unwrap();
        v["zones"][1]["name"].as_str().unwrap().to_string()
    };
    assert!(text(&out).contains(&format!("'{zone}'")), "{}", text(&out));

    let session = tmp.path().join("t");
    synth("crossing", &session, "2");
    let det = session.join("detections.jsonl");
    let mut lines: Vec<String> = std::fs::read_to_string(&det).unwrap().lines().map(String::from).collect();
    lines.swap(6, 7);
    std::fs::write(&det, lines.join("\n")).unwrap();
    let out = teachlens(&["validate", session.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(text(&out).contains("detections.jsonl") && text(&out).contains("line 8"), "{}", text(&out));

    let out = teachlens(&["validate", tmp.path().join("nothing").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn help_lists_subcommands() {
    let out = teachlens(&["--help"]);
    assert_eq!(code(&out), 0);
    let t = text(&out);
    for s in ["analyze", "synth", "validate", "serve"] {
        assert!(t.contains(s), "{s}");
    }
    assert_eq!(code(&teachlens(&["serve"])), 2, "missing --data is a usage error");
}
