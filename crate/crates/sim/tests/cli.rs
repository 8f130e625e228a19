//! The binary exercised end to end: report files on disk, determinism
//! across repeated runs and worker counts, configuration round trips, and
//! the machine-readable failure record on bad input.

use std::path::PathBuf;
use std::process::{Command, Output};

fn riscf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riscf"))
        .args(args)
        .output()
        .expect("spawning the binary")
}

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}, stderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn validate_writes_a_json_and_a_csv_report() {
    let stem = tmp("smoke");
    let out = riscf(&[
        "validate",
        "--preset",
        "tiny",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert_success(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("validate"), "summary line missing: {stdout}");

    let json = std::fs::read_to_string(stem.with_extension("json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(doc["kind"], "validate");
    assert!(doc["body"]["realizations"].as_array().is_some_and(|r| !r.is_empty()));

    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('#'), "schema line missing");
    assert_eq!(lines.next().unwrap(), "variant,direction,user,value_mbps");
    assert!(lines.next().is_some(), "csv carries no data rows");
}

#[test]
fn repeated_runs_write_identical_bytes() {
    let first = tmp("again_a");
    let second = tmp("again_b");
    for stem in [&first, &second] {
        let out = riscf(&[
            "validate",
            "--preset",
            "tiny",
            "--seed",
            "7",
            "--out",
            stem.to_str().unwrap(),
        ]);
        assert_success(&out);
    }
    for ext in ["json", "csv"] {
        let a = std::fs::read(first.with_extension(ext)).unwrap();
        let b = std::fs::read(second.with_extension(ext)).unwrap();
        assert_eq!(a, b, "{ext} reports differ between identical runs");
    }
}

#[test]
fn worker_count_never_reaches_the_report() {
    let mut bytes = Vec::new();
    for threads in ["1", "2", "4"] {
        let stem = tmp(&format!("threads_{threads}"));
        let out = riscf(&[
            "sweep-blocking",
            "--preset",
            "tiny",
            "--grid",
            "0,0.5,1",
            "--variants",
            "cellfree,ris-cellfree",
            "--threads",
            threads,
            "--out",
            stem.to_str().unwrap(),
        ]);
        assert_success(&out);
        bytes.push((
            std::fs::read(stem.with_extension("json")).unwrap(),
            std::fs::read(stem.with_extension("csv")).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[1], bytes[2]);
}

#[test]
fn sweep_csv_lists_every_variant_and_grid_point() {
    let stem = tmp("sweep");
    let out = riscf(&[
        "sweep-blocking",
        "--preset",
        "tiny",
        "--grid",
        "0,1",
        "--variants",
        "cellfree,ris-cellfree-nolos",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert_success(&out);
    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('#'), "schema line missing");
    assert_eq!(
        lines.next().unwrap(),
        "variant,direction,unblocked_probability,value_mbps"
    );
    // two variants x two grid points x two directions
    assert_eq!(lines.count(), 8);
}

#[test]
fn resolved_config_round_trips_through_a_file() {
    let path = tmp("roundtrip.toml");
    let out = riscf(&["config", "--preset", "tiny", "--out", path.to_str().unwrap()]);
    assert_success(&out);

    let from_file = tmp("rt_file");
    let out = riscf(&[
        "validate",
        "--config",
        path.to_str().unwrap(),
        "--out",
        from_file.to_str().unwrap(),
    ]);
    assert_success(&out);

    let from_preset = tmp("rt_preset");
    let out = riscf(&[
        "validate",
        "--preset",
        "tiny",
        "--out",
        from_preset.to_str().unwrap(),
    ]);
    assert_success(&out);

    let a = std::fs::read(from_file.with_extension("json")).unwrap();
    let b = std::fs::read(from_preset.with_extension("json")).unwrap();
    assert_eq!(a, b, "saved configuration drifts from its preset");
}

#[test]
fn printed_config_is_valid_toml() {
    let out = riscf(&["config", "--preset", "validation"]);
    assert_success(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed: toml::Value = toml::from_str(&text).unwrap();
    assert!(parsed.get("scenario").is_some());
    assert!(parsed.get("run").is_some());
}

#[test]
fn unknown_preset_fails_with_an_error_record() {
    let out = riscf(&["validate", "--preset", "nope"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let record: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    let message = record["error"].as_str().unwrap();
    assert!(message.contains("nope"), "unhelpful error: {message}");
}

#[test]
fn unreadable_config_file_fails_with_an_error_record() {
    let path = tmp("broken.toml");
    std::fs::write(&path, "[scenario]\nap_count = -3\n").unwrap();
    let out = riscf(&["validate", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    let record: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert!(record["error"].as_str().is_some_and(|m| !m.is_empty()));
}
