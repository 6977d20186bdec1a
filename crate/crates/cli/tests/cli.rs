use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const DEFAULT: &str = include_str!("../config/default.toml");

fn batrap(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_batrap"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_into(dir: &Path, scenario: &str, extra: &[&str], threads: &str) -> Output {
    let out = dir.to_str().unwrap();
    let mut args = vec!["run", scenario, "--out", out, "--seed", "11", "--samples", "100000"];
    args.extend_from_slice(extra);
    batrap(&args, &[("BATRAP_THREADS", threads)])
}

#[test]
fn default_config_validates_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), DEFAULT);
    let out = batrap(&["validate", &path], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let report = text(&out.stdout);
    assert!(report.contains("laser_791.waist = 1e-4 m"), "{report}");
    assert!(report.contains("beam.temperature = 5.7315e2 K"), "{report}");
    assert!(!report.contains("violation:"), "{report}");
}

#[test]
fn negative_temperature_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &DEFAULT.replace("temperature_c = 300", "temperature_c = -300"));
    let out = batrap(&["validate", &path], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stdout).contains("beam.temperature"));
    assert!(text(&out.stderr).contains("beam.temperature"));

    let run = batrap(&["run", "doppler", "--config", &path, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(run.status.code(), Some(1));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "[beam]\ntemperature_c = 300\ncolour = 3\n");
    let out = batrap(&["validate", &path], &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("line 3") && err.contains("colour"), "{err}");
}

#[test]
fn usage_and_io_errors_have_distinct_codes() {
    assert_eq!(batrap(&["run", "fig99"], &[]).status.code(), Some(1));
    assert_eq!(batrap(&["--help"], &[]).status.code(), Some(0));
    let missing = batrap(&["validate", "/nonexistent/scenario.toml"], &[]);
    assert_eq!(missing.status.code(), Some(3), "{}", text(&missing.stderr));
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for scenario in ["fig4", "doppler", "table1"] {
        assert!(run_into(a.path(), scenario, &[], "1").status.success());
        assert!(run_into(b.path(), scenario, &[], "4").status.success());
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 5);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name:?}"
        );
    }
}

#[test]
fn summary_records_seed_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), "trap-freqs", &[], "2").status.success());
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("trap_freqs_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "trap-freqs");
    assert_eq!(summary["seed"], 11);
    assert_eq!(summary["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn json_format_writes_json_tables() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), "fig2-chain", &["--format", "json"], "1").status.success());
    let table: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("fig2_chain.json")).unwrap()).unwrap();
    assert!(table.is_array() || table.is_object());
}

#[test]
fn zero_abundance_leaves_background_only() {
    let dir = tempfile::tempdir().unwrap();
    let body = DEFAULT.replace("# [loading.abundance_override]\n# 138 = 0.0", "[loading.abundance_override]\n138 = 0.0");
    assert_ne!(body, DEFAULT);
    let path = write_config(dir.path(), &body);
    let out = run_into(dir.path(), "fig4", &["--config", &path], "1");
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("fig4_spectrum.csv")).unwrap();
    let rates: Vec<f64> = csv
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1) == Some("138"))
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(!rates.is_empty());
    assert!(rates.iter().all(|&r| r == 0.005), "{rates:?}");
}

#[test]
fn registry_prints_all_isotopes() {
    let out = batrap(&["registry"], &[]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let json = v.to_string();
    for m in ["134", "135", "136", "137", "138"] {
        assert!(json.contains(m));
    }
}
