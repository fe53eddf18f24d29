use std::path::Path;
use std::process::{Command, Output};

use cowvad_cli::{parse_config, read_measurements, to_table, write_csv, Meta, RunConfig};
use cowvad_core::{BeamSpec, CrystalSpec, MeasurementSample};

fn cowvad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cowvad")).args(args).output().unwrap()
}

fn data_lines(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone())
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn with_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn coherency_lists_eleven_points() {
    let out = cowvad(&["coherency", "--max-theta", "1.0"]);
    assert!(out.status.success());
    let lines = data_lines(&out);
    assert_eq!(lines.len(), 12);
    assert!(lines[0].starts_with("index,kind,theta_rad"));
    assert!(lines[11].starts_with("11,coherency,9.919"));
}

#[test]
fn sensitivity_table_has_six_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(dir.path(), "boost.k_sigma = 0.05\n");
    let out = cowvad(&[
        "sensitivity-table",
        "--point",
        "7",
        "--epsilons",
        "0,0.5,1,1.5,2,4",
        "--config",
        &cfg,
    ]);
    assert!(out.status.success());
    let lines = data_lines(&out);
    assert_eq!(lines.len(), 7);
    let factors: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(factors[5], "4.0000000000000000e0");
}

#[test]
fn crossed_sweep_reproduces_common_translation() {
    let out = cowvad(&[
        "sweep-theta",
        "--min-theta",
        "0",
        "--max-theta",
        "1.2",
        "--points",
        "121",
    ]);
    assert!(out.status.success());
    let lines = data_lines(&out);
    assert_eq!(lines.len(), 122);
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[1], f[4], "{l}");
    }
}

#[test]
fn every_artifact_echoes_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(dir.path(), "[boost]\nk_sigma = 0.05\n");
    let out = cowvad(&["optimize-epsilon", "--point", "2", "--config", &cfg, "--seed", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let echo: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| !["command", "version", "seed"].iter().any(|k| l.starts_with(k)))
        .map(|l| format!("{l}\n"))
        .collect();
    assert!(text.contains("# seed = 5\n"));
    assert!(text.contains("# crystal.n_e = 1.55175\n"));
    let reparsed = parse_config(&echo).unwrap();
    assert_eq!(reparsed, parse_config("boost.k_sigma = 0.05").unwrap());
}

#[test]
fn json_meta_echoes_seed() {
    let out = cowvad(&["synthesize", "--seed", "77", "--samples", "5", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["meta"]["seed"], 77);
    assert_eq!(v["meta"]["command"], "synthesize");
    assert_eq!(v["meta"]["config"]["crystal.n_o"], 1.5427);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["rows"][0]["frames"], 500);
}

#[test]
fn synthesize_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_config(dir.path(), "boost.k_sigma = 0.05\n");
    let data = dir.path().join("m.csv").display().to_string();
    assert!(cowvad(&["synthesize", "--seed", "3", "--config", &cfg, "-o", &data])
        .status
        .success());
    let out = cowvad(&["fit-boost", "--measurements", &data, "--point", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = data_lines(&out);
    let row: Vec<&str> = lines[1].split(',').collect();
    let k: f64 = row[0].parse().unwrap();
    assert!((k - 0.05).abs() < 0.005, "{k}");
    assert_eq!(row[8], "true");
}

#[test]
fn measurement_csv_round_trips() {
    let samples: Vec<MeasurementSample> = (0..7)
        .map(|i| MeasurementSample {
            theta_offset: -3e-3 + 1e-3 * i as f64,
            z_mean: 1.234_567_890_123_456_7e-6 * (i as f64 - 2.5),
            z_stddev: 0.1 + i as f64,
            frame_count: 500 + i,
        })
        .collect();
    let cfg = RunConfig::default();
    let meta = Meta {
        command: "synthesize",
        version: "test",
        seed: 0,
        config: &cfg,
    };
    let mut buf = Vec::new();
    write_csv(&mut buf, &to_table(&samples), &meta).unwrap();
    assert_eq!(read_measurements(buf.as_slice()).unwrap(), samples);
    let mut empty = Vec::new();
    write_csv(&mut empty, &to_table(&[]), &meta).unwrap();
    assert!(read_measurements(empty.as_slice()).unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = with_config(dir.path(), "crystal.thickness_m = -1\n");
    let out = cowvad(&["coherency", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("T > 0"));
    assert!(out.stdout.is_empty());

    let unknown = with_config(dir.path(), "\nbeam.colour = red\n");
    let out = cowvad(&["coherency", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(cowvad(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(cowvad(&["coherency", "--max-theta", "2"]).status.code(), Some(2));
    assert_eq!(
        cowvad(&["fit-boost", "--measurements", "/nonexistent.csv"])
            .status
            .code(),
        Some(2)
    );

    // A whole-wave plate at normal incidence is exactly dark when crossed.
    let c = CrystalSpec::default();
    let t = 57.0 * BeamSpec::DEFAULT_WAVELENGTH / (c.n_e - c.n_o);
    let dark = with_config(dir.path(), &format!("crystal.thickness_m = {t}\n"));
    let out = cowvad(&[
        "sweep-theta",
        "--min-theta",
        "0",
        "--max-theta",
        "0",
        "--points",
        "1",
        "--config",
        &dark,
    ]);
    assert_eq!(out.status.code(), Some(3));
}
