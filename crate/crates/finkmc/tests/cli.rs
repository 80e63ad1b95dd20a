use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use finkmc::cli::{metadata_path, RunMetadata};
use finkmc::config::baseline_scenario;
use tempfile::TempDir;

fn finkmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finkmc")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path, seed: u64) -> PathBuf {
    let mut cfg = baseline_scenario();
    cfg.seed = seed;
    cfg.max_time = 2.0;
    for p in &mut cfg.population {
        p.count = 10;
    }
    let path = dir.join("small.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

const FIXTURE: &str = "time,initiating_token,action,value,receiving_token\n\
    2022-09-01 00:00:00.00,C_b6589fc6,cash_in,10.00,\n\
    2022-09-01 00:01:00.00,C_b6589fc6,cash_in,20.00,\n\
    2022-09-01 00:03:00.00,C_b6589fc6,cash_out,5.00,\n";

#[test]
fn simulate_is_reproducible_and_writes_metadata() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 3);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = finkmc(&["simulate", "--config", s(&cfg), "--out", s(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let meta: RunMetadata = serde_json::from_str(&fs::read_to_string(metadata_path(&a)).unwrap()).unwrap();
    assert_eq!(meta.seed, 3);
    assert_eq!(meta.records, meta.steps);
    assert_eq!(meta.records as usize, fs::read_to_string(&a).unwrap().lines().count() - 1);
    assert_eq!(meta.config_sha256.len(), 64);
}

#[test]
fn seed_override_is_recorded_and_sidecar_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 3);
    let a = dir.path().join("a.csv");
    assert!(finkmc(&["simulate", "--config", s(&cfg), "--seed", "7", "--out", s(&a)]).status.success());
    let meta: RunMetadata = serde_json::from_str(&fs::read_to_string(metadata_path(&a)).unwrap()).unwrap();
    assert_eq!(meta.seed, 7);
    assert_eq!(meta.config.seed, 7);

    let b = dir.path().join("b.csv");
    let meta_a = metadata_path(&a);
    assert!(finkmc(&["simulate", "--from-meta", s(&meta_a), "--out", s(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let c = dir.path().join("c.csv");
    assert!(finkmc(&["simulate", "--config", s(&cfg), "--out", s(&c)]).status.success());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn no_header_flag() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 1);
    let a = dir.path().join("a.csv");
    assert!(finkmc(&["simulate", "--config", s(&cfg), "--no-header", "--out", s(&a)]).status.success());
    assert!(fs::read_to_string(&a).unwrap().starts_with("2022-09-01 "));
}

#[test]
fn invalid_config_fails_without_output() {
    let dir = TempDir::new().unwrap();
    let mut cfg = baseline_scenario();
    cfg.archetypes[0].rates.values_mut().next().unwrap().std = -1.0;
    let path = dir.path().join("bad.json");
    fs::write(&path, cfg.to_json()).unwrap();
    let out = dir.path().join("out.csv");
    let o = finkmc(&["simulate", "--config", s(&path), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("negative standard deviation"));
    assert!(!out.exists());
    assert!(!metadata_path(&out).exists());

    let o = finkmc(&["validate", "--config", s(&path)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let base = dir.path().join("baseline.json");
    fs::write(&base, finkmc::config::baseline_json()).unwrap();
    assert_eq!(finkmc(&["validate", "--config", s(&base)]).status.code(), Some(0));
    let missing = dir.path().join("nope.json");
    assert_eq!(finkmc(&["validate", "--config", s(&missing)]).status.code(), Some(2));
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{ \"seed\": ").unwrap();
    assert_eq!(finkmc(&["validate", "--config", s(&broken)]).status.code(), Some(1));
}

#[test]
fn features_on_fixture() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 1);
    let log = dir.path().join("fixture.csv");
    fs::write(&log, FIXTURE).unwrap();
    let out = dir.path().join("features.csv");
    let o = finkmc(&["features", "--log", s(&log), "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let row = rdr.records().next().unwrap().unwrap();
    let get = |k: &str| row[header.iter().position(|h| h == k).unwrap()].to_string();
    assert_eq!(get("token"), "C_b6589fc6");
    assert_eq!(get("cash_in_count"), "2");
    assert_eq!(get("cash_in_value"), "30");
    assert_eq!(get("cash_in_ratio").parse::<f64>().unwrap(), 2.0 / 3.0);
    assert_eq!(get("cash_in_value_ratio").parse::<f64>().unwrap(), 30.0 / 35.0);
    assert_eq!(get("time_diff_mean_all"), "90");
    assert_eq!(get("time_diff_median_all"), "90");
    assert_eq!(get("time_diff_std_all").parse::<f64>().unwrap(), 1800f64.sqrt());
    assert_eq!(get("time_diff_mean_cash_in"), "60");
    assert_eq!(get("time_diff_std_cash_in"), "");
    assert_eq!(get("time_diff_std_cash_out"), "");
}

#[test]
fn features_of_header_only_log() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 1);
    let log = dir.path().join("empty.csv");
    fs::write(&log, "time,initiating_token,action,value,receiving_token\n").unwrap();
    let out = dir.path().join("features.csv");
    assert!(finkmc(&["features", "--log", s(&log), "--config", s(&cfg), "--out", s(&out)]).status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 1);
}

#[test]
fn features_error_paths() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 1);
    let out = dir.path().join("features.csv");

    let log = dir.path().join("stranger.csv");
    // Id 999 is outside a 40-agent population.
    fs::write(&log, format!("2022-09-01 00:00:00.00,{},cash_in,1.00,\n", finkmc::token_for(999))).unwrap();
    assert_eq!(finkmc(&["features", "--log", s(&log), "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(1));

    let log = dir.path().join("garbled.csv");
    fs::write(&log, format!("{FIXTURE}2022-09-01 00:04:00.00,C_b6589fc6,cash_out,five,\n")).unwrap();
    let o = finkmc(&["features", "--log", s(&log), "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 5"), "{}", String::from_utf8_lossy(&o.stderr));

    let missing = dir.path().join("missing.csv");
    assert_eq!(finkmc(&["features", "--log", s(&missing), "--config", s(&cfg), "--out", s(&out)]).status.code(), Some(2));
}

#[test]
fn features_use_the_sidecar_seed() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path(), 3);
    let log = dir.path().join("run.csv");
    assert!(finkmc(&["simulate", "--config", s(&cfg), "--seed", "11", "--out", s(&log)]).status.success());
    let (a, b) = (dir.path().join("fa.csv"), dir.path().join("fb.csv"));
    assert!(finkmc(&["features", "--log", s(&log), "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(finkmc(&["features", "--log", s(&log), "--config", s(&cfg), "--seed", "11", "--out", s(&b)]).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
