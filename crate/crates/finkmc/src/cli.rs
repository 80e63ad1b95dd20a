//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for invalid input (config violations, parse
//! errors, malformed log rows, unknown tokens), 2 for I/O failures.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use finkmc_core::{Simulation, Termination};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{parse_config, validate_config, ConfigError, SimulationConfig};
use crate::features::{extract_features, label_table, write_features, FeatureError};
use crate::logio::{read_log, LogError, LogRecord, LogWriter, MAX_DISTINCT_TOKENS};

#[derive(Debug, Parser)]
#[command(name = "finkmc", version, about = "Synthetic customer activity logs via kinetic Monte Carlo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its event log plus a `.meta.json` sidecar.
    Simulate {
        /// Scenario JSON.
        #[arg(long, required_unless_present = "from_meta", conflicts_with = "from_meta")]
        config: Option<PathBuf>,
        /// Re-run exactly the scenario and seed recorded in a sidecar.
        #[arg(long)]
        from_meta: Option<PathBuf>,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Omit the CSV header row.
        #[arg(long)]
        no_header: bool,
    },
    /// Build the per-customer feature table of a log.
    Features {
        #[arg(long)]
        log: PathBuf,
        /// Scenario the log came from; used to rebuild labels.
        #[arg(long)]
        config: PathBuf,
        /// Seed the log was generated with. Defaults to the seed in the log's
        /// sidecar if there is one, else the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario and list every violation.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Contents of `<log>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub seed: u64,
    /// SHA-256 of the effective scenario JSON below.
    pub config_sha256: String,
    pub records: u64,
    pub steps: u64,
    pub final_time: f64,
    pub termination: String,
    pub wall_time_seconds: f64,
    /// The scenario as run, seed included.
    pub config: SimulationConfig,
}

pub fn metadata_path(log: &Path) -> PathBuf {
    let mut s = log.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn config_hash(cfg: &SimulationConfig) -> String {
    Sha256::digest(cfg.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// A failed command: message for stderr and the exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure { code: 2, message: format!("{}: {e}", path.display()) }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure { code: if e.is_io() { 2 } else { 1 }, message: e.to_string() }
    }
}

fn load_valid(path: &Path, seed: Option<u64>) -> Result<SimulationConfig, Failure> {
    let mut cfg = parse_config(path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    check(&cfg)?;
    Ok(cfg)
}

fn check(cfg: &SimulationConfig) -> Result<(), Failure> {
    let violations = validate_config(cfg);
    if violations.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
    Err(Failure::invalid(lines.join("\n")))
}

fn read_metadata(path: &Path) -> Result<RunMetadata, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

/// Runs `cfg` and streams its log to `out`. Returns the sidecar contents.
pub fn simulate_to(cfg: &SimulationConfig, out: &Path, header: bool) -> Result<RunMetadata, Failure> {
    let started = Instant::now();
    let mut sim = Simulation::new(cfg.world_params()).map_err(|e| Failure::invalid(e.to_string()))?;
    let tmp = out.with_extension("partial");
    let file = File::create(&tmp).map_err(|e| Failure::io(&tmp, e))?;
    let mut writer = LogWriter::new(BufWriter::new(file), header).map_err(|e| Failure::io(&tmp, e))?;
    let mut write_error = None;
    let result = sim.run_with(|event| {
        if write_error.is_none() && u64::from(event.agent) >= MAX_DISTINCT_TOKENS {
            write_error = Some(Failure::invalid(format!(
                "arrivals exceeded {MAX_DISTINCT_TOKENS} agents; tokens would no longer be distinct"
            )));
        }
        if write_error.is_none() {
            write_error = writer.append(&LogRecord::from_event(event, cfg.epoch)).err().map(|e| Failure::io(&tmp, e));
        }
    });
    let records = writer.rows();
    let finished = writer.finish().and_then(|mut w| w.flush().map_err(LogError::from));
    let outcome = match (result, write_error, finished) {
        (Err(e), _, _) => Err(Failure::invalid(format!("simulation failed: {e}"))),
        (_, Some(f), _) => Err(f),
        (_, _, Err(e)) => Err(Failure::io(&tmp, e)),
        (Ok(t), None, Ok(_)) => Ok(t),
    };
    let termination = match outcome {
        Ok(t) => t,
        Err(f) => {
            let _ = fs::remove_file(&tmp);
            return Err(f);
        }
    };
    fs::rename(&tmp, out).map_err(|e| Failure::io(out, e))?;
    let meta = RunMetadata {
        seed: cfg.seed,
        config_sha256: config_hash(cfg),
        records,
        steps: sim.steps(),
        final_time: sim.clock().sim_time,
        termination: match termination {
            Termination::MaxTime => "max_time".into(),
            Termination::NoEnabledEvents { at } => format!("no_enabled_events at day {at}"),
        },
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config: cfg.clone(),
    };
    let meta_path = metadata_path(out);
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&meta_path, json + "\n").map_err(|e| Failure::io(&meta_path, e))?;
    Ok(meta)
}

fn read_records(path: &Path) -> Result<Vec<LogRecord>, Failure> {
    let file = File::open(path).map_err(|e| Failure::io(path, e))?;
    read_log(BufReader::new(file)).map_err(|e| match e {
        LogError::Io(e) => Failure::io(path, e),
        e => Failure::invalid(format!("{}: {e}", path.display())),
    })
}

/// Feature CSV for a log, labels rebuilt from `cfg` with `cfg.seed`.
pub fn features_of(records: &[LogRecord], cfg: &SimulationConfig) -> Result<Vec<u8>, Failure> {
    let labels = label_table(&cfg.world_params(), records).map_err(|e| Failure::invalid(e.to_string()))?;
    let rows = extract_features(records, &labels).map_err(|e| Failure::invalid(e.to_string()))?;
    write_features(&rows, Vec::new()).map_err(|e| match e {
        FeatureError::Io(e) => Failure { code: 2, message: e.to_string() },
        e => Failure::invalid(e.to_string()),
    })
}

pub fn execute(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Simulate { config, from_meta, seed, out, no_header } => {
            let cfg = match (config, from_meta) {
                (Some(path), _) => load_valid(&path, seed)?,
                (None, Some(meta)) => {
                    let mut cfg = read_metadata(&meta)?.config;
                    if let Some(seed) = seed {
                        cfg.seed = seed;
                    }
                    check(&cfg)?;
                    cfg
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            let meta = simulate_to(&cfg, &out, !no_header)?;
            Ok(format!(
                "wrote {} records to {} (seed {}, {})",
                meta.records,
                out.display(),
                meta.seed,
                meta.termination
            ))
        }
        Command::Features { log, config, seed, out } => {
            let mut cfg = parse_config(&config)?;
            let sidecar = metadata_path(&log);
            cfg.seed = match seed {
                Some(s) => s,
                None if sidecar.exists() => read_metadata(&sidecar)?.seed,
                None => cfg.seed,
            };
            check(&cfg)?;
            let records = read_records(&log)?;
            let bytes = features_of(&records, &cfg)?;
            fs::write(&out, &bytes).map_err(|e| Failure::io(&out, e))?;
            Ok(format!("wrote features to {}", out.display()))
        }
        Command::Validate { config } => {
            let cfg = parse_config(&config)?;
            check(&cfg)?;
            Ok(format!("{}: ok", config.display()))
        }
    }
}

/// Runs the parsed command, reporting to stdout/stderr; returns the exit code.
pub fn main_with(cli: Cli) -> u8 {
    match execute(cli) {
        Ok(msg) => {
            let _ = writeln!(io::stdout(), "{msg}");
            0
        }
        Err(f) => {
            let _ = writeln!(io::stderr(), "error: {}", f.message);
            f.code
        }
    }
}
