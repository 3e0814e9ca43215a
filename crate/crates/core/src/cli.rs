//! `moreas simulate | estimate | report`.
//!
//! Exit codes: 0 success, 1 invalid input (config, schema, estimation), 2 IO.
//! Log level comes from `MOREAS_LOG` (`error`, `warn`, `info`, `debug`).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::report::{self, EstimateOptions};
use crate::simulator::{self, SimConfig, ROUNDS_FILE, SUBJECTS_FILE};

pub const LOG_ENV: &str = "MOREAS_LOG";

#[derive(Debug, Parser)]
#[command(name = "moreas", version, about = "Simulate and estimate motivated belief updating")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a cohort and write subjects.csv and rounds.csv.
    Simulate {
        /// JSON config; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate priors, susceptibility and motives and run the regressions.
    Estimate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also run assessment regressions on clamped logit assessments.
        #[arg(long)]
        logit: bool,
    },
    /// Build figure series from a dataset and its estimates.
    Report {
        /// Directory holding subjects.csv, rounds.csv and estimates.csv.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write one SVG per figure.
        #[arg(long)]
        svg: bool,
    },
}

#[derive(Debug, Serialize)]
struct Artifact {
    path: String,
    sha256: String,
}

/// Run record written next to each command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    command: String,
    config_hash: String,
    seed: Option<u64>,
    inputs: Vec<Artifact>,
    artifacts: Vec<Artifact>,
    version: String,
    wall_time_seconds: f64,
}

/// Manifest file name for a command.
pub fn manifest_name(command: &str) -> String {
    if command == "simulate" {
        "manifest.json".into()
    } else {
        format!("{command}-manifest.json")
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn artifacts(paths: &[PathBuf], root: &Path) -> Result<Vec<Artifact>> {
    paths
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(root).unwrap_or(p);
            Ok(Artifact { path: rel.display().to_string(), sha256: sha256_file(p)? })
        })
        .collect()
}

/// Hash over labelled input blobs.
struct InputHash(Sha256);

impl InputHash {
    fn new() -> Self {
        InputHash(Sha256::new())
    }

    fn add(&mut self, label: &str, bytes: &[u8]) {
        self.0.update(label.as_bytes());
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let name = manifest_name(&manifest.command);
    let path = dir.join(&name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    std::fs::write(&tmp, text + "\n").map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn cmd_simulate(config: Option<PathBuf>, seed: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let start = Instant::now();
    let mut cfg = match &config {
        Some(path) => SimConfig::load(path)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Validation("no output directory: pass --out or set output_dir".into()))?;
    cfg.validate()?;
    let topics = cfg.load_topics()?;
    let mut hash = InputHash::new();
    let mut hashed = cfg.clone();
    hashed.output_dir = None;
    hashed.topics = None;
    hash.add("config", serde_json::to_string(&hashed).expect("config serializes").as_bytes());
    hash.add("topics", topics.to_json().as_bytes());

    log::info!("simulating {} subjects with seed {}", cfg.cohort.size(), cfg.seed);
    let agents = cfg.cohort.build(&topics, cfg.seed)?;
    let data = simulator::run_cohort(agents, &topics, &cfg.arms(), cfg.seed)?;
    simulator::emit_csv(&data, &out)?;
    let written = vec![out.join(SUBJECTS_FILE), out.join(ROUNDS_FILE)];
    let manifest = RunManifest {
        command: "simulate".into(),
        config_hash: hash.finish(),
        seed: Some(cfg.seed),
        inputs: match &config {
            Some(path) => artifacts(std::slice::from_ref(path), Path::new(""))?,
            None => Vec::new(),
        },
        artifacts: artifacts(&written, &out)?,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_manifest(&out, &manifest)?;
    log::info!("wrote {} rounds to {}", data.rounds.len(), out.display());
    Ok(())
}

fn dataset_inputs(dir: &Path) -> Vec<PathBuf> {
    vec![dir.join(SUBJECTS_FILE), dir.join(ROUNDS_FILE)]
}

fn cmd_estimate(input: &Path, out: &Path, logit: bool) -> Result<()> {
    let start = Instant::now();
    let data = simulator::read_dataset(input)?;
    let inputs = dataset_inputs(input);
    let mut hash = InputHash::new();
    for p in &inputs {
        hash.add(&p.file_name().unwrap_or_default().to_string_lossy(), &std::fs::read(p).map_err(|e| Error::io(p, e))?);
    }
    hash.add("logit", &[u8::from(logit)]);

    let outputs = report::estimate_all(&data, &EstimateOptions { logit, ..Default::default() })?;
    for d in &outputs.estimates.dropped {
        log::warn!("dropped subject {} {}: {}", d.subject_id, d.topic_id.as_deref().unwrap_or(""), d.reason);
    }
    let written = report::write_estimates(&outputs, out)?;
    let manifest = RunManifest {
        command: "estimate".into(),
        config_hash: hash.finish(),
        seed: None,
        inputs: artifacts(&inputs, Path::new(""))?,
        artifacts: artifacts(&written, out)?,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_manifest(out, &manifest)?;
    log::info!("phi_hat = {:.4}; wrote {} files to {}", outputs.estimates.phi_hat, written.len(), out.display());
    Ok(())
}

fn cmd_report(input: &Path, out: &Path, svg: bool) -> Result<()> {
    let start = Instant::now();
    let data = simulator::read_dataset(input)?;
    let est_path = input.join(report::ESTIMATES_FILE);
    let estimates = report::read_estimates(&est_path)?;
    let mut inputs = dataset_inputs(input);
    inputs.push(est_path);
    let mut hash = InputHash::new();
    for p in &inputs {
        hash.add(&p.file_name().unwrap_or_default().to_string_lossy(), &std::fs::read(p).map_err(|e| Error::io(p, e))?);
    }
    hash.add("svg", &[u8::from(svg)]);

    let figures = report::build_figures(&data, &estimates)?;
    let written = report::write_figures(&figures, out, svg)?;
    let manifest = RunManifest {
        command: "report".into(),
        config_hash: hash.finish(),
        seed: None,
        inputs: artifacts(&inputs, Path::new(""))?,
        artifacts: artifacts(&written, out)?,
        version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    write_manifest(out, &manifest)?;
    Ok(())
}

/// Installs the `MOREAS_LOG`-driven logger; later calls are no-ops.
pub fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging();
    let result = match cli.command {
        Command::Simulate { config, seed, out } => cmd_simulate(config, seed, out),
        Command::Estimate { input, out, logit } => cmd_estimate(&input, &out, logit),
        Command::Report { input, out, svg } => cmd_report(&input, &out, svg),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_are_validation_failures() {
        assert_eq!(run(["moreas", "frobnicate"]), 1);
        assert_eq!(run(["moreas", "--version"]), 0);
    }

    #[test]
    fn pipeline_writes_manifests() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("cfg.json");
        std::fs::write(&cfg, r#"{"seed": 3, "cohort": {"cells": [{"party": "pro_dem", "updater": {"kind": "motivated"}, "count": 30}, {"party": "pro_rep", "updater": {"kind": "motivated"}, "count": 20}]}}"#).unwrap();
        let data = dir.path().join("data");
        let s = |p: &Path| p.to_str().unwrap().to_string();
        assert_eq!(run(["moreas", "simulate", "--config", &s(&cfg), "--out", &s(&data)]), 0);
        assert_eq!(run(["moreas", "estimate", "--in", &s(&data), "--out", &s(&data), "--logit"]), 0);
        assert_eq!(run(["moreas", "report", "--in", &s(&data), "--out", &s(&data.join("fig")), "--svg"]), 0);
        for f in ["manifest.json", "estimate-manifest.json", "fig/report-manifest.json", "fig/cdf_pro_anti.svg"] {
            assert!(data.join(f).exists(), "{f}");
        }
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(data.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["seed"], 3);
        assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    }
}
