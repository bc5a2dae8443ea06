//! Scenario files, trace persistence, parameter sweeps and figure reproduction.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::WisdomReport;
use crate::scenario::{run_replications, RunOutput, ScenarioConfig};
use crate::trust::FirstSuccessStats;

pub mod reproduce;
pub mod sweep;

pub use reproduce::{reproduce, Check, ReproduceReport, TARGETS};
pub use sweep::{sweep, SweepRow};

pub const TRACE_HEADER: &str = "topic,round,agent,belief";
pub const WEIGHTS_HEADER: &str = "topic,row,col,weight";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Toml,
    Json,
}

fn format_of(path: &Path) -> Result<Format> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
        Some("toml") => Ok(Format::Toml),
        Some("json") => Ok(Format::Json),
        _ => Err(Error::ConfigInvalid(format!("{}: expected a .toml or .json file", path.display()))),
    }
}

pub fn parse_config(text: &str, json: bool) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = if json {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?
    } else {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a scenario file; the format follows the extension.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let fmt = format_of(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text, fmt == Format::Json)
}

pub fn save_config(cfg: &ScenarioConfig, path: &Path) -> Result<()> {
    let text = match format_of(path)? {
        Format::Toml => toml::to_string_pretty(cfg).map_err(|e| Error::Io(e.to_string()))?,
        Format::Json => serde_json::to_string_pretty(cfg).map_err(|e| Error::Io(e.to_string()))?,
    };
    write_file(path, &text)
}

/// SHA-256 of the canonical JSON form, hex encoded.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicFlags {
    pub topic: usize,
    pub mu: f64,
    pub rounds: usize,
    pub converged: bool,
    pub diverged: bool,
    pub is_consensus: bool,
    pub consensus_value: Option<f64>,
    pub truthful: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: String,
    pub model: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub n: usize,
    pub topics: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metadata: Metadata,
    pub flags: Vec<TopicFlags>,
    pub wisdom: WisdomReport,
    pub first_success: Option<FirstSuccessStats>,
    pub final_weights: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn new(cfg: &ScenarioConfig, out: &RunOutput) -> Self {
        RunReport {
            metadata: Metadata {
                name: cfg.name.clone(),
                model: cfg.model.name().into(),
                config_hash: config_hash(cfg),
                seed: out.seed,
                version: env!("CARGO_PKG_VERSION").into(),
                n: cfg.n(),
                topics: cfg.topics,
            },
            flags: out
                .topics
                .iter()
                .map(|t| TopicFlags {
                    topic: t.topic,
                    mu: t.mu,
                    rounds: t.rounds,
                    converged: t.converged,
                    diverged: t.diverged,
                    is_consensus: t.is_consensus,
                    consensus_value: t.consensus_value,
                    truthful: t.truthful.len(),
                })
                .collect(),
            wisdom: out.wisdom.clone(),
            first_success: out.first_success.clone(),
            final_weights: out.final_weights.clone(),
            warnings: out.warnings.clone(),
        }
    }
}

pub fn trace_csv(out: &RunOutput) -> String {
    let mut s = String::with_capacity(32 * out.records.len() + 32);
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in &out.records {
        let _ = writeln!(s, "{},{},{},{}", r.topic, r.round, r.agent, r.belief);
    }
    s
}

pub fn weights_csv(out: &RunOutput) -> String {
    let mut s = String::with_capacity(32 * out.weights.len() + 32);
    s.push_str(WEIGHTS_HEADER);
    s.push('\n');
    for r in &out.weights {
        let _ = writeln!(s, "{},{},{},{}", r.topic, r.row, r.col, r.weight);
    }
    s
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

/// Writes `trace.csv`, `weights.csv` and `report.json` into `dir`.
pub fn write_run(cfg: &ScenarioConfig, out: &RunOutput, dir: &Path) -> Result<()> {
    write_file(&dir.join("trace.csv"), &trace_csv(out))?;
    write_file(&dir.join("weights.csv"), &weights_csv(out))?;
    write_json(&dir.join("report.json"), &RunReport::new(cfg, out))
}

/// Runs every seed of `cfg`. A single seed writes straight into `dir`,
/// several seeds each get a `seed-<s>` subdirectory.
pub fn run_to_dir(cfg: &ScenarioConfig, dir: &Path, threads: usize) -> Result<Vec<PathBuf>> {
    let outputs = run_replications(cfg, threads)?;
    let single = outputs.len() == 1;
    let mut written = Vec::with_capacity(outputs.len());
    for out in &outputs {
        let target = if single { dir.to_path_buf() } else { dir.join(format!("seed-{}", out.seed)) };
        write_run(cfg, out, &target)?;
        written.push(target);
    }
    Ok(written)
}
