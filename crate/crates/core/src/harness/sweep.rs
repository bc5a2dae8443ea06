//! One-parameter sweeps over a scenario file.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::homophily::cluster_detect;
use crate::opposition::{build_A, signed_influence, OppositionStructure};
use crate::scenario::{run_replications, ModelSpec, ScenarioConfig};

/// Gap separating belief clusters in the final topic.
pub const CLUSTER_GAP: f64 = 0.05;

pub const SWEEP_HEADER: &str = "param,value,seed,fraction_full_wisdom,tail_mean_abs_offset,tail_mean_signed_offset,tail_consensus_fraction,diverged_topics,final_clusters,polarization_coefficient";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: Value,
    pub seed: u64,
    pub fraction_full_wisdom: f64,
    pub tail_mean_abs_offset: f64,
    pub tail_mean_signed_offset: f64,
    pub tail_consensus_fraction: f64,
    pub diverged_topics: usize,
    pub final_clusters: usize,
    /// `Σ s_i` of the opposition matrix built from the initial weights.
    pub polarization_coefficient: Option<f64>,
}

/// Replaces the value at a dotted path; the path must already exist.
pub fn set_path(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut cur = root;
    for key in path.split('.') {
        cur = match cur {
            Value::Object(map) => map.get_mut(key),
            Value::Array(items) => key.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
            _ => None,
        }
        .ok_or_else(|| Error::ConfigInvalid(format!("parameter '{path}' is not present in the config (at '{key}')")))?;
    }
    *cur = value;
    Ok(())
}

/// Parses a grid entry as JSON, falling back to a plain string.
pub fn parse_grid_value(s: &str) -> Value {
    serde_json::from_str(s.trim()).unwrap_or_else(|_| Value::String(s.trim().to_string()))
}

fn coefficient(cfg: &ScenarioConfig) -> Result<Option<f64>> {
    let ModelSpec::Opposition { n1 } = cfg.model else {
        return Ok(None);
    };
    let f = OppositionStructure::split(n1, cfg.n() - n1);
    let w = cfg.initial_weights.build::<f64>(cfg.n())?;
    Ok(signed_influence(&build_A(&w, &f)?, &f).ok().map(|s| s.iter().sum()))
}

/// Runs `base` once per grid value of `param` and summarizes every replication.
pub fn sweep(base: &ScenarioConfig, param: &str, grid: &[Value], threads: usize) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    let root = serde_json::to_value(base).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let mut rows = Vec::new();
    for value in grid {
        let mut v = root.clone();
        set_path(&mut v, param, value.clone())?;
        let cfg: ScenarioConfig =
            serde_json::from_value(v).map_err(|e| Error::ConfigInvalid(format!("{param} = {value}: {e}")))?;
        cfg.validate()?;
        let coef = coefficient(&cfg)?;
        for out in run_replications(&cfg, threads)? {
            let last = out.topics.last().map(|t| cluster_detect(&t.limit, CLUSTER_GAP).len()).unwrap_or(0);
            rows.push(SweepRow {
                param: param.to_string(),
                value: value.clone(),
                seed: out.seed,
                fraction_full_wisdom: out.wisdom.fraction_full_wisdom,
                tail_mean_abs_offset: out.wisdom.tail_mean_abs_offset,
                tail_mean_signed_offset: out.wisdom.tail_mean_signed_offset,
                tail_consensus_fraction: out.wisdom.tail_consensus_fraction,
                diverged_topics: out.topics.iter().filter(|t| t.diverged).count(),
                final_clusters: last,
                polarization_coefficient: coef,
            });
        }
    }
    Ok(rows)
}

fn csv_field(v: &Value) -> String {
    let s = match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            r.param,
            csv_field(&r.value),
            r.seed,
            r.fraction_full_wisdom,
            r.tail_mean_abs_offset,
            r.tail_mean_signed_offset,
            r.tail_consensus_fraction,
            r.diverged_topics,
            r.final_clusters,
            r.polarization_coefficient.map(|c| c.to_string()).unwrap_or_default()
        );
    }
    s
}
