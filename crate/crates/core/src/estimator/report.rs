use crate::discretization::Grid;
use crate::error::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// One per-trial number with its provenance. Invalid trials carry `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Experiment id, with the variant after a slash (`regularity/refined`).
    pub experiment: String,
    pub trial: usize,
    pub seed: u64,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub d: usize,
    pub grid: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

const TRIAL_COLUMNS: [&str; 9] = ["experiment", "trial", "seed", "p", "q", "d", "grid", "value", "stderr"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Criterion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub d: usize,
    pub seed: u64,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub trials: Vec<TrialRecord>,
    pub summary: BTreeMap<String, f64>,
    pub criteria: Vec<Criterion>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, d: usize, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            d,
            seed,
            parameters: BTreeMap::new(),
            trials: Vec::new(),
            summary: BTreeMap::new(),
            criteria: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.parameters.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    /// Appends another report's trials, summary and criteria, prefixing
    /// summary keys and criterion names with its experiment id.
    pub fn absorb(&mut self, other: ExperimentReport) {
        let tag = other.experiment;
        self.trials.extend(other.trials);
        for (k, v) in other.summary {
            self.summary.insert(format!("{tag}.{k}"), v);
        }
        for mut c in other.criteria {
            c.name = format!("{tag}: {}", c.name);
            self.criteria.push(c);
        }
        for (k, v) in other.parameters {
            self.parameters.entry(format!("{tag}.{k}")).or_insert(v);
        }
    }

    /// Per-trial values as CSV with the columns of [`TrialRecord`]. The
    /// header is written even when there are no trials.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
        w.write_record(TRIAL_COLUMNS)?;
        for t in &self.trials {
            w.serialize(t)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `NXxNYxNT@LXxLYxLT`, the node counts and box half-lengths.
pub fn grid_label(grid: &Grid) -> String {
    let axes = grid.axes();
    let n: Vec<String> = axes.iter().map(|a| a.n.to_string()).collect();
    let l: Vec<String> = axes.iter().map(|a| format!("{}", a.half_length)).collect();
    format!("{}@{}", n.join("x"), l.join("x"))
}

/// `(p, q)` as a short key, `p2_q1.5`.
pub(crate) fn pq_key(p: f64, q: f64) -> String {
    format!("p{p}_q{q}")
}
