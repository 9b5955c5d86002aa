use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ScenarioConfig;
use crate::harness::run::{summarize, NodeStats, RunRecord};
use crate::oracle::{benchmark_throughputs, Benchmark};

pub const CSV_HEADER: [&str; 6] = ["run_id", "step", "minislots", "node_id", "cum_throughput", "epsilon"];

/// One row per node per snapshot.
pub fn write_csv(records: &[RunRecord], out: impl Write) -> Result<()> {
    let csv_err = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        for s in &r.snapshots {
            for (node, t) in s.throughputs.iter().enumerate() {
                w.write_record([
                    r.run_id.to_string(),
                    s.step.to_string(),
                    s.minislots.to_string(),
                    node.to_string(),
                    t.to_string(),
                    s.epsilon.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ScenarioConfig,
    /// Decision epochs in the tail window.
    pub window: usize,
    pub runs: usize,
    pub nodes: Vec<NodeStats>,
    /// Model-aware reference throughputs when the scenario admits them.
    pub oracle: Option<Benchmark>,
}

impl Summary {
    pub fn new(config: &ScenarioConfig, records: &[RunRecord], window: usize) -> Result<Self> {
        let oracle = match config.benchmark_scenario() {
            Some(s) => Some(benchmark_throughputs(&s)?),
            None => None,
        };
        Ok(Summary {
            config: config.clone(),
            window,
            runs: records.len(),
            nodes: summarize(records, window)?,
            oracle,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(format!("json: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("json: {e}")))
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

pub fn save_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_csv(records, &mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_text(text: &str, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
