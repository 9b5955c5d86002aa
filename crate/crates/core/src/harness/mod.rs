//! Scenario files, seeded experiment runs, tail-window summaries and
//! CSV/JSON emission.

mod config;
mod emit;
pub mod frontier;
mod run;

pub use config::{Mode, ScenarioConfig};
pub use emit::{save_csv, save_text, write_csv, Summary, CSV_HEADER};
pub use run::{mean_std, run_experiment, run_seed, summarize, NodeStats, RunRecord, Snapshot, StepLog};
