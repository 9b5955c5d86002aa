use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use csdlma::fairness::Alpha;
use csdlma::harness::frontier::{frontier, frontier_table};
use csdlma::harness::{run_experiment, save_csv, save_text, ScenarioConfig, Summary};
use csdlma::neuralnet::Architecture;
use csdlma::oracle::{benchmark_table, simulate_model_aware, BenchmarkScenario, Strategy};
use csdlma::Result;

#[derive(Parser)]
#[command(name = "csdlma", version, about = "Carrier-sense deep-RL MAC simulator and learner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Arch {
    Recurrent,
    Feedforward,
}

impl From<Arch> for Architecture {
    fn from(a: Arch) -> Self {
        match a {
            Arch::Recurrent => Architecture::Recurrent,
            Arch::Feedforward => Architecture::Feedforward,
        }
    }
}

#[derive(clap::Args)]
struct Overrides {
    /// Scenario file (TOML).
    scenario: PathBuf,
    /// Fairness exponent α.
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Decision epochs per run.
    #[arg(long)]
    steps: Option<u64>,
    /// Q-network architecture.
    #[arg(long, value_enum)]
    arch: Option<Arch>,
}

impl Overrides {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut c = ScenarioConfig::load(&self.scenario)?;
        if let Some(a) = self.alpha {
            c.alpha = Alpha::new(a)?;
        }
        if let Some(s) = &self.seeds {
            c.seeds = s.clone();
        }
        if let Some(s) = self.steps {
            c.steps = s;
        }
        if let Some(a) = self.arch {
            c.hyperparams.architecture = a.into();
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train the learner on a scenario and write per-run logs and a summary.
    Run {
        #[command(flatten)]
        overrides: Overrides,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Outputs to write.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Csv, Format::Json])]
        format: Vec<Format>,
        /// Decision epochs in the summary's tail window.
        #[arg(long, default_value_t = 10_000)]
        window: usize,
    },
    /// Print the model-aware benchmark table, optionally checked by simulation.
    Benchmark {
        /// Benchmark scenario file (TOML with `header`, `[tdma]` and `[aloha]`);
        /// defaults to the reference scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Also simulate the polite node for this many minislots.
        #[arg(long)]
        minislots: Option<u64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Sweep α for the learner and p for p-CSMA against the scenario's WiFi node.
    Frontier {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 1.0, 2.0, 5.0, 10.0, 50.0])]
        alphas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5])]
        ps: Vec<f64>,
        #[arg(long, default_value_t = 10_000)]
        window: usize,
        /// Minislots per p-CSMA point.
        #[arg(long, default_value_t = 1_000_000)]
        pcsma_minislots: u64,
        /// Write the table here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            overrides,
            out,
            format,
            window,
        } => {
            let config = overrides.load()?;
            let records = run_experiment(&config)?;
            if format.contains(&Format::Csv) {
                save_csv(&records, &out.join("runs.csv"))?;
            }
            if format.contains(&Format::Json) {
                let window = window.min(config.steps as usize).max(1);
                let summary = Summary::new(&config, &records, window)?;
                save_text(&summary.to_json()?, &out.join("summary.json"))?;
            }
            for r in &records {
                if let Some(last) = r.snapshots.last() {
                    let t: Vec<String> = last.throughputs.iter().map(|t| format!("{t:.4}")).collect();
                    println!("run {} seed {}: cumulative throughputs {}", r.run_id, r.seed, t.join(" "));
                }
            }
            Ok(())
        }
        Command::Benchmark {
            scenario,
            minislots,
            seed,
        } => {
            let scenario = match scenario {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| csdlma::Error::io(&p, e))?;
                    toml::from_str(&text).map_err(|e| csdlma::Error::Config(e.to_string()))?
                }
                None => BenchmarkScenario::reference(),
            };
            print!("{}", benchmark_table(&scenario)?);
            if let Some(n) = minislots {
                let b = simulate_model_aware(&scenario, Strategy::Polite, n, seed)?;
                println!("simulated-polite,{},{},{}", b.agent, b.tdma, b.aloha);
            }
            Ok(())
        }
        Command::Frontier {
            overrides,
            alphas,
            ps,
            window,
            pcsma_minislots,
            out,
        } => {
            let config = overrides.load()?;
            let points = frontier(&config, &alphas, &ps, window, pcsma_minislots)?;
            let table = frontier_table(&points);
            match out {
                Some(p) => save_text(&table, &p),
                None => {
                    print!("{table}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("csdlma: {e}");
            ExitCode::FAILURE
        }
    }
}
