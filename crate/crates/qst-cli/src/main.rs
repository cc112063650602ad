//! `qst` — GHZ tomography benchmark driver.
//!
//! Subcommands: `simulate`, `reconstruct`, `evaluate`, `residuals`,
//! `benchmark`. Progress goes to stderr; artifacts are files (or stdout for
//! `evaluate`/`residuals` when no `--out` is given).

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use qst_cli::bench::{run_benchmark, BenchConfig};
use qst_cli::commands;
use qst_cli::io::write_atomic;
use qst_core::sim::NoiseModel;

#[derive(Parser)]
#[command(name = "qst", version, about = "GHZ-state tomography benchmark toolkit")]
struct Cli {
    /// RNG seed: dataset seed for `simulate`/`reconstruct`, master seed for
    /// `benchmark`
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file (subcommands) or output directory (`benchmark`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON config file for `benchmark`
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct NoiseArgs {
    /// Depolarizing probability in [0, 1]
    #[arg(long, default_value_t = 0.0)]
    depolarizing: f64,
    /// Per-qubit phase-flip probability in [0, 1]
    #[arg(long, default_value_t = 0.0)]
    dephasing: f64,
    /// Per-qubit readout bit-flip probability in [0, 0.5]
    #[arg(long, default_value_t = 0.0)]
    readout: f64,
}

impl NoiseArgs {
    fn model(&self) -> anyhow::Result<NoiseModel> {
        Ok(NoiseModel::new(
            self.depolarizing,
            self.dephasing,
            self.readout,
        )?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a measurement dataset from a noisy state
    Simulate {
        /// Qubit count
        #[arg(long)]
        n: usize,
        /// Source state: ghz or mixed
        #[arg(long, default_value = "ghz")]
        state: String,
        /// Operator set: g1..g4, full, or a JSON file of labels
        #[arg(long, default_value = "full")]
        set: String,
        /// Shots per observable
        #[arg(long, default_value_t = 1024)]
        shots: u64,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Fit an estimator to a dataset file
    Reconstruct {
        /// Dataset JSON produced by `simulate`
        #[arg(long)]
        dataset: PathBuf,
        /// mle, psd, g1..g4, full, or custom (with --ops)
        #[arg(long)]
        estimator: String,
        /// JSON label list for `--estimator custom`
        #[arg(long)]
        ops: Option<PathBuf>,
        /// Random restarts for the iterative fits
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        /// Compute fidelity against this target state (ghz or mixed)
        #[arg(long)]
        target: Option<String>,
        /// MLE result file for agreement / observable-error metrics
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Metrics for an existing result file
    Evaluate {
        /// Result JSON produced by `reconstruct`
        #[arg(long)]
        result: PathBuf,
        /// MLE result file to compare against
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Target state tag (ghz or mixed)
        #[arg(long)]
        target: Option<String>,
        /// Probe set for the observable error
        #[arg(long, default_value = "full")]
        probe: String,
    },
    /// Top-k residuals between a reference result and a model result
    Residuals {
        /// Reference (MLE) result JSON
        #[arg(long)]
        reference: PathBuf,
        /// Model result JSON
        #[arg(long)]
        model: PathBuf,
        /// How many residuals to keep
        #[arg(short = 'k', long, default_value_t = 5)]
        top: usize,
        /// Probe set to scan
        #[arg(long, default_value = "full")]
        probe: String,
    },
    /// Run the full benchmark grid and emit CSV/JSON artifacts
    Benchmark {
        /// Record real wall times in the artifacts (breaks byte-for-byte
        /// reproducibility of the output files)
        #[arg(long)]
        timings: bool,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Simulate {
            n,
            state,
            set,
            shots,
            noise,
        } => {
            let out = cli
                .out
                .context("simulate requires --out <dataset.json>")?;
            commands::simulate(
                n,
                &state,
                &set,
                shots,
                noise.model()?,
                cli.seed.unwrap_or(0),
                &out,
            )
        }
        Command::Reconstruct {
            dataset,
            estimator,
            ops,
            restarts,
            target,
            reference,
        } => {
            let out = cli
                .out
                .context("reconstruct requires --out <result.json>")?;
            commands::reconstruct(
                &dataset,
                &estimator,
                ops.as_deref(),
                restarts,
                cli.seed.unwrap_or(0),
                target.as_deref(),
                reference.as_deref(),
                &out,
            )
        }
        Command::Evaluate {
            result,
            reference,
            target,
            probe,
        } => {
            let text = commands::evaluate(
                &result,
                reference.as_deref(),
                target.as_deref(),
                &probe,
            )?;
            emit(cli.out.as_deref(), &text)
        }
        Command::Residuals {
            reference,
            model,
            top,
            probe,
        } => {
            let csv = commands::residuals_csv(&reference, &model, top, &probe)?;
            emit(cli.out.as_deref(), &csv)
        }
        Command::Benchmark { timings } => {
            let mut config = match &cli.config {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading config {}", path.display()))?;
                    serde_json::from_str::<BenchConfig>(&text)
                        .with_context(|| format!("parsing config {}", path.display()))?
                }
                None => BenchConfig::default(),
            };
            if let Some(seed) = cli.seed {
                config.master_seed = seed;
            }
            if timings {
                config.record_timings = true;
            }
            let out_dir = cli.out.unwrap_or_else(|| PathBuf::from("bench-out"));
            let started = std::time::Instant::now();
            let rows = run_benchmark(&config, &out_dir)?;
            let failed = rows
                .iter()
                .filter(|r| r.status.starts_with("error"))
                .count();
            eprintln!(
                "[benchmark] {} rows ({failed} failed) in {:.1}s -> {}",
                rows.len(),
                started.elapsed().as_secs_f64(),
                out_dir.display()
            );
            Ok(())
        }
    }
}

fn emit(out: Option<&std::path::Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            write_atomic(path, text)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
