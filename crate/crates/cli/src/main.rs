use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use tabrisk::synth::{write_synthetic, GeneratorSpec};
use tabrisk_cli::{run_pipeline, PipelineConfig, RunOptions};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (report format 1)");

#[derive(Parser)]
#[command(name = "tabrisk", version = VERSION, about = "Imbalanced tabular classification benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full workflow described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for grid search and forests.
        #[arg(long)]
        jobs: Option<usize>,
        /// Record a failing model and continue with the rest.
        #[arg(long)]
        keep_going: bool,
        /// Also write the encoded train/test matrices.
        #[arg(long)]
        emit_encoded: bool,
        /// Override the SMOTE neighbour count.
        #[arg(long)]
        smote_k: Option<usize>,
        /// Override the SMOTE minority/majority target ratio.
        #[arg(long)]
        smote_ratio: Option<f64>,
        /// Record per-stage wall-clock time in the manifest.
        #[arg(long)]
        timings: bool,
        /// Write each refit model as JSON under models/.
        #[arg(long)]
        save_models: bool,
    },
    /// Generate a synthetic dataset with a known logistic truth.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            jobs,
            keep_going,
            emit_encoded,
            smote_k,
            smote_ratio,
            timings,
            save_models,
        } => {
            if let Some(n) = jobs {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build_global()
                    .context("configuring worker threads")?;
            }
            let mut cfg = PipelineConfig::from_path(&config)?;
            if let Some(k) = smote_k {
                cfg.smote.k_neighbors = k;
            }
            if let Some(r) = smote_ratio {
                cfg.smote.target_ratio = r;
            }
            let opts = RunOptions {
                keep_going,
                emit_encoded,
                timings,
                save_models,
            };
            let manifest = run_pipeline(&cfg, &opts)?;
            println!(
                "wrote {} files to {} ({} models, {} features selected)",
                manifest.outputs.len(),
                cfg.output_dir.display(),
                manifest.models.len(),
                manifest.selected_features.len()
            );
            Ok(())
        }
        Command::Synth { spec, seed, out } => {
            let spec = GeneratorSpec::from_path(&spec)?;
            let data = spec.generate(seed)?;
            write_synthetic(&data, &out)?;
            let [neg, pos] = data.dataset.class_counts();
            println!(
                "wrote {} rows ({pos} positive, {neg} negative) to {}",
                data.dataset.n_rows(),
                out.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
