//! Command-line entry point. All real work lives in the library modules;
//! this file only parses arguments, dispatches, prints summaries, and maps
//! errors to exit codes (1 = a pipeline stage failed, 2 = bad config).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use laplace_hdc_cli::config::{resolve, CommonArgs};
use laplace_hdc_cli::pipeline::{
    run_bench, run_eval, run_pipeline, run_robustness, run_verify, run_visualize, PipelineError,
};

#[derive(Parser)]
#[command(name = "laplace-hdc", version, about = "Binary hyperdimensional encoding: train, evaluate, and verify")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train over several seeded repetitions; write results.csv and the
    /// last repetition's model file.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Where to write the trained model (default: <out-dir>/model.lhdc).
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Evaluate a saved model on a test split, rebuilding its encoder from
    /// the stored provenance.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Model file written by `train`.
        #[arg(long)]
        model_in: PathBuf,
    },
    /// Train clean, then score test encodings corrupted by seeded bit
    /// flips at each --flip-ratios level.
    Robustness {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export hypervector bind products as PGM images (cyclic2d family).
    Visualize {
        #[command(flatten)]
        common: CommonArgs,
        /// Test-set sample ids to render, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5,6,7,8,9")]
        sample_ids: Vec<usize>,
        /// Test-set id of the reference encoding everything is bound with.
        #[arg(long, default_value_t = 0)]
        reference: usize,
    },
    /// Run the statistical verification report and write verify.csv;
    /// exits nonzero if any check fails.
    Verify {
        /// Hypervector redraws for the Monte-Carlo similarity checks.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Hypervector length for the Monte-Carlo similarity checks.
        #[arg(long, default_value_t = 10_000)]
        mc_n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Time the pipeline stages on a training prefix.
    Bench {
        #[command(flatten)]
        common: CommonArgs,
        /// Training samples to push through the stages.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Train { common, model_out } => {
            let cfg = resolve(&common).map_err(|e| PipelineError::Config(e.to_string()))?;
            let summary = run_pipeline(&cfg, model_out.as_deref())?;
            let mean = summary.rows.iter().map(|r| r.accuracy).sum::<f64>()
                / summary.rows.len().max(1) as f64;
            println!("mean accuracy {:.4} over {} repetitions", mean, summary.rows.len());
            println!("results: {}", summary.csv_path.display());
            if let Some(path) = &summary.model_path {
                println!("model: {}", path.display());
            }
        }
        Command::Eval { common, model_in } => {
            let cfg = resolve(&common).map_err(|e| PipelineError::Config(e.to_string()))?;
            let summary = run_eval(&cfg, &model_in)?;
            println!("accuracy {:.4}", summary.rows[0].accuracy);
            println!("results: {}", summary.csv_path.display());
        }
        Command::Robustness { common } => {
            let cfg = resolve(&common).map_err(|e| PipelineError::Config(e.to_string()))?;
            let summary = run_robustness(&cfg)?;
            for ratio in &cfg.flip_ratios {
                let suffix = format!("+flip{ratio}");
                let (mut sum, mut count) = (0.0, 0usize);
                for row in summary.rows.iter().filter(|r| r.encoder.ends_with(&suffix)) {
                    sum += row.accuracy;
                    count += 1;
                }
                println!("flip {ratio}: mean accuracy {:.4}", sum / count.max(1) as f64);
            }
            println!("results: {}", summary.csv_path.display());
        }
        Command::Visualize { common, sample_ids, reference } => {
            let cfg = resolve(&common).map_err(|e| PipelineError::Config(e.to_string()))?;
            let written = run_visualize(&cfg, &sample_ids, reference)?;
            println!("wrote {} images under {}", written.len(), cfg.out_dir.display());
        }
        Command::Verify { trials, mc_n, seed, out_dir } => {
            let (rows, path) = run_verify(trials, mc_n, seed, &out_dir)?;
            let mut failed = 0usize;
            for row in &rows {
                println!(
                    "{:<24} predicted {:>12.6} observed {:>12.6} tolerance {:>12.6} {}",
                    row.criterion,
                    row.predicted,
                    row.observed,
                    row.tolerance,
                    if row.pass { "PASS" } else { "FAIL" }
                );
                failed += usize::from(!row.pass);
            }
            println!("report: {}", path.display());
            if failed > 0 {
                return Err(PipelineError::Stage {
                    stage: "verify",
                    message: format!("{failed} of {} checks failed", rows.len()),
                });
            }
        }
        Command::Bench { common, samples } => {
            let cfg = resolve(&common).map_err(|e| PipelineError::Config(e.to_string()))?;
            let report = run_bench(&cfg, samples)?;
            println!("d = {}, N = {}", report.d, report.n);
            println!("featurize: {:.2} s", report.feature_s);
            println!("encoder setup: {:.2} s", report.setup_s);
            println!("encode: {:.0} samples/s", report.encode_per_s);
            println!("train: {:.2} s", report.train_s);
            println!("predict: {:.0} samples/s", report.predict_per_s);
        }
    }
    Ok(())
}
