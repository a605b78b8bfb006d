//! `uavids` command line.
//!
//! Verbs: preprocess, train-ae, extract, train-eval, compare, run-all, plus
//! `synth` for generating a test dataset and `config` for printing the
//! effective configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use uavids::dataset::Task;
use uavids::pipeline::{layout, Pipeline, PipelineError, RunConfig};
use uavids::synth::{write_synthetic_csv, SynthConfig};

#[derive(Parser)]
#[command(name = "uavids", version, about = "Autoencoder features + classical classifiers for UAV intrusion detection")]
struct Cli {
    /// Log filter, e.g. `info` or `uavids=debug`.
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the run seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct LatentArg {
    /// Latent size; every configured size when omitted.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, encode, split and scale the dataset.
    Preprocess {
        #[command(flatten)]
        common: Common,
    },
    /// Train the autoencoder.
    TrainAe {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        latent: LatentArg,
    },
    /// Encode train and test features with a trained autoencoder.
    Extract {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        latent: LatentArg,
    },
    /// Train and evaluate every configured classifier.
    TrainEval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        latent: LatentArg,
        /// `binary` or `multiclass`; every configured task when omitted.
        #[arg(long, value_parser = parse_task)]
        task: Option<Task>,
    },
    /// Render the comparison against baseline methods.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Every stage, skipping those whose inputs are unchanged.
    RunAll {
        #[command(flatten)]
        common: Common,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[command(flatten)]
        common: Common,
    },
    /// Write a seeded Gaussian-blob dataset with the expected columns.
    Synth {
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        rows: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn parse_task(s: &str) -> Result<Task, String> {
    match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
        "binary" => Ok(Task::Binary),
        "multiclass" => Ok(Task::Multiclass),
        _ => Err(format!("unknown task {s:?} (expected binary or multiclass)")),
    }
}

fn load_config(common: &Common) -> Result<(RunConfig, PathBuf), PipelineError> {
    let mut config = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let out = match &common.out {
        Some(dir) => dir.clone(),
        None => config.output_path(),
    };
    Ok((config, out))
}

fn open(common: &Common, cache: bool) -> Result<Pipeline, PipelineError> {
    let (config, out) = load_config(common)?;
    Pipeline::open(config, &out, cache)
}

fn sizes(p: &Pipeline, latent: &LatentArg) -> Vec<usize> {
    latent.n.map_or_else(|| p.config().latent_dims.clone(), |n| vec![n])
}

fn print_file(p: &Pipeline, rel: &str) {
    match std::fs::read_to_string(p.dir().join(rel)) {
        Ok(text) => println!("{text}"),
        Err(e) => error!("could not read {rel}: {e}"),
    }
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Preprocess { common } => {
            let mut p = open(&common, false)?;
            p.preprocess()?;
            println!("{}", p.dir().join(layout::PREPROCESS_PARAMS).display());
        }
        Command::TrainAe { common, latent } => {
            let mut p = open(&common, false)?;
            for n in sizes(&p, &latent) {
                p.train_ae(n)?;
                println!("{}", p.dir().join(layout::autoencoder(n)).display());
            }
        }
        Command::Extract { common, latent } => {
            let mut p = open(&common, false)?;
            for n in sizes(&p, &latent) {
                p.extract(n)?;
                println!("{}", p.dir().join(layout::latent_test(n)).display());
            }
        }
        Command::TrainEval { common, latent, task } => {
            let mut p = open(&common, false)?;
            let tasks = task.map_or_else(|| p.config().tasks.clone(), |t| vec![t]);
            for n in sizes(&p, &latent) {
                for &t in &tasks {
                    p.train_eval(n, t)?;
                    print_file(&p, &layout::task_table(n, t));
                }
            }
        }
        Command::Compare { common } => {
            let mut p = open(&common, false)?;
            p.compare()?;
            print_file(&p, layout::COMPARE_TABLE);
        }
        Command::RunAll { common } => {
            let mut p = open(&common, true)?;
            p.run_all()?;
            print_file(&p, layout::COMPARE_TABLE);
        }
        Command::Config { common } => {
            let (config, _) = load_config(&common)?;
            config.validate()?;
            print!("{}", toml::to_string(&config).map_err(|e| PipelineError::Config(e.to_string()))?);
        }
        Command::Synth { out, rows, seed } => {
            let config = SynthConfig {
                rows,
                seed,
                ..SynthConfig::default()
            };
            let counts = write_synthetic_csv(&config, &out).map_err(|source| PipelineError::Io {
                path: out.display().to_string(),
                source,
            })?;
            println!("{} rows written to {} (per class {counts:?})", rows, out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
