use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use lingam_mixture::datagen::{generate_mixture_dataset, GenConfig};
use lingam_mixture::harness::io::{read_dataset, read_dataset_dir, read_json, write_dataset, write_json};
use lingam_mixture::harness::{
    render, run_experiment_grid, ExperimentConfig, ExperimentResult, HyperOverrides, ReportFormat,
};
use lingam_mixture::inference::{decide_direction, InferenceConfig, Selection};
use lingam_mixture::model::Direction;
use lingam_mixture::priors::Hyperparams;
use lingam_mixture::rngdist::RngStream;
use lingam_mixture::{Error, Result};

#[derive(Parser)]
#[command(name = "lingam-mix", version, about = "Causal direction under latent classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Shared {
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file overriding defaults; flags override the file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (dataset.csv + manifest.json).
    Generate {
        #[command(flatten)]
        shared: Shared,
        #[arg(long = "n", value_parser = clap::value_parser!(u64).range(1..))]
        n_obs: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        classes: Option<u64>,
        #[arg(long)]
        direction: Option<Direction>,
        #[arg(long)]
        separation: Option<f64>,
    },
    /// Estimate the causal direction of a two-column CSV.
    Infer {
        #[command(flatten)]
        shared: Shared,
        /// CSV file, or a directory holding dataset.csv.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        draws: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        max_classes: Option<u64>,
        #[arg(long, value_parser = parse_selection)]
        selection: Option<Selection>,
    },
    /// Run a grid of synthetic datasets and score the decisions.
    Experiment {
        #[command(flatten)]
        shared: Shared,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        datasets: Option<u64>,
        #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
        draws: Option<u64>,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        /// Comma-separated true class counts.
        #[arg(long, value_delimiter = ',')]
        classes: Option<Vec<usize>>,
    },
    /// Render an experiment result.
    Report {
        #[command(flatten)]
        shared: Shared,
        /// result.json, or the experiment output directory.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
}

fn parse_selection(s: &str) -> std::result::Result<Selection, String> {
    match s {
        "joint-max" => Ok(Selection::JointMax),
        "per-hypothesis" => Ok(Selection::PerHypothesis),
        _ => Err(format!("unknown selection '{s}' (joint-max, per-hypothesis)")),
    }
}

#[derive(Default, Deserialize)]
#[serde(default)]
struct InferFile {
    inference: InferenceConfig,
    hyper: HyperOverrides,
    seed: Option<u64>,
}

fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn out_dir(shared: &Shared) -> Result<&Path> {
    shared
        .out
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--out is required".into()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            shared,
            n_obs,
            classes,
            direction,
            separation,
        } => {
            let mut cfg: GenConfig = load(shared.config.as_deref())?;
            if let Some(n) = n_obs {
                cfg.n_obs = n as usize;
            }
            if let Some(l) = classes {
                cfg.classes = l as usize;
            }
            if let Some(d) = direction {
                cfg.direction = d;
            }
            if let Some(s) = separation {
                cfg.class_mean_separation = s;
            }
            if let Some(seed) = shared.seed {
                cfg.seed = seed;
            }
            let dir = out_dir(&shared)?;
            let data = generate_mixture_dataset(&cfg)?;
            let path = write_dataset(dir, &data, Some(&cfg))?;
            println!("{}", path.display());
        }
        Command::Infer {
            shared,
            data,
            draws,
            max_classes,
            selection,
        } => {
            let file: InferFile = load(shared.config.as_deref())?;
            let mut config = file.inference;
            if let Some(k) = draws {
                config.draws = k as usize;
            }
            if let Some(l) = max_classes {
                config.max_classes = Some(l as usize);
            }
            if let Some(s) = selection {
                config.selection = s;
            }
            let seed = shared.seed.or(file.seed).unwrap_or(0);
            let dataset = if data.is_dir() {
                read_dataset_dir(&data)?.0
            } else {
                read_dataset(&data)?
            };
            let hyper = file.hyper.apply(Hyperparams::default());
            let pool = thread_pool(shared.threads.unwrap_or(0))?;
            let decision =
                pool.install(|| decide_direction(&dataset, &hyper, &config, &RngStream::new(seed, 0)))?;
            let dir = out_dir(&shared)?;
            let report_path = dir.join("report.json");
            write_json(&report_path, &decision)?;
            println!(
                "{} posterior(x1->x2)={:.6} l*={} report={}",
                decision.direction,
                decision.posterior_forward(),
                decision.report.selected_classes,
                report_path.display()
            );
        }
        Command::Experiment {
            shared,
            datasets,
            draws,
            sizes,
            classes,
        } => {
            let mut cfg: ExperimentConfig = load(shared.config.as_deref())?;
            if let Some(d) = datasets {
                cfg.datasets_per_cell = d as usize;
            }
            if let Some(k) = draws {
                cfg.inference.draws = k as usize;
            }
            if let Some(s) = sizes {
                cfg.sample_sizes = s;
            }
            if let Some(c) = classes {
                cfg.class_counts = c;
            }
            if let Some(seed) = shared.seed {
                cfg.master_seed = seed;
            }
            if let Some(t) = shared.threads {
                cfg.threads = t;
            }
            cfg.output_dir = Some(out_dir(&shared)?.to_path_buf());
            let result = run_experiment_grid(&cfg)?;
            print!("{}", render(&result, ReportFormat::Text)?);
        }
        Command::Report { shared, input, format } => {
            let format: ReportFormat = format.parse()?;
            let path = if input.is_dir() {
                input.join(lingam_mixture::harness::RESULT_FILE)
            } else {
                input
            };
            let result: ExperimentResult = read_json(&path)?;
            let text = render(&result, format)?;
            match &shared.out {
                Some(out) => {
                    fs::write(out, &text).map_err(|e| Error::Io {
                        path: out.clone(),
                        source: e,
                    })?;
                    println!("{}", out.display());
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
