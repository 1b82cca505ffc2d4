//! Small simulation grid: synthetic mixtures with a known `x1 -> x2`
//! direction, scored against the decisions.
//!
//! ```bash
//! cargo run --release --example experiment_grid -- [datasets_per_cell] [draws] [sizes] [classes] [seed]
//! cargo run --release --example experiment_grid -- 20 2000 50,100 2
//! ```

use std::time::Instant;

use lingam_mixture::harness::{render, run_experiment_grid_in, ExperimentConfig, ReportFormat};
use lingam_mixture::inference::InferenceConfig;

fn parse_list(s: &str) -> Vec<usize> {
    s.split(',').map(|v| v.trim().parse().expect("integer list")).collect()
}

fn main() -> lingam_mixture::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let datasets = args.first().map_or(10, |s| s.parse().expect("dataset count"));
    let draws = args.get(1).map_or(2_000, |s| s.parse().expect("draw count"));
    let sizes = args.get(2).map_or(vec![50, 100], |s| parse_list(s));
    let classes = args.get(3).map_or(vec![2], |s| parse_list(s));
    let seed = args.get(4).map_or(2014, |s| s.parse().expect("seed"));

    let config = ExperimentConfig {
        sample_sizes: sizes,
        class_counts: classes,
        datasets_per_cell: datasets,
        inference: InferenceConfig {
            draws,
            ..InferenceConfig::default()
        },
        master_seed: seed,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let result = run_experiment_grid_in(&config, |cell| {
        eprintln!(
            "N={:<4} l={}: {}/{} correct ({:.1}s elapsed)",
            cell.n_obs,
            cell.classes,
            cell.correct,
            cell.total,
            start.elapsed().as_secs_f64()
        );
    })?;
    print!("{}", render(&result, ReportFormat::Text)?);
    Ok(())
}
