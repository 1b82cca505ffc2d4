//! Decide the causal direction of one synthetic mixture and print the full
//! evidence grid.
//!
//! ```bash
//! cargo run --release --example infer_direction -- [n_obs] [classes] [seed] [draws]
//! ```

use lingam_mixture::prelude::*;

fn main() -> Result<()> {
    let args: Vec<u64> = std::env::args()
        .skip(1)
        .map(|s| s.parse().expect("integer argument"))
        .collect();
    let n_obs = args.first().copied().unwrap_or(100) as usize;
    let classes = args.get(1).copied().unwrap_or(2) as usize;
    let seed = args.get(2).copied().unwrap_or(7);
    let draws = args.get(3).copied().unwrap_or(10_000) as usize;

    let data = generate_mixture_dataset(&GenConfig {
        n_obs,
        classes,
        seed,
        ..GenConfig::default()
    })?;
    let truth = data.truth.clone().expect("generated data carries ground truth");
    println!("true direction {}", truth.direction);
    for (c, (b, fam)) in truth.coefficients.iter().zip(&truth.families).enumerate() {
        println!("  class {c}: b = {b:+.3}, disturbances {fam:?}, rows {}", truth.class_sizes[c]);
    }

    let config = InferenceConfig {
        draws,
        ..InferenceConfig::default()
    };
    let decision = decide_direction(&data, &Hyperparams::default(), &config, &RngStream::new(seed, 0))?;
    let report = &decision.report;
    println!("dirichlet concentrations {:?}", report.hyper.a);
    println!("{:>4} {:>14} {:>9} {:>14} {:>9}", "l", "log p(D|x1->x2)", "se", "log p(D|x2->x1)", "se");
    let cap = report.grid.len() / 2;
    for l in 0..cap {
        let f = &report.grid[l];
        let b = &report.grid[cap + l];
        println!(
            "{:>4} {:>14.3} {:>9.3} {:>14.3} {:>9.3}",
            l + 1,
            f.log_value,
            f.std_error_log,
            b.log_value,
            b.std_error_log
        );
    }
    println!(
        "decision {} with posterior {:.4} at l* = {}",
        decision.direction,
        report.posteriors[report.selected],
        report.selected_classes
    );
    Ok(())
}
