//! Monte Carlo evidence for both directions as the draw count grows.
//!
//! ```bash
//! cargo run --release --example marginal_likelihood
//! ```

use lingam_mixture::prelude::*;

fn main() -> Result<()> {
    let data = generate_mixture_dataset(&GenConfig {
        n_obs: 80,
        classes: 1,
        seed: 9,
        ..GenConfig::default()
    })?;
    let phi = fit_phi(&data, 1, &mut RngStream::new(9, 1))?;
    let hyper = Hyperparams::default().with_classes(vec![3.0], phi);
    let stream = RngStream::new(9, 2);

    println!("{:>8} {:>22} {:>22} {:>10}", "K", "x1->x2", "x2->x1", "P(x1->x2)");
    for draws in [100, 1_000, 10_000, 50_000] {
        let est: Vec<MarginalEstimate> = enumerate_pairwise_hypotheses()
            .iter()
            .map(|dag| log_marginal_likelihood(&data, dag, 1, &hyper, draws, &stream))
            .collect::<Result<_>>()?;
        let post = posterior_over_hypotheses(&est, &[0.5, 0.5])?;
        println!(
            "{draws:>8} {:>13.3} +- {:<6.3} {:>13.3} +- {:<6.3} {:>10.4}",
            est[0].log_value, est[0].std_error_log, est[1].log_value, est[1].std_error_log, post[0]
        );
    }
    Ok(())
}
