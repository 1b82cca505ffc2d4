//! Prior centers from a Gaussian mixture fit, then a few joint prior draws.
//!
//! ```bash
//! cargo run --example priors_and_phi
//! ```

use lingam_mixture::prelude::*;

fn main() -> Result<()> {
    let data = generate_mixture_dataset(&GenConfig {
        n_obs: 300,
        classes: 3,
        seed: 4,
        ..GenConfig::default()
    })?;
    let truth = data.truth.as_ref().expect("ground truth");
    println!("true class means {:?}", truth.means);

    let mut rng = RngStream::new(4, 1);
    for l in 1..=4 {
        let fit = gmm_em(&data, l, 1e-6, 500, &mut rng)?;
        let means: Vec<String> = fit.means.iter().map(|m| format!("({:.2}, {:.2})", m[0], m[1])).collect();
        println!(
            "l={l}: log-lik {:.2} after {} iterations, means {}",
            fit.log_likelihood(),
            fit.log_likelihood_trace.len(),
            means.join(" ")
        );
    }

    let phi = fit_phi(&data, 3, &mut rng)?;
    let hyper = Hyperparams::default().with_classes(vec![3.0, 5.0, 7.0], phi);
    let dag = DagHypothesis::pair(Direction::X1ToX2);
    for draw in 0..3 {
        let p = sample_parameters(&hyper, &dag, 3, &mut rng)?;
        println!("draw {draw}: weights {:.3?}", p.weights);
        for (c, class) in p.classes.iter().enumerate() {
            println!(
                "  class {c}: b={:+.3} mu=({:.2}, {:.2}) sigma=({:.2}, {:.2}) lambda=({:.2}, {:.2})",
                class.b[0], class.mu[0], class.mu[1], class.sigma[0], class.sigma[1], class.lambda[0], class.lambda[1]
            );
        }
    }
    Ok(())
}
