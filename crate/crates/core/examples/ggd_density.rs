//! Generalized Gaussian shapes and the mixture likelihood of a small sample.
//!
//! ```bash
//! cargo run --example ggd_density
//! ```

use lingam_mixture::model::{dataset_log_likelihood, mixture_log_density};
use lingam_mixture::prelude::*;
use lingam_mixture::rngdist::ggd_log_pdf;

fn main() -> Result<()> {
    let shapes = [0.5, 1.0, 2.0, 4.0, 8.0];
    print!("{:>6}", "e");
    for l in shapes {
        print!("  lambda={l:<4}");
    }
    println!();
    for k in 0..=8 {
        let e = k as f64 * 0.5;
        print!("{e:>6.1}");
        for l in shapes {
            print!("  {:>11.5}", ggd_log_pdf(e, 1.0, l)?.exp());
        }
        println!();
    }

    let dag = DagHypothesis::pair(Direction::X1ToX2);
    let params = MixtureParams {
        weights: vec![0.6, 0.4],
        classes: vec![
            ClassParams {
                b: vec![1.2],
                mu: vec![0.0, 0.0],
                sigma: vec![1.0, 1.0],
                lambda: vec![1.0, 1.0],
            },
            ClassParams {
                b: vec![-0.7],
                mu: vec![3.0, -3.0],
                sigma: vec![0.8, 1.5],
                lambda: vec![4.0, 0.8],
            },
        ],
    };
    let data = Dataset::from_rows(&[[0.1, 0.3], [2.9, -4.1], [-1.0, -1.5], [3.5, -2.0]])?;
    for x in data.rows() {
        println!("log p({x:?}) = {:.6}", mixture_log_density(x, &dag, &params)?);
    }
    println!("log p(D) = {:.6}", dataset_log_likelihood(&data, &dag, &params)?);
    Ok(())
}
