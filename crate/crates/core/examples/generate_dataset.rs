//! Generate a synthetic mixture and write it as CSV plus manifest.
//!
//! ```bash
//! cargo run --example generate_dataset -- out_dir [n_obs] [classes] [seed]
//! ```

use std::path::PathBuf;

use lingam_mixture::harness::io::write_dataset;
use lingam_mixture::prelude::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "generated".into()));
    let n_obs = args.next().map_or(200, |s| s.parse().expect("n_obs"));
    let classes = args.next().map_or(2, |s| s.parse().expect("classes"));
    let seed = args.next().map_or(1, |s| s.parse().expect("seed"));

    let config = GenConfig {
        n_obs,
        classes,
        seed,
        ..GenConfig::default()
    };
    let data = generate_mixture_dataset(&config)?;
    let truth = data.truth.as_ref().expect("ground truth");
    for c in 0..classes {
        let rows: Vec<&[f64]> = data
            .rows()
            .zip(&truth.labels)
            .filter(|(_, &lab)| lab == c)
            .map(|(r, _)| r)
            .collect();
        let mean = |i: usize| rows.iter().map(|r| r[i]).sum::<f64>() / rows.len() as f64;
        println!(
            "class {c}: {} rows, b = {:+.3}, families {:?}, sample means ({:.2}, {:.2})",
            rows.len(),
            truth.coefficients[c],
            truth.families[c],
            mean(0),
            mean(1)
        );
    }
    let path = write_dataset(&dir, &data, Some(&config))?;
    println!("wrote {}", path.display());
    Ok(())
}
