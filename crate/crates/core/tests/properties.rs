use lingam_mixture::harness::io::{dataset_from_csv, dataset_to_csv};
use lingam_mixture::model::{dataset_log_likelihood, mixture_log_density, residuals};
use lingam_mixture::prelude::*;
use lingam_mixture::rngdist::{ggd_log_pdf, sample_dirichlet};
use proptest::prelude::*;

fn class_params(n_edges: usize, n: usize) -> impl Strategy<Value = ClassParams> {
    (
        prop::collection::vec(-2.0..2.0f64, n_edges),
        prop::collection::vec(-3.0..3.0f64, n),
        prop::collection::vec(0.2..3.0f64, n),
        prop::collection::vec(0.4..6.0f64, n),
    )
        .prop_map(|(b, mu, sigma, lambda)| ClassParams { b, mu, sigma, lambda })
}

fn pair_mixture(l: usize) -> impl Strategy<Value = MixtureParams> {
    (
        prop::collection::vec(class_params(1, 2), l),
        prop::collection::vec(0.05..1.0f64, l),
    )
        .prop_map(|(classes, raw)| {
            let total: f64 = raw.iter().sum();
            MixtureParams {
                weights: raw.iter().map(|w| w / total).collect(),
                classes,
            }
        })
}

fn rows(n: usize, max_rows: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-8.0..8.0f64, n), 1..max_rows)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #[test]
    fn ggd_is_symmetric(e in -50.0..50.0f64, sigma in 0.01..20.0f64, lambda in 0.1..20.0f64) {
        prop_assert_eq!(ggd_log_pdf(e, sigma, lambda).unwrap(), ggd_log_pdf(-e, sigma, lambda).unwrap());
    }

    #[test]
    fn ggd_peaks_at_zero(e in -50.0..50.0f64, sigma in 0.01..20.0f64, lambda in 0.1..20.0f64) {
        prop_assert!(ggd_log_pdf(e, sigma, lambda).unwrap() <= ggd_log_pdf(0.0, sigma, lambda).unwrap());
    }

    #[test]
    fn dirichlet_draws_lie_on_simplex(a in prop::collection::vec(0.05..20.0f64, 1..12), seed: u64) {
        let w = sample_dirichlet(&a, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert_eq!(w.len(), a.len());
        prop_assert!(w.iter().all(|v| *v > 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn class_labels_are_exchangeable(params in pair_mixture(4), x in prop::collection::vec(-8.0..8.0f64, 2), rot in 0usize..4) {
        let dag = DagHypothesis::pair(Direction::X1ToX2);
        let mut permuted = params.clone();
        permuted.classes.rotate_left(rot);
        permuted.weights.rotate_left(rot);
        let a = mixture_log_density(&x, &dag, &params).unwrap();
        let b = mixture_log_density(&x, &dag, &permuted).unwrap();
        prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn relabeling_variables_mirrors_the_likelihood(params in pair_mixture(3), data in rows(2, 20)) {
        let forward = DagHypothesis::pair(Direction::X1ToX2);
        let backward = DagHypothesis::pair(Direction::X2ToX1);
        let data = Dataset::from_rows(&data).unwrap();
        let mut mirrored = params.clone();
        for c in &mut mirrored.classes {
            c.mu.reverse();
            c.sigma.reverse();
            c.lambda.reverse();
        }
        let a = dataset_log_likelihood(&data, &forward, &params).unwrap();
        let b = dataset_log_likelihood(&data.swap_columns(0, 1), &backward, &mirrored).unwrap();
        prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn row_order_does_not_matter(params in pair_mixture(2), mut data in rows(2, 30), shift in 0usize..30) {
        let dag = DagHypothesis::pair(Direction::X2ToX1);
        let a = dataset_log_likelihood(&Dataset::from_rows(&data).unwrap(), &dag, &params).unwrap();
        let k = shift % data.len();
        data.rotate_left(k);
        data.reverse();
        let b = dataset_log_likelihood(&Dataset::from_rows(&data).unwrap(), &dag, &params).unwrap();
        prop_assert!(close(a, b, 1e-12), "{} vs {}", a, b);
    }

    #[test]
    fn likelihood_adds_over_concatenation(params in pair_mixture(3), d1 in rows(2, 15), d2 in rows(2, 15)) {
        let dag = DagHypothesis::pair(Direction::X1ToX2);
        let (d1, d2) = (Dataset::from_rows(&d1).unwrap(), Dataset::from_rows(&d2).unwrap());
        let joint = dataset_log_likelihood(&d1.concat(&d2).unwrap(), &dag, &params).unwrap();
        let split = dataset_log_likelihood(&d1, &dag, &params).unwrap()
            + dataset_log_likelihood(&d2, &dag, &params).unwrap();
        prop_assert!(close(joint, split, 1e-12), "{} vs {}", joint, split);
    }

    #[test]
    fn residuals_invert_the_structural_equations(
        p in class_params(3, 3),
        e in prop::collection::vec(-5.0..5.0f64, 3),
    ) {
        // x3 <- x1, x3 <- x2, x2 <- x1
        let dag = DagHypothesis::from_parents(vec![vec![], vec![0], vec![0, 1]]).unwrap();
        let mut x = e.clone();
        for ((j, i), b) in dag.edges().zip(&p.b) {
            x[i] += b * x[j];
        }
        for (xi, m) in x.iter_mut().zip(&p.mu) {
            *xi += m;
        }
        let r = residuals(&x, &dag, &p).unwrap();
        for (got, want) in r.iter().zip(&e) {
            prop_assert!((got - want).abs() <= 1e-12 * x.iter().fold(1.0f64, |m, v| m.max(v.abs())) * 8.0);
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact(
        data in prop::collection::vec(prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 2), 1..40)
    ) {
        let original = Dataset::from_rows(&data).unwrap();
        let back = dataset_from_csv(&dataset_to_csv(&original)).unwrap();
        let same = original
            .values()
            .iter()
            .zip(back.values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
        prop_assert_eq!(back.n_obs(), original.n_obs());
    }
}
