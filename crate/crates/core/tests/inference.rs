use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use ratingdml::inference::{adjust, bonferroni, holm, InferenceConfig, ScoreMatrix, WeightScheme};
use ratingdml::{rng, stats};

fn correlated_scores(n: usize, theta: &[f64], rho: f64, seed: u64) -> ScoreMatrix {
    let p = theta.len();
    let mut r = rng::stream(seed, 0);
    let common: Vec<f64> = (0..n).map(|_| r.sample(StandardNormal)).collect();
    let psi = DMatrix::from_fn(n, p, |i, _| {
        rho.sqrt() * common[i] + (1.0 - rho).sqrt() * r.sample::<f64, _>(StandardNormal)
    });
    let se: Vec<f64> = psi
        .column_iter()
        .map(|c| (c.iter().map(|v| v * v).sum::<f64>() / (n * n) as f64).sqrt())
        .collect();
    ScoreMatrix::new(psi, vec![1.0; p], theta.to_vec(), se).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn holm_between_raw_and_bonferroni(raw in prop::collection::vec(0.0f64..=1.0, 1..30)) {
        let h = holm(&raw);
        let b = bonferroni(&raw);
        for j in 0..raw.len() {
            prop_assert!(raw[j] <= h[j] && h[j] <= b[j] && b[j] <= 1.0);
        }
    }

    #[test]
    fn permuting_treatments_permutes_every_output(
        theta in prop::collection::vec(-0.3f64..0.3, 2..7),
        seed in any::<u64>(),
        rho in 0.0f64..0.9,
    ) {
        let s = correlated_scores(120, &theta, rho, seed);
        let p = theta.len();
        let order: Vec<usize> = (0..p).rev().collect();
        let cfg = InferenceConfig { draws: 300, seed, ..InferenceConfig::default() };
        let a = adjust(&s, &cfg).unwrap();
        let b = adjust(&s.permuted(&order).unwrap(), &cfg).unwrap();
        for (k, &j) in order.iter().enumerate() {
            prop_assert_eq!(a.raw_p[j], b.raw_p[k]);
            prop_assert_eq!(a.mb_p[j], b.mb_p[k]);
            prop_assert_eq!(a.holm_p[j], b.holm_p[k]);
            prop_assert_eq!(a.bonf_p[j], b.bonf_p[k]);
            // Ties in |t| are broken by position, which moves under permutation.
            let tied = (0..p).any(|i| i != j && a.t_values[i].abs() == a.t_values[j].abs());
            if !tied {
                prop_assert_eq!(a.rowo_p[j], b.rowo_p[k]);
            }
        }
        prop_assert!((a.critical_value - b.critical_value).abs() < 1e-12);
    }

    #[test]
    fn adjusted_values_ordered_and_bounded(
        theta in prop::collection::vec(-0.5f64..0.5, 1..8),
        seed in any::<u64>(),
        scheme in prop_oneof![
            Just(WeightScheme::Gaussian),
            Just(WeightScheme::Rademacher),
            Just(WeightScheme::Mammen)
        ],
    ) {
        let s = correlated_scores(80, &theta, 0.3, seed);
        let cfg = InferenceConfig { draws: 200, seed, weights: scheme, ..InferenceConfig::default() };
        let out = adjust(&s, &cfg).unwrap();
        prop_assert_eq!(&out, &adjust(&s, &cfg).unwrap());
        for j in 0..theta.len() {
            prop_assert!(out.raw_p[j] <= out.holm_p[j]);
            prop_assert!(out.holm_p[j] <= out.bonf_p[j]);
            prop_assert!(out.rowo_p[j] <= out.mb_p[j]);
            prop_assert!(out.mb_p[j] >= 1.0 / 200.0 && out.mb_p[j] <= 1.0);
            let (lo, hi) = out.joint_ci[j];
            prop_assert!(lo <= out.theta[j] && out.theta[j] <= hi);
        }
    }
}

#[test]
fn bootstrap_p_value_noise_shrinks_with_draws() {
    let s = correlated_scores(200, &[0.02, -0.01, 0.015], 0.2, 1);
    let spread = |draws: usize| {
        let ps: Vec<f64> = (0..60)
            .map(|seed| {
                let cfg = InferenceConfig {
                    draws,
                    seed,
                    ..InferenceConfig::default()
                };
                adjust(&s, &cfg).unwrap().mb_p[0]
            })
            .collect();
        stats::variance(&ps)
    };
    let ratio = spread(250) / spread(1000);
    // Quadrupling the draws should cut the variance about fourfold.
    assert!(ratio > 2.0 && ratio < 8.0, "variance ratio {ratio}");
}
