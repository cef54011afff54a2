use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use ratingdml::learners::{self, fit, preset, LearnerKind, LearnerSpec, Task};
use ratingdml::rng;

fn friedman(n: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
    let mut r = rng::stream(seed, 0);
    let x = DMatrix::from_fn(n, 10, |_, _| r.random::<f64>());
    let y = (0..n)
        .map(|i| {
            10.0 * (std::f64::consts::PI * x[(i, 0)] * x[(i, 1)]).sin()
                + 20.0 * (x[(i, 2)] - 0.5).powi(2)
                + 10.0 * x[(i, 3)]
                + 5.0 * x[(i, 4)]
                + r.sample::<f64, _>(StandardNormal)
        })
        .collect();
    (x, y)
}

fn r_squared(truth: &[f64], pred: &[f64], baseline: f64) -> f64 {
    let sse: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p).powi(2)).sum();
    let sst: f64 = truth.iter().map(|t| (t - baseline).powi(2)).sum();
    1.0 - sse / sst
}

#[test]
fn forest_beats_mean_baseline_on_friedman_one() {
    let (x, y) = friedman(2000, 1);
    let (xt, yt) = friedman(1000, 2);
    let spec = preset("rf-g", 7).unwrap();
    let model = fit(&spec, &x, &y, Task::Regression).unwrap();
    let train_mean = y.iter().sum::<f64>() / y.len() as f64;
    let r2 = r_squared(&yt, &model.predict(&xt).unwrap(), train_mean);
    let baseline = r_squared(&yt, &vec![train_mean; yt.len()], train_mean);
    assert!(r2 >= 0.5, "holdout R² {r2}");
    assert!(baseline <= 0.0 + 1e-3);
    assert!(model.diagnostics.oob_r2.unwrap() > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn classification_forest_stays_in_unit_interval(
        seed in any::<u64>(),
        n in 10usize..60,
        depth in 1usize..6,
    ) {
        let mut r = rng::stream(seed, 1);
        let x = DMatrix::from_fn(n, 3, |_, _| r.random::<f64>() * 4.0 - 2.0);
        let y: Vec<f64> = (0..n).map(|_| f64::from(r.random::<bool>())).collect();
        let mut spec = LearnerSpec::new(LearnerKind::RandomForestClf).with_seed(seed);
        spec.hyperparameters.num_trees = 10;
        spec.hyperparameters.max_depth = Some(depth);
        spec.hyperparameters.min_node_size = 2;
        let m = fit(&spec, &x, &y, Task::BinaryClassification).unwrap();
        let probe = DMatrix::from_fn(20, 3, |_, _| r.random::<f64>() * 10.0 - 5.0);
        for p in m.predict(&probe).unwrap() {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        for t in m.forest().unwrap().trees() {
            prop_assert!(t.depth() <= depth);
        }
    }

    #[test]
    fn regression_outputs_finite_and_within_target_range(
        seed in any::<u64>(),
        n in 5usize..80,
    ) {
        let mut r = rng::stream(seed, 2);
        let x = DMatrix::from_fn(n, 4, |_, _| r.random::<f64>());
        let y: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal) * 100.0).collect();
        let mut spec = LearnerSpec::new(LearnerKind::RandomForestReg).with_seed(seed);
        spec.hyperparameters.num_trees = 8;
        let m = fit(&spec, &x, &y, Task::Regression).unwrap();
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for p in m.predict(&x).unwrap() {
            prop_assert!(p.is_finite() && p >= lo - 1e-9 && p <= hi + 1e-9);
        }
    }

    #[test]
    fn lasso_kkt_holds_at_convergence(seed in any::<u64>(), frac in 0.01f64..0.9) {
        let n = 60;
        let mut r = rng::stream(seed, 3);
        let x = DMatrix::from_fn(n, 5, |_, _| r.sample::<f64, _>(StandardNormal));
        let y: Vec<f64> = (0..n)
            .map(|i| x[(i, 0)] - 0.7 * x[(i, 3)] + 0.5 * r.sample::<f64, _>(StandardNormal))
            .collect();
        // Standardise here too so the gradient can be checked independently.
        let means: Vec<f64> = (0..5).map(|j| x.column(j).mean()).collect();
        let sds: Vec<f64> = (0..5)
            .map(|j| (x.column(j).iter().map(|v| (v - means[j]).powi(2)).sum::<f64>() / n as f64).sqrt())
            .collect();
        let ym = y.iter().sum::<f64>() / n as f64;
        let z = DMatrix::from_fn(n, 5, |i, j| (x[(i, j)] - means[j]) / sds[j]);
        let lmax = (0..5)
            .map(|j| (z.column(j).iter().zip(&y).map(|(a, b)| a * (b - ym)).sum::<f64>() / n as f64).abs())
            .fold(0.0, f64::max);
        let lambda = frac * lmax;
        let tol = 1e-10;
        let f = learners::fit_lasso(&x, &y, lambda, tol, 100_000).unwrap();
        prop_assert!(f.converged);
        let resid: Vec<f64> = (0..n)
            .map(|i| y[i] - ym - (0..5).map(|j| z[(i, j)] * f.standardized[j]).sum::<f64>())
            .collect();
        for j in 0..5 {
            let g = z.column(j).iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>() / n as f64;
            if f.standardized[j] == 0.0 {
                prop_assert!(g.abs() <= lambda + 1e-7);
            } else {
                prop_assert!((g - lambda * f.standardized[j].signum()).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn ridge_shrinks_monotonically(seed in any::<u64>(), a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut r = rng::stream(seed, 4);
        let x = DMatrix::from_fn(30, 3, |_, _| r.sample::<f64, _>(StandardNormal));
        let y: Vec<f64> = (0..30).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let norm = |l: f64| {
            learners::fit_ridge(&x, &y, l, true).unwrap().coef.iter().map(|c| c * c).sum::<f64>()
        };
        prop_assert!(norm(hi) <= norm(lo) * (1.0 + 1e-12) + 1e-15);
    }
}
