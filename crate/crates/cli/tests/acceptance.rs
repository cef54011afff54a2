//! Acceptance suite. Runs every criterion at full size and prints one
//! PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! The Monte Carlo criteria take a while on few cores. Set
//! `RATINGDML_ACCEPTANCE=3,4` to run a subset.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use ratingdml::dataset::{
    apply_sample_filters, engineer_features, load_csv, schema, summarize, Dataset, FeatureConfig,
    FilterRules, TreatmentGranularity,
};
use ratingdml::dml::{self, Algorithm, CrossFitPlan};
use ratingdml::inference::InferenceConfig;
use ratingdml::learners::{preset, LearnerKind, LearnerSpec};
use ratingdml::rng;
use ratingdml::synthetic::{
    heterogeneity_study, run_study, score_sensitivity, DgpConfig, EstimatorConfig, McReport,
    Mechanism, Method, Shape, StudyConfig,
};
use ratingdml_cli::config::{Command, RunConfig};
use ratingdml_cli::simulate::{self, StudyFile};
use serde_json::Value;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn spec(name: &str, seed: u64) -> LearnerSpec {
    preset(name, seed).expect("preset")
}

fn estimator(label: &str, method: Method, g: &str, m: &str) -> EstimatorConfig {
    EstimatorConfig {
        label: label.into(),
        method,
        learner_g: spec(g, 11),
        learner_m: spec(m, 12),
        folds: 5,
        repetitions: 1,
    }
}

fn dml(algorithm: Algorithm) -> Method {
    Method::Dml { algorithm }
}

fn thetas(report: &McReport, label: &str) -> Vec<(usize, f64, f64)> {
    let idx = report.estimator_index(label).expect("estimator");
    report
        .records(idx)
        .map(|(rep, r)| {
            (
                rep,
                r.theta[0],
                r.std_error.as_ref().map_or(f64::NAN, |s| s[0]),
            )
        })
        .collect()
}

// 1 -------------------------------------------------------------------------

fn fwl_exactness() -> Verdict {
    let start = Instant::now();
    let (n, p) = (200, 5);
    let mut worst = 0.0_f64;
    let ols = LearnerSpec::new(LearnerKind::Ols);
    for instance in 0..100u64 {
        let mut r = rng::stream(0xF1, instance);
        let x = DMatrix::from_fn(n, p, |_, _| r.sample::<f64, _>(StandardNormal));
        let gamma: Vec<f64> = (0..p).map(|_| r.random_range(-1.0..1.0)).collect();
        let beta: Vec<f64> = (0..p).map(|_| r.random_range(-1.0..1.0)).collect();
        let theta = r.random_range(-2.0..2.0);
        let d: Vec<f64> = (0..n)
            .map(|i| {
                let index = (0..p).map(|j| gamma[j] * x[(i, j)]).sum::<f64>();
                f64::from(u8::from(index + r.sample::<f64, _>(StandardNormal) > 0.0))
            })
            .collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                theta * d[i]
                    + (0..p).map(|j| beta[j] * x[(i, j)]).sum::<f64>()
                    + r.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let (direct, _) = dml::fwl_oracle(&x, &d, &y).expect("full-rank instance");
        // The engine's partialling-out path with in-sample OLS nuisances.
        let dataset = Dataset::new(
            y,
            DMatrix::from_column_slice(n, 1, &d),
            x,
            vec!["d".into()],
            (0..p).map(|j| format!("x{j}")).collect(),
            false,
        )
        .unwrap();
        let fit = dml::estimate(
            &dataset,
            0,
            &ols,
            &ols,
            &CrossFitPlan::no_split(n),
            Algorithm::Dml2,
        );
        match fit {
            Ok(fit) => worst = worst.max((fit.theta - direct).abs()),
            Err(e) => return verdict(false, format!("instance {instance}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-8 && secs < 5.0,
        format!("max |direct - partialled| = {worst:.2e} over 100 instances in {secs:.2} s"),
    )
}

// 2 -------------------------------------------------------------------------

/// The nonlinear confounded design shared by criteria 2, 3, 4, 8 and 9.
fn nonlinear_dgp() -> DgpConfig {
    DgpConfig {
        n: 2000,
        theta_true: vec![0.5],
        g_shape: Shape::NonlinearSmooth,
        ..DgpConfig::default()
    }
}

fn orthogonality() -> Verdict {
    let start = Instant::now();
    let cfg = DgpConfig {
        seed: 2024,
        ..nonlinear_dgp()
    };
    let check = score_sensitivity(&cfg, 1e-4).expect("sensitivity");
    let o = check.orthogonal;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        o.slope.abs() < 1e-3 * o.curvature.abs() && secs < 10.0,
        format!(
            "slope {:.2e}, curvature {:.3e} (non-orthogonal slope {:.3e}) in {secs:.2} s",
            o.slope, o.curvature, check.non_orthogonal.slope
        ),
    )
}

// 3, 4, 8, 9 ---------------------------------------------------------------

fn nonlinear_study() -> McReport {
    let study = StudyConfig {
        dgp: nonlinear_dgp(),
        estimators: vec![
            estimator("dml2", dml(Algorithm::Dml2), "rf-g", "rf-m"),
            estimator("dml1", dml(Algorithm::Dml1), "rf-g", "rf-m"),
            estimator("naive", Method::Naive, "rf-g", "constant"),
            estimator("lasso", dml(Algorithm::Dml2), "lasso-g", "rf-m"),
            estimator("ridge", dml(Algorithm::Dml2), "ridge-g", "rf-m"),
        ],
        reps: 500,
        seed: 3,
        alpha: 0.05,
        inference: None,
    };
    run_study(&study).expect("nonlinear study")
}

fn coverage(report: &McReport) -> Verdict {
    let s = &report.estimator("dml2").unwrap().per_treatment[0];
    let cov = s.coverage.unwrap_or(f64::NAN);
    let fails = report.estimator("dml2").unwrap().failures;
    verdict(
        (0.91..=0.98).contains(&cov) && s.bias.abs() < 0.02 && fails == 0,
        format!(
            "coverage {cov:.3}, bias {:+.4} (MC s.e. {:.4}), {} reps, {fails} failed",
            s.bias, s.mc_se, report.reps
        ),
    )
}

fn debiasing(report: &McReport) -> Verdict {
    let truth = report.truth[0];
    let dml2: BTreeMap<usize, f64> = thetas(report, "dml2")
        .into_iter()
        .map(|(r, t, _)| (r, t))
        .collect();
    let naive = thetas(report, "naive");
    let (mut worse, mut sum_naive, mut sum_dml, mut count) = (0, 0.0, 0.0, 0);
    for (rep, t, _) in naive {
        let Some(&d) = dml2.get(&rep) else { continue };
        let (en, ed) = ((t - truth).abs(), (d - truth).abs());
        worse += usize::from(en > ed);
        sum_naive += en;
        sum_dml += ed;
        count += 1;
    }
    let share = worse as f64 / count as f64;
    let ratio = sum_naive / sum_dml;
    verdict(
        share >= 0.90 && ratio >= 3.0,
        format!("naive worse in {share:.3} of {count} reps, mean |error| ratio {ratio:.2}"),
    )
}

fn concordance(report: &McReport) -> Verdict {
    let dml2: BTreeMap<usize, (f64, f64)> = thetas(report, "dml2")
        .into_iter()
        .map(|(r, t, s)| (r, (t, s)))
        .collect();
    let (mut close, mut count) = (0, 0);
    for (rep, t1, _) in thetas(report, "dml1") {
        let Some(&(t2, se)) = dml2.get(&rep) else {
            continue;
        };
        close += usize::from((t1 - t2).abs() < 0.5 * se);
        count += 1;
    }
    let share = close as f64 / count as f64;
    verdict(
        share >= 0.95,
        format!("|DML1 - DML2| < 0.5 SE in {share:.3} of {count} reps"),
    )
}

fn learner_swap(report: &McReport) -> Verdict {
    let mean = |label: &str| report.estimator(label).unwrap().per_treatment[0].mean_estimate;
    let rf = mean("dml2");
    let gaps: Vec<(&str, f64)> = ["lasso", "ridge"]
        .iter()
        .map(|l| (*l, mean(l) - rf))
        .collect();
    verdict(
        gaps.iter().all(|(_, g)| g.abs() < 0.015),
        format!(
            "mean estimates: rf {rf:.4}, {}",
            gaps.iter()
                .map(|(l, g)| format!("{l} {:.4} ({g:+.4})", rf + g))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

// 5 -------------------------------------------------------------------------

fn double_robustness() -> Verdict {
    // Zero effect keeps E[Y|X] linear, so OLS is correct for whichever
    // nuisance is not degraded.
    let study = StudyConfig {
        dgp: DgpConfig {
            n: 1000,
            theta_true: vec![0.0],
            g_shape: Shape::Linear,
            m_shape: Shape::Linear,
            ..DgpConfig::default()
        },
        estimators: vec![
            estimator("g-degraded", dml(Algorithm::Dml2), "constant", "ols"),
            estimator("m-degraded", dml(Algorithm::Dml2), "ols", "constant"),
            estimator(
                "both-degraded",
                dml(Algorithm::Dml2),
                "constant",
                "constant",
            ),
        ],
        reps: 200,
        seed: 5,
        alpha: 0.05,
        inference: None,
    };
    let report = run_study(&study).expect("robustness study");
    let z = |label: &str| {
        let s = &report.estimator(label).unwrap().per_treatment[0];
        (s.bias, s.bias.abs() / s.mc_se)
    };
    let (g, m, both) = (z("g-degraded"), z("m-degraded"), z("both-degraded"));
    verdict(
        g.1 < 2.0 && m.1 < 2.0 && both.1 >= 2.0,
        format!(
            "bias/MC-s.e.: g degraded {:+.4} ({:.2}), m degraded {:+.4} ({:.2}), both {:+.4} ({:.1})",
            g.0, g.1, m.0, m.1, both.0, both.1
        ),
    )
}

// 6 -------------------------------------------------------------------------

fn fwer_control() -> Verdict {
    let study = StudyConfig {
        dgp: DgpConfig {
            n: 3000,
            theta_true: vec![0.0; 10],
            mechanism: Mechanism::MutuallyExclusive,
            g_shape: Shape::Linear,
            m_shape: Shape::Linear,
            ..DgpConfig::default()
        },
        estimators: vec![estimator("dml2", dml(Algorithm::Dml2), "ols", "ols")],
        reps: 500,
        seed: 6,
        alpha: 0.05,
        inference: Some(InferenceConfig {
            draws: 1000,
            ..InferenceConfig::default()
        }),
    };
    let report = run_study(&study).expect("fwer study");
    let est = report.estimator("dml2").unwrap();
    let fwer = est.fwer.clone().expect("fwer");
    let mut ordered = 0;
    let mut total = 0;
    for (_, r) in report.records(0) {
        let inf = r.inference.as_ref().expect("inference");
        total += 1;
        let ok = (0..inf.raw_p.len())
            .all(|j| inf.raw_p[j] <= inf.holm_p[j] && inf.holm_p[j] <= inf.bonf_p[j]);
        ordered += usize::from(ok);
    }
    verdict(
        fwer.mb <= 0.07 && fwer.bonf <= 0.05 && ordered == total && total == report.reps,
        format!(
            "FWER multiplier {:.3}, Bonferroni {:.3} (raw {:.3}, RoWo {:.3}); raw <= holm <= bonf in {ordered}/{total} reps",
            fwer.mb, fwer.bonf, fwer.raw, fwer.rowo
        ),
    )
}

// 7 -------------------------------------------------------------------------

/// Effects rising in eight steps of three notches, from -0.05 to +0.13.
fn staircase() -> Vec<f64> {
    (0..22)
        .map(|j| -0.05 + 0.18 * (j / 3) as f64 / 7.0)
        .collect()
}

fn heterogeneity() -> Verdict {
    let study = StudyConfig {
        dgp: DgpConfig {
            n: 6000,
            theta_true: staircase(),
            mechanism: Mechanism::MutuallyExclusive,
            g_shape: Shape::Linear,
            m_shape: Shape::Linear,
            noise_sd_y: 0.2,
            ..DgpConfig::default()
        },
        estimators: vec![estimator("dml2", dml(Algorithm::Dml2), "ols", "ols")],
        reps: 300,
        seed: 7,
        alpha: 0.05,
        inference: Some(InferenceConfig {
            draws: 1000,
            ..InferenceConfig::default()
        }),
    };
    let het = heterogeneity_study(&study).expect("heterogeneity study");
    let joint = het
        .report
        .estimator("dml2")
        .unwrap()
        .joint_coverage
        .unwrap_or(f64::NAN);
    let ord = &het.ordering[0];
    let frac = ord.fraction_correct.unwrap_or(f64::NAN);
    verdict(
        joint >= 0.92 && frac >= 0.95,
        format!(
            "joint band coverage {joint:.3}; {} of {} separated pairs ordered correctly ({frac:.4})",
            ord.pairs_correct, ord.pairs_considered
        ),
    )
}

// 10 ------------------------------------------------------------------------

fn pipeline_fixture() -> Verdict {
    let text = std::fs::read_to_string(fixtures().join("firm_years_50.expected.json")).unwrap();
    let exp: Value = serde_json::from_str(&text).unwrap();
    let raw = load_csv(
        &fixtures().join("firm_years_50.csv"),
        &schema::fixture_schema(),
        b',',
    )
    .unwrap();
    let table = apply_sample_filters(&raw, &FilterRules::default()).unwrap();
    let rows_ok = table.row_count() as u64 == exp["surviving_rows"].as_u64().unwrap();
    let mut partition_ok = true;
    let mut worst = 0.0_f64;
    let mut shape_ok = true;
    for (level, key) in [
        (TreatmentGranularity::Any, "any"),
        (TreatmentGranularity::InvSpec, "invspec"),
        (TreatmentGranularity::Broad, "broad"),
        (TreatmentGranularity::Granular, "granular"),
    ] {
        let cfg = FeatureConfig {
            granularity: level,
            ..FeatureConfig::default()
        };
        let ds = engineer_features(&table, &cfg).unwrap();
        let rated: usize = (0..ds.treatments.ncols())
            .map(|j| ds.treated_count(j))
            .sum();
        let unrated = ds.treatments.row_iter().filter(|r| r.sum() == 0.0).count();
        partition_ok &=
            ds.treatments.row_iter().all(|r| r.sum() <= 1.0) && rated + unrated == ds.n();
        let summary = summarize(&ds, &ds.treatment_names).unwrap();
        let want = exp["lda_summary"][key].as_array().unwrap();
        shape_ok &= summary.rows.len() == want.len();
        for (got, want) in summary.rows.iter().zip(want) {
            shape_ok &= got.group == want["group"].as_str().unwrap()
                && got.count as u64 == want["count"].as_u64().unwrap();
            let pairs = [
                (Some(got.share), &want["share"]),
                (got.q1, &want["q1"]),
                (got.median, &want["median"]),
                (got.mean, &want["mean"]),
                (got.q3, &want["q3"]),
            ];
            for (g, w) in pairs {
                match (g, w.as_f64()) {
                    (Some(g), Some(w)) => worst = worst.max((g - w).abs()),
                    (None, None) => {}
                    _ => shape_ok = false,
                }
            }
        }
    }
    verdict(
        rows_ok && partition_ok && shape_ok && worst < 1e-9,
        format!(
            "{} of {} rows survive, partition {}, summary max deviation {worst:.1e}",
            table.row_count(),
            raw.row_count(),
            if partition_ok { "holds" } else { "broken" }
        ),
    )
}

// 11 ------------------------------------------------------------------------

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let base = RunConfig {
        data: Some(fixtures().join("firm_years_50.csv")),
        granularity: TreatmentGranularity::InvSpec,
        folds: 3,
        reps: 2,
        bootstrap: 500,
        seed: 11,
        ..RunConfig::default()
    };
    let mut problems = Vec::new();
    let mut compared = 0;
    for command in [Command::Estimate, Command::Ingest] {
        let name = format!("{command:?}").to_lowercase();
        let first = tmp.path().join(format!("{name}-1"));
        let cfg = RunConfig {
            out: Some(first.clone()),
            ..base.clone()
        };
        in_pool(1, || ratingdml_cli::dispatch(&cfg, command)).unwrap();
        let reference = read_dir(&first);
        let manifest = RunConfig::load(&first.join("manifest.toml")).unwrap();
        for threads in [2, 4] {
            let again = tmp.path().join(format!("{name}-{threads}"));
            let cfg = RunConfig {
                out: Some(again.clone()),
                ..manifest.clone()
            };
            in_pool(threads, || ratingdml_cli::dispatch(&cfg, command)).unwrap();
            compared += 1;
            if read_dir(&again) != reference {
                problems.push(format!("{name} rerun on {threads} workers differs"));
            }
        }
    }

    let study_text = std::fs::read_to_string(
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/small_study.toml"),
    )
    .unwrap();
    let file = StudyFile::parse(&study_text).unwrap();
    let mut reports = Vec::new();
    for threads in [1, 3] {
        let out = tmp.path().join(format!("study-{threads}"));
        let outcome = in_pool(threads, || simulate::execute(&file)).unwrap();
        simulate::write_study(&out, &file, &outcome).unwrap();
        reports.push(read_dir(&out));
    }
    compared += 1;
    if reports[0] != reports[1] {
        problems.push("study artifacts differ across worker counts".into());
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{compared} reruns byte-identical across 1-4 workers")
        } else {
            problems.join("; ")
        },
    )
}

fn main() -> ExitCode {
    let selected: Option<Vec<usize>> = std::env::var("RATINGDML_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let wanted = |k: usize| selected.as_ref().is_none_or(|s| s.contains(&k));

    let mut results: Vec<(usize, &str, Verdict, f64)> = Vec::new();
    let mut record = |k: usize, name: &'static str, f: &dyn Fn() -> Verdict| {
        if !wanted(k) {
            return;
        }
        let start = Instant::now();
        let v = f();
        let secs = start.elapsed().as_secs_f64();
        let line = format!(
            "criterion {k:>2} {} {name}: {} [{secs:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        let _ = writeln!(std::io::stdout(), "{line}");
        results.push((k, name, v, secs));
    };

    record(1, "FWL exactness", &fwl_exactness);
    record(2, "orthogonality", &orthogonality);
    if [3, 4, 8, 9].iter().any(|&k| wanted(k)) {
        let start = Instant::now();
        let report = nonlinear_study();
        let _ = writeln!(
            std::io::stdout(),
            "   (nonlinear study: {} reps in {:.0} s)",
            report.reps,
            start.elapsed().as_secs_f64()
        );
        record(3, "coverage", &|| coverage(&report));
        record(4, "debiasing", &|| debiasing(&report));
        record(8, "DML1/DML2 concordance", &|| concordance(&report));
        record(9, "learner-swap robustness", &|| learner_swap(&report));
    }
    record(5, "double robustness boundary", &double_robustness);
    record(6, "FWER control", &fwer_control);
    record(7, "heterogeneity recovery", &heterogeneity);
    record(10, "pipeline fixtures", &pipeline_fixture);
    record(11, "determinism", &determinism);

    results.sort_by_key(|r| r.0);
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.2.pass)
        .map(|r| format!("{} ({})", r.0, r.1))
        .collect();
    let _ = writeln!(
        std::io::stdout(),
        "acceptance: {} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        let _ = writeln!(std::io::stdout(), "failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
