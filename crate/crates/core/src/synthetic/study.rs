//! Monte Carlo studies over synthetic datasets.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dgp::{generate, DgpConfig, Mechanism, Truth};
use crate::dataset::Dataset;
use crate::dml::{self, Algorithm, CrossFitPlan, NuisanceCache};
use crate::inference::{self, AdjustedInference, InferenceConfig, ScoreMatrix};
use crate::learners::LearnerSpec;
use crate::{rng, stats, Error, Result};

/// Share of failed replications above which a study is marked failed.
pub const MAX_FAILURE_RATE: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Method {
    Dml {
        algorithm: Algorithm,
    },
    /// Plug-in contrast of one outcome learner; uses `learner_g` only.
    Naive,
    /// Reports the true effects with zero standard error.
    Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub label: String,
    pub method: Method,
    pub learner_g: LearnerSpec,
    pub learner_m: LearnerSpec,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

fn default_folds() -> usize {
    5
}

fn default_repetitions() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub dgp: DgpConfig,
    pub estimators: Vec<EstimatorConfig>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Simultaneous inference per replication (multi-treatment DML only).
    #[serde(default)]
    pub inference: Option<InferenceConfig>,
}

fn default_alpha() -> f64 {
    0.05
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        if self.reps == 0 {
            return Err(Error::InvalidParameter(
                "a study needs at least one replication".into(),
            ));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidParameter(
                "a study needs at least one estimator".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        for e in &self.estimators {
            if matches!(e.method, Method::Dml { .. }) {
                if e.folds < 2 || e.folds > self.dgp.n {
                    return Err(Error::InvalidParameter(format!(
                        "estimator `{}`: {} folds for {} rows",
                        e.label, e.folds, self.dgp.n
                    )));
                }
                if e.repetitions == 0 {
                    return Err(Error::InvalidParameter(format!(
                        "estimator `{}` needs at least one repetition",
                        e.label
                    )));
                }
                e.learner_m.validate()?;
            }
            if !matches!(e.method, Method::Truth) {
                e.learner_g.validate()?;
            }
        }
        if let Some(inf) = &self.inference {
            inf.validate()?;
        }
        Ok(())
    }
}

/// One estimator's output on one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub theta: Vec<f64>,
    /// `None` for estimators without a standard error.
    pub std_error: Option<Vec<f64>>,
    pub inference: Option<AdjustedInference>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    /// One entry per estimator, in configuration order.
    pub outcomes: Vec<std::result::Result<EstimateRecord, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentSummary {
    pub label: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub rmse: f64,
    /// Monte Carlo standard error of the mean estimate.
    pub mc_se: f64,
    pub coverage: Option<f64>,
    pub mean_ci_length: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwerSummary {
    pub raw: f64,
    pub mb: f64,
    pub rowo: f64,
    pub holm: f64,
    pub bonf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub label: String,
    pub successes: usize,
    pub failures: usize,
    pub per_treatment: Vec<TreatmentSummary>,
    /// Share of replications whose joint band covers the whole truth vector.
    pub joint_coverage: Option<f64>,
    /// Share of replications rejecting at least one true null, per method.
    pub fwer: Option<FwerSummary>,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub reps: usize,
    pub alpha: f64,
    pub truth: Vec<f64>,
    pub estimators: Vec<EstimatorSummary>,
    pub replications: Vec<RepRecord>,
    pub failed: bool,
    pub flags: Vec<String>,
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl McReport {
    pub fn estimator(&self, label: &str) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|e| e.label == label)
    }

    pub fn estimator_index(&self, label: &str) -> Option<usize> {
        self.estimators.iter().position(|e| e.label == label)
    }

    /// Successful records of one estimator, by replication.
    pub fn records(&self, index: usize) -> impl Iterator<Item = (usize, &EstimateRecord)> {
        self.replications
            .iter()
            .filter_map(move |r| r.outcomes[index].as_ref().ok().map(|e| (r.rep, e)))
    }
}

fn per_rep_spec(spec: &LearnerSpec, rep: usize) -> LearnerSpec {
    spec.clone().with_seed(rng::derive(spec.seed, rep as u64))
}

fn run_estimator(
    est: &EstimatorConfig,
    dataset: &Dataset,
    truth: &Truth,
    rep: usize,
    study: &StudyConfig,
    cache: &NuisanceCache,
) -> Result<EstimateRecord> {
    let k = dataset.treatments.ncols();
    match &est.method {
        Method::Truth => Ok(EstimateRecord {
            theta: truth.theta().to_vec(),
            std_error: Some(vec![0.0; k]),
            inference: None,
        }),
        Method::Naive => {
            let g = per_rep_spec(&est.learner_g, rep);
            let theta = (0..k)
                .map(|j| dml::naive_plugin(dataset, j, &g))
                .collect::<Result<Vec<_>>>()?;
            Ok(EstimateRecord {
                theta,
                std_error: None,
                inference: None,
            })
        }
        Method::Dml { algorithm } => {
            let plan_seed = rng::derive_path(study.seed, &[rep as u64, 1]);
            let plan = CrossFitPlan::new(dataset.n(), est.folds, est.repetitions, plan_seed)?;
            let g = per_rep_spec(&est.learner_g, rep);
            let m = per_rep_spec(&est.learner_m, rep);
            let fits = (0..k)
                .map(|j| dml::estimate_cached(dataset, j, &g, &m, &plan, *algorithm, Some(cache)))
                .collect::<Result<Vec<_>>>()?;
            let inference = match (&study.inference, k > 1) {
                (Some(cfg), true) => {
                    let scores = ScoreMatrix::from_fits(&fits.iter().collect::<Vec<_>>())?;
                    let cfg = InferenceConfig {
                        seed: rng::derive_path(cfg.seed, &[rep as u64, 2]),
                        ..cfg.clone()
                    };
                    Some(inference::adjust(&scores, &cfg)?)
                }
                _ => None,
            };
            Ok(EstimateRecord {
                theta: fits.iter().map(|f| f.theta).collect(),
                std_error: Some(fits.iter().map(|f| f.std_error).collect()),
                inference,
            })
        }
    }
}

fn run_rep(study: &StudyConfig, rep: usize) -> RepRecord {
    let dgp = DgpConfig {
        seed: rng::derive_path(study.dgp.seed, &[study.seed, rep as u64]),
        ..study.dgp.clone()
    };
    let outcomes = match generate(&dgp) {
        Ok((dataset, truth)) => {
            let cache = NuisanceCache::new();
            study
                .estimators
                .iter()
                .map(|e| {
                    run_estimator(e, &dataset, &truth, rep, study, &cache)
                        .map_err(|err| err.to_string())
                })
                .collect()
        }
        Err(err) => vec![Err(err.to_string()); study.estimators.len()],
    };
    RepRecord { rep, outcomes }
}

pub fn run_study(study: &StudyConfig) -> Result<McReport> {
    study.validate()?;
    let start = Instant::now();
    let replications: Vec<RepRecord> = (0..study.reps)
        .into_par_iter()
        .map(|rep| run_rep(study, rep))
        .collect();
    let truth = study.dgp.theta_true.clone();
    let z = stats::normal_quantile(1.0 - study.alpha / 2.0);
    let estimators: Vec<EstimatorSummary> = study
        .estimators
        .iter()
        .enumerate()
        .map(|(idx, e)| summarize_estimator(e, idx, &replications, &truth, z, study.alpha))
        .collect();

    let mut flags = Vec::new();
    if study.reps < 2 {
        flags.push("insufficient reps".to_string());
    }
    let mut failed = false;
    for e in &estimators {
        let rate = e.failures as f64 / study.reps as f64;
        if rate > MAX_FAILURE_RATE {
            failed = true;
            flags.push(format!(
                "estimator `{}` failed in {:.1}% of replications",
                e.label,
                100.0 * rate
            ));
        }
    }
    Ok(McReport {
        reps: study.reps,
        alpha: study.alpha,
        truth,
        estimators,
        replications,
        failed,
        flags,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

fn summarize_estimator(
    est: &EstimatorConfig,
    idx: usize,
    reps: &[RepRecord],
    truth: &[f64],
    z: f64,
    alpha: f64,
) -> EstimatorSummary {
    let ok: Vec<&EstimateRecord> = reps
        .iter()
        .filter_map(|r| r.outcomes[idx].as_ref().ok())
        .collect();
    let failures = reps.len() - ok.len();
    let mut flags = Vec::new();
    if ok.is_empty() {
        flags.push("no successful replications".to_string());
    }
    let per_treatment = truth
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let est: Vec<f64> = ok.iter().map(|r| r.theta[j]).collect();
            let mean_estimate = stats::mean(&est);
            let rmse = (est.iter().map(|v| (v - t).powi(2)).sum::<f64>() / est.len() as f64).sqrt();
            let mc_se = if est.len() > 1 {
                stats::sample_sd(&est) / (est.len() as f64).sqrt()
            } else {
                f64::NAN
            };
            let ses: Option<Vec<f64>> = ok
                .iter()
                .map(|r| r.std_error.as_ref().map(|s| s[j]))
                .collect();
            let (coverage, mean_ci_length) = match ses {
                Some(se) if !se.is_empty() && se.iter().all(|&s| s > 0.0) => {
                    let hits = est
                        .iter()
                        .zip(&se)
                        .filter(|(e, s)| (*e - t).abs() <= z * *s)
                        .count();
                    (
                        Some(hits as f64 / est.len() as f64),
                        Some(2.0 * z * stats::mean(&se)),
                    )
                }
                Some(se) if !se.is_empty() => {
                    let flag = "coverage undefined: zero standard errors".to_string();
                    if !flags.contains(&flag) {
                        flags.push(flag);
                    }
                    (None, None)
                }
                _ => (None, None),
            };
            TreatmentSummary {
                label: format!("d{}", j + 1),
                truth: t,
                mean_estimate,
                bias: mean_estimate - t,
                rmse,
                mc_se,
                coverage,
                mean_ci_length,
            }
        })
        .collect();

    let with_inf: Vec<&AdjustedInference> =
        ok.iter().filter_map(|r| r.inference.as_ref()).collect();
    let joint_coverage = (!with_inf.is_empty()).then(|| {
        with_inf.iter().filter(|a| a.band_covers(truth)).count() as f64 / with_inf.len() as f64
    });
    let nulls: Vec<usize> = (0..truth.len()).filter(|&j| truth[j] == 0.0).collect();
    let fwer = (!with_inf.is_empty() && !nulls.is_empty()).then(|| {
        let rate = |pick: fn(&AdjustedInference) -> &Vec<f64>| {
            with_inf
                .iter()
                .filter(|a| nulls.iter().any(|&j| pick(a)[j] <= alpha))
                .count() as f64
                / with_inf.len() as f64
        };
        FwerSummary {
            raw: rate(|a| &a.raw_p),
            mb: rate(|a| &a.mb_p),
            rowo: rate(|a| &a.rowo_p),
            holm: rate(|a| &a.holm_p),
            bonf: rate(|a| &a.bonf_p),
        }
    });
    EstimatorSummary {
        label: est.label.clone(),
        successes: ok.len(),
        failures,
        per_treatment,
        joint_coverage,
        fwer,
        flags,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingSummary {
    pub label: String,
    /// Pairs whose true gap exceeded four times the larger estimated SE.
    pub pairs_considered: usize,
    pub pairs_correct: usize,
    /// `None` when no pair was separated enough to judge.
    pub fraction_correct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityReport {
    pub report: McReport,
    pub ordering: Vec<OrderingSummary>,
}

/// Separation, in estimated standard errors, a true gap must exceed before
/// the pair's ordering is judged.
pub const ORDERING_GAP_SES: f64 = 4.0;

/// Runs a multi-category study and scores how well the effect profile is
/// recovered: pairwise ordering of well-separated categories and joint-band
/// coverage of the full vector.
pub fn heterogeneity_study(study: &StudyConfig) -> Result<HeterogeneityReport> {
    if study.dgp.mechanism != Mechanism::MutuallyExclusive {
        return Err(Error::InvalidParameter(
            "heterogeneity studies need mutually exclusive categories".into(),
        ));
    }
    let mut study = study.clone();
    if study.inference.is_none() {
        study.inference = Some(InferenceConfig {
            alpha: study.alpha,
            ..InferenceConfig::default()
        });
    }
    let report = run_study(&study)?;
    let truth = &report.truth;
    let ordering = study
        .estimators
        .iter()
        .enumerate()
        .map(|(idx, e)| {
            let (mut considered, mut correct) = (0, 0);
            for (_, rec) in report.records(idx) {
                let Some(se) = &rec.std_error else { continue };
                for a in 0..truth.len() {
                    for b in a + 1..truth.len() {
                        let gap = truth[a] - truth[b];
                        if gap.abs() > ORDERING_GAP_SES * se[a].max(se[b]) {
                            considered += 1;
                            if (rec.theta[a] - rec.theta[b]).signum() == gap.signum() {
                                correct += 1;
                            }
                        }
                    }
                }
            }
            OrderingSummary {
                label: e.label.clone(),
                pairs_considered: considered,
                pairs_correct: correct,
                fraction_correct: (considered > 0).then(|| correct as f64 / considered as f64),
            }
        })
        .collect();
    Ok(HeterogeneityReport { report, ordering })
}
