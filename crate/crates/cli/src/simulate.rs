//! `simulate`: Monte Carlo studies described by a TOML study file, with
//! optional pass/fail checks on the resulting report.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use ratingdml::inference::InferenceConfig;
use ratingdml::learners::{preset, LearnerSpec};
use ratingdml::rng;
use ratingdml::synthetic::{
    heterogeneity_study, run_study, DgpConfig, EstimatorConfig, HeterogeneityReport, McReport,
    Method, StudyConfig,
};
use serde::{Deserialize, Serialize};

use crate::artifacts;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    #[default]
    Standard,
    /// Adds pairwise ordering statistics; needs mutually exclusive categories.
    Heterogeneity,
}

/// A preset name or an inline learner definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LearnerRef {
    Preset(String),
    Spec(LearnerSpec),
}

impl LearnerRef {
    fn resolve(&self, seed: u64) -> Result<LearnerSpec> {
        match self {
            LearnerRef::Preset(name) => Ok(preset(name, seed)?),
            LearnerRef::Spec(spec) => Ok(spec.clone().with_seed(seed)),
        }
    }
}

fn constant() -> LearnerRef {
    LearnerRef::Preset("constant".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorEntry {
    pub label: String,
    pub method: Method,
    #[serde(default = "constant")]
    pub learner_g: LearnerRef,
    #[serde(default = "constant")]
    pub learner_m: LearnerRef,
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

/// Thresholds on one estimator's summary. Unset fields are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Check {
    pub estimator: String,
    pub max_abs_bias: Option<f64>,
    pub min_coverage: Option<f64>,
    pub max_coverage: Option<f64>,
    pub min_joint_coverage: Option<f64>,
    pub max_fwer_mb: Option<f64>,
    pub max_fwer_bonf: Option<f64>,
    pub min_ordering: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyFile {
    #[serde(default)]
    pub kind: StudyKind,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub dgp: DgpConfig,
    #[serde(default)]
    pub inference: Option<InferenceConfig>,
    pub estimators: Vec<EstimatorEntry>,
    #[serde(default)]
    pub checks: Vec<Check>,
}

fn default_alpha() -> f64 {
    0.05
}

impl StudyFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).context("invalid study file")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read study {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Outcome learners share one seed and propensity learners another, so
    /// estimators differing only in algorithm reuse each other's nuisances.
    pub fn study(&self) -> Result<StudyConfig> {
        let g_seed = rng::derive(self.seed, 1);
        let m_seed = rng::derive(self.seed, 2);
        let estimators = self
            .estimators
            .iter()
            .map(|e| {
                Ok(EstimatorConfig {
                    label: e.label.clone(),
                    method: e.method.clone(),
                    learner_g: e.learner_g.resolve(g_seed)?,
                    learner_m: e.learner_m.resolve(m_seed)?,
                    folds: e.folds,
                    repetitions: e.repetitions,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let study = StudyConfig {
            dgp: self.dgp.clone(),
            estimators,
            reps: self.reps,
            seed: self.seed,
            alpha: self.alpha,
            inference: self.inference.clone(),
        };
        study.validate()?;
        Ok(study)
    }
}

pub struct StudyOutcome {
    pub report: McReport,
    pub ordering: Option<Vec<ratingdml::synthetic::OrderingSummary>>,
    pub failures: Vec<String>,
}

pub fn execute(file: &StudyFile) -> Result<StudyOutcome> {
    let study = file.study()?;
    let (report, ordering) = match file.kind {
        StudyKind::Standard => (run_study(&study)?, None),
        StudyKind::Heterogeneity => {
            let HeterogeneityReport { report, ordering } = heterogeneity_study(&study)?;
            (report, Some(ordering))
        }
    };
    let mut failures = report
        .flags
        .iter()
        .filter(|_| report.failed)
        .cloned()
        .collect::<Vec<_>>();
    failures.extend(evaluate_checks(&file.checks, &report, ordering.as_deref()));
    Ok(StudyOutcome {
        report,
        ordering,
        failures,
    })
}

/// Messages for every violated threshold.
pub fn evaluate_checks(
    checks: &[Check],
    report: &McReport,
    ordering: Option<&[ratingdml::synthetic::OrderingSummary]>,
) -> Vec<String> {
    let mut failed = Vec::new();
    for check in checks {
        let label = &check.estimator;
        let Some(est) = report.estimator(label) else {
            failed.push(format!("check names unknown estimator `{label}`"));
            continue;
        };
        for t in &est.per_treatment {
            if let Some(max) = check.max_abs_bias {
                if t.bias.is_nan() || t.bias.abs() >= max {
                    failed.push(format!(
                        "`{label}` {}: |bias| {:.4} not below {max}",
                        t.label,
                        t.bias.abs()
                    ));
                }
            }
            if check.min_coverage.is_some() || check.max_coverage.is_some() {
                match t.coverage {
                    Some(c) => {
                        let lo = check.min_coverage.unwrap_or(0.0);
                        let hi = check.max_coverage.unwrap_or(1.0);
                        if !(lo..=hi).contains(&c) {
                            failed.push(format!(
                                "`{label}` {}: coverage {c:.3} outside [{lo}, {hi}]",
                                t.label
                            ));
                        }
                    }
                    None => failed.push(format!("`{label}` {}: coverage undefined", t.label)),
                }
            }
        }
        if let Some(min) = check.min_joint_coverage {
            match est.joint_coverage {
                Some(c) if c >= min => {}
                Some(c) => failed.push(format!("`{label}`: joint coverage {c:.3} below {min}")),
                None => failed.push(format!("`{label}`: joint coverage undefined")),
            }
        }
        let fwer_limits = [
            ("multiplier", check.max_fwer_mb),
            ("Bonferroni", check.max_fwer_bonf),
        ];
        for (name, limit) in fwer_limits {
            let Some(max) = limit else { continue };
            let value = est
                .fwer
                .as_ref()
                .map(|f| if name == "Bonferroni" { f.bonf } else { f.mb });
            match value {
                Some(v) if v <= max => {}
                Some(v) => failed.push(format!("`{label}`: {name} FWER {v:.3} above {max}")),
                None => failed.push(format!("`{label}`: {name} FWER undefined")),
            }
        }
        if let Some(min) = check.min_ordering {
            let frac = ordering
                .and_then(|o| o.iter().find(|s| &s.label == label))
                .and_then(|s| s.fraction_correct);
            match frac {
                Some(f) if f >= min => {}
                Some(f) => failed.push(format!("`{label}`: ordering {f:.3} below {min}")),
                None => failed.push(format!("`{label}`: no separated pairs to order")),
            }
        }
    }
    failed
}

fn summary_csv(report: &McReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "estimator",
        "treatment",
        "truth",
        "mean_estimate",
        "bias",
        "rmse",
        "mc_se",
        "coverage",
        "mean_ci_length",
        "successes",
        "failures",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for e in &report.estimators {
        for t in &e.per_treatment {
            w.write_record([
                e.label.clone(),
                t.label.clone(),
                t.truth.to_string(),
                t.mean_estimate.to_string(),
                t.bias.to_string(),
                t.rmse.to_string(),
                t.mc_se.to_string(),
                opt(t.coverage),
                opt(t.mean_ci_length),
                e.successes.to_string(),
                e.failures.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summary_text(outcome: &StudyOutcome) -> String {
    let report = &outcome.report;
    let mut out = format!("{} replications, alpha {}\n", report.reps, report.alpha);
    for e in &report.estimators {
        let _ = writeln!(
            out,
            "\n{} ({} ok, {} failed)",
            e.label, e.successes, e.failures
        );
        for t in &e.per_treatment {
            let cov = t.coverage.map_or_else(|| "-".into(), |c| format!("{c:.3}"));
            let _ = writeln!(
                out,
                "  {:<4} truth {:>8.4}  mean {:>8.4}  bias {:>8.4}  rmse {:>7.4}  coverage {}",
                t.label, t.truth, t.mean_estimate, t.bias, t.rmse, cov
            );
        }
        if let Some(c) = e.joint_coverage {
            let _ = writeln!(out, "  joint coverage {c:.3}");
        }
        if let Some(f) = &e.fwer {
            let _ = writeln!(
                out,
                "  FWER raw {:.3}  MB {:.3}  RoWo {:.3}  Holm {:.3}  Bonf {:.3}",
                f.raw, f.mb, f.rowo, f.holm, f.bonf
            );
        }
        for flag in &e.flags {
            let _ = writeln!(out, "  flag: {flag}");
        }
    }
    if let Some(ord) = &outcome.ordering {
        for o in ord {
            let frac = o
                .fraction_correct
                .map_or_else(|| "-".into(), |f| format!("{f:.3}"));
            let _ = writeln!(
                out,
                "\nordering `{}`: {} of {} separated pairs correct ({frac})",
                o.label, o.pairs_correct, o.pairs_considered
            );
        }
    }
    for flag in &report.flags {
        let _ = writeln!(out, "flag: {flag}");
    }
    if outcome.failures.is_empty() {
        out.push_str("\nall checks passed\n");
    } else {
        out.push_str("\nfailed checks:\n");
        for f in &outcome.failures {
            let _ = writeln!(out, "  {f}");
        }
    }
    out
}

pub fn write_study(out: &Path, file: &StudyFile, outcome: &StudyOutcome) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    artifacts::write(out, "report.json", &artifacts::to_json(&outcome.report)?)?;
    if let Some(ord) = &outcome.ordering {
        artifacts::write(out, "ordering.json", &artifacts::to_json(ord)?)?;
    }
    artifacts::write(out, "summary.csv", &summary_csv(&outcome.report)?)?;
    artifacts::write(out, "summary.txt", &summary_text(outcome))?;
    artifacts::write(out, "study.toml", &toml::to_string(file)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
reps = 4
seed = 3

[dgp]
n = 300
p_covariates = 5
g_shape = "linear"
m_shape = "linear"

[[estimators]]
label = "dml"
method = { kind = "dml", algorithm = "dml2" }
learner_g = "ols"
learner_m = "ols"

[[estimators]]
label = "oracle"
method = { kind = "truth" }

[[checks]]
estimator = "dml"
max_abs_bias = 0.5
"#;

    #[test]
    fn parses_and_runs_small_study() {
        let file = StudyFile::parse(SMALL).unwrap();
        assert_eq!(file.estimators[1].learner_g, constant());
        let outcome = execute(&file).unwrap();
        assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
        assert_eq!(outcome.report.reps, 4);
        let text = summary_text(&outcome);
        assert!(text.contains("all checks passed"));
    }

    #[test]
    fn violated_threshold_is_reported() {
        let mut file = StudyFile::parse(SMALL).unwrap();
        file.checks[0].max_abs_bias = Some(0.0);
        let outcome = execute(&file).unwrap();
        assert_eq!(outcome.failures.len(), 1);
        assert!(outcome.failures[0].contains("|bias|"));
    }

    #[test]
    fn unknown_estimator_in_check() {
        let mut file = StudyFile::parse(SMALL).unwrap();
        file.checks[0].estimator = "nope".into();
        let outcome = execute(&file).unwrap();
        assert!(outcome.failures[0].contains("unknown estimator"));
    }

    #[test]
    fn inline_learner_definition() {
        let text = SMALL.replace(
            "learner_g = \"ols\"",
            "learner_g = { kind = \"ridge\", seed = 0, hyperparameters = { penalty = { fixed = 1.0 } } }",
        );
        let file = StudyFile::parse(&text).unwrap();
        assert!(matches!(file.estimators[0].learner_g, LearnerRef::Spec(_)));
        file.study().unwrap();
    }
}
