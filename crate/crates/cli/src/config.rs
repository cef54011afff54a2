//! Run configuration: one TOML document, fully defaulted, overridable by
//! command-line flags. A run manifest is the same document with the input
//! hash filled in.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ratingdml::dataset::{FilterRules, OutcomeKind, TreatmentGranularity};
use ratingdml::dml::Algorithm;
use ratingdml::inference::WeightScheme;
use ratingdml::learners::{preset, LearnerSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Ingest,
    Summarize,
    Estimate,
    Simulate,
    Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub delimiter: char,
    pub outcome: OutcomeKind,
    pub granularity: TreatmentGranularity,
    pub learner_g: String,
    pub learner_m: String,
    pub folds: usize,
    pub reps: usize,
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub bootstrap: usize,
    pub weights: WeightScheme,
    /// Report the bootstrap standard deviation in the MB standard-error column.
    pub bootstrap_se: bool,
    pub seed: u64,
    pub include_intcov: bool,
    pub stratify_folds: bool,
    pub filters: FilterRules,
    /// Custom learner definitions, usable by name like the presets.
    pub learners: BTreeMap<String, LearnerSpec>,
    /// Content hash of `data`, recorded in manifests and checked on rerun.
    pub input_sha256: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            data: None,
            out: None,
            delimiter: ',',
            outcome: OutcomeKind::Lda,
            granularity: TreatmentGranularity::Any,
            learner_g: "rf-g".into(),
            learner_m: "rf-m".into(),
            folds: 5,
            reps: 2,
            algorithm: Algorithm::Dml2,
            alpha: 0.05,
            bootstrap: 2000,
            weights: WeightScheme::Gaussian,
            bootstrap_se: false,
            seed: 0,
            include_intcov: false,
            stratify_folds: false,
            filters: FilterRules::default(),
            learners: BTreeMap::new(),
            input_sha256: None,
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.toml";

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).context("invalid run configuration")?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delimiter.is_ascii() {
            bail!("delimiter must be a single ASCII character");
        }
        if self.folds < 2 {
            bail!("need at least 2 folds, got {}", self.folds);
        }
        if self.reps == 0 {
            bail!("need at least one repetition");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha {} outside (0, 1)", self.alpha);
        }
        if self.bootstrap < 100 {
            bail!("need at least 100 bootstrap draws, got {}", self.bootstrap);
        }
        self.filters.validate()?;
        for name in [&self.learner_g, &self.learner_m] {
            self.learner(name, 0)?.validate()?;
        }
        Ok(())
    }

    /// Resolves a learner name against custom definitions first, then the
    /// built-in presets.
    pub fn learner(&self, name: &str, seed: u64) -> Result<LearnerSpec> {
        match self.learners.get(name) {
            Some(spec) => Ok(spec.clone().with_seed(seed)),
            None => Ok(preset(name, seed)?),
        }
    }

    /// Sample rules in effect: the interest-coverage restriction applies
    /// whenever the coverage covariate is used.
    pub fn effective_filters(&self) -> FilterRules {
        let mut rules = self.filters.clone();
        if self.include_intcov && rules.min_interest_expense_kusd.is_none() {
            rules.min_interest_expense_kusd =
                FilterRules::with_interest_coverage().min_interest_expense_kusd;
        }
        rules
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data
            .as_deref()
            .context("no input data given (--data or `data` in the config)")
    }

    pub fn out_dir(&self) -> Result<&Path> {
        self.out
            .as_deref()
            .context("no output directory given (--out or `out` in the config)")
    }
}
