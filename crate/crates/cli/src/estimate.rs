//! `ingest`, `summarize` and `estimate`.

use std::path::Path;

use anyhow::{bail, Context, Result};
use ratingdml::dataset::{
    apply_sample_filters, engineer_features, load_csv, schema, summarize, Cell, Dataset,
    FeatureConfig, RawTable,
};
use ratingdml::dml::{self, CrossFitPlan, FitRecord};
use ratingdml::inference::{self, InferenceConfig, ScoreMatrix};
use ratingdml::rng;
use sha2::{Digest, Sha256};

use crate::artifacts::{self, FailedFit, FitTable, InferenceTable};
use crate::config::{Command, RunConfig, MANIFEST_FILE};

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Reads and filters the input file, checking it against a recorded hash.
fn load_sample(config: &RunConfig) -> Result<(RawTable, RawTable, String)> {
    let path = config.data_path()?;
    let digest = sha256_file(path)?;
    if let Some(expected) = &config.input_sha256 {
        if *expected != digest {
            bail!(
                "{} changed since the manifest was written (sha256 {digest}, expected {expected})",
                path.display()
            );
        }
    }
    let raw = load_csv(path, &schema::fixture_schema(), config.delimiter as u8)
        .with_context(|| format!("cannot load {}", path.display()))?;
    let filtered = apply_sample_filters(&raw, &config.effective_filters())?;
    if filtered.row_count() == 0 {
        bail!("no rows survive the sample filters");
    }
    Ok((raw, filtered, digest))
}

fn features(config: &RunConfig) -> FeatureConfig {
    FeatureConfig {
        outcome: config.outcome,
        granularity: config.granularity,
        include_intcov: config.include_intcov,
        ..FeatureConfig::default()
    }
}

fn prepare_out(config: &RunConfig) -> Result<&Path> {
    let out = config.out_dir()?;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    Ok(out)
}

fn write_manifest(out: &Path, config: &RunConfig, command: Command, digest: String) -> Result<()> {
    let manifest = RunConfig {
        command: Some(command),
        out: None,
        input_sha256: Some(digest),
        ..config.clone()
    };
    artifacts::write(out, MANIFEST_FILE, &manifest.to_toml()?)
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Num(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Missing => String::new(),
    }
}

pub fn run_ingest(config: &RunConfig) -> Result<String> {
    let (raw, filtered, digest) = load_sample(config)?;
    let dataset = engineer_features(&filtered, &features(config))?;
    let out = prepare_out(config)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(filtered.columns().iter().map(|c| c.name.as_str()))?;
    for row in filtered.rows() {
        w.write_record(row.iter().map(cell_text))?;
    }
    artifacts::write(out, "sample.csv", &String::from_utf8(w.into_inner()?)?)?;

    let mut summary = format!(
        "input rows: {}\nsurviving rows: {}\ncovariates: {}\n",
        raw.row_count(),
        filtered.row_count(),
        dataset.covariates.ncols()
    );
    for (name, j) in dataset.treatment_names.iter().zip(0..) {
        summary.push_str(&format!("treated `{name}`: {}\n", dataset.treated_count(j)));
    }
    artifacts::write(out, "ingest.txt", &summary)?;
    write_manifest(out, config, Command::Ingest, digest)?;
    Ok(summary)
}

pub fn run_summarize(config: &RunConfig) -> Result<String> {
    let (_, filtered, digest) = load_sample(config)?;
    let dataset = engineer_features(&filtered, &features(config))?;
    let table = summarize(&dataset, &dataset.treatment_names)?;
    let mut text = format!(
        "{:<14}  {:>7}  {:>7}  {:>7}  {:>7}  {:>6}  {:>7}\n",
        "group", "q1", "median", "mean", "q3", "obs", "share"
    );
    let show = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    for r in &table.rows {
        text.push_str(&format!(
            "{:<14}  {:>7}  {:>7}  {:>7}  {:>7}  {:>6}  {:>7.4}\n",
            r.group,
            show(r.q1),
            show(r.median),
            show(r.mean),
            show(r.q3),
            r.count,
            r.share
        ));
    }
    if config.out.is_some() {
        let out = prepare_out(config)?;
        artifacts::write(out, "summary.csv", &table.to_delimited(','))?;
        artifacts::write(out, "summary.txt", &text)?;
        write_manifest(out, config, Command::Summarize, digest)?;
    }
    Ok(text)
}

/// Strata for stratified folds: the active treatment column, unrated last.
fn strata(dataset: &Dataset) -> Vec<usize> {
    let k = dataset.treatments.ncols();
    dataset
        .treatments
        .row_iter()
        .map(|row| row.iter().position(|&v| v == 1.0).unwrap_or(k))
        .collect()
}

pub struct EstimateOutcome {
    pub fits: FitTable,
    pub inference: Option<InferenceTable>,
    pub warnings: Vec<String>,
}

/// Fits every treatment column of `dataset` and the joint inference.
pub fn estimate_dataset(dataset: &Dataset, config: &RunConfig) -> Result<EstimateOutcome> {
    let g = config.learner(&config.learner_g, rng::derive(config.seed, 1))?;
    let m = config.learner(&config.learner_m, rng::derive(config.seed, 2))?;
    let plan_seed = rng::derive(config.seed, 3);
    let plan = if config.stratify_folds {
        CrossFitPlan::stratified(&strata(dataset), config.folds, config.reps, plan_seed)?
    } else {
        CrossFitPlan::new(dataset.n(), config.folds, config.reps, plan_seed)?
    };
    let treatments: Vec<usize> = (0..dataset.treatments.ncols()).collect();
    let results = dml::fit_multi(dataset, &treatments, &g, &m, &plan, config.algorithm);

    let mut fits = Vec::new();
    let mut table = FitTable {
        observations: dataset.n(),
        records: Vec::new(),
        failures: Vec::new(),
        treated: Vec::new(),
    };
    let mut warnings = Vec::new();
    for (j, result) in treatments.iter().zip(results) {
        let name = &dataset.treatment_names[*j];
        match result {
            Ok(fit) => {
                warnings.extend(fit.warnings.iter().map(|w| format!("{name}: {w}")));
                table.records.push(FitRecord::from_fit(
                    &fit,
                    config.folds,
                    &config.learner_g,
                    &config.learner_m,
                ));
                table.treated.push(dataset.treated_count(*j));
                fits.push(fit);
            }
            Err(err) => table.failures.push(FailedFit {
                treatment: name.clone(),
                error: err.to_string(),
            }),
        }
    }

    let inference = if fits.is_empty() {
        None
    } else {
        let scores = ScoreMatrix::from_fits(&fits.iter().collect::<Vec<_>>())?;
        let cfg = InferenceConfig {
            draws: config.bootstrap,
            alpha: config.alpha,
            seed: rng::derive(config.seed, 4),
            weights: config.weights,
            bootstrap_se: config.bootstrap_se,
        };
        let adj = inference::adjust(&scores, &cfg)?;
        let labels: Vec<String> = table.records.iter().map(|r| r.treatment.clone()).collect();
        Some(InferenceTable::new(
            &labels,
            &table.treated,
            dataset.n(),
            &adj,
        ))
    };
    Ok(EstimateOutcome {
        fits: table,
        inference,
        warnings,
    })
}

/// Writes the fit table, inference table (more than one treatment only),
/// plot series and text renderings of an estimate.
pub fn write_estimate(out: &Path, outcome: &EstimateOutcome) -> Result<()> {
    let fits = &outcome.fits;
    artifacts::write(out, artifacts::FITS_CSV, &artifacts::fits_csv(fits)?)?;
    artifacts::write(out, artifacts::FITS_JSON, &artifacts::to_json(fits)?)?;
    let mut text = artifacts::fits_text(fits);
    for w in &outcome.warnings {
        text.push_str(&format!("warning: {w}\n"));
    }
    artifacts::write(out, artifacts::FITS_TXT, &text)?;

    let labels: Vec<String> = fits.records.iter().map(|r| r.treatment.clone()).collect();
    let estimates: Vec<f64> = fits.records.iter().map(|r| r.theta).collect();
    let mb_p: Vec<f64> = match &outcome.inference {
        Some(inf) => inf.rows.iter().map(|r| r.mb_p).collect(),
        None => Vec::new(),
    };
    artifacts::write(
        out,
        artifacts::PLOT_CSV,
        &artifacts::plot_csv(&labels, &estimates, &mb_p)?,
    )?;

    for stale in [
        artifacts::INFERENCE_CSV,
        artifacts::INFERENCE_JSON,
        artifacts::INFERENCE_TXT,
    ] {
        let path = out.join(stale);
        if path.exists() {
            std::fs::remove_file(&path)?;
        }
    }
    if let Some(inf) = outcome.inference.as_ref().filter(|i| i.rows.len() > 1) {
        artifacts::write(
            out,
            artifacts::INFERENCE_CSV,
            &artifacts::inference_csv(inf)?,
        )?;
        artifacts::write(out, artifacts::INFERENCE_JSON, &artifacts::to_json(inf)?)?;
        artifacts::write(
            out,
            artifacts::INFERENCE_TXT,
            &artifacts::inference_text(inf),
        )?;
    }
    Ok(())
}

/// Runs `estimate` end to end. Returns the text table and whether every
/// treatment was estimated.
pub fn run_estimate(config: &RunConfig) -> Result<(String, bool)> {
    config.validate()?;
    let (_, filtered, digest) = load_sample(config)?;
    let dataset = engineer_features(&filtered, &features(config))?;
    let outcome = estimate_dataset(&dataset, config)?;
    let out = prepare_out(config)?;
    write_estimate(out, &outcome)?;
    write_manifest(out, config, Command::Estimate, digest)?;

    let mut text = artifacts::fits_text(&outcome.fits);
    if let Some(inf) = outcome.inference.as_ref().filter(|i| i.rows.len() > 1) {
        text.push('\n');
        text.push_str(&artifacts::inference_text(inf));
    }
    Ok((text, outcome.fits.failures.is_empty()))
}
