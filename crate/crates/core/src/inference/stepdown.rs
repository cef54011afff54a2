//! Step-down and single-step p-value adjustments.

use nalgebra::DMatrix;

use super::bootstrap::{bootstrap_statistics, exceedance, WeightScheme};
use super::ScoreMatrix;
use crate::Result;

/// Indices sorted by `key` descending, ties by index.
fn descending(key: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..key.len()).collect();
    order.sort_by(|&a, &b| key[b].total_cmp(&key[a]).then(a.cmp(&b)));
    order
}

/// Romano-Wolf step-down p-values from precomputed bootstrap draws.
pub fn romano_wolf_from_draws(t_values: &[f64], draws: &DMatrix<f64>) -> Vec<f64> {
    let p = t_values.len();
    let abs_t: Vec<f64> = t_values.iter().map(|t| t.abs()).collect();
    let order = descending(&abs_t);
    // suffix_max[s][b]: max |T| over order[s..] in draw b.
    let b = draws.nrows();
    let mut suffix = vec![0.0_f64; b];
    let mut per_step = vec![Vec::new(); p];
    for s in (0..p).rev() {
        let j = order[s];
        for (m, v) in suffix.iter_mut().zip(draws.column(j).iter()) {
            *m = m.max(v.abs());
        }
        let mut sorted = suffix.clone();
        sorted.sort_by(f64::total_cmp);
        per_step[s] = sorted;
    }
    let mut adjusted = vec![0.0; p];
    let mut running = 0.0_f64;
    for s in 0..p {
        let j = order[s];
        running = running.max(exceedance(&per_step[s], abs_t[j]));
        adjusted[j] = running;
    }
    adjusted
}

pub fn romano_wolf(
    scores: &ScoreMatrix,
    draws: usize,
    seed: u64,
    weights: WeightScheme,
) -> Result<Vec<f64>> {
    let stats = bootstrap_statistics(scores, draws, seed, weights)?;
    Ok(romano_wolf_from_draws(&scores.t_values(), &stats))
}

pub fn bonferroni(raw_p: &[f64]) -> Vec<f64> {
    let p = raw_p.len() as f64;
    raw_p.iter().map(|&r| (p * r).min(1.0)).collect()
}

pub fn holm(raw_p: &[f64]) -> Vec<f64> {
    let p = raw_p.len();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| raw_p[a].total_cmp(&raw_p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; p];
    let mut running = 0.0_f64;
    for (k, &j) in order.iter().enumerate() {
        running = running.max(((p - k) as f64 * raw_p[j]).min(1.0));
        adjusted[j] = running;
    }
    adjusted
}
