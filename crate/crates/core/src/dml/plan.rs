//! Fold assignments for cross-fitting.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result};

/// Fold labels for every repetition. Labels run from 0 to `folds - 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossFitPlan {
    pub n: usize,
    pub folds: usize,
    pub seed: u64,
    pub assignments: Vec<Vec<usize>>,
}

fn check(n: usize, folds: usize, repetitions: usize) -> Result<()> {
    if folds < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    if folds > n {
        return Err(Error::InvalidParameter(format!(
            "{folds} folds for {n} observations"
        )));
    }
    if repetitions == 0 {
        return Err(Error::InvalidParameter(
            "need at least one repetition".into(),
        ));
    }
    Ok(())
}

/// Labels rows by their position in `order`, cycling through the folds, so
/// fold sizes differ by at most one.
fn label_by_position(order: &[usize], folds: usize) -> Vec<usize> {
    let mut labels = vec![0; order.len()];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = pos % folds;
    }
    labels
}

impl CrossFitPlan {
    /// Independent uniformly random balanced partitions, one per repetition.
    pub fn new(n: usize, folds: usize, repetitions: usize, seed: u64) -> Result<Self> {
        check(n, folds, repetitions)?;
        let assignments = (0..repetitions)
            .map(|r| {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng::stream(seed, r as u64));
                label_by_position(&order, folds)
            })
            .collect();
        Ok(Self {
            n,
            folds,
            seed,
            assignments,
        })
    }

    /// Like [`CrossFitPlan::new`] but spreads each stratum evenly over the
    /// folds. Overall fold sizes still differ by at most one.
    pub fn stratified(
        strata: &[usize],
        folds: usize,
        repetitions: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = strata.len();
        check(n, folds, repetitions)?;
        let assignments = (0..repetitions)
            .map(|r| {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng::stream(seed, r as u64));
                // Stable sort keeps the shuffled order within each stratum.
                order.sort_by_key(|&i| strata[i]);
                label_by_position(&order, folds)
            })
            .collect();
        Ok(Self {
            n,
            folds,
            seed,
            assignments,
        })
    }

    /// A single fold holding every row: nuisances are fitted and predicted
    /// in-sample. Only useful for checking estimators against textbook
    /// full-sample formulas.
    pub fn no_split(n: usize) -> Self {
        Self {
            n,
            folds: 1,
            seed: 0,
            assignments: vec![vec![0; n]],
        }
    }

    pub fn repetitions(&self) -> usize {
        self.assignments.len()
    }

    pub fn labels(&self, repetition: usize) -> &[usize] {
        &self.assignments[repetition]
    }

    pub fn fold_sizes(&self, repetition: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.folds];
        for &k in &self.assignments[repetition] {
            sizes[k] += 1;
        }
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_sizes() {
        let p = CrossFitPlan::new(10, 5, 2, 1).unwrap();
        assert_eq!(p.fold_sizes(0), vec![2; 5]);
        let p = CrossFitPlan::new(11, 5, 1, 1).unwrap();
        let mut sizes = p.fold_sizes(0);
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![3, 2, 2, 2, 2]);
    }

    #[test]
    fn reproducible_and_independent_across_repetitions() {
        let a = CrossFitPlan::new(50, 5, 3, 9).unwrap();
        let b = CrossFitPlan::new(50, 5, 3, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.labels(0), a.labels(1));
        assert_ne!(a, CrossFitPlan::new(50, 5, 3, 10).unwrap());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(CrossFitPlan::new(4, 5, 1, 0).is_err());
        assert!(CrossFitPlan::new(10, 1, 1, 0).is_err());
        assert!(CrossFitPlan::new(10, 2, 0, 0).is_err());
    }

    #[test]
    fn stratified_spreads_rare_group() {
        let mut strata = vec![0usize; 40];
        for s in strata.iter_mut().take(5) {
            *s = 1;
        }
        let p = CrossFitPlan::stratified(&strata, 5, 2, 3).unwrap();
        for r in 0..2 {
            let mut seen = [0usize; 5];
            for i in 0..5 {
                seen[p.labels(r)[i]] += 1;
            }
            assert_eq!(seen, [1; 5]);
            assert_eq!(p.fold_sizes(r), vec![8; 5]);
        }
    }
}
