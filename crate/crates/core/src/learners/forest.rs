//! Bagged random forests.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use super::tree::{Presorted, Tree, TreeParams};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestFit {
    pub forest: Forest,
    /// Out-of-bag prediction per training row, `None` when the row was in
    /// every bootstrap sample.
    pub oob: Vec<Option<f64>>,
}

/// Bootstrap counts for tree `index`; the same stream continues into the
/// tree's feature sampling.
fn bootstrap(n: usize, rng: &mut rng::StreamRng) -> Vec<u32> {
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1;
    }
    counts
}

pub fn fit_forest(
    x: &DMatrix<f64>,
    y: &[f64],
    num_trees: usize,
    params: &TreeParams,
    seed: u64,
) -> ForestFit {
    let n = y.len();
    let presorted = Presorted::new(x);
    let grown: Vec<(Tree, Vec<u32>)> = (0..num_trees)
        .into_par_iter()
        .map(|t| {
            let mut stream = rng::stream(seed, t as u64);
            let counts = bootstrap(n, &mut stream);
            let tree = Tree::grow(x, y, &counts, &presorted, params, &mut stream);
            let out: Vec<u32> = (0..n as u32).filter(|&i| counts[i as usize] == 0).collect();
            (tree, out)
        })
        .collect();

    let mut sum = vec![0.0; n];
    let mut hits = vec![0u32; n];
    for (tree, out) in &grown {
        for &i in out {
            sum[i as usize] += tree.predict_row(x, i as usize);
            hits[i as usize] += 1;
        }
    }
    let oob = sum
        .iter()
        .zip(&hits)
        .map(|(&s, &h)| (h > 0).then(|| s / h as f64))
        .collect();
    ForestFit {
        forest: Forest {
            trees: grown.into_iter().map(|(t, _)| t).collect(),
        },
        oob,
    }
}

impl Forest {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let k = self.trees.len() as f64;
        (0..x.nrows())
            .into_par_iter()
            .map(|i| self.trees.iter().map(|t| t.predict_row(x, i)).sum::<f64>() / k)
            .collect()
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}
