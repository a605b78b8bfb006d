//! Bagged CART trees with per-split feature subsampling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numkernel::{derive_seed, Matrix, SeededRng};

use super::argmax_counts;
use super::tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features examined per split; `None` means `ceil(sqrt(d))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_trees < 1 {
            return Err("n_trees must be >= 1".into());
        }
        self.tree_params(1).validate()
    }

    pub fn tree_params(&self, n_features: usize) -> TreeParams {
        let default = (n_features as f64).sqrt().ceil() as usize;
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
            max_features: Some(self.max_features.unwrap_or(default).max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
    pub n_classes: usize,
}

/// Seed of tree `t` in a forest seeded with `seed`.
pub fn tree_seed(seed: u64, t: usize) -> u64 {
    derive_seed(seed, t as u64)
}

/// `n` draws with replacement from `0..n`.
pub fn bootstrap_indices(rng: &mut SeededRng, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.below(n)).collect()
}

impl RandomForest {
    /// Trees are grown in parallel; each owns a generator derived from
    /// `(seed, tree index)`, so the forest does not depend on scheduling.
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &ForestParams, seed: u64) -> Self {
        let tree_params = params.tree_params(x.cols());
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = SeededRng::new(tree_seed(seed, t));
                let rows = bootstrap_indices(&mut rng, x.rows());
                DecisionTree::fit_rows(x, y, &rows, n_classes, &tree_params, &mut rng)
            })
            .collect();
        Self {
            trees,
            n_features: x.cols(),
            n_classes,
        }
    }

    pub fn votes(&self, row: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1;
        }
        votes
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        argmax_counts(&self.votes(row))
    }

    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        let n = self.trees.len() as f64;
        self.votes(row).into_iter().map(|v| v as f64 / n).collect()
    }
}
