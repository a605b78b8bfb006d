//! Brute-force k-nearest neighbours.

use serde::{Deserialize, Serialize};

use crate::numkernel::Matrix;
use crate::persist::F64Blob;

use super::argmax_counts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

impl KnnParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.k < 1 {
            return Err("k must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub n_train: usize,
    train_x: F64Blob,
    pub train_y: Vec<usize>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl Knn {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &KnnParams) -> Self {
        Self {
            k: params.k,
            n_features: x.cols(),
            n_classes,
            n_train: x.rows(),
            train_x: F64Blob(x.as_slice().to_vec()),
            train_y: y.to_vec(),
        }
    }

    pub(crate) fn check_storage(&self) -> Result<(), String> {
        if self.train_x.0.len() != self.n_train * self.n_features || self.train_y.len() != self.n_train {
            return Err("stored training set does not match its declared shape".into());
        }
        if self.k > self.n_train || self.train_y.iter().any(|&c| c >= self.n_classes) {
            return Err("stored neighbour model is inconsistent".into());
        }
        Ok(())
    }

    fn train_row(&self, i: usize) -> &[f64] {
        &self.train_x.0[i * self.n_features..(i + 1) * self.n_features]
    }

    /// Indices of the `k` nearest training rows, nearest first; equal
    /// distances are ordered by training index.
    pub fn neighbors(&self, query: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = (0..self.n_train)
            .map(|i| (euclidean(query, self.train_row(i)), i))
            .collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        let k = self.k.min(dist.len());
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, order);
            dist.truncate(k);
        }
        dist.sort_by(order);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    pub fn votes(&self, query: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.n_classes];
        for i in self.neighbors(query) {
            votes[self.train_y[i]] += 1;
        }
        votes
    }

    pub fn predict_row(&self, query: &[f64]) -> usize {
        argmax_counts(&self.votes(query))
    }

    pub fn proba_row(&self, query: &[f64]) -> Vec<f64> {
        let k = self.k as f64;
        self.votes(query).into_iter().map(|v| v as f64 / k).collect()
    }
}
