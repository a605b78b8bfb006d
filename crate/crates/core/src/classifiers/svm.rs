//! Linear one-vs-rest SVM trained by stochastic sub-gradient descent.
//!
//! Each class `c` gets `(w_c, b_c)` minimizing
//! `lambda/2 * ||w||^2 + mean_i max(0, 1 - s_i (w . x_i + b))` with
//! `s_i = +1` for class `c` and `-1` otherwise. Updates follow the Pegasos
//! schedule `eta_t = 1 / (lambda * t)` over seeded shuffled mini-batches;
//! the bias is not regularized. Sub-gradient steps are not descent steps,
//! so the objective is evaluated after every epoch and the lowest-objective
//! iterate is the one kept.

use serde::{Deserialize, Serialize};

use crate::numkernel::{derive_seed, dot, Matrix, SeededRng};
use crate::persist::F64Blob;

use super::argmax_values;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmParams {
    /// Regularization strength `lambda`; step size is `1/(lambda * t)`.
    pub c: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 100,
            batch_size: 1,
        }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(format!("C must be positive, got {}", self.c));
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return Err("epochs and batch_size must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub n_features: usize,
    pub n_classes: usize,
    /// `n_classes x n_features`, row-major.
    weights: F64Blob,
    pub bias: Vec<f64>,
}

/// Objective after each epoch: of the latest iterate, and of the best
/// iterate so far (the one the model keeps).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectiveTrace {
    pub iterate: Vec<f64>,
    pub kept: Vec<f64>,
}

/// Regularized hinge objective of one binary sub-problem.
pub fn objective(w: &[f64], b: f64, x: &Matrix, signs: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = signs
        .iter()
        .enumerate()
        .map(|(i, &s)| (1.0 - s * (dot(w, x.row(i)) + b)).max(0.0))
        .sum();
    0.5 * lambda * dot(w, w) + hinge / x.rows() as f64
}

impl LinearSvm {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, params: &SvmParams, seed: u64) -> Self {
        Self::fit_with_history(x, y, n_classes, params, seed).0
    }

    /// Also returns the per-class objective traces.
    pub fn fit_with_history(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        params: &SvmParams,
        seed: u64,
    ) -> (Self, Vec<ObjectiveTrace>) {
        let d = x.cols();
        let lambda = params.c;
        let mut weights = Vec::with_capacity(n_classes * d);
        let mut bias = Vec::with_capacity(n_classes);
        let mut history = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            let signs: Vec<f64> = y.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            let mut rng = SeededRng::new(derive_seed(seed, c as u64));
            let mut w = vec![0.0; d];
            let mut b = 0.0;
            let mut step = vec![0.0; d];
            let mut t = 0u64;
            let mut best = (w.clone(), b, objective(&w, b, x, &signs, lambda));
            let mut trace = ObjectiveTrace::default();
            for _ in 0..params.epochs {
                let order = rng.permutation(x.rows());
                for batch in order.chunks(params.batch_size) {
                    t += 1;
                    let eta = 1.0 / (lambda * t as f64);
                    step.fill(0.0);
                    let mut step_b = 0.0;
                    for &i in batch {
                        let row = x.row(i);
                        if signs[i] * (dot(&w, row) + b) < 1.0 {
                            for (s, &v) in step.iter_mut().zip(row) {
                                *s += signs[i] * v;
                            }
                            step_b += signs[i];
                        }
                    }
                    let scale = eta / batch.len() as f64;
                    for (wi, s) in w.iter_mut().zip(&step) {
                        *wi = (1.0 - eta * lambda) * *wi + scale * s;
                    }
                    b += scale * step_b;
                }
                let f = objective(&w, b, x, &signs, lambda);
                if f < best.2 {
                    best = (w.clone(), b, f);
                }
                trace.iterate.push(f);
                trace.kept.push(best.2);
            }
            weights.extend_from_slice(&best.0);
            bias.push(best.1);
            history.push(trace);
        }
        (
            Self {
                n_features: d,
                n_classes,
                weights: F64Blob(weights),
                bias,
            },
            history,
        )
    }

    pub(crate) fn check_storage(&self) -> Result<(), String> {
        if self.weights.0.len() != self.n_classes * self.n_features || self.bias.len() != self.n_classes {
            return Err("stored SVM weights do not match the declared shape".into());
        }
        Ok(())
    }

    pub fn class_weights(&self, c: usize) -> &[f64] {
        &self.weights.0[c * self.n_features..(c + 1) * self.n_features]
    }

    pub fn decision_values(&self, row: &[f64]) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| dot(self.class_weights(c), row) + self.bias[c])
            .collect()
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        argmax_values(&self.decision_values(row))
    }

    /// Decision values min-max mapped to `[0, 1]` within the row; a row of
    /// equal values maps to `1/K` everywhere.
    pub fn scores_row(&self, row: &[f64]) -> Vec<f64> {
        let v = self.decision_values(row);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            v.iter().map(|x| (x - lo) / (hi - lo)).collect()
        } else {
            vec![1.0 / self.n_classes as f64; self.n_classes]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_by_hand() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [0.0, 2.0]]).unwrap();
        // margins: 1*(0.5+0) = 0.5 -> hinge 0.5; -1*(0+0) = 0 -> hinge 1
        let f = objective(&[0.5, 0.0], 0.0, &x, &[1.0, -1.0], 2.0);
        assert!((f - (0.25 + 0.75)).abs() < 1e-15);
    }

    #[test]
    fn kept_objective_bounds_every_iterate() {
        let x = Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.2], [2.0, 1.5], [3.0, 0.1], [0.5, 2.0]]).unwrap();
        let (model, traces) = LinearSvm::fit_with_history(&x, &[0, 1, 1, 0, 0], 2, &SvmParams::default(), 1);
        for (c, t) in traces.iter().enumerate() {
            let signs: Vec<f64> = [0, 1, 1, 0, 0].iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
            let last = *t.kept.last().unwrap();
            assert!(t.iterate.iter().all(|&f| last <= f));
            let f = objective(model.class_weights(c), model.bias[c], &x, &signs, 1.0);
            assert_eq!(f, last);
        }
    }
}
