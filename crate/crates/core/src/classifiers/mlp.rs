//! Dense softmax classifier trained with cross-entropy and Adam.
//!
//! Reuses the autoencoder's layer stack and optimizer.

use serde::{Deserialize, Serialize};

use crate::autoencoder::{adam_step, grad_slices, Activation, AdamConfig, AdamState, DenseNet, LayerGrads};
use crate::numkernel::{derive_seed_str, Matrix, SeededRng, ShapeError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![64, 32],
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 200,
            patience: 10,
            validation_fraction: 0.1,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.hidden.iter().any(|&h| h == 0) {
            return Err("hidden layer widths must be >= 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err("learning_rate must be positive".into());
        }
        if self.batch_size < 1 || self.max_epochs < 1 {
            return Err("batch_size and max_epochs must be >= 1".into());
        }
        if self.patience < 1 || self.patience > self.max_epochs {
            return Err(format!("patience must be in 1..={}", self.max_epochs));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err("validation_fraction must be in (0, 1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    pub net: DenseNet,
    pub n_features: usize,
    pub n_classes: usize,
    /// Epochs run and the epoch whose weights were kept.
    pub epochs_run: usize,
    pub best_epoch: usize,
}

/// Row-wise softmax, shifted by the row max.
pub fn softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

/// Mean cross-entropy of `net` on `(x, y)`.
pub fn cross_entropy(net: &DenseNet, x: &Matrix, y: &[usize]) -> Result<f64, ShapeError> {
    let logits = net.forward(x)?;
    Ok(cross_entropy_from_logits(&logits, y))
}

fn cross_entropy_from_logits(logits: &Matrix, y: &[usize]) -> f64 {
    let mut total = 0.0;
    for (r, &label) in y.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[label];
    }
    total / y.len() as f64
}

/// Mean cross-entropy and its gradient with respect to every parameter.
pub fn loss_and_gradients(net: &DenseNet, x: &Matrix, y: &[usize]) -> Result<(f64, Vec<LayerGrads>), ShapeError> {
    let trace = net.forward_trace(x)?;
    let logits = trace.output();
    let loss = cross_entropy_from_logits(logits, y);
    let mut d = softmax(logits);
    let b = y.len() as f64;
    for (r, &label) in y.iter().enumerate() {
        let row = d.row_mut(r);
        row[label] -= 1.0;
        for v in row.iter_mut() {
            *v /= b;
        }
    }
    let (grads, _) = net.backward(&trace, &d)?;
    Ok((loss, grads))
}

impl MlpClassifier {
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        params: &MlpParams,
        seed: u64,
    ) -> Result<Self, String> {
        let n = x.rows();
        let mut rng = SeededRng::new(derive_seed_str(seed, "mlp/holdout"));
        let order = rng.permutation(n);
        let n_val = ((params.validation_fraction * n as f64).round() as usize).clamp(1, n - 1);
        let (val_rows, train_rows) = order.split_at(n_val);
        let mut train_rows = train_rows.to_vec();
        train_rows.sort_unstable();
        let mut val_rows = val_rows.to_vec();
        val_rows.sort_unstable();
        let val_x = x.select_rows(&val_rows);
        let val_y: Vec<usize> = val_rows.iter().map(|&i| y[i]).collect();

        let mut dims = vec![x.cols()];
        dims.extend(&params.hidden);
        dims.push(n_classes);
        let mut init_rng = SeededRng::new(derive_seed_str(seed, "mlp/init"));
        let mut net = DenseNet::init(&mut init_rng, &dims, Activation::Tanh, Activation::Linear);
        let adam = AdamConfig {
            learning_rate: params.learning_rate,
            ..AdamConfig::default()
        };
        let mut state = AdamState::for_params(adam, &net.param_slices());
        let mut shuffle = SeededRng::new(derive_seed_str(seed, "mlp/shuffle"));

        let mut best_net = net.clone();
        let mut best_loss = f64::INFINITY;
        let mut best_epoch = 0;
        let mut epochs_run = 0;
        let mut since_best = 0;
        for epoch in 1..=params.max_epochs {
            let mut order = train_rows.clone();
            shuffle.shuffle(&mut order);
            for chunk in order.chunks(params.batch_size) {
                let bx = x.select_rows(chunk);
                let by: Vec<usize> = chunk.iter().map(|&i| y[i]).collect();
                let (loss, grads) = loss_and_gradients(&net, &bx, &by).map_err(|e| e.to_string())?;
                if !loss.is_finite() {
                    return Err(format!("non-finite MLP loss at epoch {epoch}"));
                }
                adam_step(&mut net.param_slices_mut(), &grad_slices(&grads), &mut state);
            }
            epochs_run = epoch;
            let val_loss = cross_entropy(&net, &val_x, &val_y).map_err(|e| e.to_string())?;
            if val_loss < best_loss {
                best_loss = val_loss;
                best_net = net.clone();
                best_epoch = epoch;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= params.patience {
                    break;
                }
            }
        }
        Ok(Self {
            net: best_net,
            n_features: x.cols(),
            n_classes,
            epochs_run,
            best_epoch,
        })
    }

    pub fn proba(&self, x: &Matrix) -> Result<Matrix, ShapeError> {
        Ok(softmax(&self.net.forward(x)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_rows_sum_to_one() {
        let p = softmax(&Matrix::from_rows(&[[1.0, 2.0, 3.0], [1000.0, -1000.0, 0.0]]).unwrap());
        for r in 0..2 {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(p.is_finite());
    }

    #[test]
    fn cross_entropy_of_uniform_logits() {
        let net = DenseNet::new(vec![crate::autoencoder::DenseLayer::zeros(2, 4, Activation::Linear)]);
        let x = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let l = cross_entropy(&net, &x, &[3]).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = SeededRng::new(3);
        let net = DenseNet::init(&mut rng, &[3, 5, 4, 3], Activation::Tanh, Activation::Linear);
        let x = Matrix::from_rows(&[[0.3, -0.7, 1.1], [0.9, 0.2, -0.4], [-1.2, 0.5, 0.6]]).unwrap();
        let y = [2, 0, 1];
        let (_, grads) = loss_and_gradients(&net, &x, &y).unwrap();
        let analytic: Vec<f64> = grad_slices(&grads).concat();
        let h = 1e-6;
        let mut k = 0;
        for p in 0..net.param_slices().len() {
            for i in 0..net.param_slices()[p].len() {
                let mut plus = net.clone();
                plus.param_slices_mut()[p][i] += h;
                let mut minus = net.clone();
                minus.param_slices_mut()[p][i] -= h;
                let numeric =
                    (cross_entropy(&plus, &x, &y).unwrap() - cross_entropy(&minus, &x, &y).unwrap()) / (2.0 * h);
                let err = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-4);
                assert!(err < 1e-5, "param {p}[{i}]: numeric {numeric} analytic {}", analytic[k]);
                k += 1;
            }
        }
        assert_eq!(k, analytic.len());
    }
}
