//! The six-layer dense autoencoder used as a feature extractor.
//!
//! Encoder `M -> 40 -> 20 -> N` and decoder `N -> 20 -> 40 -> M`; hidden
//! layers use tanh, the bottleneck and reconstruction layers are linear.
//! Training minimizes `1/(2T) * sum_j ||x_j - y_j||^2` with Adam and keeps
//! the weights of the best validation epoch.

pub mod adam;
pub mod layers;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numkernel::{derive_seed_str, Matrix, SeededRng, ShapeError, Vector};
use crate::persist::{self, ContainerError, Header};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use layers::{grad_slices, Activation, DenseLayer, DenseNet, LayerGrads, StoredLayer, Trace};

/// Widths of the two tanh layers on each side of the bottleneck.
pub const HIDDEN_DIMS: [usize; 2] = [40, 20];

#[derive(Debug, Error)]
pub enum AeError {
    #[error("invalid autoencoder configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    ModelFile(#[from] ContainerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AeConfig {
    pub input_dim: usize,
    pub bottleneck_dim: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Share of training rows held out for early stopping (pipeline only).
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for AeConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        Self {
            input_dim: 54,
            bottleneck_dim: 8,
            learning_rate: adam.learning_rate,
            beta1: adam.beta1,
            beta2: adam.beta2,
            epsilon: adam.epsilon,
            batch_size: 64,
            max_epochs: 200,
            patience: 10,
            validation_fraction: 0.1,
            seed: 1337,
        }
    }
}

impl AeConfig {
    pub fn new(input_dim: usize, bottleneck_dim: usize) -> Self {
        Self {
            input_dim,
            bottleneck_dim,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AeError> {
        let fail = |m: String| Err(AeError::Config(m));
        if self.bottleneck_dim < 1 || self.bottleneck_dim >= self.input_dim {
            return fail(format!(
                "bottleneck dimension N={} must satisfy 1 <= N < M={}",
                self.bottleneck_dim, self.input_dim
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return fail("Adam betas must lie in [0, 1)".into());
        }
        if !(self.epsilon > 0.0) {
            return fail("Adam epsilon must be positive".into());
        }
        if self.batch_size < 1 {
            return fail("batch size must be at least 1".into());
        }
        if self.max_epochs < 1 {
            return fail("max_epochs must be at least 1".into());
        }
        if self.patience < 1 || self.patience > self.max_epochs {
            return fail(format!(
                "patience must be in 1..={}, got {}",
                self.max_epochs, self.patience
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return fail(format!(
                "validation fraction must be in (0, 1), got {}",
                self.validation_fraction
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

/// Closed-form trainable parameter count, `41N + 81M + 1720`.
pub fn param_count(input_dim: usize, bottleneck_dim: usize) -> usize {
    41 * bottleneck_dim + 81 * input_dim + 1720
}

/// Latent features: one row per record, `N` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix(pub Matrix);

impl LatentMatrix {
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeModel {
    pub config: AeConfig,
    pub encoder: DenseNet,
    pub decoder: DenseNet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeGradients {
    pub encoder: Vec<LayerGrads>,
    pub decoder: Vec<LayerGrads>,
    pub loss: f64,
}

impl AeGradients {
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = grad_slices(&self.encoder);
        out.extend(grad_slices(&self.decoder));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub stopped_epoch: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Builds the network with seeded Gaussian weights and zero biases.
pub fn build(config: &AeConfig) -> Result<AeModel, AeError> {
    config.validate()?;
    let (m, n) = (config.input_dim, config.bottleneck_dim);
    let [h1, h2] = HIDDEN_DIMS;
    let mut rng = SeededRng::new(config.seed);
    let encoder = DenseNet::init(&mut rng, &[m, h1, h2, n], Activation::Tanh, Activation::Linear);
    let decoder = DenseNet::init(&mut rng, &[n, h2, h1, m], Activation::Tanh, Activation::Linear);
    Ok(AeModel {
        config: config.clone(),
        encoder,
        decoder,
    })
}

impl AeModel {
    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn bottleneck_dim(&self) -> usize {
        self.config.bottleneck_dim
    }

    /// Trainable scalars actually held by the layers.
    pub fn counted_params(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        let mut out = self.encoder.param_slices();
        out.extend(self.decoder.param_slices());
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = self.encoder.param_slices_mut();
        out.extend(self.decoder.param_slices_mut());
        out
    }

    /// Single-record pass returning the code `h` and reconstruction `y`.
    pub fn forward(&self, x: &Vector) -> Result<(Vector, Vector), AeError> {
        let input = Matrix::from_vec(1, x.len(), x.as_slice().to_vec())?;
        self.check_input(&input)?;
        let h = self.encoder.forward(&input)?;
        let y = self.decoder.forward(&h)?;
        Ok((Vector::from(h.into_vec()), Vector::from(y.into_vec())))
    }

    pub fn encode(&self, x: &Matrix) -> Result<LatentMatrix, AeError> {
        self.check_input(x)?;
        Ok(LatentMatrix(self.encoder.forward(x)?))
    }

    pub fn decode(&self, h: &LatentMatrix) -> Result<Matrix, AeError> {
        Ok(self.decoder.forward(&h.0)?)
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix, AeError> {
        let h = self.encode(x)?;
        self.decode(&h)
    }

    /// Reconstruction loss over a batch.
    pub fn loss(&self, x: &Matrix) -> Result<f64, AeError> {
        let y = self.reconstruct(x)?;
        Ok(mse_loss(x, &y)?)
    }

    /// Gradient of [`mse_loss`] with respect to every weight and bias.
    pub fn backward(&self, x: &Matrix) -> Result<AeGradients, AeError> {
        self.check_input(x)?;
        if x.rows() == 0 {
            return Err(AeError::Config("backward needs a nonempty batch".into()));
        }
        let enc_trace = self.encoder.forward_trace(x)?;
        let dec_trace = self.decoder.forward_trace(enc_trace.output())?;
        let y = dec_trace.output();
        let loss = mse_loss(x, y)?;
        let t = x.rows() as f64;
        let mut d_y = Matrix::zeros(y.rows(), y.cols());
        for ((d, &yi), &xi) in d_y.as_mut_slice().iter_mut().zip(y.as_slice()).zip(x.as_slice()) {
            *d = (yi - xi) / t;
        }
        let (decoder, d_h) = self.decoder.backward(&dec_trace, &d_y)?;
        let (encoder, _) = self.encoder.backward(&enc_trace, &d_h)?;
        Ok(AeGradients {
            encoder,
            decoder,
            loss,
        })
    }

    fn check_input(&self, x: &Matrix) -> Result<(), AeError> {
        if x.cols() != self.input_dim() {
            return Err(AeError::Shape(ShapeError::Mismatch {
                op: "autoencoder input",
                left_rows: x.rows(),
                left_cols: x.cols(),
                right_rows: self.input_dim(),
                right_cols: self.bottleneck_dim(),
            }));
        }
        Ok(())
    }

    /// Mini-batch Adam with seeded shuffling and early stopping on `val`.
    ///
    /// On return the model holds the weights of the best validation epoch.
    pub fn train(&mut self, train: &Matrix, val: &Matrix) -> Result<TrainReport, AeError> {
        let config = self.config.clone();
        config.validate()?;
        self.check_input(train)?;
        self.check_input(val)?;
        if train.rows() < config.batch_size {
            return Err(AeError::Config(format!(
                "{} training rows is fewer than batch size {}",
                train.rows(),
                config.batch_size
            )));
        }
        if val.rows() == 0 {
            return Err(AeError::Config("validation set is empty".into()));
        }

        let mut rng = SeededRng::new(derive_seed_str(config.seed, "ae/shuffle"));
        let mut state = AdamState::for_params(config.adam(), &self.param_slices());
        let mut report = TrainReport {
            train_loss: Vec::new(),
            val_loss: Vec::new(),
            stopped_epoch: 0,
            best_epoch: 0,
            best_val_loss: f64::INFINITY,
        };
        let mut best = (self.encoder.clone(), self.decoder.clone());
        let mut since_best = 0;

        for epoch in 1..=config.max_epochs {
            let order = rng.permutation(train.rows());
            for (b, chunk) in order.chunks(config.batch_size).enumerate() {
                let batch = train.select_rows(chunk);
                let grads = self.backward(&batch).map_err(|e| finite_or(e, epoch, b))?;
                if !grads.loss.is_finite() {
                    return Err(AeError::NonFiniteLoss { epoch, batch: b });
                }
                let g = grads.slices();
                adam_step(&mut self.param_slices_mut(), &g, &mut state);
            }
            let train_loss = self.loss(train).map_err(|e| finite_or(e, epoch, 0))?;
            let val_loss = self.loss(val).map_err(|e| finite_or(e, epoch, 0))?;
            if !train_loss.is_finite() || !val_loss.is_finite() {
                return Err(AeError::NonFiniteLoss { epoch, batch: 0 });
            }
            log::debug!("ae epoch {epoch}: train {train_loss:.6e} val {val_loss:.6e}");
            report.train_loss.push(train_loss);
            report.val_loss.push(val_loss);
            report.stopped_epoch = epoch;
            if val_loss < report.best_val_loss {
                report.best_val_loss = val_loss;
                report.best_epoch = epoch;
                best = (self.encoder.clone(), self.decoder.clone());
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    break;
                }
            }
        }
        self.encoder = best.0;
        self.decoder = best.1;
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<(), AeError> {
        let file = ModelFile {
            header: Header::new(AE_KIND),
            input_dim: self.input_dim(),
            bottleneck_dim: self.bottleneck_dim(),
            config: self.config.clone(),
            layers: self
                .encoder
                .layers
                .iter()
                .map(|l| StoredLayer::from_layer("encoder", l))
                .chain(self.decoder.layers.iter().map(|l| StoredLayer::from_layer("decoder", l)))
                .collect(),
        };
        persist::write_json(&file, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<AeModel, AeError> {
        let file: ModelFile = persist::read_json(path)?;
        Ok(file.into_model()?)
    }
}

// Overflow inside the forward pass surfaces as a NonFinite shape error.
fn finite_or(e: AeError, epoch: usize, batch: usize) -> AeError {
    match e {
        AeError::Shape(ShapeError::NonFinite { .. }) => AeError::NonFiniteLoss { epoch, batch },
        other => other,
    }
}

/// `1/(2T) * sum_j ||x_j - y_j||^2` over the `T` rows.
pub fn mse_loss(x: &Matrix, y: &Matrix) -> Result<f64, ShapeError> {
    if x.shape() != y.shape() || x.rows() == 0 {
        return Err(ShapeError::Mismatch {
            op: "mse_loss",
            left_rows: x.rows(),
            left_cols: x.cols(),
            right_rows: y.rows(),
            right_cols: y.cols(),
        });
    }
    let sq: f64 = x
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sq / (2.0 * x.rows() as f64))
}

pub const AE_KIND: &str = "autoencoder";

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    #[serde(flatten)]
    header: Header,
    input_dim: usize,
    bottleneck_dim: usize,
    config: AeConfig,
    layers: Vec<StoredLayer>,
}

impl ModelFile {
    fn into_model(self) -> Result<AeModel, ContainerError> {
        self.header.check(AE_KIND)?;
        let (m, n) = (self.input_dim, self.bottleneck_dim);
        if self.config.input_dim != m || self.config.bottleneck_dim != n {
            return Err(ContainerError::ShapeHeader(format!(
                "config declares {}->{} but header declares {m}->{n}",
                self.config.input_dim, self.config.bottleneck_dim
            )));
        }
        let [h1, h2] = HIDDEN_DIMS;
        let expected = [
            ("encoder", m, h1, Activation::Tanh),
            ("encoder", h1, h2, Activation::Tanh),
            ("encoder", h2, n, Activation::Linear),
            ("decoder", n, h2, Activation::Tanh),
            ("decoder", h2, h1, Activation::Tanh),
            ("decoder", h1, m, Activation::Linear),
        ];
        if self.layers.len() != expected.len() {
            return Err(ContainerError::ShapeHeader(format!(
                "expected 6 layers, found {}",
                self.layers.len()
            )));
        }
        let mut encoder = Vec::new();
        let mut decoder = Vec::new();
        for (i, (stored, (role, input, output, act))) in self.layers.into_iter().zip(expected).enumerate() {
            if stored.role != role
                || stored.input_dim != input
                || stored.output_dim != output
                || stored.activation != act
            {
                return Err(ContainerError::ShapeHeader(format!(
                    "layer {i} is {} {}->{} {:?}, expected {role} {input}->{output} {act:?}",
                    stored.role, stored.input_dim, stored.output_dim, stored.activation
                )));
            }
            let layer = stored.into_layer()?;
            if role == "encoder" {
                encoder.push(layer);
            } else {
                decoder.push(layer);
            }
        }
        Ok(AeModel {
            config: self.config,
            encoder: DenseNet::new(encoder),
            decoder: DenseNet::new(decoder),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::gaussian_matrix;

    fn zero_model(m: usize, n: usize) -> AeModel {
        let mut model = build(&AeConfig::new(m, n)).unwrap();
        for p in model.param_slices_mut() {
            p.fill(0.0);
        }
        model
    }

    #[test]
    fn table_shapes_for_m54_n4() {
        let model = build(&AeConfig::new(54, 4)).unwrap();
        let enc: Vec<_> = model.encoder.layers.iter().map(|l| (l.input_dim(), l.output_dim())).collect();
        let dec: Vec<_> = model.decoder.layers.iter().map(|l| (l.input_dim(), l.output_dim())).collect();
        assert_eq!(enc, vec![(54, 40), (40, 20), (20, 4)]);
        assert_eq!(dec, vec![(4, 20), (20, 40), (40, 54)]);
        assert_eq!(model.encoder.layers[1].param_count(), 820);
        let acts: Vec<_> = model
            .encoder
            .layers
            .iter()
            .chain(&model.decoder.layers)
            .map(|l| l.activation)
            .collect();
        use Activation::{Linear, Tanh};
        assert_eq!(acts, vec![Tanh, Tanh, Linear, Tanh, Tanh, Linear]);
    }

    #[test]
    fn closed_form_counts() {
        assert_eq!(param_count(54, 4), 6258);
        assert_eq!(param_count(54, 8), 6422);
        assert_eq!(param_count(1, 1), 1842);
        assert_eq!(build(&AeConfig::new(54, 8)).unwrap().counted_params(), 6422);
    }

    #[test]
    fn bottleneck_must_be_smaller_than_input() {
        assert!(matches!(build(&AeConfig::new(54, 54)), Err(AeError::Config(_))));
        assert!(matches!(build(&AeConfig::new(54, 60)), Err(AeError::Config(_))));
        assert!(matches!(build(&AeConfig::new(54, 0)), Err(AeError::Config(_))));
    }

    #[test]
    fn zero_patience_is_rejected() {
        let cfg = AeConfig {
            patience: 0,
            ..AeConfig::new(10, 2)
        };
        assert!(matches!(build(&cfg), Err(AeError::Config(_))));
    }

    #[test]
    fn build_is_seeded() {
        let a = build(&AeConfig::new(12, 3)).unwrap();
        let b = build(&AeConfig::new(12, 3)).unwrap();
        assert_eq!(a, b);
        assert!(a.decoder.layers.iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn zero_network_outputs_zero() {
        let model = zero_model(6, 2);
        let (h, y) = model.forward(&Vector::from(vec![0.3, -1.0, 2.0, 0.0, 5.0, 1.0])).unwrap();
        assert_eq!(h.as_slice(), &[0.0, 0.0]);
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_weight_encode_is_bias() {
        let mut model = zero_model(6, 3);
        model.encoder.layers[2].bias = Vector::from(vec![0.25, -1.5, 3.0]);
        let h = model.encode(&Matrix::from_rows(&[[1.0; 6], [-2.0; 6]]).unwrap()).unwrap();
        assert_eq!(h.0.row(0), &[0.25, -1.5, 3.0]);
        assert_eq!(h.0.row(1), &[0.25, -1.5, 3.0]);
    }

    #[test]
    fn batch_shapes() {
        let model = build(&AeConfig::new(54, 8)).unwrap();
        let x = gaussian_matrix(&mut SeededRng::new(1), 7, 54, 1.0);
        let h = model.encode(&x).unwrap();
        assert_eq!(h.0.shape(), (7, 8));
        assert_eq!(model.decode(&h).unwrap().shape(), (7, 54));
        let model4 = build(&AeConfig::new(54, 4)).unwrap();
        let x10 = gaussian_matrix(&mut SeededRng::new(2), 10, 54, 1.0);
        assert_eq!(model4.encode(&x10).unwrap().0.shape(), (10, 4));
    }

    #[test]
    fn one_unit_chain_matches_hand_evaluation() {
        // A 2 -> 1 model whose hidden layers route everything through the
        // first unit; every other weight is zero.
        let mut model = zero_model(2, 1);
        let (w1, b1, w2, b2, w3, b3) = (0.7, -0.1, 1.3, 0.2, -0.8, 0.05);
        let (v1, c1, v2, c2, v3, c3) = (0.6, 0.3, -1.1, 0.4, 0.9, -0.2);
        {
            let e = &mut model.encoder.layers;
            e[0].weights.set(0, 0, w1);
            e[0].bias.as_mut_slice()[0] = b1;
            e[1].weights.set(0, 0, w2);
            e[1].bias.as_mut_slice()[0] = b2;
            e[2].weights.set(0, 0, w3);
            e[2].bias.as_mut_slice()[0] = b3;
            let d = &mut model.decoder.layers;
            d[0].weights.set(0, 0, v1);
            d[0].bias.as_mut_slice()[0] = c1;
            d[1].weights.set(0, 0, v2);
            d[1].bias.as_mut_slice()[0] = c2;
            d[2].weights.set(0, 0, v3);
            d[2].bias.as_mut_slice()[0] = c3;
        }
        let x = 0.9_f64;
        let h = w3 * (w2 * (w1 * x + b1).tanh() + b2).tanh() + b3;
        let y0 = v3 * (v2 * (v1 * h + c1).tanh() + c2).tanh() + c3;
        // Every other unit sees zero input and zero bias, so contributes tanh(0) = 0.
        let (hv, yv) = model.forward(&Vector::from(vec![x, 0.0])).unwrap();
        assert!((hv[0] - h).abs() < 1e-12);
        assert!((yv[0] - y0).abs() < 1e-12);
        assert_eq!(yv[1], 0.0);
    }

    #[test]
    fn mse_loss_examples() {
        let x = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let y = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(mse_loss(&x, &y).unwrap(), 0.5);
        assert_eq!(mse_loss(&x, &x).unwrap(), 0.0);
        assert!(mse_loss(&x, &Matrix::zeros(1, 3)).is_err());

        let mut rng = SeededRng::new(11);
        let a = gaussian_matrix(&mut rng, 5, 3, 1.0);
        let b = gaussian_matrix(&mut rng, 5, 3, 1.0);
        let mut oracle = 0.0;
        for r in 0..5 {
            for c in 0..3 {
                oracle += (a.get(r, c) - b.get(r, c)).powi(2);
            }
        }
        oracle /= 10.0;
        assert!((mse_loss(&a, &b).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn gradients_vanish_at_perfect_reconstruction() {
        // Zero network reconstructs the zero vector exactly.
        let model = zero_model(5, 2);
        let grads = model.backward(&Matrix::zeros(3, 5)).unwrap();
        assert_eq!(grads.loss, 0.0);
        assert!(grads.slices().iter().all(|g| g.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn encode_rejects_wrong_width() {
        let model = build(&AeConfig::new(54, 4)).unwrap();
        assert!(matches!(model.encode(&Matrix::zeros(2, 53)), Err(AeError::Shape(_))));
    }

    #[test]
    fn encode_decode_matches_forward_and_rows_match_batch() {
        let model = build(&AeConfig::new(9, 3)).unwrap();
        let x = gaussian_matrix(&mut SeededRng::new(4), 6, 9, 1.0);
        let y = model.reconstruct(&x).unwrap();
        let h = model.encode(&x).unwrap();
        for r in 0..6 {
            let (hr, yr) = model.forward(&Vector::from(x.row(r).to_vec())).unwrap();
            assert_eq!(hr.as_slice(), h.0.row(r));
            assert_eq!(yr.as_slice(), y.row(r));
        }
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.json");
        let model = build(&AeConfig::new(12, 4)).unwrap();
        model.save(&path).unwrap();
        let back = AeModel::load(&path).unwrap();
        assert_eq!(back, model);
        let x = gaussian_matrix(&mut SeededRng::new(8), 4, 12, 1.0);
        assert_eq!(
            back.reconstruct(&x).unwrap().as_slice(),
            model.reconstruct(&x).unwrap().as_slice()
        );
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.json");
        build(&AeConfig::new(12, 4)).unwrap().save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() / 2]).unwrap();
        assert!(matches!(
            AeModel::load(&path),
            Err(AeError::ModelFile(ContainerError::Corrupt(_)))
        ));
    }

    #[test]
    fn tampered_shape_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ae.json");
        build(&AeConfig::new(12, 4)).unwrap().save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replacen("\"output_dim\": 40", "\"output_dim\": 41", 1);
        assert_ne!(text, tampered);
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(
            AeModel::load(&path),
            Err(AeError::ModelFile(ContainerError::ShapeHeader(_)))
        ));
    }

    #[test]
    fn train_requires_enough_rows() {
        let mut model = build(&AeConfig::new(6, 2)).unwrap();
        let x = Matrix::zeros(10, 6);
        assert!(matches!(model.train(&x, &x), Err(AeError::Config(_))));
    }

    #[test]
    fn training_aborts_on_divergence() {
        let cfg = AeConfig {
            learning_rate: 1e300,
            batch_size: 4,
            ..AeConfig::new(4, 2)
        };
        let mut model = build(&cfg).unwrap();
        let x = gaussian_matrix(&mut SeededRng::new(3), 16, 4, 1e150);
        let err = model.train(&x, &x).unwrap_err();
        assert!(matches!(err, AeError::NonFiniteLoss { .. }), "{err}");
    }
}
