//! Fully connected layers and stacks of them, with batch backprop.
//!
//! Activations are row-major `batch x features`. A layer computes
//! `A_out = act(A_in * W^T + b)` with `W` stored `out x in`.

use serde::{Deserialize, Serialize};

use crate::numkernel::{gaussian_matrix, Matrix, SeededRng, ShapeError, Vector};
use crate::persist::{ContainerError, F64Blob};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: Matrix) -> Matrix {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the layer output `a = act(z)`.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `out x in`
    pub weights: Matrix,
    pub bias: Vector,
    pub activation: Activation,
}

impl DenseLayer {
    /// Gaussian weights with stddev `sqrt(1/fan_in)`, zero bias.
    pub fn init(rng: &mut SeededRng, input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        let stddev = (1.0 / input_dim as f64).sqrt();
        Self {
            weights: gaussian_matrix(rng, output_dim, input_dim, stddev),
            bias: Vector::zeros(output_dim),
            activation,
        }
    }

    pub fn zeros(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(output_dim, input_dim),
            bias: Vector::zeros(output_dim),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix, ShapeError> {
        let mut z = input.matmul_transposed(&self.weights)?;
        z.add_row_vector(&self.bias)?;
        Ok(self.activation.apply(z))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub weights: Matrix,
    pub bias: Vector,
}

/// Activations recorded during a forward pass; `outputs[0]` is the input.
#[derive(Debug, Clone)]
pub struct Trace {
    pub outputs: Vec<Matrix>,
}

impl Trace {
    pub fn output(&self) -> &Matrix {
        self.outputs.last().expect("trace holds at least the input")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<StoredLayer>", try_from = "Vec<StoredLayer>")]
pub struct DenseNet {
    pub layers: Vec<DenseLayer>,
}

impl DenseNet {
    pub fn new(layers: Vec<DenseLayer>) -> Self {
        Self { layers }
    }

    /// Builds `dims.len() - 1` layers; `hidden` for all but the last, which
    /// uses `last`.
    pub fn init(rng: &mut SeededRng, dims: &[usize], hidden: Activation, last: Activation) -> Self {
        let n = dims.len().saturating_sub(1);
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { last } else { hidden };
                DenseLayer::init(rng, dims[i], dims[i + 1], act)
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::input_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::output_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix, ShapeError> {
        let mut a = input.clone();
        for layer in &self.layers {
            a = layer.forward(&a)?;
        }
        Ok(a)
    }

    pub fn forward_trace(&self, input: &Matrix) -> Result<Trace, ShapeError> {
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(input.clone());
        for layer in &self.layers {
            let next = layer.forward(outputs.last().expect("nonempty"))?;
            outputs.push(next);
        }
        Ok(Trace { outputs })
    }

    /// Reverse-mode pass. `d_output` is dL/d(final activation output).
    /// Returns per-layer gradients and dL/d(input).
    pub fn backward(&self, trace: &Trace, d_output: &Matrix) -> Result<(Vec<LayerGrads>, Matrix), ShapeError> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = d_output.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let out = &trace.outputs[l + 1];
            let input = &trace.outputs[l];
            if out.shape() != delta.shape() {
                return Err(ShapeError::Mismatch {
                    op: "backward",
                    left_rows: out.rows(),
                    left_cols: out.cols(),
                    right_rows: delta.rows(),
                    right_cols: delta.cols(),
                });
            }
            if layer.activation != Activation::Linear {
                for (d, &a) in delta.as_mut_slice().iter_mut().zip(out.as_slice()) {
                    *d *= layer.activation.derivative_from_output(a);
                }
            }
            let d_weights = delta.transposed_matmul(input)?;
            let d_bias = delta.column_sums();
            let d_input = delta.matmul(&layer.weights)?;
            grads.push(LayerGrads {
                weights: d_weights,
                bias: d_bias,
            });
            delta = d_input;
        }
        grads.reverse();
        Ok((grads, delta))
    }

    /// Parameter buffers in a fixed order: weights then bias, layer by layer.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }
}

/// On-disk form of a layer inside a model container.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredLayer {
    pub role: String,
    pub input_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub weights: F64Blob,
    pub bias: F64Blob,
}

impl StoredLayer {
    pub fn from_layer(role: &str, l: &DenseLayer) -> Self {
        Self {
            role: role.to_string(),
            input_dim: l.input_dim(),
            output_dim: l.output_dim(),
            activation: l.activation,
            weights: F64Blob(l.weights.as_slice().to_vec()),
            bias: F64Blob(l.bias.as_slice().to_vec()),
        }
    }

    pub fn into_layer(self) -> Result<DenseLayer, ContainerError> {
        self.weights
            .expect_len(self.input_dim * self.output_dim, "weight blob")?;
        self.bias.expect_len(self.output_dim, "bias blob")?;
        if self.weights.0.iter().chain(&self.bias.0).any(|v| !v.is_finite()) {
            return Err(ContainerError::Corrupt("non-finite parameter".into()));
        }
        let weights = Matrix::from_vec(self.output_dim, self.input_dim, self.weights.0)
            .map_err(|e| ContainerError::ShapeHeader(e.to_string()))?;
        Ok(DenseLayer {
            weights,
            bias: Vector::from(self.bias.0),
            activation: self.activation,
        })
    }
}

impl From<DenseNet> for Vec<StoredLayer> {
    fn from(net: DenseNet) -> Self {
        net.layers.iter().map(|l| StoredLayer::from_layer("layer", l)).collect()
    }
}

impl TryFrom<Vec<StoredLayer>> for DenseNet {
    type Error = ContainerError;

    fn try_from(stored: Vec<StoredLayer>) -> Result<Self, Self::Error> {
        let layers = stored
            .into_iter()
            .map(StoredLayer::into_layer)
            .collect::<Result<Vec<_>, _>>()?;
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(ContainerError::ShapeHeader(format!(
                    "layer widths {} and {} do not chain",
                    pair[0].output_dim(),
                    pair[1].input_dim()
                )));
            }
        }
        Ok(DenseNet { layers })
    }
}

pub fn grad_slices(grads: &[LayerGrads]) -> Vec<&[f64]> {
    grads
        .iter()
        .flat_map(|g| [g.weights.as_slice(), g.bias.as_slice()])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_param_count() {
        let layer = DenseLayer::zeros(40, 20, Activation::Tanh);
        assert_eq!(layer.param_count(), 820);
    }

    #[test]
    fn init_is_seeded_with_zero_bias() {
        let a = DenseLayer::init(&mut SeededRng::new(5), 6, 3, Activation::Tanh);
        let b = DenseLayer::init(&mut SeededRng::new(5), 6, 3, Activation::Tanh);
        assert_eq!(a, b);
        assert!(a.bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_shapes() {
        let net = DenseNet::init(&mut SeededRng::new(1), &[4, 3, 2], Activation::Tanh, Activation::Linear);
        let x = Matrix::from_rows(&[[0.1, 0.2, 0.3, 0.4], [0.5, 0.1, 0.0, 0.2]]).unwrap();
        let trace = net.forward_trace(&x).unwrap();
        let d = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let (grads, d_in) = net.backward(&trace, &d).unwrap();
        assert_eq!(grads[0].weights.shape(), (3, 4));
        assert_eq!(grads[1].weights.shape(), (2, 3));
        assert_eq!(d_in.shape(), (2, 4));
    }
}
