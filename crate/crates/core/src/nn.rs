//! Fully-connected feature extractor with hand-written backpropagation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Activation {
    Identity,
    LeakyRelu(f64),
}

impl Activation {
    pub fn leaky_relu(slope: f64) -> Result<Self> {
        if !(slope > 0.0 && slope < 1.0) {
            return Err(Error::invalid("leaky_slope", "must lie in (0, 1)"));
        }
        Ok(Activation::LeakyRelu(slope))
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    z
                } else {
                    slope * z
                }
            }
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::LeakyRelu(slope) => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
        }
    }
}

/// `y = act(x·Wᵀ + b)` with `W: out×in`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    weight: Matrix,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn new(weight: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::DimensionMismatch {
                context: "dense layer bias",
                expected: weight.rows(),
                actual: bias.len(),
            });
        }
        if let Activation::LeakyRelu(slope) = activation {
            Activation::leaky_relu(slope)?;
        }
        Ok(Self {
            weight,
            bias,
            activation,
        })
    }

    /// He-scaled normal weights (std = √(2/fan_in)) and zero bias.
    pub fn he_normal<R: Rng + ?Sized>(
        input_dim: usize,
        output_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return Err(Error::invalid("layer dims", "must be positive"));
        }
        let std = libm::sqrt(2.0 / input_dim as f64);
        let data = (0..input_dim * output_dim)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * std
            })
            .collect();
        Self::new(
            Matrix::new(output_dim, input_dim, data)?,
            vec![0.0; output_dim],
            activation,
        )
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn weight(&self) -> &Matrix {
        &self.weight
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn check_input(&self, input: &Matrix) -> Result<()> {
        if input.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "dense layer input",
                expected: self.input_dim(),
                actual: input.cols(),
            });
        }
        Ok(())
    }

    /// Pre-activation `x·Wᵀ + b`.
    fn affine(&self, input: &Matrix) -> Result<Matrix> {
        self.check_input(input)?;
        let mut z = input.matmul_t(&self.weight)?;
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(&self.bias) {
                *v += b;
            }
        }
        Ok(z)
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        let mut z = self.affine(input)?;
        if self.activation != Activation::Identity {
            let act = self.activation;
            z.as_mut_slice().iter_mut().for_each(|v| *v = act.apply(*v));
        }
        Ok(z)
    }

    /// Gradients given the layer input, its pre-activation and the gradient
    /// w.r.t. the layer output. Returns the parameter gradient and the
    /// gradient w.r.t. the input.
    pub fn backward(
        &self,
        input: &Matrix,
        pre_activation: &Matrix,
        upstream: &Matrix,
    ) -> Result<(LayerGradient, Matrix)> {
        self.check_input(input)?;
        if upstream.shape() != (input.rows(), self.output_dim())
            || pre_activation.shape() != upstream.shape()
        {
            return Err(Error::ShapeMismatch {
                context: "dense layer upstream gradient",
                expected_rows: input.rows(),
                expected_cols: self.output_dim(),
                actual_rows: upstream.rows(),
                actual_cols: upstream.cols(),
            });
        }
        let delta = if self.activation == Activation::Identity {
            upstream.clone()
        } else {
            let act = self.activation;
            let data = upstream
                .as_slice()
                .iter()
                .zip(pre_activation.as_slice())
                .map(|(&g, &z)| g * act.derivative(z))
                .collect();
            Matrix::new(upstream.rows(), upstream.cols(), data)?
        };
        let weight = delta.t_matmul(input)?;
        let mut bias = vec![0.0; self.output_dim()];
        for row in delta.iter_rows() {
            for (b, d) in bias.iter_mut().zip(row) {
                *b += d;
            }
        }
        let input_grad = delta.matmul(&self.weight)?;
        Ok((LayerGradient { weight, bias }, input_grad))
    }

    pub(crate) fn parameters_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weight.as_mut_slice(), &mut self.bias]
    }

    pub(crate) fn parameters(&self) -> [&[f64]; 2] {
        [self.weight.as_slice(), &self.bias]
    }
}

/// Layer widths of a feature extractor: `hidden` LeakyReLU layers followed by
/// an identity layer of width `feature_dim`. No hidden layers gives a linear
/// extractor.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NetSpec {
    pub hidden: Vec<usize>,
    pub feature_dim: usize,
    pub leaky_slope: f64,
}

impl Default for NetSpec {
    fn default() -> Self {
        Self::linear(8)
    }
}

impl NetSpec {
    pub fn linear(feature_dim: usize) -> Self {
        Self {
            hidden: Vec::new(),
            feature_dim,
            leaky_slope: 0.2,
        }
    }

    pub fn deep(hidden: Vec<usize>, feature_dim: usize) -> Self {
        Self {
            hidden,
            feature_dim,
            leaky_slope: 0.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureNet {
    layers: Vec<DenseLayer>,
}

/// Intermediate values kept from a forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    /// `inputs[k]` is the input to layer `k`.
    inputs: Vec<Matrix>,
    pre_activations: Vec<Matrix>,
    output: Matrix,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        &self.output
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetGradients {
    pub layers: Vec<LayerGradient>,
    pub input: Matrix,
}

impl NetGradients {
    /// Flattened as `[w0, b0, w1, b1, …]`, matching [`FeatureNet::parameters`].
    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|g| [g.weight.as_slice(), g.bias.as_slice()])
            .collect()
    }
}

impl FeatureNet {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("feature net layers"));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::DimensionMismatch {
                    context: "feature net layer chain",
                    expected: pair[0].output_dim(),
                    actual: pair[1].input_dim(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn from_spec<R: Rng + ?Sized>(input_dim: usize, spec: &NetSpec, rng: &mut R) -> Result<Self> {
        let hidden_act = Activation::leaky_relu(spec.leaky_slope)?;
        let mut layers = Vec::with_capacity(spec.hidden.len() + 1);
        let mut width = input_dim;
        for &h in &spec.hidden {
            layers.push(DenseLayer::he_normal(width, h, hidden_act, rng)?);
            width = h;
        }
        layers.push(DenseLayer::he_normal(
            width,
            spec.feature_dim,
            Activation::Identity,
            rng,
        )?);
        Self::new(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_batch(batch)?;
        let mut x = self.layers[0].forward(batch)?;
        for layer in &self.layers[1..] {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    pub fn forward_trace(&self, batch: &Matrix) -> Result<ForwardTrace> {
        self.check_batch(batch)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut x = batch.clone();
        for layer in &self.layers {
            let z = layer.affine(&x)?;
            let act = layer.activation;
            let out = if act == Activation::Identity {
                z.clone()
            } else {
                let data = z.as_slice().iter().map(|&v| act.apply(v)).collect();
                Matrix::new(z.rows(), z.cols(), data)?
            };
            inputs.push(x);
            pre_activations.push(z);
            x = out;
        }
        Ok(ForwardTrace {
            inputs,
            pre_activations,
            output: x,
        })
    }

    /// Runs a forward pass on `batch` and backpropagates `upstream`.
    pub fn backward(&self, batch: &Matrix, upstream: &Matrix) -> Result<NetGradients> {
        let trace = self.forward_trace(batch)?;
        self.backward_trace(&trace, upstream)
    }

    pub fn backward_trace(&self, trace: &ForwardTrace, upstream: &Matrix) -> Result<NetGradients> {
        if upstream.shape() != trace.output.shape() {
            return Err(Error::ShapeMismatch {
                context: "feature net upstream gradient",
                expected_rows: trace.output.rows(),
                expected_cols: trace.output.cols(),
                actual_rows: upstream.rows(),
                actual_cols: upstream.cols(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let (lg, input_grad) =
                layer.backward(&trace.inputs[k], &trace.pre_activations[k], &g)?;
            grads.push(lg);
            g = input_grad;
        }
        grads.reverse();
        Ok(NetGradients {
            layers: grads,
            input: g,
        })
    }

    /// Parameter tensors as `[w0, b0, w1, b1, …]`.
    pub fn parameters(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.parameters()).collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.parameters_mut())
            .collect()
    }

    pub fn parameter_sizes(&self) -> Vec<usize> {
        self.parameters().iter().map(|p| p.len()).collect()
    }

    fn check_batch(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "feature net input",
                expected: self.input_dim(),
                actual: batch.cols(),
            });
        }
        Ok(())
    }
}
