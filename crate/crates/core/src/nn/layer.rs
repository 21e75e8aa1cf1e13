use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::matrix::Matrix;
use super::NetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    Relu,
    Sigmoid,
    Linear,
    Softmax,
}

impl Activation {
    pub fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Linear => "linear",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "linear" => Some(Activation::Linear),
            "softmax" => Some(Activation::Softmax),
            _ => None,
        }
    }

    /// Applies the activation in place to the pre-activations `z`.
    pub fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Sigmoid => z.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Linear => {}
            Activation::Softmax => softmax_in_place(z),
        }
    }

    /// Maps `d loss / d output` to `d loss / d pre-activation`, given the layer output `y`.
    pub fn backprop(self, y: &[f64], grad: &mut [f64]) {
        match self {
            Activation::Relu => grad.iter_mut().zip(y).for_each(|(g, &o)| {
                if o <= 0.0 {
                    *g = 0.0
                }
            }),
            Activation::Sigmoid => grad
                .iter_mut()
                .zip(y)
                .for_each(|(g, &o)| *g *= o * (1.0 - o)),
            Activation::Linear => {}
            Activation::Softmax => {
                let s: f64 = grad.iter().zip(y).map(|(g, o)| g * o).sum();
                grad.iter_mut().zip(y).for_each(|(g, &o)| *g = o * (*g - s));
            }
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

pub fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Fully-connected layer `y = act(W x + b)`; `W` is `out × in`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "repr::DenseLayer"))]
pub struct DenseLayer {
    pub(crate) weights: Matrix,
    pub(crate) bias: Vec<f64>,
    pub(crate) activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self, NetError> {
        if bias.len() != weights.rows() {
            return Err(NetError::Shape {
                what: "bias",
                expected: weights.rows(),
                got: bias.len(),
            });
        }
        if let Some(i) = bias.iter().position(|b| !b.is_finite()) {
            return Err(NetError::NonFinite { index: i });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = libm::sqrt(6.0 / (inputs + outputs) as f64);
        let mut weights = Matrix::zeros(outputs, inputs);
        for w in weights.data_mut() {
            *w = rng.random_range(-limit..=limit);
        }
        Self {
            weights,
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: Matrix::zeros(outputs, inputs),
            bias: vec![0.0; outputs],
            activation,
        }
    }

    #[inline]
    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Matrix {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn num_params(&self) -> usize {
        self.weights.data().len() + self.bias.len()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs()];
        self.weights.affine_into(x, &self.bias, &mut out);
        self.activation.apply(&mut out);
        out
    }
}

#[cfg(feature = "serde")]
mod repr {
    use alloc::vec::Vec;

    use super::{Activation, Matrix};

    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct DenseLayer {
        weights: Matrix,
        bias: Vec<f64>,
        activation: Activation,
    }

    impl TryFrom<DenseLayer> for super::DenseLayer {
        type Error = super::NetError;

        fn try_from(l: DenseLayer) -> Result<Self, Self::Error> {
            super::DenseLayer::new(l.weights, l.bias, l.activation)
        }
    }
}
