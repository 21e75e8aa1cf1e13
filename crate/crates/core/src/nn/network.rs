use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layer::{Activation, DenseLayer};
use super::matrix::Matrix;
use super::NetError;

/// A sequential stack of dense layers.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "repr::Network"))]
pub struct Network {
    layers: Vec<DenseLayer>,
}

/// Outputs of every layer for one forward pass. Element 0 is the input itself; the last
/// element is the network output.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations(Vec<Vec<f64>>);

impl Activations {
    pub fn input(&self) -> &[f64] {
        &self.0[0]
    }

    pub fn output(&self) -> &[f64] {
        self.0.last().expect("activations always hold the input")
    }

    pub fn layer(&self, k: usize) -> &[f64] {
        &self.0[k + 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

/// Gradients of a scalar loss with respect to every parameter and to the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradient>,
    pub input: Vec<f64>,
}

impl Gradients {
    pub fn zeros_for(net: &Network) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradient {
                    weights: Matrix::zeros(l.outputs(), l.inputs()),
                    bias: vec![0.0; l.outputs()],
                })
                .collect(),
            input: vec![0.0; net.input_dim()],
        }
    }

    /// Parameter gradients in the same order as [`Network::params`]. Excludes the input gradient.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.data().iter().chain(l.bias.iter()).copied())
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.data_mut().iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.values().collect()
    }

    pub fn scale(&mut self, k: f64) {
        self.values_mut().for_each(|g| *g *= k);
        self.input.iter_mut().for_each(|g| *g *= k);
    }

    pub fn clear(&mut self) {
        self.scale(0.0);
    }
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self, NetError> {
        if layers.is_empty() {
            return Err(NetError::Empty);
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(NetError::LayerMismatch {
                    layer: k + 1,
                    expected: pair[0].outputs(),
                    got: pair[1].inputs(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Glorot-initialised network over `dims` (input first) with one activation per layer.
    pub fn glorot<R: Rng + ?Sized>(
        dims: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self, NetError> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(NetError::Shape {
                what: "activation list",
                expected: dims.len().saturating_sub(1),
                got: activations.len(),
            });
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(d, &act)| DenseLayer::glorot(d[0], d[1], act, rng))
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(DenseLayer::num_params).sum()
    }

    /// All parameters, layer by layer: row-major weights followed by bias.
    pub fn params(&self) -> impl Iterator<Item = &f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.data().iter().chain(l.bias.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.data_mut().iter_mut().chain(l.bias.iter_mut()))
    }

    /// Mutable access to parameter `index` in [`Network::params`] order.
    pub fn param_mut(&mut self, mut index: usize) -> Option<&mut f64> {
        for layer in &mut self.layers {
            let nw = layer.weights.data().len();
            if index < nw {
                return Some(&mut layer.weights.data_mut()[index]);
            }
            index -= nw;
            if index < layer.bias.len() {
                return Some(&mut layer.bias[index]);
            }
            index -= layer.bias.len();
        }
        None
    }

    /// Same layer count and per-layer dimensions and activations.
    pub fn same_topology(&self, other: &Network) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.inputs() == b.inputs()
                    && a.outputs() == b.outputs()
                    && a.activation == b.activation
            })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Activations, NetError> {
        if input.len() != self.input_dim() {
            return Err(NetError::Shape {
                what: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        for layer in &self.layers {
            let next = layer.forward(acts.last().unwrap());
            acts.push(next);
        }
        Ok(Activations(acts))
    }

    /// Forward pass returning only the output.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NetError> {
        self.forward(input)
            .map(|a| a.0.into_iter().next_back().unwrap())
    }

    /// Backpropagates `d loss / d output` and returns fresh gradients.
    pub fn backward(
        &self,
        acts: &Activations,
        output_gradient: &[f64],
    ) -> Result<Gradients, NetError> {
        let mut grads = Gradients::zeros_for(self);
        self.backward_into(acts, output_gradient, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Network::backward`] but accumulates into `grads`. The input gradient is
    /// overwritten, not accumulated.
    pub fn backward_into(
        &self,
        acts: &Activations,
        output_gradient: &[f64],
        grads: &mut Gradients,
    ) -> Result<(), NetError> {
        self.check_backward(acts, output_gradient, grads)?;
        let mut delta = output_gradient.to_vec();
        let last = self.layers.len() - 1;
        self.layers[last]
            .activation
            .backprop(acts.layer(last), &mut delta);
        self.backprop_deltas(acts, delta, grads);
        Ok(())
    }

    /// Accumulating backward pass seeded with `d loss / d z` of the final layer, skipping its
    /// activation derivative (softmax with cross-entropy, for instance).
    pub fn backward_from_logits_into(
        &self,
        acts: &Activations,
        logit_gradient: &[f64],
        grads: &mut Gradients,
    ) -> Result<(), NetError> {
        self.check_backward(acts, logit_gradient, grads)?;
        self.backprop_deltas(acts, logit_gradient.to_vec(), grads);
        Ok(())
    }

    fn check_backward(
        &self,
        acts: &Activations,
        output_gradient: &[f64],
        grads: &Gradients,
    ) -> Result<(), NetError> {
        if acts.len() != self.layers.len() + 1 || acts.input().len() != self.input_dim() {
            return Err(NetError::Shape {
                what: "activation trace",
                expected: self.layers.len() + 1,
                got: acts.len(),
            });
        }
        if output_gradient.len() != self.output_dim() {
            return Err(NetError::Shape {
                what: "output gradient",
                expected: self.output_dim(),
                got: output_gradient.len(),
            });
        }
        if grads.layers.len() != self.layers.len() {
            return Err(NetError::Shape {
                what: "gradient buffer",
                expected: self.layers.len(),
                got: grads.layers.len(),
            });
        }
        Ok(())
    }

    // `delta` holds d loss / d z for the last layer on entry.
    fn backprop_deltas(&self, acts: &Activations, mut delta: Vec<f64>, grads: &mut Gradients) {
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let x = if k == 0 {
                acts.input()
            } else {
                acts.layer(k - 1)
            };
            let g = &mut grads.layers[k];
            for (r, &d) in delta.iter().enumerate() {
                g.bias[r] += d;
                if d != 0.0 {
                    for (gw, &xi) in g.weights.row_mut(r).iter_mut().zip(x) {
                        *gw += d * xi;
                    }
                }
            }
            let mut below = vec![0.0; layer.inputs()];
            for (r, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (b, &w) in below.iter_mut().zip(layer.weights.row(r)) {
                        *b += w * d;
                    }
                }
            }
            if k == 0 {
                grads.input = below;
                break;
            }
            self.layers[k - 1].activation.backprop(x, &mut below);
            delta = below;
        }
    }
}

#[cfg(feature = "serde")]
mod repr {
    use alloc::vec::Vec;

    use super::DenseLayer;

    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Network {
        layers: Vec<DenseLayer>,
    }

    impl TryFrom<Network> for super::Network {
        type Error = super::NetError;

        fn try_from(n: Network) -> Result<Self, Self::Error> {
            super::Network::new(n.layers)
        }
    }
}
