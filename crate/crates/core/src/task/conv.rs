//! Small VGG-style classifier: two valid 3×3 convolutions (ReLU), each followed by 2×2
//! max-pooling, dropout, then a dense head.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::{IMAGE_SIDE, NUM_CLASSES};
use crate::nn::{Activation, Activations, Gradients, NetError, Network};

pub const KERNEL: usize = 3;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "repr::ConvLayer"))]
pub struct ConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    /// `[out][in][ky][kx]`, flattened.
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGradient {
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernels: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self, NetError> {
        let expected = out_channels * in_channels * KERNEL * KERNEL;
        if kernels.len() != expected {
            return Err(NetError::Shape {
                what: "conv kernels",
                expected,
                got: kernels.len(),
            });
        }
        if bias.len() != out_channels {
            return Err(NetError::Shape {
                what: "conv bias",
                expected: out_channels,
                got: bias.len(),
            });
        }
        if let Some(index) = kernels.iter().chain(&bias).position(|x| !x.is_finite()) {
            return Err(NetError::NonFinite { index });
        }
        Ok(Self {
            in_channels,
            out_channels,
            kernels,
            bias,
        })
    }

    pub fn glorot<R: Rng + ?Sized>(in_channels: usize, out_channels: usize, rng: &mut R) -> Self {
        let fan_in = in_channels * KERNEL * KERNEL;
        let fan_out = out_channels * KERNEL * KERNEL;
        let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        let kernels = (0..out_channels * fan_in)
            .map(|_| rng.random_range(-limit..=limit))
            .collect();
        Self {
            in_channels,
            out_channels,
            kernels,
            bias: vec![0.0; out_channels],
        }
    }

    fn zero_grad(&self) -> ConvGradient {
        ConvGradient {
            kernels: vec![0.0; self.kernels.len()],
            bias: vec![0.0; self.bias.len()],
        }
    }

    #[inline]
    fn k(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_channels + i) * KERNEL + ky) * KERNEL + kx
    }

    /// Valid convolution + ReLU over a `[in][side][side]` map.
    fn forward(&self, input: &[f64], side: usize) -> Vec<f64> {
        let out_side = side - KERNEL + 1;
        let mut out = vec![0.0; self.out_channels * out_side * out_side];
        for o in 0..self.out_channels {
            let plane = &mut out[o * out_side * out_side..(o + 1) * out_side * out_side];
            plane.iter_mut().for_each(|v| *v = self.bias[o]);
            for i in 0..self.in_channels {
                let src = &input[i * side * side..(i + 1) * side * side];
                for ky in 0..KERNEL {
                    for kx in 0..KERNEL {
                        let w = self.kernels[self.k(o, i, ky, kx)];
                        for y in 0..out_side {
                            let row = &src[(y + ky) * side + kx..(y + ky) * side + kx + out_side];
                            let dst = &mut plane[y * out_side..(y + 1) * out_side];
                            for (d, s) in dst.iter_mut().zip(row) {
                                *d += w * s;
                            }
                        }
                    }
                }
            }
            plane.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        out
    }

    /// `d_out` is d loss / d (post-ReLU output); returns d loss / d input.
    fn backward(
        &self,
        input: &[f64],
        output: &[f64],
        d_out: &[f64],
        side: usize,
        grad: &mut ConvGradient,
    ) -> Vec<f64> {
        let out_side = side - KERNEL + 1;
        let mut d_in = vec![0.0; input.len()];
        for o in 0..self.out_channels {
            let base = o * out_side * out_side;
            let dz: Vec<f64> = (0..out_side * out_side)
                .map(|j| {
                    if output[base + j] > 0.0 {
                        d_out[base + j]
                    } else {
                        0.0
                    }
                })
                .collect();
            grad.bias[o] += dz.iter().sum::<f64>();
            for i in 0..self.in_channels {
                let src = &input[i * side * side..(i + 1) * side * side];
                let dsrc = &mut d_in[i * side * side..(i + 1) * side * side];
                for ky in 0..KERNEL {
                    for kx in 0..KERNEL {
                        let ki = self.k(o, i, ky, kx);
                        let w = self.kernels[ki];
                        let mut acc = 0.0;
                        for y in 0..out_side {
                            let off = (y + ky) * side + kx;
                            let dzr = &dz[y * out_side..(y + 1) * out_side];
                            for (x, &d) in dzr.iter().enumerate() {
                                acc += d * src[off + x];
                                dsrc[off + x] += w * d;
                            }
                        }
                        grad.kernels[ki] += acc;
                    }
                }
            }
        }
        d_in
    }
}

/// 2×2 max-pool with floor semantics; returns pooled map and argmax indices.
fn max_pool(input: &[f64], channels: usize, side: usize) -> (Vec<f64>, Vec<usize>) {
    let out_side = side / 2;
    let mut out = Vec::with_capacity(channels * out_side * out_side);
    let mut arg = Vec::with_capacity(out.capacity());
    for c in 0..channels {
        let plane = c * side * side;
        for y in 0..out_side {
            for x in 0..out_side {
                let mut best = plane + 2 * y * side + 2 * x;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let j = plane + (2 * y + dy) * side + 2 * x + dx;
                    if input[j] > input[best] {
                        best = j;
                    }
                }
                out.push(input[best]);
                arg.push(best);
            }
        }
    }
    (out, arg)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "repr::ConvNet"))]
pub struct ConvNet {
    pub conv1: ConvLayer,
    pub conv2: ConvLayer,
    pub head: Network,
    pub dropout: f64,
}

pub struct ConvTrace {
    input: Vec<f64>,
    c1: Vec<f64>,
    p1: Vec<f64>,
    a1: Vec<usize>,
    c2: Vec<f64>,
    a2: Vec<usize>,
    mask: Option<Vec<f64>>,
    head: Activations,
}

impl ConvTrace {
    pub fn output(&self) -> &[f64] {
        self.head.output()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGradients {
    pub conv1: ConvGradient,
    pub conv2: ConvGradient,
    pub head: Gradients,
}

impl ConvGradients {
    pub fn to_flat(&self) -> Vec<f64> {
        self.conv1
            .kernels
            .iter()
            .chain(&self.conv1.bias)
            .chain(&self.conv2.kernels)
            .chain(&self.conv2.bias)
            .copied()
            .chain(self.head.values())
            .collect()
    }

    pub fn clear(&mut self) {
        for v in self
            .conv1
            .kernels
            .iter_mut()
            .chain(&mut self.conv1.bias)
            .chain(&mut self.conv2.kernels)
            .chain(&mut self.conv2.bias)
        {
            *v = 0.0;
        }
        self.head.clear();
    }
}

const SIDE1: usize = IMAGE_SIDE - KERNEL + 1; // 26
const POOL1: usize = SIDE1 / 2; // 13
const SIDE2: usize = POOL1 - KERNEL + 1; // 11
const POOL2: usize = SIDE2 / 2; // 5

impl ConvNet {
    pub fn glorot<R: Rng + ?Sized>(
        filters: (usize, usize),
        head_hidden: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Result<Self, NetError> {
        let conv1 = ConvLayer::glorot(1, filters.0, rng);
        let conv2 = ConvLayer::glorot(filters.0, filters.1, rng);
        let flat = filters.1 * POOL2 * POOL2;
        let head = Network::glorot(
            &[flat, head_hidden, NUM_CLASSES],
            &[Activation::Relu, Activation::Softmax],
            rng,
        )?;
        Ok(Self {
            conv1,
            conv2,
            head,
            dropout,
        })
    }

    /// Checks that the pieces chain: 1 input channel, matching channel counts, a head over
    /// the pooled map with one output per class, and dropout in `[0, 1)`.
    pub fn from_parts(
        conv1: ConvLayer,
        conv2: ConvLayer,
        head: Network,
        dropout: f64,
    ) -> Result<Self, NetError> {
        if conv1.in_channels != 1 || conv2.in_channels != conv1.out_channels {
            return Err(NetError::TopologyMismatch);
        }
        let flat = conv2.out_channels * POOL2 * POOL2;
        if head.input_dim() != flat {
            return Err(NetError::Shape {
                what: "conv head input",
                expected: flat,
                got: head.input_dim(),
            });
        }
        if head.output_dim() != NUM_CLASSES {
            return Err(NetError::Shape {
                what: "conv head output",
                expected: NUM_CLASSES,
                got: head.output_dim(),
            });
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(NetError::TopologyMismatch);
        }
        Ok(Self {
            conv1,
            conv2,
            head,
            dropout,
        })
    }

    pub fn num_params(&self) -> usize {
        self.conv1.kernels.len()
            + self.conv1.bias.len()
            + self.conv2.kernels.len()
            + self.conv2.bias.len()
            + self.head.num_params()
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.conv1
            .kernels
            .iter_mut()
            .chain(&mut self.conv1.bias)
            .chain(&mut self.conv2.kernels)
            .chain(&mut self.conv2.bias)
            .chain(self.head.params_mut())
    }

    pub fn zero_grad(&self) -> ConvGradients {
        ConvGradients {
            conv1: self.conv1.zero_grad(),
            conv2: self.conv2.zero_grad(),
            head: Gradients::zeros_for(&self.head),
        }
    }

    /// Forward pass. Dropout (inverted) is applied only when `rng` is given.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        pixels: &[f64],
        rng: Option<&mut R>,
    ) -> Result<ConvTrace, NetError> {
        if pixels.len() != IMAGE_SIDE * IMAGE_SIDE {
            return Err(NetError::Shape {
                what: "image",
                expected: IMAGE_SIDE * IMAGE_SIDE,
                got: pixels.len(),
            });
        }
        let c1 = self.conv1.forward(pixels, IMAGE_SIDE);
        let (p1, a1) = max_pool(&c1, self.conv1.out_channels, SIDE1);
        let c2 = self.conv2.forward(&p1, POOL1);
        let (mut p2, a2) = max_pool(&c2, self.conv2.out_channels, SIDE2);
        let mask = match rng {
            Some(rng) if self.dropout > 0.0 => {
                let keep = 1.0 - self.dropout;
                let m: Vec<f64> = (0..p2.len())
                    .map(|_| {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                p2.iter_mut().zip(&m).for_each(|(v, k)| *v *= k);
                Some(m)
            }
            _ => None,
        };
        let head = self.head.forward(&p2)?;
        Ok(ConvTrace {
            input: pixels.to_vec(),
            c1,
            p1,
            a1,
            c2,
            a2,
            mask,
            head,
        })
    }

    pub fn probabilities(&self, pixels: &[f64]) -> Result<Vec<f64>, NetError> {
        self.forward::<crate::rng::StreamRng>(pixels, None)
            .map(|t| t.output().to_vec())
    }

    /// Accumulates gradients given d loss / d logits of the softmax head.
    pub fn backward_from_logits(
        &self,
        trace: &ConvTrace,
        logit_gradient: &[f64],
        grads: &mut ConvGradients,
    ) -> Result<(), NetError> {
        self.head
            .backward_from_logits_into(&trace.head, logit_gradient, &mut grads.head)?;
        let mut d_p2 = grads.head.input.clone();
        if let Some(mask) = &trace.mask {
            d_p2.iter_mut().zip(mask).for_each(|(g, k)| *g *= k);
        }
        let mut d_c2 = vec![0.0; trace.c2.len()];
        for (g, &j) in d_p2.iter().zip(&trace.a2) {
            d_c2[j] += g;
        }
        let d_p1 = self
            .conv2
            .backward(&trace.p1, &trace.c2, &d_c2, POOL1, &mut grads.conv2);
        let mut d_c1 = vec![0.0; trace.c1.len()];
        for (g, &j) in d_p1.iter().zip(&trace.a1) {
            d_c1[j] += g;
        }
        self.conv1
            .backward(&trace.input, &trace.c1, &d_c1, IMAGE_SIDE, &mut grads.conv1);
        Ok(())
    }
}

#[cfg(feature = "serde")]
mod repr {
    use alloc::vec::Vec;

    use crate::nn::{NetError, Network};

    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct ConvLayer {
        in_channels: usize,
        out_channels: usize,
        kernels: Vec<f64>,
        bias: Vec<f64>,
    }

    impl TryFrom<ConvLayer> for super::ConvLayer {
        type Error = NetError;

        fn try_from(l: ConvLayer) -> Result<Self, NetError> {
            super::ConvLayer::new(l.in_channels, l.out_channels, l.kernels, l.bias)
        }
    }

    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct ConvNet {
        conv1: super::ConvLayer,
        conv2: super::ConvLayer,
        head: Network,
        dropout: f64,
    }

    impl TryFrom<ConvNet> for super::ConvNet {
        type Error = NetError;

        fn try_from(n: ConvNet) -> Result<Self, NetError> {
            super::ConvNet::from_parts(n.conv1, n.conv2, n.head, n.dropout)
        }
    }
}
