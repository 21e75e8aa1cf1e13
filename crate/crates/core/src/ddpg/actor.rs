use rand::Rng;

use crate::nn::{Activation, Activations, NetError, Network};

/// Deterministic policy: emotion score → exploration rate in (0, 1).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Network", into = "Network"))]
pub struct Actor {
    pub net: Network,
}

impl Actor {
    /// `1 → hidden (relu) → 1 (sigmoid)`.
    pub fn new<R: Rng + ?Sized>(hidden: usize, rng: &mut R) -> Self {
        let net = Network::glorot(
            &[1, hidden, 1],
            &[Activation::Relu, Activation::Sigmoid],
            rng,
        )
        .expect("static topology");
        Self { net }
    }

    /// Wraps an existing network; it must map one input to one sigmoid output.
    pub fn from_network(net: Network) -> Result<Self, NetError> {
        let last = net.layers().last().map(|l| l.activation());
        if net.input_dim() != 1 || net.output_dim() != 1 || last != Some(Activation::Sigmoid) {
            return Err(NetError::TopologyMismatch);
        }
        Ok(Self { net })
    }

    pub fn act(&self, s: f64) -> f64 {
        self.net.predict(&[s]).expect("scalar actor")[0]
    }

    pub fn trace(&self, s: f64) -> Activations {
        self.net.forward(&[s]).expect("scalar actor")
    }
}

impl TryFrom<Network> for Actor {
    type Error = NetError;

    fn try_from(net: Network) -> Result<Self, NetError> {
        Actor::from_network(net)
    }
}

impl From<Actor> for Network {
    fn from(a: Actor) -> Network {
        a.net
    }
}
