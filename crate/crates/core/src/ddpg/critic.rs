use alloc::vec::Vec;

use rand::Rng;

use crate::nn::{soft_update, Activation, Activations, AdamState, Gradients, NetError, Network};

/// Q(s, a): separate scalar branches for state and action, concatenated and passed through a
/// three-layer perceptron.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "repr::Critic"))]
pub struct Critic {
    pub state_branch: Network,
    pub action_branch: Network,
    pub head: Network,
}

pub struct CriticTrace {
    state: Activations,
    action: Activations,
    head: Activations,
}

impl CriticTrace {
    pub fn value(&self) -> f64 {
        self.head.output()[0]
    }
}

#[derive(Debug, Clone)]
pub struct CriticGradients {
    pub state_branch: Gradients,
    pub action_branch: Gradients,
    pub head: Gradients,
    /// dQ/ds of the last backward call.
    pub d_state: f64,
    /// dQ/da of the last backward call.
    pub d_action: f64,
}

impl CriticGradients {
    pub fn clear(&mut self) {
        self.state_branch.clear();
        self.action_branch.clear();
        self.head.clear();
    }
}

#[derive(Debug, Clone)]
pub struct CriticOptimizer {
    state_branch: AdamState,
    action_branch: AdamState,
    head: AdamState,
}

impl CriticOptimizer {
    pub fn new(critic: &Critic, lr: f64) -> Self {
        Self {
            state_branch: AdamState::for_network(&critic.state_branch, lr),
            action_branch: AdamState::for_network(&critic.action_branch, lr),
            head: AdamState::for_network(&critic.head, lr),
        }
    }

    pub fn step(&mut self, critic: &mut Critic, grads: &CriticGradients) -> Result<(), NetError> {
        // validate everything first so a bad gradient leaves all three parts untouched
        for g in [&grads.state_branch, &grads.action_branch, &grads.head] {
            if let Some(index) = g.values().position(|v| !v.is_finite()) {
                return Err(NetError::NonFiniteGradient { index });
            }
        }
        self.state_branch
            .step_network(&mut critic.state_branch, &grads.state_branch)?;
        self.action_branch
            .step_network(&mut critic.action_branch, &grads.action_branch)?;
        self.head.step_network(&mut critic.head, &grads.head)
    }
}

impl Critic {
    /// Branch width `branch`, head `2·branch → head.0 → head.1 → 1`.
    pub fn new<R: Rng + ?Sized>(branch: usize, head: (usize, usize), rng: &mut R) -> Self {
        let state_branch = Network::glorot(&[1, branch], &[Activation::Relu], rng).expect("static");
        let action_branch =
            Network::glorot(&[1, branch], &[Activation::Relu], rng).expect("static");
        let head = Network::glorot(
            &[2 * branch, head.0, head.1, 1],
            &[Activation::Relu, Activation::Relu, Activation::Linear],
            rng,
        )
        .expect("static");
        Self {
            state_branch,
            action_branch,
            head,
        }
    }

    pub fn from_parts(
        state_branch: Network,
        action_branch: Network,
        head: Network,
    ) -> Result<Self, NetError> {
        let merged = state_branch.output_dim() + action_branch.output_dim();
        if state_branch.input_dim() != 1 || action_branch.input_dim() != 1 {
            return Err(NetError::TopologyMismatch);
        }
        if head.input_dim() != merged || head.output_dim() != 1 {
            return Err(NetError::Shape {
                what: "critic head",
                expected: merged,
                got: head.input_dim(),
            });
        }
        Ok(Self {
            state_branch,
            action_branch,
            head,
        })
    }

    pub fn value(&self, s: f64, a: f64) -> f64 {
        self.trace(s, a).value()
    }

    pub fn trace(&self, s: f64, a: f64) -> CriticTrace {
        let state = self.state_branch.forward(&[s]).expect("scalar branch");
        let action = self.action_branch.forward(&[a]).expect("scalar branch");
        let merged: Vec<f64> = state
            .output()
            .iter()
            .chain(action.output())
            .copied()
            .collect();
        let head = self.head.forward(&merged).expect("validated topology");
        CriticTrace {
            state,
            action,
            head,
        }
    }

    pub fn zero_grad(&self) -> CriticGradients {
        CriticGradients {
            state_branch: Gradients::zeros_for(&self.state_branch),
            action_branch: Gradients::zeros_for(&self.action_branch),
            head: Gradients::zeros_for(&self.head),
            d_state: 0.0,
            d_action: 0.0,
        }
    }

    /// Accumulates `dq · ∂Q/∂ω` into `grads` and records ∂(dq·Q)/∂s and ∂(dq·Q)/∂a.
    pub fn backward(
        &self,
        trace: &CriticTrace,
        dq: f64,
        grads: &mut CriticGradients,
    ) -> Result<(), NetError> {
        self.head
            .backward_into(&trace.head, &[dq], &mut grads.head)?;
        let width = self.state_branch.output_dim();
        let (ds, da) = grads.head.input.split_at(width);
        let (ds, da) = (ds.to_vec(), da.to_vec());
        self.state_branch
            .backward_into(&trace.state, &ds, &mut grads.state_branch)?;
        self.action_branch
            .backward_into(&trace.action, &da, &mut grads.action_branch)?;
        grads.d_state = grads.state_branch.input[0];
        grads.d_action = grads.action_branch.input[0];
        Ok(())
    }

    /// ∂Q/∂a at `(s, a)`.
    pub fn action_gradient(&self, s: f64, a: f64) -> f64 {
        let trace = self.trace(s, a);
        let mut g = self.zero_grad();
        self.backward(&trace, 1.0, &mut g)
            .expect("consistent shapes");
        g.d_action
    }

    pub fn num_params(&self) -> usize {
        self.state_branch.num_params() + self.action_branch.num_params() + self.head.num_params()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> + '_ {
        self.state_branch
            .params()
            .chain(self.action_branch.params())
            .chain(self.head.params())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.state_branch
            .params_mut()
            .chain(self.action_branch.params_mut())
            .chain(self.head.params_mut())
    }

    pub fn soft_update_from(&mut self, source: &Critic, tau: f64) -> Result<(), NetError> {
        soft_update(&mut self.state_branch, &source.state_branch, tau)?;
        soft_update(&mut self.action_branch, &source.action_branch, tau)?;
        soft_update(&mut self.head, &source.head, tau)
    }
}

#[cfg(feature = "serde")]
mod repr {
    use crate::nn::{NetError, Network};

    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct Critic {
        state_branch: Network,
        action_branch: Network,
        head: Network,
    }

    impl TryFrom<Critic> for super::Critic {
        type Error = NetError;

        fn try_from(c: Critic) -> Result<Self, NetError> {
            super::Critic::from_parts(c.state_branch, c.action_branch, c.head)
        }
    }
}
