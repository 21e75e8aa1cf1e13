//! Deterministic-policy actor-critic over a scalar state (emotion) and scalar action
//! (exploration rate), with replay and soft-updated target networks.

mod actor;
mod critic;
mod noise;
mod replay;

pub use actor::Actor;
pub use critic::{Critic, CriticGradients, CriticOptimizer, CriticTrace};
pub use noise::{ActionNoise, NoiseConfig};
pub use replay::{ReplayBuffer, Transition};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::nn::{soft_update, AdamState, Gradients, NetError};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct DdpgConfig {
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    pub actor_hidden: usize,
    pub critic_branch: usize,
    pub critic_head: (usize, usize),
    pub noise: NoiseConfig,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.005,
            lr_actor: 0.001,
            lr_critic: 0.002,
            batch: 64,
            buffer_capacity: 5000,
            actor_hidden: 32,
            critic_branch: 32,
            critic_head: (64, 32),
            noise: NoiseConfig::default(),
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err("gamma must be in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err("tau must be in [0, 1]");
        }
        if !(self.lr_actor >= 0.0 && self.lr_critic >= 0.0) {
            return Err("learning rates must be >= 0");
        }
        if self.batch == 0 || self.buffer_capacity < self.batch {
            return Err("need 1 <= batch <= buffer_capacity");
        }
        if self.actor_hidden == 0
            || self.critic_branch == 0
            || self.critic_head.0 == 0
            || self.critic_head.1 == 0
        {
            return Err("hidden widths must be >= 1");
        }
        let n = self.noise;
        if !(n.floor >= 0.0 && n.floor <= n.initial && n.decay > 0.0 && n.decay <= 1.0) {
            return Err("noise needs 0 <= floor <= initial and 0 < decay <= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UpdateError {
    #[error("non-finite critic loss {0}")]
    NonFiniteLoss(f64),
    #[error("actor-critic update failed: {0}")]
    Net(#[from] NetError),
}

impl UpdateError {
    pub fn diagnostic(&self) -> String {
        format!("{self}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub critic_loss: f64,
    /// Mean Q(s, μ(s)) over the batch after the critic step.
    pub actor_objective: f64,
}

/// `clip(μ(s) + N(0, σ²), 0, 1)`, then σ decays. Returns `(applied, policy)` actions.
pub fn select_action<R: Rng + ?Sized>(
    actor: &Actor,
    s: f64,
    noise: &mut ActionNoise,
    rng: &mut R,
) -> (f64, f64) {
    let mu = actor.act(s);
    let a = (mu + noise.draw(rng)).clamp(0.0, 1.0);
    noise.decay();
    (a, mu)
}

/// One agent's actor, critic, their targets and optimizer state.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Actor,
    pub critic: Critic,
    pub target_actor: Actor,
    pub target_critic: Critic,
    actor_opt: AdamState,
    critic_opt: CriticOptimizer,
    config: DdpgConfig,
}

impl DdpgAgent {
    pub fn new<R: Rng + ?Sized>(config: DdpgConfig, rng: &mut R) -> Self {
        let actor = Actor::new(config.actor_hidden, rng);
        let critic = Critic::new(config.critic_branch, config.critic_head, rng);
        Self::from_networks(config, actor, critic)
    }

    pub fn from_networks(config: DdpgConfig, actor: Actor, critic: Critic) -> Self {
        let actor_opt = AdamState::for_network(&actor.net, config.lr_actor);
        let critic_opt = CriticOptimizer::new(&critic, config.lr_critic);
        Self {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            actor_opt,
            critic_opt,
            config,
        }
    }

    pub fn config(&self) -> &DdpgConfig {
        &self.config
    }

    /// Critic regression target for one transition.
    pub fn td_target(&self, t: &Transition) -> f64 {
        if t.terminal || self.config.gamma == 0.0 {
            t.r
        } else {
            let a_next = self.target_actor.act(t.s_next);
            t.r + self.config.gamma * self.target_critic.value(t.s_next, a_next)
        }
    }

    /// Mean squared TD error of `batch` under the current critic.
    pub fn critic_loss(&self, batch: &[Transition]) -> f64 {
        let n = batch.len().max(1) as f64;
        batch
            .iter()
            .map(|t| {
                let e = self.td_target(t) - self.critic.value(t.s, t.a);
                e * e
            })
            .sum::<f64>()
            / n
    }

    /// Critic step on the TD loss, then actor step ascending Q(s, μ(s)). Targets are not
    /// touched; see [`DdpgAgent::soft_update`].
    pub fn update(&mut self, batch: &[Transition]) -> Result<UpdateStats, UpdateError> {
        let n = batch.len() as f64;
        let targets: Vec<f64> = batch.iter().map(|t| self.td_target(t)).collect();

        let mut cg = self.critic.zero_grad();
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(&targets) {
            let trace = self.critic.trace(t.s, t.a);
            let err = y - trace.value();
            loss += err * err;
            self.critic.backward(&trace, -2.0 * err / n, &mut cg)?;
        }
        loss /= n;
        if !loss.is_finite() {
            return Err(UpdateError::NonFiniteLoss(loss));
        }
        self.critic_opt.step(&mut self.critic, &cg)?;

        // ∇θ J = E[∇θ μ(s) · ∇a Q(s, a)|a=μ(s)]; descend on -J.
        let mut ag = Gradients::zeros_for(&self.actor.net);
        let mut objective = 0.0;
        let mut scratch = self.critic.zero_grad();
        for t in batch {
            let acts = self.actor.trace(t.s);
            let a = acts.output()[0];
            let ctrace = self.critic.trace(t.s, a);
            objective += ctrace.value();
            self.critic.backward(&ctrace, 1.0, &mut scratch)?;
            let dq_da = scratch.d_action;
            self.actor
                .net
                .backward_into(&acts, &[-dq_da / n], &mut ag)?;
        }
        self.actor_opt.step_network(&mut self.actor.net, &ag)?;
        Ok(UpdateStats {
            critic_loss: loss,
            actor_objective: objective / n,
        })
    }

    pub fn soft_update(&mut self) -> Result<(), NetError> {
        soft_update(&mut self.target_actor.net, &self.actor.net, self.config.tau)?;
        self.target_critic
            .soft_update_from(&self.critic, self.config.tau)
    }

    /// Samples a batch from `buffer`, updates and soft-updates. `None` while the buffer is
    /// smaller than the batch size.
    pub fn train_step(
        &mut self,
        buffer: &mut ReplayBuffer,
    ) -> Result<Option<UpdateStats>, UpdateError> {
        let Some(batch) = buffer.sample(self.config.batch) else {
            return Ok(None);
        };
        let stats = self.update(&batch)?;
        self.soft_update()?;
        Ok(Some(stats))
    }
}

#[cfg(test)]
mod tests;
