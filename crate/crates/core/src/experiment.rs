//! Population driver: one seeded personality, actor-critic and environment per agent.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::dataset::LabeledPool;
use crate::ddpg::{
    select_action, ActionNoise, Actor, Critic, DdpgAgent, DdpgConfig, ReplayBuffer, Transition,
};
use crate::emotion::{sample_personality, AgentPersonality, EmotionKind, EmotionModel};
use crate::env::{CachedTask, EnvConfig, EnvError, Environment, StepOutcome, SyntheticTask, Task};
use crate::rng::{mix, stream, Stream};
use crate::task::PredictionCache;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum TaskMode {
    CachedClassifier,
    SyntheticOracle,
}

impl TaskMode {
    pub fn name(self) -> &'static str {
        match self {
            TaskMode::CachedClassifier => "cached-classifier",
            TaskMode::SyntheticOracle => "synthetic-oracle",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "cached-classifier" => Some(TaskMode::CachedClassifier),
            "synthetic-oracle" => Some(TaskMode::SyntheticOracle),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ExperimentConfig {
    #[cfg_attr(feature = "serde", serde(default = "defaults::num_agents"))]
    pub num_agents: usize,
    #[cfg_attr(feature = "serde", serde(default = "defaults::episodes"))]
    pub episodes: usize,
    pub master_seed: u64,
    pub task_mode: TaskMode,
    /// Per-item correctness probability in synthetic-oracle mode.
    #[cfg_attr(feature = "serde", serde(default = "defaults::correct_p"))]
    pub synthetic_correct_p: f64,
    pub env: EnvConfig,
    #[cfg_attr(feature = "serde", serde(default))]
    pub ddpg: DdpgConfig,
}

#[cfg(feature = "serde")]
mod defaults {
    pub fn num_agents() -> usize {
        25
    }
    pub fn episodes() -> usize {
        100
    }
    pub fn correct_p() -> f64 {
        0.5
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("task source is {got} but the config asks for {expected}")]
    Mode {
        expected: &'static str,
        got: &'static str,
    },
    #[error(transparent)]
    Env(#[from] EnvError),
}

impl ExperimentConfig {
    /// 25 agents, 100 episodes of 20 steps, default actor-critic.
    pub fn desk(kind: EmotionKind, task_mode: TaskMode, master_seed: u64) -> Self {
        Self {
            num_agents: 25,
            episodes: 100,
            master_seed,
            task_mode,
            synthetic_correct_p: 0.5,
            env: EnvConfig::new(kind),
            ddpg: DdpgConfig::default(),
        }
    }

    pub fn emotion_kind(&self) -> EmotionKind {
        self.env.emotion_kind
    }

    pub fn steps_per_agent(&self) -> usize {
        self.episodes * self.env.steps_per_episode
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.num_agents == 0 {
            return Err(ExperimentError::Config("num_agents must be >= 1".into()));
        }
        if self.episodes == 0 {
            return Err(ExperimentError::Config("episodes must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.synthetic_correct_p) {
            return Err(ExperimentError::Config(
                "synthetic_correct_p must be in [0, 1]".into(),
            ));
        }
        self.env
            .validate()
            .map_err(|e| ExperimentError::Config(format!("{e}")))?;
        self.ddpg
            .validate()
            .map_err(|e| ExperimentError::Config(e.into()))
    }
}

/// Shared read-only input every agent draws its task from.
#[derive(Debug, Clone, Copy)]
pub enum TaskSource<'a> {
    Cached {
        pool: &'a LabeledPool,
        cache: &'a PredictionCache,
    },
    Synthetic,
}

impl TaskSource<'_> {
    pub fn mode(&self) -> TaskMode {
        match self {
            TaskSource::Cached { .. } => TaskMode::CachedClassifier,
            TaskSource::Synthetic => TaskMode::SyntheticOracle,
        }
    }
}

/// One environment step as seen by the agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub episode: usize,
    pub step: usize,
    /// Actor output before noise.
    pub policy_action: f64,
    pub outcome: StepOutcome,
    pub s_next: f64,
    pub terminal: bool,
}

impl StepRecord {
    pub fn s(&self) -> f64 {
        self.outcome.emotion_before
    }

    /// The applied (noisy, clipped) exploration rate.
    pub fn a(&self) -> f64 {
        self.outcome.exploration_rate
    }

    pub fn r(&self) -> f64 {
        self.outcome.reward
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub agent_id: u64,
    pub seed: u64,
    pub personality: AgentPersonality,
    pub steps: Vec<StepRecord>,
    /// Sum of step rewards for every completed episode.
    pub episode_rewards: Vec<f64>,
    pub actor: Actor,
    pub critic: Critic,
    /// Set when the run stopped early; the log then holds the steps completed so far.
    pub failure: Option<String>,
}

impl AgentRecord {
    pub fn failed(&self) -> bool {
        self.failure.is_some()
    }

    /// Steps of episode `e`.
    pub fn episode_steps(&self, e: usize) -> &[StepRecord] {
        let lo = self.steps.partition_point(|s| s.episode < e);
        let hi = self.steps.partition_point(|s| s.episode <= e);
        &self.steps[lo..hi]
    }

    /// Whether stored episode rewards re-sum from the step log.
    pub fn rewards_consistent(&self) -> bool {
        self.episode_rewards.iter().enumerate().all(|(e, &total)| {
            self.episode_steps(e).iter().map(StepRecord::r).sum::<f64>() == total
        })
    }
}

pub fn agent_seed(master_seed: u64, agent_id: u64) -> u64 {
    mix(master_seed, agent_id)
}

fn check_source(config: &ExperimentConfig, source: &TaskSource<'_>) -> Result<(), ExperimentError> {
    if config.task_mode != source.mode() {
        return Err(ExperimentError::Mode {
            expected: config.task_mode.name(),
            got: source.mode().name(),
        });
    }
    Ok(())
}

/// Runs one agent through the full learning cycle. Numerical failures end the agent's run
/// and are reported in [`AgentRecord::failure`]; only configuration errors are returned.
pub fn run_agent(
    config: &ExperimentConfig,
    agent_id: u64,
    source: TaskSource<'_>,
) -> Result<AgentRecord, ExperimentError> {
    config.validate()?;
    check_source(config, &source)?;
    match source {
        TaskSource::Cached { pool, cache } => {
            run_with(config, agent_id, CachedTask::new(pool, cache)?)
        }
        TaskSource::Synthetic => run_with(
            config,
            agent_id,
            SyntheticTask {
                correct_p: config.synthetic_correct_p,
            },
        ),
    }
}

fn run_with<T: Task>(
    config: &ExperimentConfig,
    agent_id: u64,
    task: T,
) -> Result<AgentRecord, ExperimentError> {
    let seed = agent_seed(config.master_seed, agent_id);
    let personality = sample_personality(&mut stream(seed, Stream::Personality));
    let mut agent = DdpgAgent::new(config.ddpg.clone(), &mut stream(seed, Stream::Init));
    let emotion = EmotionModel::new(config.emotion_kind(), personality);
    let mut env = Environment::new(
        config.env.clone(),
        task,
        emotion,
        stream(seed, Stream::Environment),
    )?;
    let mut noise = ActionNoise::new(config.ddpg.noise);
    let mut noise_rng = stream(seed, Stream::ActionNoise);
    let mut buffer = ReplayBuffer::new(config.ddpg.buffer_capacity, stream(seed, Stream::Replay));
    let mut episode_rng = stream(seed, Stream::Episode);

    let mut steps = Vec::with_capacity(config.steps_per_agent());
    let mut episode_rewards = Vec::with_capacity(config.episodes);
    let mut failure = None;

    'episodes: for episode in 0..config.episodes {
        let mut s = match env.reset(episode_rng.random()) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(format!("episode {episode} reset: {e}"));
                break;
            }
        };
        let mut total = 0.0;
        for step in 0..config.env.steps_per_episode {
            let (a, mu) = select_action(&agent.actor, s, &mut noise, &mut noise_rng);
            let (outcome, s_next, terminal) = match env.step(a) {
                Ok(x) => x,
                Err(e) => {
                    failure = Some(format!("episode {episode} step {step}: {e}"));
                    break 'episodes;
                }
            };
            buffer.push(Transition {
                s,
                a,
                r: outcome.reward,
                s_next,
                terminal,
            });
            total += outcome.reward;
            steps.push(StepRecord {
                episode,
                step,
                policy_action: mu,
                outcome,
                s_next,
                terminal,
            });
            if let Err(e) = agent.train_step(&mut buffer) {
                failure = Some(format!("episode {episode} step {step}: {}", e.diagnostic()));
                break 'episodes;
            }
            s = s_next;
        }
        episode_rewards.push(total);
    }

    Ok(AgentRecord {
        agent_id,
        seed,
        personality,
        steps,
        episode_rewards,
        actor: agent.actor,
        critic: agent.critic,
        failure,
    })
}

/// Serial population run. Agents are independent, so any scheduler that calls
/// [`run_agent`] per id and orders results by id gives the same records.
pub fn run_population(
    config: &ExperimentConfig,
    source: TaskSource<'_>,
) -> Result<Vec<AgentRecord>, ExperimentError> {
    (0..config.num_agents as u64)
        .map(|id| run_agent(config, id, source))
        .collect()
}

/// `0, 0.01, …, 1`.
pub fn default_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

/// Noise-free actor outputs over an emotion grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BehaviorCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl BehaviorCurve {
    /// `sign(curve(last) − curve(first))`: 1, −1 or 0.
    pub fn direction(&self) -> i8 {
        match (self.values.first(), self.values.last()) {
            (Some(a), Some(b)) if b > a => 1,
            (Some(a), Some(b)) if b < a => -1,
            _ => 0,
        }
    }
}

pub fn behavior_sweep(actor: &Actor, grid: &[f64]) -> BehaviorCurve {
    BehaviorCurve {
        grid: grid.to_vec(),
        values: grid.iter().map(|&s| actor.act(s)).collect(),
    }
}
