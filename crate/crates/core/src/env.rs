//! The emotion→exploration task loop.
//!
//! Each step the agent holds the emotion of one freshly classified item. Its action picks
//! how large a same-class follow-up batch to analyse; the batch outcome produces a second
//! emotion, and the reward combines the sign of the accuracy change with the emotion change.

use rand::Rng;

use crate::dataset::{self, DatasetError, Digit, LabeledPool, NUM_CLASSES};
use crate::emotion::{sample_confidence, EmotionError, EmotionKind, EmotionModel};
use crate::rng::StreamRng;
use crate::task::PredictionCache;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct EnvConfig {
    #[cfg_attr(feature = "serde", serde(default = "defaults::steps"))]
    pub steps_per_episode: usize,
    #[cfg_attr(feature = "serde", serde(default = "defaults::max_batch"))]
    pub max_batch: usize,
    pub emotion_kind: EmotionKind,
    /// Weight of the emotion term in the reward.
    #[cfg_attr(feature = "serde", serde(default = "defaults::lambda"))]
    pub lambda: f64,
    /// Emotion changes smaller than this count as stasis.
    #[cfg_attr(feature = "serde", serde(default = "defaults::stasis_epsilon"))]
    pub stasis_epsilon: f64,
}

#[cfg(feature = "serde")]
mod defaults {
    pub fn steps() -> usize {
        20
    }
    pub fn max_batch() -> usize {
        64
    }
    pub fn lambda() -> f64 {
        1.0
    }
    pub fn stasis_epsilon() -> f64 {
        0.01
    }
}

impl EnvConfig {
    pub fn new(emotion_kind: EmotionKind) -> Self {
        Self {
            steps_per_episode: 20,
            max_batch: 64,
            emotion_kind,
            lambda: 1.0,
            stasis_epsilon: 0.01,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        if self.steps_per_episode == 0 {
            return Err(EnvError::Config("steps_per_episode must be >= 1"));
        }
        if self.max_batch == 0 {
            return Err(EnvError::Config("max_batch must be >= 1"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(EnvError::Config("lambda must be finite and >= 0"));
        }
        if !(self.stasis_epsilon >= 0.0) {
            return Err(EnvError::Config("stasis_epsilon must be >= 0"));
        }
        Ok(())
    }

    /// Largest per-step reward magnitude: unit basis plus a full-range emotion swing.
    pub fn reward_bound(&self) -> f64 {
        1.0 + self.lambda
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    Config(&'static str),
    #[error("action {0} outside [0, 1]")]
    Action(f64),
    #[error("step called before reset or after the terminal step")]
    NotRunning,
    #[error("prediction cache does not cover the experiment pool")]
    MissingCache,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Emotion(#[from] EmotionError),
}

/// Outcome of classifying one item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleDraw {
    /// The class the agent believes the item shows; keys the follow-up batch.
    pub class: Digit,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchDraw {
    pub accuracy: f64,
    /// No pool member carried the requested class; the batch was drawn from the whole pool.
    pub fallback: bool,
}

/// Source of classification outcomes.
pub trait Task {
    /// Starts a new episode; re-randomises label adulteration where applicable.
    fn reset(&mut self, episode_seed: u64) -> Result<(), EnvError>;
    fn draw_single(&mut self, rng: &mut StreamRng) -> Result<SingleDraw, EnvError>;
    /// Accuracy over a batch of `size >= 1` items of `class`.
    fn draw_batch(
        &mut self,
        class: Digit,
        size: usize,
        rng: &mut StreamRng,
    ) -> Result<BatchDraw, EnvError>;
}

/// The frozen classifier against the adulterated experiment pool.
#[derive(Debug, Clone)]
pub struct CachedTask<'a> {
    cache: &'a PredictionCache,
    pool: LabeledPool,
}

impl<'a> CachedTask<'a> {
    pub fn new(base: &LabeledPool, cache: &'a PredictionCache) -> Result<Self, EnvError> {
        if !cache.covers(base) || base.is_empty() {
            return Err(EnvError::MissingCache);
        }
        Ok(Self {
            cache,
            pool: base.clone(),
        })
    }

    pub fn pool(&self) -> &LabeledPool {
        &self.pool
    }

    fn correct(&self, pos: usize) -> bool {
        self.cache.predicted(pos) == self.pool.assigned_label(pos)
    }
}

impl Task for CachedTask<'_> {
    fn reset(&mut self, episode_seed: u64) -> Result<(), EnvError> {
        self.pool.adulterate_in_place(episode_seed)?;
        Ok(())
    }

    fn draw_single(&mut self, rng: &mut StreamRng) -> Result<SingleDraw, EnvError> {
        let (pos, _) = dataset::sample_instance(&self.pool, rng)?;
        Ok(SingleDraw {
            class: self.cache.predicted(pos),
            correct: self.correct(pos),
        })
    }

    fn draw_batch(
        &mut self,
        class: Digit,
        size: usize,
        rng: &mut StreamRng,
    ) -> Result<BatchDraw, EnvError> {
        let draw = dataset::sample_batch_same_class(&self.pool, class, size, rng)?;
        let hits = draw.positions.iter().filter(|&&p| self.correct(p)).count();
        Ok(BatchDraw {
            accuracy: hits as f64 / size as f64,
            fallback: draw.fallback,
        })
    }
}

/// Bernoulli correctness with no images behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticTask {
    pub correct_p: f64,
}

impl Task for SyntheticTask {
    fn reset(&mut self, _episode_seed: u64) -> Result<(), EnvError> {
        Ok(())
    }

    fn draw_single(&mut self, rng: &mut StreamRng) -> Result<SingleDraw, EnvError> {
        let class = Digit::new(rng.random_range(0..NUM_CLASSES as u8)).expect("in range");
        Ok(SingleDraw {
            class,
            correct: rng.random_bool(self.correct_p),
        })
    }

    fn draw_batch(
        &mut self,
        _class: Digit,
        size: usize,
        rng: &mut StreamRng,
    ) -> Result<BatchDraw, EnvError> {
        let hits = (0..size)
            .filter(|_| rng.random_bool(self.correct_p))
            .count();
        Ok(BatchDraw {
            accuracy: hits as f64 / size as f64,
            fallback: false,
        })
    }
}

impl<T: Task + ?Sized> Task for &mut T {
    fn reset(&mut self, episode_seed: u64) -> Result<(), EnvError> {
        (**self).reset(episode_seed)
    }

    fn draw_single(&mut self, rng: &mut StreamRng) -> Result<SingleDraw, EnvError> {
        (**self).draw_single(rng)
    }

    fn draw_batch(
        &mut self,
        class: Digit,
        size: usize,
        rng: &mut StreamRng,
    ) -> Result<BatchDraw, EnvError> {
        (**self).draw_batch(class, size, rng)
    }
}

/// `sign(batch − single)` plus `λ·(−Δ)` for surprise or `λ·Δ` for pride. Zero when nothing
/// was explored.
pub fn reward(
    single_acc: f64,
    batch_acc: Option<f64>,
    delta_emotion: f64,
    kind: EmotionKind,
    lambda: f64,
) -> f64 {
    let Some(batch_acc) = batch_acc else {
        return 0.0;
    };
    let diff = batch_acc - single_acc;
    let basis = if diff > 0.0 {
        1.0
    } else if diff < 0.0 {
        -1.0
    } else {
        0.0
    };
    let emotion = match kind {
        EmotionKind::Surprise => -delta_emotion,
        EmotionKind::Pride => delta_emotion,
    };
    basis + lambda * emotion
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepOutcome {
    pub single_correct: bool,
    /// Confidence behind `emotion_before`; absent for pride.
    pub confidence: Option<f64>,
    pub emotion_before: f64,
    pub exploration_rate: f64,
    pub batch_size: usize,
    pub batch_accuracy: Option<f64>,
    pub emotion_after: f64,
    pub reward: f64,
    pub fallback: bool,
}

impl StepOutcome {
    pub fn delta_emotion(&self) -> f64 {
        self.emotion_after - self.emotion_before
    }

    pub fn explored(&self) -> bool {
        self.batch_size > 0
    }
}

#[derive(Debug, Clone, Copy)]
struct Current {
    draw: SingleDraw,
    confidence: Option<f64>,
    emotion: f64,
}

pub struct Environment<T> {
    config: EnvConfig,
    task: T,
    emotion: EmotionModel,
    rng: StreamRng,
    current: Option<Current>,
    step_index: usize,
    emotion_evaluations: usize,
}

impl<T: Task> Environment<T> {
    pub fn new(
        config: EnvConfig,
        task: T,
        emotion: EmotionModel,
        rng: StreamRng,
    ) -> Result<Self, EnvError> {
        config.validate()?;
        if emotion.kind() != config.emotion_kind {
            return Err(EnvError::Config("emotion model kind differs from config"));
        }
        Ok(Self {
            config,
            task,
            emotion,
            rng,
            current: None,
            step_index: 0,
            emotion_evaluations: 0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn task(&self) -> &T {
        &self.task
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// Total emotion evaluations since construction.
    pub fn emotion_evaluations(&self) -> usize {
        self.emotion_evaluations
    }

    fn score(&mut self, accuracy: f64) -> Result<(f64, Option<f64>), EnvError> {
        let confidence = self
            .config
            .emotion_kind
            .uses_confidence()
            .then(|| sample_confidence(&mut self.rng));
        let e = self.emotion.evaluate(accuracy, confidence)?;
        self.emotion_evaluations += 1;
        Ok((e, confidence))
    }

    fn observe(&mut self) -> Result<Current, EnvError> {
        let draw = self.task.draw_single(&mut self.rng)?;
        let (emotion, confidence) = self.score(if draw.correct { 1.0 } else { 0.0 })?;
        Ok(Current {
            draw,
            confidence,
            emotion,
        })
    }

    /// Re-adulterates, draws the first item and returns its emotion.
    pub fn reset(&mut self, episode_seed: u64) -> Result<f64, EnvError> {
        self.task.reset(episode_seed)?;
        let cur = self.observe()?;
        self.current = Some(cur);
        self.step_index = 0;
        Ok(cur.emotion)
    }

    /// Applies exploration rate `a`; returns the outcome, the next state and the terminal flag.
    /// On the terminal step no new item is drawn and the next state repeats `emotion_after`.
    pub fn step(&mut self, a: f64) -> Result<(StepOutcome, f64, bool), EnvError> {
        if !(0.0..=1.0).contains(&a) {
            return Err(EnvError::Action(a));
        }
        let cur = self.current.ok_or(EnvError::NotRunning)?;
        let batch_size = libm::round(a * self.config.max_batch as f64) as usize;
        let single_acc = if cur.draw.correct { 1.0 } else { 0.0 };
        let (batch_accuracy, emotion_after, fallback) = if batch_size >= 1 {
            let b = self
                .task
                .draw_batch(cur.draw.class, batch_size, &mut self.rng)?;
            let (e, _) = self.score(b.accuracy)?;
            (Some(b.accuracy), e, b.fallback)
        } else {
            (None, cur.emotion, false)
        };
        let r = reward(
            single_acc,
            batch_accuracy,
            emotion_after - cur.emotion,
            self.config.emotion_kind,
            self.config.lambda,
        );
        let outcome = StepOutcome {
            single_correct: cur.draw.correct,
            confidence: cur.confidence,
            emotion_before: cur.emotion,
            exploration_rate: a,
            batch_size,
            batch_accuracy,
            emotion_after,
            reward: r,
            fallback,
        };
        self.step_index += 1;
        let terminal = self.step_index == self.config.steps_per_episode;
        if terminal {
            // no further item is scored; the terminal transition never bootstraps
            self.current = None;
            return Ok((outcome, emotion_after, true));
        }
        let next = self.observe()?;
        self.current = Some(next);
        Ok((outcome, next.emotion, false))
    }
}
