//! The pre-trained digit classifier and its frozen prediction cache.

pub mod conv;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::dataset::{Digit, ImageInstance, LabeledPool, IMAGE_PIXELS, NUM_CLASSES};
use crate::nn::{Activation, AdamState, Gradients, NetError, Network};
use crate::rng::seeded;
use conv::ConvNet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Architecture {
    /// 784 → hidden (ReLU) → 10 (softmax).
    Mlp,
    /// Two 3×3 conv blocks with max-pooling, dropout, dense head.
    Conv,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct ClassifierConfig {
    pub architecture: Architecture,
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
    pub seed: u64,
    /// Hidden width of the mlp, or of the conv head.
    pub hidden: usize,
    pub conv_filters: (usize, usize),
    pub dropout: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Mlp,
            epochs: 10,
            minibatch: 128,
            lr: 0.001,
            seed: 7,
            hidden: 256,
            conv_filters: (32, 64),
            dropout: 0.5,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.minibatch == 0 {
            return Err(TrainError::Config("minibatch must be >= 1"));
        }
        if self.hidden == 0 || self.conv_filters.0 == 0 || self.conv_filters.1 == 0 {
            return Err(TrainError::Config("layer widths must be >= 1"));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(TrainError::Config("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TrainError::Config("dropout must be in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("invalid classifier config: {0}")]
    Config(&'static str),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("no training instances")]
    NoData,
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(tag = "architecture", content = "network", rename_all = "lowercase")
)]
pub enum TaskModel {
    Mlp(Network),
    Conv(ConvNet),
}

impl TaskModel {
    pub fn architecture(&self) -> Architecture {
        match self {
            TaskModel::Mlp(_) => Architecture::Mlp,
            TaskModel::Conv(_) => Architecture::Conv,
        }
    }

    pub fn probabilities(&self, pixels: &[f64]) -> Result<Vec<f64>, NetError> {
        match self {
            TaskModel::Mlp(net) => net.predict(pixels),
            TaskModel::Conv(net) => net.probabilities(pixels),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub label: Digit,
    pub softmax_max: f64,
}

/// Argmax over class scores; ties go to the lowest digit.
pub fn argmax_prediction(scores: &[f64]) -> Prediction {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    Prediction {
        label: Digit::new(best as u8).expect("ten classes"),
        softmax_max: scores[best],
    }
}

pub fn predict(model: &TaskModel, pixels: &[f64]) -> Result<Prediction, NetError> {
    model.probabilities(pixels).map(|p| argmax_prediction(&p))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub loss: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainReport {
    pub epochs: usize,
    /// Mean training cross-entropy per epoch.
    pub train_loss: Vec<f64>,
    pub test: EvalMetrics,
}

fn cross_entropy(probs: &[f64], label: Digit) -> f64 {
    -libm::log(probs[label.index()].max(1e-300))
}

pub fn evaluate(model: &TaskModel, data: &[&ImageInstance]) -> Result<EvalMetrics, NetError> {
    let mut correct = 0usize;
    let mut loss = 0.0;
    for inst in data {
        let probs = model.probabilities(&inst.pixels)?;
        if argmax_prediction(&probs).label == inst.true_label {
            correct += 1;
        }
        loss += cross_entropy(&probs, inst.true_label);
    }
    let n = data.len().max(1) as f64;
    Ok(EvalMetrics {
        accuracy: correct as f64 / n,
        loss: loss / n,
        count: data.len(),
    })
}

pub fn init_model(config: &ClassifierConfig) -> Result<TaskModel, TrainError> {
    config.validate()?;
    let mut rng = seeded(config.seed);
    Ok(match config.architecture {
        Architecture::Mlp => TaskModel::Mlp(Network::glorot(
            &[IMAGE_PIXELS, config.hidden, NUM_CLASSES],
            &[Activation::Relu, Activation::Softmax],
            &mut rng,
        )?),
        Architecture::Conv => TaskModel::Conv(ConvNet::glorot(
            config.conv_filters,
            config.hidden,
            config.dropout,
            &mut rng,
        )?),
    })
}

/// Minibatch Adam on softmax cross-entropy using the TRUE labels of `train`.
pub fn pretrain(
    config: &ClassifierConfig,
    train: &[&ImageInstance],
    test: &[&ImageInstance],
) -> Result<(TaskModel, TrainReport), TrainError> {
    let mut model = init_model(config)?;
    if train.is_empty() && config.epochs > 0 {
        return Err(TrainError::NoData);
    }
    let mut rng = seeded(crate::rng::mix(config.seed, 0x7261_696e));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut train_loss = Vec::with_capacity(config.epochs);
    let mut adam = match &model {
        TaskModel::Mlp(n) => AdamState::for_network(n, config.lr),
        TaskModel::Conv(n) => AdamState::new(n.num_params(), config.lr),
    };
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.minibatch) {
            let scale = 1.0 / chunk.len() as f64;
            let batch_loss = match &mut model {
                TaskModel::Mlp(net) => {
                    let mut grads = Gradients::zeros_for(net);
                    let mut loss = 0.0;
                    for &i in chunk {
                        let inst = train[i];
                        let acts = net.forward(&inst.pixels)?;
                        let mut dz = acts.output().to_vec();
                        loss += cross_entropy(&dz, inst.true_label);
                        dz[inst.true_label.index()] -= 1.0;
                        dz.iter_mut().for_each(|g| *g *= scale);
                        net.backward_from_logits_into(&acts, &dz, &mut grads)?;
                    }
                    step_or_diverge(adam.step_network(net, &grads), epoch)?;
                    loss
                }
                TaskModel::Conv(net) => {
                    let mut grads = net.zero_grad();
                    let mut loss = 0.0;
                    for &i in chunk {
                        let inst = train[i];
                        let trace = net.forward(&inst.pixels, Some(&mut rng))?;
                        let mut dz = trace.output().to_vec();
                        loss += cross_entropy(&dz, inst.true_label);
                        dz[inst.true_label.index()] -= 1.0;
                        dz.iter_mut().for_each(|g| *g *= scale);
                        net.backward_from_logits(&trace, &dz, &mut grads)?;
                    }
                    let flat = grads.to_flat();
                    step_or_diverge(adam.step(net.params_mut(), &flat), epoch)?;
                    loss
                }
            };
            if !batch_loss.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    detail: alloc::format!("minibatch loss {batch_loss}"),
                });
            }
            epoch_loss += batch_loss;
        }
        train_loss.push(epoch_loss / train.len() as f64);
    }
    let test = evaluate(&model, test)?;
    if !test.loss.is_finite() {
        return Err(TrainError::Diverged {
            epoch: config.epochs,
            detail: alloc::format!("test loss {}", test.loss),
        });
    }
    Ok((
        model,
        TrainReport {
            epochs: config.epochs,
            train_loss,
            test,
        },
    ))
}

fn step_or_diverge(r: Result<(), NetError>, epoch: usize) -> Result<(), TrainError> {
    r.map_err(|e| match e {
        NetError::NonFiniteGradient { .. } => TrainError::Diverged {
            epoch,
            detail: alloc::format!("{e}"),
        },
        other => TrainError::Net(other),
    })
}

/// Frozen classifier outputs for every experiment-pool position.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionCache {
    ids: Vec<usize>,
    predicted: Vec<Digit>,
    softmax_max: Vec<f64>,
}

impl PredictionCache {
    pub fn from_parts(
        ids: Vec<usize>,
        predicted: Vec<Digit>,
        softmax_max: Vec<f64>,
    ) -> Option<Self> {
        (ids.len() == predicted.len() && ids.len() == softmax_max.len()).then_some(Self {
            ids,
            predicted,
            softmax_max,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn predicted(&self, pos: usize) -> Digit {
        self.predicted[pos]
    }

    pub fn softmax_max(&self, pos: usize) -> f64 {
        self.softmax_max[pos]
    }

    pub fn get(&self, pos: usize) -> Prediction {
        Prediction {
            label: self.predicted[pos],
            softmax_max: self.softmax_max[pos],
        }
    }

    /// True when the cache lines up position-by-position with `pool`.
    pub fn covers(&self, pool: &LabeledPool) -> bool {
        self.ids == pool.ids()
    }

    /// Fraction of positions whose cached prediction equals the pool's true label.
    pub fn agreement_with_truth(&self, pool: &LabeledPool) -> f64 {
        self.agreement(pool.true_labels())
    }

    /// Fraction of positions whose cached prediction equals the pool's assigned label.
    pub fn agreement_with_assigned(&self, pool: &LabeledPool) -> f64 {
        self.agreement(pool.assigned_labels())
    }

    fn agreement(&self, labels: &[Digit]) -> f64 {
        let hits = self
            .predicted
            .iter()
            .zip(labels)
            .filter(|(p, l)| p == l)
            .count();
        hits as f64 / self.len().max(1) as f64
    }
}

/// Runs the classifier once over every pool member. `pixels` resolves an instance id.
pub fn predict_all<'a, F>(
    model: &TaskModel,
    pool: &LabeledPool,
    pixels: F,
) -> Result<PredictionCache, NetError>
where
    F: Fn(usize) -> &'a [f64],
{
    let mut predicted = Vec::with_capacity(pool.len());
    let mut softmax_max = Vec::with_capacity(pool.len());
    for &id in pool.ids() {
        let p = predict(model, pixels(id))?;
        predicted.push(p.label);
        softmax_max.push(p.softmax_max);
    }
    Ok(PredictionCache {
        ids: pool.ids().to_vec(),
        predicted,
        softmax_max,
    })
}

/// Uniform scores; used by tests and as a null model.
pub fn uniform_scores() -> Vec<f64> {
    vec![1.0 / NUM_CLASSES as f64; NUM_CLASSES]
}
