//! Analyses over agent records: rank correlation, smoothing, emotion-change census, reward
//! curves and behaviour-curve aggregation.

use alloc::vec;
use alloc::vec::Vec;

use crate::experiment::{AgentRecord, BehaviorCurve};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("need at least 2 paired values, got {0}")]
    TooShort(usize),
    #[error("empty input")]
    Empty,
    #[error("window must be >= 1")]
    Window,
    #[error("curves have different grids")]
    Grid,
}

/// Average ranks, 1-based; a tie span shares the mean of its positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; `None` when either vector has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rho {
    pub rho: f64,
    /// One of the inputs was constant and `rho` was set to 0.
    pub constant: bool,
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Rho, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::Length(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(MetricsError::TooShort(xs.len()));
    }
    Ok(match pearson(&average_ranks(xs), &average_ranks(ys)) {
        Some(rho) => Rho {
            rho,
            constant: false,
        },
        None => Rho {
            rho: 0.0,
            constant: true,
        },
    })
}

/// ρ between state emotion and the pre-noise policy action, one value per completed episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSeries {
    pub agent_id: u64,
    pub values: Vec<f64>,
    pub constant: Vec<bool>,
}

pub fn episode_spearman(record: &AgentRecord) -> EpisodeSeries {
    let mut values = Vec::with_capacity(record.episode_rewards.len());
    let mut constant = Vec::with_capacity(record.episode_rewards.len());
    for e in 0..record.episode_rewards.len() {
        let steps = record.episode_steps(e);
        let s: Vec<f64> = steps.iter().map(|x| x.s()).collect();
        let a: Vec<f64> = steps.iter().map(|x| x.policy_action).collect();
        let r = spearman(&s, &a).unwrap_or(Rho {
            rho: 0.0,
            constant: true,
        });
        values.push(r.rho);
        constant.push(r.constant);
    }
    EpisodeSeries {
        agent_id: record.agent_id,
        values,
        constant,
    }
}

/// Trailing mean over `min(k + 1, w)` values ending at `k`.
pub fn sliding_window(series: &[f64], w: usize) -> Result<Vec<f64>, MetricsError> {
    if w == 0 {
        return Err(MetricsError::Window);
    }
    if series.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok((0..series.len())
        .map(|k| {
            let lo = (k + 1).saturating_sub(w);
            let win = &series[lo..=k];
            win.iter().sum::<f64>() / win.len() as f64
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpisodeCensus {
    pub increase: usize,
    pub decrease: usize,
    pub stasis: usize,
    /// Mean of `emotion_after − emotion_before` over the explored steps; 0 if none.
    pub mean_delta: f64,
}

impl EpisodeCensus {
    pub fn total(&self) -> usize {
        self.increase + self.decrease + self.stasis
    }
}

pub fn emotion_differential_census(record: &AgentRecord, epsilon: f64) -> Vec<EpisodeCensus> {
    (0..record.episode_rewards.len())
        .map(|e| {
            let mut c = EpisodeCensus::default();
            let mut sum = 0.0;
            let mut explored = 0usize;
            for st in record.episode_steps(e) {
                if !st.outcome.explored() {
                    c.stasis += 1;
                    continue;
                }
                let d = st.outcome.delta_emotion();
                sum += d;
                explored += 1;
                if d > epsilon {
                    c.increase += 1;
                } else if d < -epsilon {
                    c.decrease += 1;
                } else {
                    c.stasis += 1;
                }
            }
            if explored > 0 {
                c.mean_delta = sum / explored as f64;
            }
            c
        })
        .collect()
}

/// Population mean census per episode (fractional counts).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanCensus {
    pub increase: f64,
    pub decrease: f64,
    pub stasis: f64,
    pub mean_delta: f64,
}

pub fn mean_census(per_agent: &[Vec<EpisodeCensus>]) -> Result<Vec<MeanCensus>, MetricsError> {
    let first = per_agent.first().ok_or(MetricsError::Empty)?;
    let episodes = first.len();
    if let Some(bad) = per_agent.iter().find(|c| c.len() != episodes) {
        return Err(MetricsError::Length(episodes, bad.len()));
    }
    let n = per_agent.len() as f64;
    Ok((0..episodes)
        .map(|e| {
            let mut m = MeanCensus::default();
            for c in per_agent.iter().map(|c| c[e]) {
                m.increase += c.increase as f64;
                m.decrease += c.decrease as f64;
                m.stasis += c.stasis as f64;
                m.mean_delta += c.mean_delta;
            }
            MeanCensus {
                increase: m.increase / n,
                decrease: m.decrease / n,
                stasis: m.stasis / n,
                mean_delta: m.mean_delta / n,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-episode band across agents of any equal-length series.
pub fn band(series: &[&[f64]]) -> Result<Vec<Band>, MetricsError> {
    let first = series.first().ok_or(MetricsError::Empty)?;
    if let Some(bad) = series.iter().find(|s| s.len() != first.len()) {
        return Err(MetricsError::Length(first.len(), bad.len()));
    }
    let n = series.len() as f64;
    Ok((0..first.len())
        .map(|e| {
            let mut b = Band {
                mean: 0.0,
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            };
            for s in series {
                b.mean += s[e];
                b.min = b.min.min(s[e]);
                b.max = b.max.max(s[e]);
            }
            b.mean /= n;
            b
        })
        .collect())
}

pub fn cumulative_reward_curves(records: &[&AgentRecord]) -> Result<Vec<Band>, MetricsError> {
    let series: Vec<&[f64]> = records
        .iter()
        .map(|r| r.episode_rewards.as_slice())
        .collect();
    band(&series)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationCensus {
    pub positive: usize,
    pub negative: usize,
    pub flat: usize,
    pub mean_curve: BehaviorCurve,
    /// `(mean(1) − mean(0)) / mean(0) × 100` on the population mean curve.
    pub percent_change: f64,
}

pub fn correlation_census(curves: &[BehaviorCurve]) -> Result<CorrelationCensus, MetricsError> {
    let first = curves.first().ok_or(MetricsError::Empty)?;
    if first.values.is_empty() {
        return Err(MetricsError::Empty);
    }
    if curves
        .iter()
        .any(|c| c.grid != first.grid || c.values.len() != first.values.len())
    {
        return Err(MetricsError::Grid);
    }
    let n = curves.len() as f64;
    let mut mean = vec![0.0; first.values.len()];
    let (mut positive, mut negative, mut flat) = (0, 0, 0);
    for c in curves {
        for (m, v) in mean.iter_mut().zip(&c.values) {
            *m += v;
        }
        match c.direction() {
            1 => positive += 1,
            -1 => negative += 1,
            _ => flat += 1,
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let (lo, hi) = (mean[0], mean[mean.len() - 1]);
    let percent_change = if hi == lo {
        0.0
    } else {
        (hi - lo) / lo * 100.0
    };
    Ok(CorrelationCensus {
        positive,
        negative,
        flat,
        mean_curve: BehaviorCurve {
            grid: first.grid.clone(),
            values: mean,
        },
        percent_change,
    })
}

#[cfg(test)]
mod tests;
