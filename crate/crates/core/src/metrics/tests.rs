use alloc::vec;
use alloc::vec::Vec;

use approx::assert_relative_eq;

use super::*;
use crate::ddpg::{Actor, Critic};
use crate::emotion::AgentPersonality;
use crate::env::StepOutcome;
use crate::experiment::StepRecord;
use crate::rng::seeded;

fn outcome(s: f64, a: f64, after: f64, r: f64) -> StepOutcome {
    StepOutcome {
        single_correct: false,
        confidence: None,
        emotion_before: s,
        exploration_rate: a,
        batch_size: libm::round(a * 64.0) as usize,
        batch_accuracy: (a > 0.0).then_some(0.5),
        emotion_after: after,
        reward: r,
        fallback: false,
    }
}

/// `episodes` episodes of 20 steps from a per-step closure `(episode, step) -> (s, μ, a, after, r)`.
fn record<F: Fn(usize, usize) -> (f64, f64, f64, f64, f64)>(episodes: usize, f: F) -> AgentRecord {
    let mut rng = seeded(1);
    let mut steps = Vec::new();
    let mut rewards = Vec::new();
    for e in 0..episodes {
        let mut total = 0.0;
        for k in 0..20 {
            let (s, mu, a, after, r) = f(e, k);
            total += r;
            steps.push(StepRecord {
                episode: e,
                step: k,
                policy_action: mu,
                outcome: outcome(s, a, after, r),
                s_next: 0.5,
                terminal: k == 19,
            });
        }
        rewards.push(total);
    }
    AgentRecord {
        agent_id: 0,
        seed: 0,
        personality: AgentPersonality::noiseless(2.0, 0.0),
        steps,
        episode_rewards: rewards,
        actor: Actor::new(4, &mut rng),
        critic: Critic::new(4, (4, 4), &mut rng),
        failure: None,
    }
}

#[test]
fn spearman_examples() {
    assert_eq!(
        spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap().rho,
        1.0
    );
    assert_eq!(
        spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().rho,
        -1.0
    );
    // ranks (1, 2.5, 2.5, 4) vs (1, 3, 2, 4): 4.5 / sqrt(4.5 · 5)
    let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
    assert_relative_eq!(r.rho, 0.9486832980505138, epsilon = 1e-15);
    assert!(!r.constant);
}

#[test]
fn spearman_errors_and_constant_rule() {
    assert_eq!(
        spearman(&[1.0], &[1.0]).unwrap_err(),
        MetricsError::TooShort(1)
    );
    assert_eq!(
        spearman(&[1.0, 2.0], &[1.0]).unwrap_err(),
        MetricsError::Length(2, 1)
    );
    let r = spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(
        r,
        Rho {
            rho: 0.0,
            constant: true
        }
    );
}

#[test]
fn ranks_with_ties() {
    assert_eq!(
        average_ranks(&[3.0, 1.0, 3.0, 2.0, 3.0]),
        vec![4.0, 1.0, 4.0, 2.0, 4.0]
    );
}

#[test]
fn sliding_window_examples() {
    let ramp: Vec<f64> = (1..=100).map(f64::from).collect();
    let sm = sliding_window(&ramp, 40).unwrap();
    assert_eq!(sm.len(), 100);
    assert_relative_eq!(sm[99], 80.5);
    assert_relative_eq!(sm[0], 1.0);
    assert_relative_eq!(sm[3], 2.5);
    assert_eq!(sliding_window(&ramp, 1).unwrap(), ramp);
    assert_eq!(sliding_window(&[0.25; 7], 3).unwrap(), vec![0.25; 7]);
    assert_eq!(sliding_window(&[], 3).unwrap_err(), MetricsError::Empty);
    assert_eq!(sliding_window(&ramp, 0).unwrap_err(), MetricsError::Window);
}

#[test]
fn frozen_actor_gives_flagged_zero_series() {
    let rec = record(100, |_, k| (k as f64 / 20.0, 0.3, 0.3, 0.5, 0.0));
    let series = episode_spearman(&rec);
    assert_eq!(series.values.len(), 100);
    assert!(series.values.iter().all(|&v| v == 0.0));
    assert!(series.constant.iter().all(|&c| c));
}

#[test]
fn episode_spearman_uses_policy_action() {
    // applied action anti-correlated, policy correlated
    let rec = record(2, |_, k| {
        let s = k as f64 / 20.0;
        (s, s, 1.0 - s, s, 0.0)
    });
    let series = episode_spearman(&rec);
    assert_relative_eq!(series.values[0], 1.0, epsilon = 1e-12);
}

#[test]
fn census_partitions_steps() {
    let rec = record(3, |e, k| match (e, k % 4) {
        (0, _) => (0.5, 0.0, 0.0, 0.5, 0.0),
        (_, 0) => (0.2, 0.5, 0.5, 0.7, 0.0),
        (_, 1) => (0.7, 0.5, 0.5, 0.2, 0.0),
        (_, 2) => (0.5, 0.5, 0.5, 0.505, 0.0),
        _ => (0.5, 0.0, 0.0, 0.5, 0.0),
    });
    let c = emotion_differential_census(&rec, 0.01);
    assert_eq!(
        c[0],
        EpisodeCensus {
            increase: 0,
            decrease: 0,
            stasis: 20,
            mean_delta: 0.0
        }
    );
    assert_eq!((c[1].increase, c[1].decrease, c[1].stasis), (5, 5, 10));
    assert!(c.iter().all(|x| x.total() == 20));
    assert_relative_eq!(c[1].mean_delta, 0.005 / 3.0, epsilon = 1e-12);
    let m = mean_census(&[c.clone(), c]).unwrap();
    assert_eq!(m[1].increase, 5.0);
}

#[test]
fn reward_band() {
    let a = record(3, |e, _| (0.5, 0.5, 0.5, 0.5, e as f64));
    let b = record(3, |_, _| (0.5, 0.5, 0.5, 0.5, -1.0));
    let one = cumulative_reward_curves(&[&a]).unwrap();
    for (x, &r) in one.iter().zip(&a.episode_rewards) {
        assert_eq!((x.mean, x.min, x.max), (r, r, r));
    }
    let two = cumulative_reward_curves(&[&a, &b]).unwrap();
    assert_eq!(
        two[2],
        Band {
            mean: 10.0,
            min: -20.0,
            max: 40.0
        }
    );
    assert!(a.rewards_consistent());
    assert_eq!(
        cumulative_reward_curves(&[]).unwrap_err(),
        MetricsError::Empty
    );
}

fn curve(values: Vec<f64>) -> BehaviorCurve {
    let grid = (0..values.len())
        .map(|i| i as f64 / (values.len() - 1) as f64)
        .collect();
    BehaviorCurve { grid, values }
}

#[test]
fn correlation_census_examples() {
    let flat = correlation_census(&[curve(vec![0.5; 3]), curve(vec![0.2; 3])]).unwrap();
    assert_eq!((flat.positive, flat.negative, flat.flat), (0, 0, 2));
    assert_eq!(flat.percent_change, 0.0);
    let c = correlation_census(&[
        curve(vec![0.4, 0.5, 0.6]),
        curve(vec![0.4, 0.45, 0.5]),
        curve(vec![0.4, 0.3, 0.2]),
    ])
    .unwrap();
    assert_eq!((c.positive, c.negative, c.flat), (2, 1, 0));
    assert_eq!(c.positive + c.negative + c.flat, 3);
    assert_relative_eq!(
        c.percent_change,
        (0.4333333333333333 - 0.4) / 0.4 * 100.0,
        epsilon = 1e-9
    );
    assert_eq!(
        correlation_census(&[curve(vec![0.1, 0.2]), curve(vec![0.1, 0.2, 0.3])]).unwrap_err(),
        MetricsError::Grid
    );
}
