use alloc::vec;
use alloc::vec::Vec;

use approx::assert_relative_eq;

use super::*;
use crate::nn::{Activation, DenseLayer, Matrix, Network};
use crate::rng::seeded;

fn constant_actor(p: f64) -> Actor {
    let logit = libm::log(p / (1.0 - p));
    Actor::from_network(
        Network::new(vec![
            DenseLayer::zeros(1, 4, Activation::Relu),
            DenseLayer::new(Matrix::zeros(1, 4), vec![logit], Activation::Sigmoid).unwrap(),
        ])
        .unwrap(),
    )
    .unwrap()
}

#[test]
fn noiseless_selection_is_policy_output() {
    let mut rng = seeded(1);
    let actor = Actor::new(32, &mut rng);
    let mut noise = ActionNoise::off();
    for s in [0.0, 0.3, 1.0] {
        let (a, mu) = select_action(&actor, s, &mut noise, &mut rng);
        assert_eq!(a, mu);
        assert_eq!(mu, actor.act(s));
        assert!(mu > 0.0 && mu < 1.0);
    }
}

#[test]
fn large_noise_clips_to_unit_interval() {
    let actor = constant_actor(0.99);
    assert_relative_eq!(actor.act(0.5), 0.99, max_relative = 1e-12);
    let mut hit_top = false;
    for seed in 0..20 {
        let mut noise = ActionNoise::new(NoiseConfig {
            initial: 50.0,
            decay: 1.0,
            floor: 0.0,
        });
        let mut rng = seeded(seed);
        let mut probe = rng.clone();
        let draw = noise.draw(&mut probe);
        let (a, _) = select_action(&actor, 0.5, &mut noise, &mut rng);
        assert!((0.0..=1.0).contains(&a));
        if draw > 0.01 {
            assert_eq!(a, 1.0);
            hit_top = true;
        }
    }
    assert!(hit_top);
}

#[test]
fn sigma_decays_geometrically() {
    let mut noise = ActionNoise::new(NoiseConfig::default());
    for _ in 0..1000 {
        noise.decay();
    }
    assert_relative_eq!(
        noise.sigma(),
        0.2 * libm::pow(0.999, 1000.0),
        max_relative = 1e-9
    );
    assert_relative_eq!(noise.sigma(), 0.0736, max_relative = 1e-3);
    for _ in 0..5000 {
        noise.decay();
    }
    assert_eq!(noise.sigma(), 0.05);
}

#[test]
fn critic_value_properties() {
    let mut rng = seeded(2);
    let critic = Critic::new(32, (64, 32), &mut rng);
    assert_eq!(critic.value(0.3, 0.7), critic.value(0.3, 0.7));

    let h = 1e-5;
    for (s, a) in [(0.1, 0.2), (0.5, 0.5), (0.9, 0.35)] {
        let fd = (critic.value(s, a + h) - critic.value(s, a - h)) / (2.0 * h);
        assert!(crate::nn::relative_error(critic.action_gradient(s, a), fd) < 1e-4);
    }

    let mut zeroed = critic.clone();
    zeroed.head.params_mut().for_each(|p| *p = 0.0);
    assert_eq!(zeroed.value(0.4, 0.6), 0.0);
}

#[test]
fn critic_parameter_gradients_match_fd() {
    let mut rng = seeded(3);
    let critic = Critic::new(4, (5, 3), &mut rng);
    let (s, a) = (0.37, 0.81);
    let trace = critic.trace(s, a);
    let mut g = critic.zero_grad();
    critic.backward(&trace, 1.0, &mut g).unwrap();
    let analytic: Vec<f64> = g
        .state_branch
        .values()
        .chain(g.action_branch.values())
        .chain(g.head.values())
        .collect();
    let h = 1e-5;
    let mut probe = critic.clone();
    for (i, &ga) in analytic.iter().enumerate() {
        let orig = *probe.params_mut().nth(i).unwrap();
        *probe.params_mut().nth(i).unwrap() = orig + h;
        let up = probe.value(s, a);
        *probe.params_mut().nth(i).unwrap() = orig - h;
        let down = probe.value(s, a);
        *probe.params_mut().nth(i).unwrap() = orig;
        assert!(
            crate::nn::relative_error(ga, (up - down) / (2.0 * h)) < 1e-4,
            "param {i}"
        );
    }
}

#[test]
fn targets_start_identical() {
    let agent = DdpgAgent::new(DdpgConfig::default(), &mut seeded(4));
    assert_eq!(agent.actor, agent.target_actor);
    assert_eq!(agent.critic, agent.target_critic);
}

#[test]
fn terminal_and_undiscounted_targets() {
    let agent = DdpgAgent::new(DdpgConfig::default(), &mut seeded(5));
    let t = Transition {
        s: 0.2,
        a: 0.4,
        r: 0.75,
        s_next: 0.9,
        terminal: true,
    };
    assert_eq!(agent.td_target(&t), 0.75);
    let open = Transition {
        terminal: false,
        ..t
    };
    assert_ne!(agent.td_target(&open), 0.75);
    let flat = DdpgAgent::new(
        DdpgConfig {
            gamma: 0.0,
            ..Default::default()
        },
        &mut seeded(5),
    );
    assert_eq!(flat.td_target(&open), 0.75);
}

#[test]
fn fitted_terminal_batch_has_zero_loss() {
    let mut rng = seeded(6);
    let mut critic = Critic::new(8, (8, 4), &mut rng);
    critic.head.params_mut().for_each(|p| *p = 0.0);
    *critic
        .head
        .layers_mut()
        .last_mut()
        .unwrap()
        .bias_mut()
        .first_mut()
        .unwrap() = 1.25;
    let agent = DdpgAgent::from_networks(DdpgConfig::default(), Actor::new(8, &mut rng), critic);
    let t = Transition {
        s: 0.6,
        a: 0.3,
        r: 1.25,
        s_next: 0.1,
        terminal: true,
    };
    assert_eq!(agent.critic_loss(&vec![t; 64]), 0.0);
}

#[test]
fn zero_learning_rate_changes_nothing() {
    let cfg = DdpgConfig {
        lr_actor: 0.0,
        lr_critic: 0.0,
        ..Default::default()
    };
    let mut agent = DdpgAgent::new(cfg, &mut seeded(7));
    let before = agent.clone();
    let batch: Vec<Transition> = (0..64)
        .map(|i| Transition {
            s: i as f64 / 64.0,
            a: 0.5,
            r: 1.0,
            s_next: 0.5,
            terminal: i % 20 == 19,
        })
        .collect();
    agent.update(&batch).unwrap();
    assert_eq!(agent.actor, before.actor);
    assert_eq!(agent.critic, before.critic);
}

#[test]
fn actor_follows_critic_action_gradient() {
    // Fit the critic to r = a first (actor frozen), then let the actor take one step.
    let mut rng = seeded(8);
    let cfg = DdpgConfig {
        lr_actor: 0.0,
        gamma: 0.0,
        ..Default::default()
    };
    let mut agent = DdpgAgent::new(cfg.clone(), &mut rng);
    let s = 0.5;
    let batch: Vec<Transition> = (0..64)
        .map(|i| {
            let a = i as f64 / 63.0;
            Transition {
                s,
                a,
                r: a,
                s_next: s,
                terminal: true,
            }
        })
        .collect();
    for _ in 0..300 {
        agent.update(&batch).unwrap();
    }
    let mu = agent.actor.act(s);
    let h = 1e-5;
    let slope = (agent.critic.value(s, mu + h) - agent.critic.value(s, mu - h)) / (2.0 * h);
    assert!(slope > 0.0, "critic slope {slope}");

    let mut learner = DdpgAgent::from_networks(
        DdpgConfig {
            lr_actor: 0.001,
            lr_critic: 0.0,
            ..cfg
        },
        agent.actor.clone(),
        agent.critic.clone(),
    );
    let step = vec![
        Transition {
            s,
            a: 0.9,
            r: 1.0,
            s_next: s,
            terminal: true
        };
        64
    ];
    learner.update(&step).unwrap();
    assert!(learner.actor.act(s) > mu);
}

#[test]
fn train_step_waits_for_a_full_batch() {
    let mut agent = DdpgAgent::new(DdpgConfig::default(), &mut seeded(9));
    let mut buf = ReplayBuffer::new(5000, seeded(10));
    let t = Transition {
        s: 0.1,
        a: 0.2,
        r: 0.0,
        s_next: 0.3,
        terminal: false,
    };
    for _ in 0..63 {
        buf.push(t);
    }
    let before = agent.clone();
    assert!(agent.train_step(&mut buf).unwrap().is_none());
    assert_eq!(agent.actor, before.actor);
    buf.push(t);
    let stats = agent.train_step(&mut buf).unwrap().unwrap();
    assert!(stats.critic_loss.is_finite());
    assert_ne!(agent.target_critic, before.target_critic);
}

#[test]
fn replay_ring_and_uniformity() {
    let mut buf = ReplayBuffer::new(3, seeded(11));
    for i in 0..5 {
        buf.push(Transition {
            s: i as f64 / 10.0,
            a: 0.0,
            r: 0.0,
            s_next: 0.0,
            terminal: false,
        });
    }
    assert_eq!(buf.len(), 3);
    assert_eq!(buf.get(0).unwrap().s, 0.2);
    assert!(buf.sample(4).is_none());

    let n = 100;
    let batch = 64;
    let draws = 2000;
    let mut buf = ReplayBuffer::new(5000, seeded(12));
    for i in 0..n {
        buf.push(Transition {
            s: i as f64,
            a: 0.0,
            r: 0.0,
            s_next: 0.0,
            terminal: false,
        });
    }
    let mut counts = vec![0usize; n];
    for _ in 0..draws {
        let idx = buf.sample_indices(batch).unwrap();
        let mut sorted = idx.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), batch, "duplicates within a batch");
        idx.into_iter().for_each(|i| counts[i] += 1);
    }
    let p = batch as f64 / n as f64;
    let mean = draws as f64 * p;
    let sd = libm::sqrt(draws as f64 * p * (1.0 - p));
    for c in counts {
        assert!(
            (c as f64 - mean).abs() <= 3.0 * sd,
            "count {c}, mean {mean}, sd {sd}"
        );
    }
}

#[test]
fn config_validation() {
    assert!(DdpgConfig::default().validate().is_ok());
    assert!(DdpgConfig {
        batch: 0,
        ..Default::default()
    }
    .validate()
    .is_err());
    assert!(DdpgConfig {
        gamma: 1.5,
        ..Default::default()
    }
    .validate()
    .is_err());
}
