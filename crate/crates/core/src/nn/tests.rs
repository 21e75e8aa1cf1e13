use alloc::vec;
use alloc::vec::Vec;

use approx::assert_relative_eq;
use rand::Rng;

use super::*;
use crate::rng::seeded;

fn layer(rows: usize, cols: usize, w: &[f64], b: &[f64], act: Activation) -> DenseLayer {
    DenseLayer::new(
        Matrix::from_vec(rows, cols, w.to_vec()).unwrap(),
        b.to_vec(),
        act,
    )
    .unwrap()
}

#[test]
fn identity_linear_layer() {
    let net = Network::new(vec![DenseLayer::new(
        Matrix::identity(1),
        vec![0.0],
        Activation::Linear,
    )
    .unwrap()])
    .unwrap();
    assert_eq!(net.predict(&[0.3]).unwrap(), vec![0.3]);
}

#[test]
fn sigmoid_of_zero() {
    let net = Network::new(vec![layer(1, 1, &[0.0], &[0.0], Activation::Sigmoid)]).unwrap();
    for x in [-4.0, 0.0, 7.5] {
        assert_eq!(net.predict(&[x]).unwrap(), vec![0.5]);
    }
}

#[test]
fn two_layer_hand_evaluation() {
    // z1 = [-0.9, -1.5, 1.3] -> relu [0, 0, 1.3]; y = 2 * 1.3 + 0.5
    let net = Network::new(vec![
        layer(
            3,
            2,
            &[1.0, 2.0, -1.0, 0.5, 0.5, -1.0],
            &[0.1, 0.0, -0.2],
            Activation::Relu,
        ),
        layer(1, 3, &[1.0, -1.0, 2.0], &[0.5], Activation::Linear),
    ])
    .unwrap();
    let acts = net.forward(&[1.0, -1.0]).unwrap();
    assert_relative_eq!(acts.layer(0)[2], 1.3, epsilon = 1e-15);
    assert_eq!(&acts.layer(0)[..2], &[0.0, 0.0]);
    assert_relative_eq!(acts.output()[0], 3.1, epsilon = 1e-15);
}

#[test]
fn dimension_mismatch_is_an_error() {
    let net = Network::new(vec![layer(1, 2, &[1.0, 1.0], &[0.0], Activation::Linear)]).unwrap();
    assert!(matches!(net.forward(&[1.0]), Err(NetError::Shape { .. })));
    let bad = Network::new(vec![
        layer(3, 2, &[0.0; 6], &[0.0; 3], Activation::Relu),
        layer(1, 2, &[0.0; 2], &[0.0], Activation::Linear),
    ]);
    assert!(matches!(bad, Err(NetError::LayerMismatch { layer: 1, .. })));
    assert!(DenseLayer::new(Matrix::zeros(2, 2), vec![0.0], Activation::Relu).is_err());
}

#[test]
fn scalar_linear_backward() {
    let w = 1.7;
    let net = Network::new(vec![layer(1, 1, &[w], &[0.0], Activation::Linear)]).unwrap();
    let acts = net.forward(&[2.0]).unwrap();
    let g = net.backward(&acts, &[1.0]).unwrap();
    assert_eq!(g.layers[0].weights.get(0, 0), 2.0);
    assert_eq!(g.layers[0].bias[0], 1.0);
    assert_eq!(g.input[0], w);

    let fd = finite_diff_grad(&net, &[2.0], |y| y[0]);
    assert_relative_eq!(fd.layers[0].weights.get(0, 0), 2.0, epsilon = 1e-9);
    assert_relative_eq!(fd.input[0], w, epsilon = 1e-9);
}

#[test]
fn zero_output_gradient_gives_zero_gradients() {
    let mut rng = seeded(3);
    let net = Network::glorot(
        &[4, 8, 3],
        &[Activation::Sigmoid, Activation::Softmax],
        &mut rng,
    )
    .unwrap();
    let acts = net.forward(&[0.1, -0.2, 0.3, 0.9]).unwrap();
    let g = net.backward(&acts, &[0.0; 3]).unwrap();
    assert!(g.values().all(|v| v == 0.0));
    assert!(g.input.iter().all(|&v| v == 0.0));
}

#[test]
fn constant_loss_has_zero_fd_gradient() {
    let mut rng = seeded(4);
    let net = Network::glorot(
        &[3, 5, 2],
        &[Activation::Relu, Activation::Linear],
        &mut rng,
    )
    .unwrap();
    let g = finite_diff_grad(&net, &[0.4, 0.5, 0.6], |_| 2.5);
    assert!(g.values().all(|v| v == 0.0));
}

#[test]
fn random_sigmoid_net_matches_finite_differences() {
    let mut rng = seeded(11);
    let net = Network::glorot(
        &[3, 6, 5, 2],
        &[
            Activation::Sigmoid,
            Activation::Sigmoid,
            Activation::Softmax,
        ],
        &mut rng,
    )
    .unwrap();
    let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c = [0.7, -1.3];
    let acts = net.forward(&x).unwrap();
    let analytic = net.backward(&acts, &c).unwrap();
    let numeric = finite_diff_grad(&net, &x, |y| c[0] * y[0] + c[1] * y[1]);
    assert!(max_relative_error(&analytic, &numeric) < 1e-4);
}

#[test]
fn softmax_is_a_distribution() {
    let mut rng = seeded(5);
    let net = Network::glorot(&[4, 10], &[Activation::Softmax], &mut rng).unwrap();
    let y = net.predict(&[3.0, -10.0, 40.0, 0.0]).unwrap();
    let s: f64 = y.iter().sum();
    assert!((s - 1.0).abs() < 1e-9);
    assert!(y.iter().all(|&p| (0.0..=1.0).contains(&p)));
}

#[test]
fn logits_backward_equals_softmax_chain() {
    let mut rng = seeded(9);
    let net = Network::glorot(
        &[5, 7, 4],
        &[Activation::Relu, Activation::Softmax],
        &mut rng,
    )
    .unwrap();
    let acts = net.forward(&[0.2, 0.1, -0.3, 0.8, 0.5]).unwrap();
    let target = 2;
    let y = acts.output().to_vec();
    // cross-entropy: dL/dy = -1/y_t at the target
    let mut dy = vec![0.0; 4];
    dy[target] = -1.0 / y[target];
    let chained = net.backward(&acts, &dy).unwrap();
    let mut dz = y.clone();
    dz[target] -= 1.0;
    let mut direct = Gradients::zeros_for(&net);
    net.backward_from_logits_into(&acts, &dz, &mut direct)
        .unwrap();
    assert!(max_relative_error(&chained, &direct) < 1e-10);
}

#[test]
fn adam_zero_gradient_is_fixed_point() {
    let mut params = vec![1.0, -2.0, 0.5];
    let mut adam = AdamState::new(3, 0.001);
    for _ in 0..5 {
        adam.step(params.iter_mut(), &[0.0; 3]).unwrap();
    }
    assert_eq!(params, vec![1.0, -2.0, 0.5]);
    assert_eq!(adam.steps(), 5);
}

#[test]
fn adam_first_step_is_lr_times_sign() {
    let mut params = vec![0.0, 0.0, 0.0];
    let mut adam = AdamState::new(3, 0.01);
    adam.step(params.iter_mut(), &[3.0, -0.02, 1e-3]).unwrap();
    for (p, s) in params.iter().zip([-1.0, 1.0, -1.0]) {
        assert_relative_eq!(*p, 0.01 * s, max_relative = 1e-4);
    }
}

#[test]
fn adam_two_steps_hand_recurrence() {
    // Constant g = 0.5: m_hat = 0.5 and v_hat = 0.25 at every step, so each step moves
    // lr * 0.5 / (0.5 + 1e-8).
    let mut p = vec![1.0];
    let mut adam = AdamState::new(1, 0.001);
    adam.step(p.iter_mut(), &[0.5]).unwrap();
    adam.step(p.iter_mut(), &[0.5]).unwrap();
    assert_relative_eq!(p[0], 0.998_000_000_04, max_relative = 1e-14);
    assert_relative_eq!(adam.first_moment()[0], 0.095, max_relative = 1e-14);
    assert_relative_eq!(adam.second_moment()[0], 0.000_499_75, max_relative = 1e-12);
}

#[test]
fn adam_rejects_non_finite_gradient() {
    let mut p = vec![1.0, 2.0];
    let mut adam = AdamState::new(2, 0.1);
    let err = adam.step(p.iter_mut(), &[0.1, f64::NAN]).unwrap_err();
    assert_eq!(err, NetError::NonFiniteGradient { index: 1 });
    assert_eq!(p, vec![1.0, 2.0]);
    assert_eq!(adam.steps(), 0);
}

#[test]
fn soft_update_examples() {
    let src = Network::new(vec![layer(1, 1, &[1.0], &[1.0], Activation::Linear)]).unwrap();
    let mut tgt = Network::new(vec![layer(1, 1, &[0.0], &[0.0], Activation::Linear)]).unwrap();
    soft_update(&mut tgt, &src, 0.005).unwrap();
    assert_relative_eq!(tgt.layers()[0].weights().get(0, 0), 0.005, epsilon = 1e-18);

    let mut same = src.clone();
    soft_update(&mut same, &src, 0.005).unwrap();
    assert_eq!(same, src);

    let mut gap_prev = 1.0 - tgt.layers()[0].bias()[0];
    for _ in 0..50 {
        soft_update(&mut tgt, &src, 0.005).unwrap();
        let gap = 1.0 - tgt.layers()[0].bias()[0];
        assert_relative_eq!(gap / gap_prev, 0.995, max_relative = 1e-9);
        gap_prev = gap;
    }

    let other = Network::new(vec![layer(2, 1, &[0.0; 2], &[0.0; 2], Activation::Linear)]).unwrap();
    assert_eq!(
        soft_update(&mut tgt, &other, 0.1),
        Err(NetError::TopologyMismatch)
    );
}
