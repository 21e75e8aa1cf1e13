use std::time::{Duration, Instant};

use affx_core::nn::{finite_diff_grad, max_relative_error, Activation, Network};
use affx_core::rng::seeded;
use rand::Rng;

const HIDDEN: [Activation; 3] = [Activation::Relu, Activation::Sigmoid, Activation::Linear];
const OUTPUT: [Activation; 4] = [
    Activation::Relu,
    Activation::Sigmoid,
    Activation::Linear,
    Activation::Softmax,
];

fn random_net<R: Rng>(rng: &mut R) -> Network {
    let depth = rng.random_range(1..=3);
    let dims: Vec<usize> = (0..=depth).map(|_| rng.random_range(1..=16)).collect();
    let mut acts: Vec<Activation> = (0..depth - 1)
        .map(|_| HIDDEN[rng.random_range(0..HIDDEN.len())])
        .collect();
    acts.push(OUTPUT[rng.random_range(0..OUTPUT.len())]);
    Network::glorot(&dims, &acts, rng).unwrap()
}

/// Smallest |pre-activation| over relu units; central differences are only valid away from the kink.
fn closest_kink(net: &Network, x: &[f64]) -> f64 {
    let acts = net.forward(x).unwrap();
    let mut closest = f64::INFINITY;
    for (k, layer) in net.layers().iter().enumerate() {
        if layer.activation() != Activation::Relu {
            continue;
        }
        let input = acts.layer(k);
        for r in 0..layer.outputs() {
            let z: f64 = layer
                .weights()
                .row(r)
                .iter()
                .zip(input)
                .map(|(w, v)| w * v)
                .sum::<f64>()
                + layer.bias()[r];
            closest = closest.min(z.abs());
        }
    }
    closest
}

#[test]
fn backward_matches_central_differences_on_100_networks() {
    let start = Instant::now();
    let mut rng = seeded(2718);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let mut net = random_net(&mut rng);
        // nonzero biases so relu units sit on both sides of zero
        for b in net
            .layers_mut()
            .iter_mut()
            .flat_map(|l| l.bias_mut().iter_mut())
        {
            *b = rng.random_range(-0.5..0.5);
        }
        let x = loop {
            let x: Vec<f64> = (0..net.input_dim())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            if closest_kink(&net, &x) > 1e-3 {
                break x;
            }
        };
        let w: Vec<f64> = (0..net.output_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let loss = |y: &[f64]| y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let acts = net.forward(&x).unwrap();
        let analytic = net.backward(&acts, &w).unwrap();
        let numeric = finite_diff_grad(&net, &x, loss);
        let err = max_relative_error(&analytic, &numeric);
        assert!(err < 1e-4, "network {i}: relative error {err}");
        worst = worst.max(err);
    }
    let elapsed = start.elapsed();
    println!("worst relative error {worst:.3e} in {elapsed:?}");
    assert!(elapsed < Duration::from_secs(10), "took {elapsed:?}");
}

#[test]
fn forward_is_deterministic_and_softmax_normalised() {
    let mut rng = seeded(99);
    for _ in 0..50 {
        let net = random_net(&mut rng);
        let x: Vec<f64> = (0..net.input_dim())
            .map(|_| rng.random_range(-3.0..3.0))
            .collect();
        let a = net.predict(&x).unwrap();
        assert_eq!(a, net.predict(&x).unwrap());
        if net.layers().last().unwrap().activation() == Activation::Softmax {
            assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(a.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}
