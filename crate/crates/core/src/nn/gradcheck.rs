//! Central finite-difference gradients, the slow reference path for `backward`.

use super::network::{Gradients, Network};

pub const FD_STEP: f64 = 1e-5;

/// Gradients of `loss(net(input))` by central differences with step [`FD_STEP`], for every
/// parameter and for the input.
pub fn finite_diff_grad<F>(net: &Network, input: &[f64], loss: F) -> Gradients
where
    F: Fn(&[f64]) -> f64,
{
    let h = FD_STEP;
    let eval = |n: &Network, x: &[f64]| loss(&n.predict(x).expect("input matches network"));
    let mut grads = Gradients::zeros_for(net);
    let mut probe = net.clone();
    let n_params = net.num_params();
    let mut fd = alloc::vec::Vec::with_capacity(n_params);
    for i in 0..n_params {
        let original = *probe.param_mut(i).unwrap();
        *probe.param_mut(i).unwrap() = original + h;
        let up = eval(&probe, input);
        *probe.param_mut(i).unwrap() = original - h;
        let down = eval(&probe, input);
        *probe.param_mut(i).unwrap() = original;
        fd.push((up - down) / (2.0 * h));
    }
    for (g, v) in grads.values_mut().zip(fd) {
        *g = v;
    }
    let mut x = input.to_vec();
    for i in 0..x.len() {
        let original = x[i];
        x[i] = original + h;
        let up = eval(net, &x);
        x[i] = original - h;
        let down = eval(net, &x);
        x[i] = original;
        grads.input[i] = (up - down) / (2.0 * h);
    }
    grads
}

/// `|a - b| / max(|a|, |b|, floor)`; the floor keeps near-zero gradients from dominating.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let denom = a.abs().max(b.abs()).max(1e-6);
    (a - b).abs() / denom
}

/// Largest relative error over all parameter and input gradients.
pub fn max_relative_error(a: &Gradients, b: &Gradients) -> f64 {
    a.values()
        .zip(b.values())
        .chain(a.input.iter().copied().zip(b.input.iter().copied()))
        .map(|(x, y)| relative_error(x, y))
        .fold(0.0, f64::max)
}
