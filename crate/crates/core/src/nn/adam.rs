use alloc::vec;
use alloc::vec::Vec;

use super::network::{Gradients, Network};
use super::NetError;

/// Adam moments and hyper-parameters for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Defaults: beta1 0.9, beta2 0.999, epsilon 1e-8.
    pub fn new(num_params: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn for_network(net: &Network, lr: f64) -> Self {
        Self::new(net.num_params(), lr)
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One bias-corrected Adam step. Gradients are checked before anything is touched, so
    /// a non-finite gradient leaves both parameters and moments unchanged.
    pub fn step<'a, I>(&mut self, params: I, grads: &[f64]) -> Result<(), NetError>
    where
        I: IntoIterator<Item = &'a mut f64>,
    {
        if grads.len() != self.m.len() {
            return Err(NetError::Shape {
                what: "adam gradient",
                expected: self.m.len(),
                got: grads.len(),
            });
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NetError::NonFiniteGradient { index });
        }
        self.t += 1;
        let t = self.t as f64;
        let bc1 = 1.0 - libm::pow(self.beta1, t);
        let bc2 = 1.0 - libm::pow(self.beta2, t);
        let mut n = 0;
        for (i, p) in params.into_iter().enumerate() {
            if i >= grads.len() {
                return Err(NetError::Shape {
                    what: "adam parameters",
                    expected: grads.len(),
                    got: i + 1,
                });
            }
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            *p -= self.lr * m_hat / (libm::sqrt(v_hat) + self.epsilon);
            n += 1;
        }
        if n != grads.len() {
            return Err(NetError::Shape {
                what: "adam parameters",
                expected: grads.len(),
                got: n,
            });
        }
        Ok(())
    }

    pub fn step_network(&mut self, net: &mut Network, grads: &Gradients) -> Result<(), NetError> {
        let flat = grads.to_flat();
        self.step(net.params_mut(), &flat)
    }
}
