use rand::Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields, default))]
pub struct NoiseConfig {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            initial: 0.2,
            decay: 0.999,
            floor: 0.05,
        }
    }
}

/// Gaussian exploration noise whose σ decays geometrically to a floor.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionNoise {
    sigma: f64,
    config: NoiseConfig,
}

impl ActionNoise {
    pub fn new(config: NoiseConfig) -> Self {
        Self {
            sigma: config.initial,
            config,
        }
    }

    /// No perturbation at all; σ stays at zero.
    pub fn off() -> Self {
        Self::new(NoiseConfig {
            initial: 0.0,
            decay: 1.0,
            floor: 0.0,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn decay(&mut self) {
        self.sigma = (self.sigma * self.config.decay).max(self.config.floor);
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma == 0.0 {
            0.0
        } else {
            Normal::new(0.0, self.sigma)
                .expect("sigma >= 0")
                .sample(rng)
        }
    }
}
