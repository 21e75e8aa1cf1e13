//! Closed-form pride (achievement) and surprise (epistemic) scores.
//!
//! Pride rises with accuracy along `(100 * c1)^-(a - 1)^2`. Surprise is a saddle over
//! accuracy and confidence: both axes are centred on their interval midpoint and scaled to
//! `[-1, 1]` (`u = 2a - 1`, `v = (c - 0.9) / 0.1`), rotated by `45° + c2`, and scored as
//! `(u'^2 - v'^2) / 2 + 0.5`. Gaussian noise is added before clipping to `[0, 1]`.

use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const CONFIDENCE_MIN: f64 = 0.8;
pub const CONFIDENCE_MAX: f64 = 1.0;
pub const C1_MAX: f64 = 10.0;
pub const C2_LIMIT_DEGREES: f64 = 20.0;
pub const NOISE_SIGMA: f64 = 0.03;

const CONFIDENCE_MID: f64 = 0.9;
const CONFIDENCE_HALF_WIDTH: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum EmotionKind {
    Surprise,
    Pride,
}

impl EmotionKind {
    pub fn name(self) -> &'static str {
        match self {
            EmotionKind::Surprise => "surprise",
            EmotionKind::Pride => "pride",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "surprise" => Some(EmotionKind::Surprise),
            "pride" => Some(EmotionKind::Pride),
            _ => None,
        }
    }

    /// Whether the score depends on a confidence value.
    pub fn uses_confidence(self) -> bool {
        matches!(self, EmotionKind::Surprise)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum EmotionError {
    #[error("accuracy {0} outside [0, 1]")]
    Accuracy(f64),
    #[error("confidence {0} outside [0.8, 1]")]
    Confidence(f64),
    #[error("invalid personality: {0}")]
    Personality(&'static str),
}

/// Per-agent emotion constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentPersonality {
    /// Pride steepness, `> 1`.
    pub c1: f64,
    /// Offset of the saddle rotation from 45°, in `[-20, 20]` degrees.
    pub c2_degrees: f64,
    pub noise_mu: f64,
    pub noise_sigma: f64,
    /// Seed of the agent's emotion-noise stream.
    pub rng_seed: u64,
}

impl AgentPersonality {
    pub fn new(
        c1: f64,
        c2_degrees: f64,
        noise_sigma: f64,
        rng_seed: u64,
    ) -> Result<Self, EmotionError> {
        let p = Self {
            c1,
            c2_degrees,
            noise_mu: 0.0,
            noise_sigma,
            rng_seed,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same constants without noise; handy for inspecting the bare surfaces.
    pub fn noiseless(c1: f64, c2_degrees: f64) -> Self {
        Self {
            c1,
            c2_degrees,
            noise_mu: 0.0,
            noise_sigma: 0.0,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EmotionError> {
        if !(self.c1 > 1.0) || !self.c1.is_finite() {
            return Err(EmotionError::Personality("c1 must be finite and > 1"));
        }
        if !(self.c2_degrees.abs() <= C2_LIMIT_DEGREES) {
            return Err(EmotionError::Personality("|c2| must be <= 20 degrees"));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(EmotionError::Personality(
                "noise sigma must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

fn noise<R: Rng + ?Sized>(p: &AgentPersonality, rng: &mut R) -> f64 {
    if p.noise_sigma == 0.0 {
        return p.noise_mu;
    }
    Normal::new(p.noise_mu, p.noise_sigma)
        .expect("validated sigma")
        .sample(rng)
}

fn check_accuracy(a: f64) -> Result<(), EmotionError> {
    if (0.0..=1.0).contains(&a) {
        Ok(())
    } else {
        Err(EmotionError::Accuracy(a))
    }
}

fn check_confidence(c: f64) -> Result<(), EmotionError> {
    if (CONFIDENCE_MIN..=CONFIDENCE_MAX).contains(&c) {
        Ok(())
    } else {
        Err(EmotionError::Confidence(c))
    }
}

/// Unclipped pride, noise included.
pub fn pride_raw<R: Rng + ?Sized>(
    a: f64,
    p: &AgentPersonality,
    rng: &mut R,
) -> Result<f64, EmotionError> {
    check_accuracy(a)?;
    let d = a - 1.0;
    Ok(libm::pow(100.0 * p.c1, -(d * d)) + noise(p, rng))
}

pub fn pride<R: Rng + ?Sized>(
    a: f64,
    p: &AgentPersonality,
    rng: &mut R,
) -> Result<f64, EmotionError> {
    pride_raw(a, p, rng).map(clip01)
}

/// The noiseless saddle in normalized coordinates.
///
/// Rotating `(u, v)` by `θ = 45° + c2` turns `u'^2 - v'^2` into
/// `(u^2 - v^2) cos 2θ - 2uv sin 2θ`, and with `2θ = 90° + 2 c2` that is
/// `-(u^2 - v^2) sin 2c2 - 2uv cos 2c2`. This form is exact at `c2 = 0`.
pub fn saddle(u: f64, v: f64, c2_degrees: f64) -> f64 {
    let phi = 2.0 * c2_degrees.to_radians();
    let quad = -(u * u - v * v) * libm::sin(phi) - 2.0 * u * v * libm::cos(phi);
    quad / 2.0 + 0.5
}

/// Accuracy and confidence mapped onto `[-1, 1]` around their midpoints.
pub fn normalized_coordinates(c: f64, a: f64) -> (f64, f64) {
    (2.0 * a - 1.0, (c - CONFIDENCE_MID) / CONFIDENCE_HALF_WIDTH)
}

/// Unclipped surprise, noise included.
pub fn surprise_raw<R: Rng + ?Sized>(
    c: f64,
    a: f64,
    p: &AgentPersonality,
    rng: &mut R,
) -> Result<f64, EmotionError> {
    check_confidence(c)?;
    check_accuracy(a)?;
    let (u, v) = normalized_coordinates(c, a);
    Ok(saddle(u, v, p.c2_degrees) + noise(p, rng))
}

pub fn surprise<R: Rng + ?Sized>(
    c: f64,
    a: f64,
    p: &AgentPersonality,
    rng: &mut R,
) -> Result<f64, EmotionError> {
    surprise_raw(c, a, p, rng).map(clip01)
}

/// A "random high confidence", uniform on `[0.8, 1]`.
pub fn sample_confidence<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(CONFIDENCE_MIN..=CONFIDENCE_MAX)
}

/// `c1` uniform on `(1, 10]`, `c2` uniform on `[-20°, 20°]`, σ = 0.03 and a fresh noise seed.
pub fn sample_personality<R: Rng + ?Sized>(rng: &mut R) -> AgentPersonality {
    let unit: f64 = rng.random();
    let c1 = 1.0 + (C1_MAX - 1.0) * (1.0 - unit);
    let c2_degrees = rng.random_range(-C2_LIMIT_DEGREES..=C2_LIMIT_DEGREES);
    AgentPersonality {
        c1,
        c2_degrees,
        noise_mu: 0.0,
        noise_sigma: NOISE_SIGMA,
        rng_seed: rng.random(),
    }
}

#[inline]
pub fn clip01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// An agent's personality bundled with its own noise stream.
#[derive(Debug, Clone)]
pub struct EmotionModel {
    personality: AgentPersonality,
    kind: EmotionKind,
    rng: crate::rng::StreamRng,
}

impl EmotionModel {
    pub fn new(kind: EmotionKind, personality: AgentPersonality) -> Self {
        Self {
            personality,
            kind,
            rng: crate::rng::seeded(personality.rng_seed),
        }
    }

    pub fn kind(&self) -> EmotionKind {
        self.kind
    }

    pub fn personality(&self) -> &AgentPersonality {
        &self.personality
    }

    /// Scores an outcome. `confidence` is required for surprise and ignored for pride.
    pub fn evaluate(
        &mut self,
        accuracy: f64,
        confidence: Option<f64>,
    ) -> Result<f64, EmotionError> {
        match self.kind {
            EmotionKind::Pride => pride(accuracy, &self.personality, &mut self.rng),
            EmotionKind::Surprise => {
                let c = confidence.ok_or(EmotionError::Confidence(f64::NAN))?;
                surprise(c, accuracy, &self.personality, &mut self.rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_relative_eq;

    fn quiet(c1: f64) -> AgentPersonality {
        AgentPersonality::noiseless(c1, 0.0)
    }

    #[test]
    fn pride_closed_form_values() {
        let mut rng = seeded(0);
        for c1 in [1.01, 3.0, 10.0] {
            assert_eq!(pride(1.0, &quiet(c1), &mut rng).unwrap(), 1.0);
        }
        assert_relative_eq!(
            pride(0.0, &quiet(10.0), &mut rng).unwrap(),
            0.001,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            pride(0.5, &quiet(10.0), &mut rng).unwrap(),
            0.177_827_941_003_892_3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn surprise_anchor_values() {
        let mut rng = seeded(0);
        let p = quiet(2.0);
        assert_eq!(surprise(0.9, 0.5, &p, &mut rng).unwrap(), 0.5);
        assert_eq!(surprise(1.0, 0.0, &p, &mut rng).unwrap(), 1.0);
        assert_eq!(surprise(1.0, 1.0, &p, &mut rng).unwrap(), 0.0);
        // low-confidence success is surprising as well
        assert!(surprise(0.8, 1.0, &p, &mut rng).unwrap() > 0.5);
    }

    #[test]
    fn domain_violations_are_errors() {
        let mut rng = seeded(0);
        let p = quiet(2.0);
        assert_eq!(pride(1.2, &p, &mut rng), Err(EmotionError::Accuracy(1.2)));
        assert_eq!(pride(-0.1, &p, &mut rng), Err(EmotionError::Accuracy(-0.1)));
        assert_eq!(
            surprise(0.7, 0.5, &p, &mut rng),
            Err(EmotionError::Confidence(0.7))
        );
        assert_eq!(
            surprise(0.9, 1.5, &p, &mut rng),
            Err(EmotionError::Accuracy(1.5))
        );
        assert!(AgentPersonality::new(1.0, 0.0, 0.03, 1).is_err());
        assert!(AgentPersonality::new(2.0, 20.5, 0.03, 1).is_err());
        assert!(AgentPersonality::new(2.0, 0.0, -0.1, 1).is_err());
    }

    #[test]
    fn confidence_draws() {
        let mut rng = seeded(21);
        let draws: alloc::vec::Vec<f64> =
            (0..10_000).map(|_| sample_confidence(&mut rng)).collect();
        assert!(draws.iter().all(|c| (0.8..=1.0).contains(c)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.9).abs() < 0.005, "mean {mean}");
        let mut again = seeded(21);
        assert_eq!(sample_confidence(&mut again), draws[0]);
    }

    #[test]
    fn personalities_stay_in_range() {
        let mut rng = seeded(8);
        let ps: alloc::vec::Vec<_> = (0..2000).map(|_| sample_personality(&mut rng)).collect();
        assert!(ps.iter().all(|p| p.c1 > 1.0 && p.c1 <= 10.0));
        assert!(ps.iter().all(|p| p.c2_degrees.abs() <= 20.0));
        assert!(ps.iter().all(|p| p.validate().is_ok()));
        assert_ne!(ps[0].c1, ps[1].c1);
        assert_ne!(ps[0].c2_degrees, ps[1].c2_degrees);
        assert_ne!(ps[0].rng_seed, ps[1].rng_seed);
    }

    #[test]
    fn model_requires_confidence_for_surprise() {
        let mut m = EmotionModel::new(EmotionKind::Surprise, quiet(2.0));
        assert!(m.evaluate(0.5, None).is_err());
        assert_eq!(m.evaluate(0.5, Some(0.9)).unwrap(), 0.5);
        let mut p = EmotionModel::new(EmotionKind::Pride, quiet(2.0));
        assert_eq!(p.evaluate(1.0, None).unwrap(), 1.0);
    }
}
