use affx_core::emotion::*;
use affx_core::rng::seeded;
use proptest::prelude::*;

fn personality() -> impl Strategy<Value = AgentPersonality> {
    (
        1.0001f64..=10.0,
        -20.0f64..=20.0,
        0.0f64..=0.5,
        any::<u64>(),
    )
        .prop_map(|(c1, c2, sigma, seed)| AgentPersonality::new(c1, c2, sigma, seed).unwrap())
}

proptest! {
    #[test]
    fn scores_stay_in_unit_interval(p in personality(), a in 0.0f64..=1.0, c in 0.8f64..=1.0, seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let pr = pride(a, &p, &mut rng).unwrap();
        let su = surprise(c, a, &p, &mut rng).unwrap();
        prop_assert!((0.0..=1.0).contains(&pr));
        prop_assert!((0.0..=1.0).contains(&su));
    }

    #[test]
    fn pride_is_monotone_without_noise(c1 in 1.0001f64..=10.0, a1 in 0.0f64..=1.0, a2 in 0.0f64..=1.0) {
        let p = AgentPersonality::noiseless(c1, 0.0);
        let mut rng = seeded(0);
        let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let (plo, phi) = (pride(lo, &p, &mut rng).unwrap(), pride(hi, &p, &mut rng).unwrap());
        prop_assert!(plo <= phi);
        if hi - lo > 1e-6 {
            prop_assert!(plo < phi, "not strict: {lo} -> {plo}, {hi} -> {phi}");
        }
    }

    #[test]
    fn surprise_sign_structure(a in 0.0f64..=1.0, c in 0.8f64..=1.0) {
        let p = AgentPersonality::noiseless(2.0, 0.0);
        let (u, v) = normalized_coordinates(c, a);
        prop_assume!((u * v).abs() > 1e-9);
        let s = surprise(c, a, &p, &mut seeded(0)).unwrap();
        if (a - 0.5) * (c - 0.9) < 0.0 {
            prop_assert!(s > 0.5);
        } else {
            prop_assert!(s < 0.5);
        }
    }

    #[test]
    fn surprise_on_the_axes_is_half(x in 0.0f64..=1.0, y in 0.8f64..=1.0) {
        let p = AgentPersonality::noiseless(2.0, 0.0);
        prop_assert_eq!(surprise(0.9, x, &p, &mut seeded(0)).unwrap(), 0.5);
        prop_assert_eq!(surprise(y, 0.5, &p, &mut seeded(0)).unwrap(), 0.5);
    }

    #[test]
    fn saddle_is_even(u in -1.0f64..=1.0, v in -1.0f64..=1.0, c2 in -20.0f64..=20.0) {
        prop_assert_eq!(saddle(u, v, c2), saddle(-u, -v, c2));
    }

    #[test]
    fn reflected_inputs_score_alike(a in 0.0f64..=1.0, c in 0.8f64..=1.0, c2 in -20.0f64..=20.0) {
        let p = AgentPersonality::noiseless(3.0, c2);
        let s = surprise(c, a, &p, &mut seeded(0)).unwrap();
        let r = surprise((1.8 - c).clamp(0.8, 1.0), 1.0 - a, &p, &mut seeded(0)).unwrap();
        prop_assert!((s - r).abs() < 1e-12);
    }

    #[test]
    fn domain_violations_are_errors(a in 1.0001f64..5.0, c in 0.0f64..0.7999) {
        let p = AgentPersonality::noiseless(2.0, 0.0);
        let mut rng = seeded(0);
        prop_assert!(pride(a, &p, &mut rng).is_err());
        prop_assert!(pride(-a, &p, &mut rng).is_err());
        prop_assert!(surprise(c, 0.5, &p, &mut rng).is_err());
        prop_assert!(surprise(0.9, a, &p, &mut rng).is_err());
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn noise_sigma_is_recovered() {
    for (seed, a, c) in [(1u64, 0.5, 0.9), (2, 0.2, 0.95), (3, 0.8, 0.85)] {
        let p = AgentPersonality::new(4.0, 7.0, NOISE_SIGMA, seed).unwrap();
        let mut rng = seeded(seed);
        let s: Vec<f64> = (0..10_000)
            .map(|_| surprise_raw(c, a, &p, &mut rng).unwrap())
            .collect();
        let q: Vec<f64> = (0..10_000)
            .map(|_| pride_raw(a, &p, &mut rng).unwrap())
            .collect();
        for (name, xs) in [("surprise", s), ("pride", q)] {
            let sd = sample_std(&xs);
            assert!((sd - 0.03).abs() < 0.002, "{name} at a={a} c={c}: std {sd}");
        }
    }
}

#[test]
fn anchor_values() {
    let p = AgentPersonality::noiseless(10.0, 0.0);
    let mut rng = seeded(0);
    assert_eq!(pride(1.0, &p, &mut rng).unwrap(), 1.0);
    assert!((pride(0.0, &p, &mut rng).unwrap() - 0.001).abs() < 1e-15);
    assert!((pride(0.5, &p, &mut rng).unwrap() - 0.1778279410038923).abs() < 1e-12);
    assert_eq!(surprise(0.9, 0.5, &p, &mut rng).unwrap(), 0.5);
    assert_eq!(surprise(1.0, 0.0, &p, &mut rng).unwrap(), 1.0);
    assert_eq!(surprise(1.0, 1.0, &p, &mut rng).unwrap(), 0.0);
}

#[test]
fn sampled_personalities_in_range() {
    let mut rng = seeded(5);
    let ps: Vec<_> = (0..2000).map(|_| sample_personality(&mut rng)).collect();
    assert!(ps
        .iter()
        .all(|p| p.c1 > 1.0 && p.c1 <= 10.0 && p.c2_degrees.abs() <= 20.0));
    assert!(ps.iter().all(|p| p.validate().is_ok()));
    let c: Vec<f64> = (0..10_000).map(|_| sample_confidence(&mut rng)).collect();
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    assert!((mean - 0.9).abs() < 0.005);
}
