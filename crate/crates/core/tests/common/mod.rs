#![allow(dead_code)]

use finkmc_core::{Action, AgentKind, ArchetypeSpec, NormalSpec, PopulationEntry, WorldParams};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Two-sided one-sample Kolmogorov–Smirnov test. Returns `(D, p)`.
pub fn ks_test(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    (d, kolmogorov_sf(lambda))
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Pearson chi-square goodness of fit. Returns `(statistic, p)`.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> (f64, f64) {
    let n: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    (stat, 1.0 - dist.cdf(stat))
}

/// `E[max(X, lo)]` for `X ~ N(mean, std)`.
pub fn clamped_normal_mean(mean: f64, std: f64, lo: f64) -> f64 {
    let z = (lo - mean) / std;
    let n = Normal::new(0.0, 1.0).unwrap();
    let pdf = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // E[max(X, lo)] = lo·Φ(z) + mean·(1 − Φ(z)) + std·φ(z)
    lo * n.cdf(z) + mean * (1.0 - n.cdf(z)) + std * pdf
}

pub fn single_archetype(seed: u64, max_time: f64, spec: ArchetypeSpec, count: u32) -> WorldParams {
    let mut p = WorldParams::new(seed, max_time);
    p.population = vec![PopulationEntry { archetype: spec.name.clone(), count, bad_actor_fraction: 0.0 }];
    p.archetypes = vec![spec];
    p
}

pub fn cash_in_only(rate: f64) -> ArchetypeSpec {
    ArchetypeSpec::new("saver", AgentKind::Individual).with_rate(Action::CashIn, NormalSpec::fixed(rate))
}
