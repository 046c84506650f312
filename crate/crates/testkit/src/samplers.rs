//! Reference samplers built on `rand_distr`.

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Weibull};

/// Exact discrete power-law draws `P(k) ∝ k^-gamma`, `k ≥ xmin`, by inverse
/// transform on a directly summed table up to `table_max`; the remaining
/// tail mass is sampled from the continuous Pareto approximation.
pub struct DiscretePowerLaw {
    xmin: u32,
    gamma: f64,
    cdf: Vec<f64>,
    table_mass: f64,
}

impl DiscretePowerLaw {
    pub fn new(gamma: f64, xmin: u32, table_max: u32) -> Self {
        let pmf: Vec<f64> = (xmin..=table_max).map(|k| (k as f64).powf(-gamma)).collect();
        // tail Σ_{k > table_max} k^-γ by the integral from table_max + 1/2
        let tail = (table_max as f64 + 0.5).powf(1.0 - gamma) / (gamma - 1.0);
        let total: f64 = pmf.iter().sum::<f64>() + tail;
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect();
        Self {
            xmin,
            gamma,
            cdf,
            table_mass: acc,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        if u < self.table_mass {
            return self.xmin + self.cdf.partition_point(|&c| c <= u) as u32;
        }
        let top = (self.xmin as usize + self.cdf.len()) as f64 - 0.5;
        let v: f64 = 1.0 - rng.random::<f64>();
        let x = top * v.powf(-1.0 / (self.gamma - 1.0));
        x.round().min(u32::MAX as f64) as u32
    }

    pub fn samples<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u32> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

pub fn weibull_samples<R: Rng + ?Sized>(k: f64, lambda: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let d = Weibull::new(lambda, k).expect("valid Weibull parameters");
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Multiplicative noise factors `exp(N(0, sigma²))`.
pub fn lognormal_factors<R: Rng + ?Sized>(sigma: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let d = LogNormal::new(0.0, sigma).expect("valid sigma");
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Closed-form Weibull quantile.
pub fn weibull_quantile(k: f64, lambda: f64, p: f64) -> f64 {
    lambda * (-(1.0 - p).ln()).powf(1.0 / k)
}
