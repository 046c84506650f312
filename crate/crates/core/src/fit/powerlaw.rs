//! Discrete power law `P(k) = k^{-γ} / ζ(γ, xmin)` for integer `k ≥ xmin`.

use serde::{Deserialize, Serialize};

use super::zeta::{hurwitz_zeta, hurwitz_zeta_with_derivative};
use super::{histogram, pearson_chi2, CountHistogram, FitError, MIN_FIT_SIZE};

const GAMMA_MAX: f64 = 100.0;
const LOG_BIN_RATIO: f64 = 1.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawGof {
    pub ks_stat: f64,
    pub chi2: f64,
    pub dof: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub xmin: u32,
    pub n_samples: usize,
    pub log_likelihood: f64,
    pub gof: PowerLawGof,
}

/// `P(K ≤ k)` under the fitted law.
pub fn discrete_power_law_cdf(gamma: f64, xmin: u32, k: u32) -> f64 {
    if k < xmin {
        return 0.0;
    }
    1.0 - hurwitz_zeta(gamma, k as f64 + 1.0) / hurwitz_zeta(gamma, xmin as f64)
}

/// Discrete maximum-likelihood fit to the samples `≥ xmin`, requiring at
/// least [`MIN_FIT_SIZE`] of them.
pub fn fit_power_law(samples: &[u32], xmin: u32) -> Result<PowerLawFit, FitError> {
    fit_power_law_hist(&histogram(samples), xmin, MIN_FIT_SIZE)
}

pub fn fit_power_law_hist(
    hist: &CountHistogram,
    xmin: u32,
    min_samples: usize,
) -> Result<PowerLawFit, FitError> {
    if xmin == 0 {
        return Err(FitError::InvalidInput("xmin must be at least 1".into()));
    }
    let tail: Vec<(u32, u64)> = hist
        .range(xmin..)
        .filter(|(_, &c)| c > 0)
        .map(|(&k, &c)| (k, c))
        .collect();
    let n: u64 = tail.iter().map(|(_, c)| c).sum();
    let n_samples = n as usize;
    if n_samples < min_samples.max(1) {
        return Err(FitError::InsufficientData {
            found: n_samples,
            needed: min_samples.max(1),
        });
    }
    let sum_ln: f64 = tail.iter().map(|&(k, c)| c as f64 * (k as f64).ln()).sum();
    let mean_ln = sum_ln / n as f64;
    if tail.len() == 1 && tail[0].0 == xmin {
        return Err(FitError::Degenerate(format!(
            "all {n_samples} samples equal xmin={xmin}; exponent diverges"
        )));
    }

    let a = xmin as f64;
    // Expected ln k under the model minus the sample mean; decreasing in γ.
    let score = |g: f64| {
        let (z, dz) = hurwitz_zeta_with_derivative(g, a);
        -dz / z - mean_ln
    };
    let mut lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    while score(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > GAMMA_MAX {
            return Err(FitError::Degenerate(format!(
                "exponent exceeds {GAMMA_MAX}; samples concentrated at xmin"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let gamma = 0.5 * (lo + hi);
    let z = hurwitz_zeta(gamma, a);
    let log_likelihood = -(n as f64) * z.ln() - gamma * sum_ln;
    Ok(PowerLawFit {
        gamma,
        xmin,
        n_samples,
        log_likelihood,
        gof: goodness_of_fit(&tail, n, gamma, xmin, z),
    })
}

fn goodness_of_fit(tail: &[(u32, u64)], n: u64, gamma: f64, xmin: u32, z: f64) -> PowerLawGof {
    let nf = n as f64;
    let cdf = |k: u32| {
        if k < xmin {
            0.0
        } else {
            1.0 - hurwitz_zeta(gamma, k as f64 + 1.0) / z
        }
    };

    // KS: the empirical CDF is flat between observed values while the model
    // CDF keeps rising, so check both each observed value and the integer
    // just below the next one.
    let mut ks: f64 = 0.0;
    let mut cum = 0u64;
    for &(k, c) in tail {
        let before = cum as f64 / nf;
        ks = ks.max((before - cdf(k - 1)).abs());
        cum += c;
        ks = ks.max((cum as f64 / nf - cdf(k)).abs());
    }

    // χ² on logarithmic bins [lo, hi), with an open tail cell.
    let mut cells = Vec::new();
    let mut lo = xmin;
    let mut tail_mass = 1.0; // P(K ≥ lo)
    let mut idx = 0usize;
    loop {
        let hi = ((lo as f64 * LOG_BIN_RATIO).ceil() as u32).max(lo + 1);
        let next_tail = hurwitz_zeta(gamma, hi as f64) / z;
        if nf * next_tail < 5.0 || cells.len() >= 200 {
            break;
        }
        let mut observed = 0u64;
        while idx < tail.len() && tail[idx].0 < hi {
            observed += tail[idx].1;
            idx += 1;
        }
        cells.push((observed as f64, nf * (tail_mass - next_tail)));
        tail_mass = next_tail;
        lo = hi;
    }
    let rest: u64 = tail[idx..].iter().map(|(_, c)| c).sum();
    cells.push((rest as f64, nf * tail_mass));
    let (chi2, dof) = pearson_chi2(&cells, 1);
    PowerLawGof {
        ks_stat: ks,
        chi2,
        dof,
    }
}

/// Fits every candidate `xmin` and keeps the one with the smallest KS
/// statistic (ties go to the smaller `xmin`).
pub fn scan_xmin(
    hist: &CountHistogram,
    candidates: impl IntoIterator<Item = u32>,
    min_samples: usize,
) -> Result<PowerLawFit, FitError> {
    let mut best: Option<PowerLawFit> = None;
    let mut last_err = None;
    for xmin in candidates {
        match fit_power_law_hist(hist, xmin, min_samples) {
            Ok(fit) => {
                if best.map_or(true, |b| fit.gof.ks_stat < b.gof.ks_stat) {
                    best = Some(fit);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| {
        last_err.unwrap_or_else(|| FitError::InvalidInput("no xmin candidates".into()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_at_xmin() {
        let samples = vec![1u32; 100];
        assert!(matches!(
            fit_power_law(&samples, 1),
            Err(FitError::Degenerate(_))
        ));
    }

    #[test]
    fn too_few_samples() {
        let samples = vec![1u32, 2, 3, 4];
        assert_eq!(
            fit_power_law(&samples, 1),
            Err(FitError::InsufficientData { found: 4, needed: 50 })
        );
    }

    #[test]
    fn exact_expected_histogram_recovers_gamma() {
        // Histogram proportional to the model pmf: the MLE is the true value.
        let gamma = 2.1;
        let z = hurwitz_zeta(gamma, 1.0);
        let mut hist = CountHistogram::new();
        let total = 1e9;
        for k in 1..=1_000_000u32 {
            let c = (total * (k as f64).powf(-gamma) / z).round() as u64;
            if c > 0 {
                hist.insert(k, c);
            }
        }
        let fit = fit_power_law_hist(&hist, 1, 50).unwrap();
        assert!((fit.gamma - gamma).abs() < 2e-3, "{}", fit.gamma);
        assert!(fit.gof.ks_stat < 1e-3);
    }

    #[test]
    fn cdf_limits() {
        assert_eq!(discrete_power_law_cdf(2.0, 3, 2), 0.0);
        let p1 = discrete_power_law_cdf(2.0, 1, 1);
        assert!((p1 - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }
}
