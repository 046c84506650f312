//! Distribution and growth-law fitting: discrete power laws for yearly
//! edge-addition counts, Weibull laws for collaboration durations, and
//! two-regime power-law growth.

mod evolution;
mod growth;
mod powerlaw;
mod weibull;
pub mod zeta;

use std::collections::BTreeMap;

use thiserror::Error;

pub use evolution::{
    duration_cohorts, edge_addition_histograms, edge_addition_samples, parameter_evolution,
    power_law_evolution, weibull_evolution, EvolutionConfig, FitKind, FitResult, FitSkip,
    ParameterEvolution, DEFAULT_CENSOR_FLAG_YEARS,
};
pub use growth::{fit_growth, GrowthFit, MIN_GROWTH_YEARS, MIN_SEGMENT_POINTS};
pub use powerlaw::{
    discrete_power_law_cdf, fit_power_law, fit_power_law_hist, scan_xmin, PowerLawFit, PowerLawGof,
};
pub use weibull::{
    fit_weibull, fit_weibull_censored, fit_weibull_grouped, grouped_profile_loglik,
    grouped_profile_score, weibull_cdf, weibull_profile_loglik, weibull_profile_score,
    GroupedDurations, WeibullData, WeibullFit, WeibullGof, WeibullOptions,
};

/// Samples below this count are never fitted.
pub const MIN_FIT_SIZE: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("insufficient data: {found} samples, need {needed}")]
    InsufficientData { found: usize, needed: usize },
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),
}

/// Value → multiplicity.
pub type CountHistogram = BTreeMap<u32, u64>;

pub fn histogram(samples: &[u32]) -> CountHistogram {
    let mut h = CountHistogram::new();
    for &s in samples {
        *h.entry(s).or_default() += 1;
    }
    h
}

/// Pearson χ² over `(observed, expected)` cells after merging neighbours
/// until every cell expects at least 5. Returns `(chi2, dof)` with
/// `dof = cells - 1 - fitted_params` (floored at 0).
pub(crate) fn pearson_chi2(cells: &[(f64, f64)], fitted_params: usize) -> (f64, usize) {
    const MIN_EXPECTED: f64 = 5.0;
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for &(o, e) in cells {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= MIN_EXPECTED {
            merged.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => merged.push(acc),
        }
    }
    let chi2 = merged
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    (chi2, merged.len().saturating_sub(1 + fitted_params))
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, sse)`.
pub(crate) fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let sse = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let r = yi - a - b * xi;
            r * r
        })
        .sum();
    (a, b, sse)
}
