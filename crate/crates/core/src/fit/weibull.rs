//! Two-parameter Weibull `S(t) = exp(-(t/λ)^k)` by maximum likelihood.
//!
//! Two likelihoods are provided:
//!
//! * continuous durations, optionally right-censored (censored values
//!   contribute `S(t)`);
//! * whole-year durations, where a complete duration `d` means the latent
//!   duration fell in `(d-1, d]` and a censored span `H` means it exceeded
//!   `H-1`. This is the exact likelihood for ceiling-rounded data such as
//!   inclusive pair-activity spans.
//!
//! Both profile out `λ` and solve a one-dimensional problem in `k`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{pearson_chi2, FitError, MIN_FIT_SIZE};

const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullGof {
    pub chi2: f64,
    pub dof: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    pub k: f64,
    pub lambda: f64,
    /// Complete plus censored observations.
    pub n_samples: usize,
    pub n_censored: usize,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub gof: WeibullGof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeibullOptions {
    pub min_samples: usize,
    pub max_iter: usize,
}

impl Default for WeibullOptions {
    fn default() -> Self {
        Self {
            min_samples: MIN_FIT_SIZE,
            max_iter: MAX_ITER,
        }
    }
}

pub fn weibull_cdf(k: f64, lambda: f64, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -(-(t / lambda).powf(k)).exp_m1()
    }
}

fn weibull_quantile(k: f64, lambda: f64, p: f64) -> f64 {
    lambda * (-(-p).ln_1p()).powf(1.0 / k)
}

/// Continuous durations, split into complete and right-censored values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeibullData {
    complete: Vec<f64>,
    censored: Vec<f64>,
    scale: f64,
    ln_complete: Vec<f64>,
    ln_all: Vec<f64>,
}

impl WeibullData {
    pub fn new(complete: Vec<f64>, censored: Vec<f64>) -> Result<Self, FitError> {
        if let Some(bad) = complete.iter().chain(&censored).find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(FitError::InvalidInput(format!(
                "durations must be positive and finite, got {bad}"
            )));
        }
        let scale = complete
            .iter()
            .chain(&censored)
            .copied()
            .fold(0.0f64, f64::max);
        let ln_complete: Vec<f64> = complete.iter().map(|t| (t / scale).ln()).collect();
        let ln_all: Vec<f64> = complete
            .iter()
            .chain(&censored)
            .map(|t| (t / scale).ln())
            .collect();
        Ok(Self {
            complete,
            censored,
            scale,
            ln_complete,
            ln_all,
        })
    }

    pub fn complete(durations: &[f64]) -> Result<Self, FitError> {
        Self::new(durations.to_vec(), Vec::new())
    }

    pub fn n_complete(&self) -> usize {
        self.complete.len()
    }

    pub fn n_censored(&self) -> usize {
        self.censored.len()
    }

    /// `(Σ t'^k, Σ t'^k ln t', Σ t'^k ln² t')` over all observations, on
    /// durations normalised by the maximum.
    fn moments(&self, k: f64) -> (f64, f64, f64) {
        let mut s = (0.0, 0.0, 0.0);
        for &l in &self.ln_all {
            let p = (k * l).exp();
            s.0 += p;
            s.1 += p * l;
            s.2 += p * l * l;
        }
        s
    }

    fn sum_ln_complete(&self) -> f64 {
        self.ln_complete.iter().sum()
    }

    /// Profile score and its derivative in normalised units.
    fn score_and_slope(&self, k: f64) -> (f64, f64) {
        let r = self.complete.len() as f64;
        let (s0, s1, s2) = self.moments(k);
        let score = r / k - r * s1 / s0 + self.sum_ln_complete();
        let slope = -r / (k * k) - r * (s2 * s0 - s1 * s1) / (s0 * s0);
        (score, slope)
    }
}

/// Log-likelihood with `λ` profiled out, in the data's own units.
pub fn weibull_profile_loglik(data: &WeibullData, k: f64) -> f64 {
    let r = data.complete.len() as f64;
    let (s0, _, _) = data.moments(k);
    let ln_c = data.scale.ln();
    r * k.ln() - r * (s0 / r).ln() + (k - 1.0) * data.sum_ln_complete() - r - r * ln_c
}

/// `d/dk` of [`weibull_profile_loglik`]; the solver finds its root.
pub fn weibull_profile_score(data: &WeibullData, k: f64) -> f64 {
    data.score_and_slope(k).0
}

pub fn fit_weibull(durations: &[f64]) -> Result<WeibullFit, FitError> {
    fit_weibull_censored(&WeibullData::complete(durations)?, &WeibullOptions::default())
}

pub fn fit_weibull_censored(
    data: &WeibullData,
    opts: &WeibullOptions,
) -> Result<WeibullFit, FitError> {
    let n = data.n_complete() + data.n_censored();
    if n < opts.min_samples.max(1) || data.n_complete() == 0 {
        return Err(FitError::InsufficientData {
            found: n,
            needed: opts.min_samples.max(1),
        });
    }
    let score = |k: f64| data.score_and_slope(k).0;
    let (mut lo, mut hi) = bracket_decreasing_root(score, 0.01, 1.0)?;

    let mut k = (lo * hi).sqrt();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let (s, ds) = data.score_and_slope(k);
        if s > 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let newton = k - s / ds;
        let next = if newton > lo && newton < hi && newton.is_finite() {
            newton
        } else {
            (lo * hi).sqrt()
        };
        let step = (next - k).abs();
        k = next;
        if s == 0.0 || step <= 1e-13 * k || hi / lo - 1.0 < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FitError::NoConvergence(opts.max_iter));
    }
    let r = data.n_complete() as f64;
    let (s0, _, _) = data.moments(k);
    let lambda = data.scale * (s0 / r).powf(1.0 / k);
    Ok(WeibullFit {
        k,
        lambda,
        n_samples: n,
        n_censored: data.n_censored(),
        log_likelihood: weibull_profile_loglik(data, k),
        iterations,
        gof: continuous_gof(data, k, lambda),
    })
}

/// Finds `[lo, hi]` with `f(lo) > 0 ≥ f(hi)` for a decreasing `f` on
/// `k > 0`, expanding geometrically from the initial guess.
fn bracket_decreasing_root(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<(f64, f64), FitError> {
    let mut steps = 0;
    while f(lo) <= 0.0 {
        hi = lo;
        lo /= 4.0;
        steps += 1;
        if lo < 1e-8 || steps > 60 {
            return Err(FitError::Degenerate("shape parameter tends to zero".into()));
        }
    }
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 4.0;
        steps += 1;
        if hi > 1e4 || steps > 60 {
            return Err(FitError::Degenerate(
                "durations show no spread; shape parameter diverges".into(),
            ));
        }
    }
    Ok((lo, hi))
}

fn equal_probability_bins(n: usize) -> usize {
    (n / 20).clamp(5, 50)
}

fn continuous_gof(data: &WeibullData, k: f64, lambda: f64) -> WeibullGof {
    let n = data.n_complete() + data.n_censored();
    let nf = n as f64;
    // Observations at or beyond the earliest censoring time form one tail cell.
    let horizon = data.censored.iter().copied().fold(f64::INFINITY, f64::min);
    let p_h = if horizon.is_finite() {
        weibull_cdf(k, lambda, horizon)
    } else {
        1.0
    };
    let bins = equal_probability_bins(n);
    let edges: Vec<f64> = (1..bins)
        .map(|i| weibull_quantile(k, lambda, p_h * i as f64 / bins as f64))
        .collect();
    let mut observed = vec![0.0; bins + 1];
    for &t in &data.complete {
        if t >= horizon {
            observed[bins] += 1.0;
        } else {
            observed[edges.partition_point(|&e| e < t)] += 1.0;
        }
    }
    observed[bins] += data.censored.len() as f64;
    let mut cells: Vec<(f64, f64)> = (0..bins).map(|i| (observed[i], nf * p_h / bins as f64)).collect();
    if horizon.is_finite() {
        cells.push((observed[bins], nf * (1.0 - p_h)));
    }
    let (chi2, dof) = pearson_chi2(&cells, 2);
    WeibullGof { chi2, dof }
}

/// Whole-year durations: `complete[d]` latent durations in `(d-1, d]`,
/// `censored[h]` latent durations known only to exceed `h-1`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupedDurations {
    pub complete: BTreeMap<u32, u64>,
    pub censored: BTreeMap<u32, u64>,
}

impl GroupedDurations {
    pub fn add(&mut self, duration: u32, censored: bool) {
        let map = if censored {
            &mut self.censored
        } else {
            &mut self.complete
        };
        *map.entry(duration).or_default() += 1;
    }

    pub fn merge(&mut self, other: &GroupedDurations) {
        for (&d, &c) in &other.complete {
            *self.complete.entry(d).or_default() += c;
        }
        for (&d, &c) in &other.censored {
            *self.censored.entry(d).or_default() += c;
        }
    }

    pub fn n_complete(&self) -> u64 {
        self.complete.values().sum()
    }

    pub fn n_censored(&self) -> u64 {
        self.censored.values().sum()
    }

    pub fn len(&self) -> u64 {
        self.n_complete() + self.n_censored()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Subtracts `by` from every duration (spans are at least `by + 1`).
    pub fn shifted_down(&self, by: u32) -> GroupedDurations {
        let shift = |m: &BTreeMap<u32, u64>| m.iter().map(|(&d, &c)| (d - by, c)).collect();
        GroupedDurations {
            complete: shift(&self.complete),
            censored: shift(&self.censored),
        }
    }

    /// Treats every censored span as complete.
    pub fn without_censoring(&self) -> GroupedDurations {
        let mut out = GroupedDurations {
            complete: self.complete.clone(),
            censored: BTreeMap::new(),
        };
        for (&d, &c) in &self.censored {
            *out.complete.entry(d).or_default() += c;
        }
        out
    }
}

/// Precomputed cells of the grouped likelihood on normalised boundaries.
struct GroupedCells {
    /// `(ln a or None for a = 0, ln b, count)` for complete cells.
    complete: Vec<(Option<f64>, f64, f64)>,
    /// `(ln w, count)` for censored cells with `h > 1`.
    censored: Vec<(f64, f64)>,
    n_complete: f64,
    n_censored: f64,
}

/// Per-k powers of the cell boundaries.
struct CellPowers {
    /// `(u, v, u_k, v_k, count)`
    complete: Vec<(f64, f64, f64, f64, f64)>,
    /// `(w, w_k, count)`
    censored: Vec<(f64, f64, f64)>,
}

impl GroupedCells {
    fn new(data: &GroupedDurations) -> Result<Self, FitError> {
        if data.complete.contains_key(&0) || data.censored.contains_key(&0) {
            return Err(FitError::InvalidInput("durations must be at least 1".into()));
        }
        let top = data
            .complete
            .keys()
            .copied()
            .chain(data.censored.keys().map(|h| h - 1))
            .max()
            .unwrap_or(0);
        let c = top.max(1) as f64;
        let complete = data
            .complete
            .iter()
            .filter(|(_, &n)| n > 0)
            .map(|(&d, &n)| {
                let a = (d - 1) as f64 / c;
                let b = d as f64 / c;
                ((a > 0.0).then(|| a.ln()), b.ln(), n as f64)
            })
            .collect();
        let censored = data
            .censored
            .iter()
            .filter(|(&h, &n)| h > 1 && n > 0)
            .map(|(&h, &n)| (((h - 1) as f64 / c).ln(), n as f64))
            .collect();
        Ok(Self {
            complete,
            censored,
            n_complete: data.n_complete() as f64,
            n_censored: data.n_censored() as f64,
        })
    }

    fn powers(&self, k: f64) -> CellPowers {
        CellPowers {
            complete: self
                .complete
                .iter()
                .map(|&(la, lb, n)| {
                    let (u, uk) = match la {
                        Some(la) => {
                            let u = (k * la).exp();
                            (u, u * la)
                        }
                        None => (0.0, 0.0),
                    };
                    let v = (k * lb).exp();
                    (u, v, uk, v * lb, n)
                })
                .collect(),
            censored: self
                .censored
                .iter()
                .map(|&(lw, n)| {
                    let w = (k * lw).exp();
                    (w, w * lw, n)
                })
                .collect(),
        }
    }
}

impl CellPowers {
    fn loglik(&self, theta: f64) -> f64 {
        let mut g = 0.0;
        for &(u, v, _, _, n) in &self.complete {
            g += n * (-theta * u + (-(-(theta * (v - u))).exp_m1()).ln());
        }
        for &(w, _, n) in &self.censored {
            g -= n * theta * w;
        }
        g
    }

    fn d_theta(&self, theta: f64) -> (f64, f64) {
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for &(u, v, _, _, n) in &self.complete {
            let delta = v - u;
            let x = theta * delta;
            g1 += n * (-u + delta / x.exp_m1());
            let sh = (0.5 * x).sinh();
            g2 -= n * delta * delta / (4.0 * sh * sh);
        }
        for &(w, _, n) in &self.censored {
            g1 -= n * w;
        }
        (g1, g2)
    }

    fn d_k(&self, theta: f64) -> f64 {
        let mut gk = 0.0;
        for &(u, v, uk, vk, n) in &self.complete {
            let x = theta * (v - u);
            gk += n * theta * (-uk + (vk - uk) / x.exp_m1());
        }
        for &(_, wk, n) in &self.censored {
            gk -= n * theta * wk;
        }
        gk
    }

    /// Maximises the (concave) log-likelihood over `θ = λ^{-k}`.
    fn solve_theta(&self, n_total: f64) -> Result<f64, FitError> {
        let denom: f64 = self.complete.iter().map(|c| c.4 * c.1).sum::<f64>()
            + self.censored.iter().map(|c| c.2 * c.0).sum::<f64>();
        let sink: f64 = self.complete.iter().map(|c| c.4 * c.0).sum::<f64>()
            + self.censored.iter().map(|c| c.2 * c.0).sum::<f64>();
        if sink <= 0.0 {
            return Err(FitError::Degenerate(
                "every duration is in the first year; scale is unidentified".into(),
            ));
        }
        let guess = n_total / denom;
        let (mut lo, mut hi) = (guess, guess);
        let mut steps = 0;
        while self.d_theta(lo).0 <= 0.0 {
            lo /= 4.0;
            steps += 1;
            if steps > 400 {
                return Err(FitError::NoConvergence(steps));
            }
        }
        while self.d_theta(hi).0 > 0.0 {
            hi *= 4.0;
            steps += 1;
            if steps > 400 {
                return Err(FitError::NoConvergence(steps));
            }
        }
        let mut theta = (lo * hi).sqrt();
        for _ in 0..MAX_ITER {
            let (g1, g2) = self.d_theta(theta);
            if g1 > 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            let newton = theta - g1 / g2;
            let next = if newton > lo && newton < hi && newton.is_finite() {
                newton
            } else {
                (lo * hi).sqrt()
            };
            let step = (next - theta).abs();
            theta = next;
            if g1 == 0.0 || step <= 1e-15 * theta || hi / lo - 1.0 < 1e-15 {
                return Ok(theta);
            }
        }
        Ok(theta)
    }
}

fn grouped_profile(cells: &GroupedCells, k: f64) -> Result<(f64, f64, f64), FitError> {
    let powers = cells.powers(k);
    let theta = powers.solve_theta(cells.n_complete + cells.n_censored)?;
    Ok((theta, powers.loglik(theta), powers.d_k(theta)))
}

/// Grouped log-likelihood maximised over the scale at fixed shape `k`.
pub fn grouped_profile_loglik(data: &GroupedDurations, k: f64) -> Result<f64, FitError> {
    grouped_profile(&GroupedCells::new(data)?, k).map(|p| p.1)
}

/// `d/dk` of [`grouped_profile_loglik`] (envelope theorem: the partial
/// derivative at the optimal scale).
pub fn grouped_profile_score(data: &GroupedDurations, k: f64) -> Result<f64, FitError> {
    grouped_profile(&GroupedCells::new(data)?, k).map(|p| p.2)
}

pub fn fit_weibull_grouped(
    data: &GroupedDurations,
    opts: &WeibullOptions,
) -> Result<WeibullFit, FitError> {
    let n = data.len() as usize;
    if n < opts.min_samples.max(1) || data.n_complete() == 0 {
        return Err(FitError::InsufficientData {
            found: n,
            needed: opts.min_samples.max(1),
        });
    }
    let cells = GroupedCells::new(data)?;
    let score = |k: f64| grouped_profile(&cells, k).map(|p| p.2);

    // Bisection on ln k of the profile score.
    let mut lo = 0.05;
    let mut hi = 2.0;
    let mut steps = 0;
    while score(lo)? <= 0.0 {
        hi = lo;
        lo /= 4.0;
        steps += 1;
        if lo < 1e-6 || steps > 60 {
            return Err(FitError::Degenerate("shape parameter tends to zero".into()));
        }
    }
    while score(hi)? > 0.0 {
        lo = hi;
        hi *= 4.0;
        steps += 1;
        if hi > 1e3 || steps > 60 {
            return Err(FitError::Degenerate(
                "durations show no spread; shape parameter diverges".into(),
            ));
        }
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let mid = (lo * hi).sqrt();
        if score(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-12 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(FitError::NoConvergence(opts.max_iter));
    }
    let k = (lo * hi).sqrt();
    let (theta, log_likelihood, _) = grouped_profile(&cells, k)?;
    let top = data
        .complete
        .keys()
        .copied()
        .chain(data.censored.keys().map(|h| h - 1))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let lambda = top * theta.powf(-1.0 / k);
    Ok(WeibullFit {
        k,
        lambda,
        n_samples: n,
        n_censored: data.n_censored() as usize,
        log_likelihood,
        iterations,
        gof: grouped_gof(data, k, lambda),
    })
}

fn grouped_gof(data: &GroupedDurations, k: f64, lambda: f64) -> WeibullGof {
    let nf = data.len() as f64;
    let surv = |x: u32| (-(x as f64 / lambda).powf(k)).exp();
    let horizon = data.censored.keys().next().copied();
    let last_cell = match horizon {
        Some(h) => h.saturating_sub(1),
        None => data.complete.keys().next_back().copied().unwrap_or(0),
    };
    let mut cells = Vec::with_capacity(last_cell as usize + 1);
    for d in 1..=last_cell {
        let observed = data.complete.get(&d).copied().unwrap_or(0) as f64;
        cells.push((observed, nf * (surv(d - 1) - surv(d))));
    }
    let binned: f64 = cells.iter().map(|c| c.0).sum();
    cells.push((nf - binned, nf * surv(last_cell)));
    let (chi2, dof) = pearson_chi2(&cells, 2);
    WeibullGof { chi2, dof }
}
