//! Two-regime power-law growth: `ln value` against `ln(year - t0 + 1)` as
//! two independent least-squares lines split at the best breakpoint.

use serde::{Deserialize, Serialize};

use super::{ols, FitError};
use crate::graph::Year;
use crate::series::YearlySeries;

pub const MIN_GROWTH_YEARS: usize = 20;
pub const MIN_SEGMENT_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub alpha1: f64,
    pub alpha2: f64,
    /// First year of the second regime.
    pub breakpoint_year: Year,
    /// Sum of squared log residuals over both segments.
    pub residual: f64,
    pub intercept1: f64,
    pub intercept2: f64,
    pub t0: Year,
    pub n_points: usize,
    /// Years left out because the value was not positive or the year
    /// preceded `t0`.
    pub dropped_years: Vec<Year>,
}

impl GrowthFit {
    /// Fitted value at `year`.
    pub fn predict(&self, year: Year) -> f64 {
        let x = ((year - self.t0 + 1) as f64).ln();
        if year < self.breakpoint_year {
            (self.intercept1 + self.alpha1 * x).exp()
        } else {
            (self.intercept2 + self.alpha2 * x).exp()
        }
    }
}

pub fn fit_growth(series: &YearlySeries, t0: Year) -> Result<GrowthFit, FitError> {
    let mut years = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut dropped_years = Vec::new();
    for (year, v) in series.iter() {
        if !v.is_finite() {
            return Err(FitError::InvalidInput(format!(
                "non-finite value {v} in `{}` at {year}",
                series.name
            )));
        }
        if v <= 0.0 || year < t0 {
            dropped_years.push(year);
            continue;
        }
        years.push(year);
        x.push(((year - t0 + 1) as f64).ln());
        y.push(v.ln());
    }
    let n = years.len();
    if n < MIN_GROWTH_YEARS {
        return Err(FitError::InsufficientData {
            found: n,
            needed: MIN_GROWTH_YEARS,
        });
    }
    let mut best: Option<(f64, usize, (f64, f64), (f64, f64))> = None;
    for split in MIN_SEGMENT_POINTS..=n - MIN_SEGMENT_POINTS {
        let (a1, b1, e1) = ols(&x[..split], &y[..split]);
        let (a2, b2, e2) = ols(&x[split..], &y[split..]);
        let sse = e1 + e2;
        if best.map_or(true, |b| sse < b.0) {
            best = Some((sse, split, (a1, b1), (a2, b2)));
        }
    }
    let (residual, split, (intercept1, alpha1), (intercept2, alpha2)) =
        best.expect("at least one admissible split when n >= 2 * MIN_SEGMENT_POINTS");
    if !(alpha1.is_finite() && alpha2.is_finite()) {
        return Err(FitError::Degenerate("non-finite growth exponent".into()));
    }
    Ok(GrowthFit {
        alpha1,
        alpha2,
        breakpoint_year: years[split],
        residual,
        intercept1,
        intercept2,
        t0,
        n_points: n,
        dropped_years,
    })
}
