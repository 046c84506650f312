//! Disruption, recovery and excess growth of a yearly series over given
//! historical windows, measured against a trend fitted to the years just
//! before each window.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::ols;
use crate::graph::Year;
use crate::series::YearlySeries;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EpochError {
    #[error("epoch `{name}` must start before it ends ({start} >= {end})")]
    InvalidEpoch { name: String, start: Year, end: Year },
    #[error(
        "`{series}` has {found} usable years before {start} (need {needed}); first available year: {}",
        first_available.map_or("none".to_string(), |y| y.to_string())
    )]
    InsufficientBaseline {
        series: String,
        start: Year,
        found: usize,
        needed: usize,
        first_available: Option<Year>,
    },
}

/// Named inclusive year window.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EpochDefinition {
    pub name: String,
    pub start: Year,
    pub end: Year,
}

impl EpochDefinition {
    pub fn new(name: impl Into<String>, start: Year, end: Year) -> Result<Self, EpochError> {
        let name = name.into();
        if start >= end {
            return Err(EpochError::InvalidEpoch { name, start, end });
        }
        Ok(Self { name, start, end })
    }

    pub fn contains(&self, year: Year) -> bool {
        self.start <= year && year <= self.end
    }
}

/// The five historical windows used when no epoch file is given.
pub fn default_epochs() -> Vec<EpochDefinition> {
    [
        ("Belle Epoque", 1890, 1914),
        ("WWI", 1914, 1918),
        ("Interwar", 1918, 1939),
        ("WWII", 1939, 1945),
        ("Post-War", 1945, 1960),
    ]
    .into_iter()
    .map(|(n, s, e)| EpochDefinition::new(n, s, e).expect("valid default epoch"))
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    LogLinear,
    Mean,
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaselineKind::LogLinear => "log-linear",
            BaselineKind::Mean => "mean",
        })
    }
}

pub const MIN_BASELINE_POINTS: usize = 5;
pub const DEFAULT_BASELINE_WINDOW: u32 = 10;
pub const DEFAULT_TOLERANCE_PCT: f64 = 5.0;

/// Pre-epoch trend. Log-linear: `ln y = intercept + slope (year - anchor)`.
/// Mean: `y = intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub window: u32,
    pub slope: f64,
    pub intercept: f64,
    pub kind: BaselineKind,
    pub anchor: Year,
    pub n_years: usize,
}

impl BaselineModel {
    pub fn predict(&self, year: Year) -> f64 {
        match self.kind {
            BaselineKind::LogLinear => {
                (self.intercept + self.slope * (year - self.anchor) as f64).exp()
            }
            BaselineKind::Mean => self.intercept,
        }
    }
}

pub fn fit_baseline(
    series: &YearlySeries,
    epoch: &EpochDefinition,
    window: u32,
    kind: BaselineKind,
) -> Result<BaselineModel, EpochError> {
    let pre = series.clip(epoch.start - window as Year, epoch.start - 1);
    let usable: Vec<(Year, f64)> = pre
        .iter()
        .filter(|(_, v)| v.is_finite() && (kind == BaselineKind::Mean || *v > 0.0))
        .collect();
    if usable.len() < MIN_BASELINE_POINTS {
        return Err(EpochError::InsufficientBaseline {
            series: series.name.clone(),
            start: epoch.start,
            found: usable.len(),
            needed: MIN_BASELINE_POINTS,
            first_available: series.first_year(),
        });
    }
    let (slope, intercept) = match kind {
        BaselineKind::LogLinear => {
            let x: Vec<f64> = usable.iter().map(|(y, _)| (y - epoch.start) as f64).collect();
            let y: Vec<f64> = usable.iter().map(|(_, v)| v.ln()).collect();
            let (a, b, _) = ols(&x, &y);
            (b, a)
        }
        BaselineKind::Mean => (
            0.0,
            usable.iter().map(|(_, v)| v).sum::<f64>() / usable.len() as f64,
        ),
    };
    Ok(BaselineModel {
        window,
        slope,
        intercept,
        kind,
        anchor: epoch.start,
        n_years: usable.len(),
    })
}

fn epoch_ratios(series: &YearlySeries, epoch: &EpochDefinition, baseline: &BaselineModel) -> Vec<f64> {
    series
        .clip(epoch.start, epoch.end)
        .iter()
        .map(|(y, v)| v / baseline.predict(y))
        .collect()
}

/// `100 (1 - min observed/predicted)` over the epoch; `None` without epoch
/// observations.
pub fn disruption_magnitude(
    series: &YearlySeries,
    epoch: &EpochDefinition,
    baseline: &BaselineModel,
) -> Option<f64> {
    epoch_ratios(series, epoch, baseline)
        .into_iter()
        .reduce(f64::min)
        .map(|m| 100.0 * (1.0 - m))
}

/// Like [`disruption_magnitude`] with the epoch mean ratio instead of the
/// trough.
pub fn mean_disruption(
    series: &YearlySeries,
    epoch: &EpochDefinition,
    baseline: &BaselineModel,
) -> Option<f64> {
    mean(&epoch_ratios(series, epoch, baseline)).map(|m| 100.0 * (1.0 - m))
}

/// `100 (mean observed/predicted - 1)` over the epoch.
pub fn excess_growth(
    series: &YearlySeries,
    epoch: &EpochDefinition,
    baseline: &BaselineModel,
) -> Option<f64> {
    mean(&epoch_ratios(series, epoch, baseline)).map(|m| 100.0 * (m - 1.0))
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recovery {
    Years(u32),
    NotRecovered,
}

impl fmt::Display for Recovery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recovery::Years(r) => write!(f, "{r}"),
            Recovery::NotRecovered => f.write_str("not recovered"),
        }
    }
}

/// Smallest `r ≥ 0` with `observed(end + r) ≥ (1 - tolerance_pct/100) ·
/// predicted(end + r)`. Years missing from the series never count as
/// recovered.
pub fn recovery_time(
    series: &YearlySeries,
    epoch: &EpochDefinition,
    baseline: &BaselineModel,
    tolerance_pct: f64,
) -> Recovery {
    let factor = 1.0 - tolerance_pct / 100.0;
    for (year, v) in series.clip(epoch.end, Year::MAX).iter() {
        if v >= factor * baseline.predict(year) {
            return Recovery::Years((year - epoch.end) as u32);
        }
    }
    Recovery::NotRecovered
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochConfig {
    pub window: u32,
    pub kind: BaselineKind,
    pub tolerance_pct: f64,
}

impl Default for EpochConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_BASELINE_WINDOW,
            kind: BaselineKind::LogLinear,
            tolerance_pct: DEFAULT_TOLERANCE_PCT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellStatus {
    Ok,
    NoData,
    InsufficientBaseline,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellStatus::Ok => "ok",
            CellStatus::NoData => "no data",
            CellStatus::InsufficientBaseline => "insufficient baseline",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: EpochDefinition,
    pub series_name: String,
    pub status: CellStatus,
    /// Trough decline (canonical).
    pub decline_pct: Option<f64>,
    pub mean_decline_pct: Option<f64>,
    pub recovery: Option<Recovery>,
    pub excess_growth_pct: Option<f64>,
    pub baseline: Option<BaselineModel>,
    pub message: String,
}

pub fn epoch_report(series: &YearlySeries, epoch: &EpochDefinition, config: &EpochConfig) -> EpochReport {
    let empty = |status, message: String| EpochReport {
        epoch: epoch.clone(),
        series_name: series.name.clone(),
        status,
        decline_pct: None,
        mean_decline_pct: None,
        recovery: None,
        excess_growth_pct: None,
        baseline: None,
        message,
    };
    if series.clip(epoch.start, epoch.end).is_empty() {
        return empty(
            CellStatus::NoData,
            format!("`{}` has no values in {}-{}", series.name, epoch.start, epoch.end),
        );
    }
    let baseline = match fit_baseline(series, epoch, config.window, config.kind) {
        Ok(b) => b,
        Err(e) => return empty(CellStatus::InsufficientBaseline, e.to_string()),
    };
    EpochReport {
        epoch: epoch.clone(),
        series_name: series.name.clone(),
        status: CellStatus::Ok,
        decline_pct: disruption_magnitude(series, epoch, &baseline),
        mean_decline_pct: mean_disruption(series, epoch, &baseline),
        recovery: Some(recovery_time(series, epoch, &baseline, config.tolerance_pct)),
        excess_growth_pct: excess_growth(series, epoch, &baseline),
        baseline: Some(baseline),
        message: String::new(),
    }
}

/// Every series against every epoch, series-major. Problem cells carry a
/// status instead of failing the whole matrix.
pub fn epoch_report_matrix(
    series_set: &[YearlySeries],
    epochs: &[EpochDefinition],
    config: &EpochConfig,
) -> Vec<EpochReport> {
    let cells: Vec<(&YearlySeries, &EpochDefinition)> = series_set
        .iter()
        .flat_map(|s| epochs.iter().map(move |e| (s, e)))
        .collect();
    cells
        .par_iter()
        .map(|(s, e)| epoch_report(s, e, config))
        .collect()
}
