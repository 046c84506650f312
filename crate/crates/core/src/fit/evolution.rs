//! Year-by-year fit series: power laws for edge-addition counts (keyed by
//! creation year) and Weibull laws for pair durations (keyed by the year the
//! pair timeline starts).

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::powerlaw::{fit_power_law_hist, scan_xmin, PowerLawFit};
use super::weibull::{fit_weibull_grouped, GroupedDurations, WeibullFit, WeibullOptions};
use super::{CountHistogram, FitError, MIN_FIT_SIZE};
use crate::graph::{pair_duration, ContributorId, TemporalGraph, Year};

/// Cohorts starting within this many years of the data's end are flagged.
pub const DEFAULT_CENSOR_FLAG_YEARS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitKind {
    PowerLaw,
    Weibull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvolutionConfig {
    pub min_samples: usize,
    /// Fixed lower cutoff for power-law fits.
    pub xmin: u32,
    /// When set, scan `xmin` over `1..=max` and keep the smallest KS.
    pub scan_xmin_max: Option<u32>,
    /// Use survival terms for pairs still active in the final year.
    pub censoring: bool,
    /// Subtract the assumed project duration from pair spans so a single
    /// collaboration lasts one year.
    pub net_of_tau: bool,
    pub censor_flag_years: u32,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            min_samples: MIN_FIT_SIZE,
            xmin: 1,
            scan_xmin_max: None,
            censoring: true,
            net_of_tau: true,
            censor_flag_years: DEFAULT_CENSOR_FLAG_YEARS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FitResult {
    PowerLaw(PowerLawFit),
    Weibull {
        fit: WeibullFit,
        censoring_affected: bool,
    },
}

/// A year that produced no fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSkip {
    pub year: Year,
    pub kind: FitKind,
    pub reason: String,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEvolution {
    pub kind: FitKind,
    pub fits: BTreeMap<Year, FitResult>,
    pub skips: Vec<FitSkip>,
}

impl ParameterEvolution {
    /// `(year, γ)` or `(year, k)` pairs.
    pub fn primary_parameter(&self) -> Vec<(Year, f64)> {
        self.fits
            .iter()
            .map(|(&y, r)| match r {
                FitResult::PowerLaw(f) => (y, f.gamma),
                FitResult::Weibull { fit, .. } => (y, fit.k),
            })
            .collect()
    }
}

/// Per-node number of new edges created in `year`, ordered by node id.
pub fn edge_addition_samples(graph: &TemporalGraph, year: Year) -> Vec<u32> {
    let mut counts: HashMap<ContributorId, u32> = HashMap::new();
    for tl in graph.timelines() {
        let started = tl.intervals.iter().filter(|iv| iv.start == year).count() as u32;
        if started > 0 {
            *counts.entry(tl.u).or_default() += started;
            *counts.entry(tl.v).or_default() += started;
        }
    }
    let mut pairs: Vec<_> = counts.into_iter().collect();
    pairs.sort_unstable();
    pairs.into_iter().map(|(_, c)| c).collect()
}

/// Histograms of [`edge_addition_samples`] for every year at once.
pub fn edge_addition_histograms(graph: &TemporalGraph) -> BTreeMap<Year, CountHistogram> {
    let incidence = graph.new_edge_incidence();
    let mut out: BTreeMap<Year, CountHistogram> = BTreeMap::new();
    let mut i = 0;
    while i < incidence.len() {
        let key = incidence[i];
        let mut j = i + 1;
        while j < incidence.len() && incidence[j] == key {
            j += 1;
        }
        *out.entry(key.0).or_default().entry((j - i) as u32).or_default() += 1;
        i = j;
    }
    out
}

/// Pair durations grouped by timeline start year. Timelines still active in
/// the graph's final year are marked censored.
pub fn duration_cohorts(graph: &TemporalGraph, net_of_tau: bool) -> BTreeMap<Year, GroupedDurations> {
    let mut out: BTreeMap<Year, GroupedDurations> = BTreeMap::new();
    let Some((_, last)) = graph.year_span() else {
        return out;
    };
    let shift = if net_of_tau { graph.tau_project() } else { 0 };
    for tl in graph.timelines() {
        let d = pair_duration(&tl) - shift;
        out.entry(tl.first_start())
            .or_default()
            .add(d, tl.last_end() >= last);
    }
    out
}

fn skip(year: Year, kind: FitKind, err: &FitError, n_samples: usize) -> FitSkip {
    FitSkip {
        year,
        kind,
        reason: err.to_string(),
        n_samples,
    }
}

fn collect(
    kind: FitKind,
    results: Vec<(Year, Result<FitResult, FitSkip>)>,
) -> ParameterEvolution {
    let mut fits = BTreeMap::new();
    let mut skips = Vec::new();
    for (year, r) in results {
        match r {
            Ok(f) => {
                fits.insert(year, f);
            }
            Err(s) => skips.push(s),
        }
    }
    ParameterEvolution { kind, fits, skips }
}

pub fn power_law_evolution(
    hists: &BTreeMap<Year, CountHistogram>,
    config: &EvolutionConfig,
) -> ParameterEvolution {
    let entries: Vec<_> = hists.iter().collect();
    let results = entries
        .par_iter()
        .map(|&(&year, hist)| {
            let n: u64 = hist.values().sum();
            let fit = match config.scan_xmin_max {
                Some(max) => scan_xmin(hist, 1..=max.max(1), config.min_samples),
                None => fit_power_law_hist(hist, config.xmin, config.min_samples),
            };
            let r = fit
                .map(FitResult::PowerLaw)
                .map_err(|e| skip(year, FitKind::PowerLaw, &e, n as usize));
            (year, r)
        })
        .collect();
    collect(FitKind::PowerLaw, results)
}

/// `last_year` is the final year of the data, used to flag cohorts whose
/// durations are dominated by censoring.
pub fn weibull_evolution(
    cohorts: &BTreeMap<Year, GroupedDurations>,
    last_year: Option<Year>,
    config: &EvolutionConfig,
) -> ParameterEvolution {
    let opts = WeibullOptions {
        min_samples: config.min_samples,
        ..WeibullOptions::default()
    };
    let entries: Vec<_> = cohorts.iter().collect();
    let results = entries
        .par_iter()
        .map(|&(&year, data)| {
            let fit = if config.censoring {
                fit_weibull_grouped(data, &opts)
            } else {
                fit_weibull_grouped(&data.without_censoring(), &opts)
            };
            let censoring_affected =
                last_year.is_some_and(|last| year > last - config.censor_flag_years as Year);
            let r = fit
                .map(|fit| FitResult::Weibull {
                    fit,
                    censoring_affected,
                })
                .map_err(|e| skip(year, FitKind::Weibull, &e, data.len() as usize));
            (year, r)
        })
        .collect();
    collect(FitKind::Weibull, results)
}

pub fn parameter_evolution(
    graph: &TemporalGraph,
    kind: FitKind,
    config: &EvolutionConfig,
) -> ParameterEvolution {
    match kind {
        FitKind::PowerLaw => power_law_evolution(&edge_addition_histograms(graph), config),
        FitKind::Weibull => weibull_evolution(
            &duration_cohorts(graph, config.net_of_tau),
            graph.year_span().map(|s| s.1),
            config,
        ),
    }
}
