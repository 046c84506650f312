//! Characteristic timescales: accumulated total divided by its yearly rate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::epoch::EpochDefinition;
use crate::graph::{TemporalGraph, Year};
use crate::series::{count_series, cumulative, node_series, YearlySeries};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimescaleError {
    #[error("year domains of `{total}` and `{rate}` differ")]
    Misaligned { total: String, rate: String },
    #[error("only {found} populated baseline years before {start} (need {needed})")]
    InsufficientBaseline { start: Year, found: usize, needed: usize },
    #[error("no timescale values inside epoch `{0}`")]
    EmptyEpoch(String),
}

/// `total(t) / rate(t)`; years with non-positive rate are omitted.
pub fn timescale(total: &YearlySeries, rate: &YearlySeries) -> Result<YearlySeries, TimescaleError> {
    if !total.years().eq(rate.years()) {
        return Err(TimescaleError::Misaligned {
            total: total.name.clone(),
            rate: rate.name.clone(),
        });
    }
    let mut out = YearlySeries::new(format!("tau_{}", total.name));
    for ((y, n), (_, r)) in total.iter().zip(rate.iter()) {
        if r > 0.0 {
            out.put(y, n / r);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimescaleSeries {
    pub tau_node_add: YearlySeries,
    pub tau_node_rem: YearlySeries,
    pub tau_edge_add: YearlySeries,
    pub tau_edge_rem: YearlySeries,
    /// `tau_node_add / tau_edge_add`.
    pub ratio: YearlySeries,
}

/// Yearly flows feeding the four timescales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessCounts {
    pub new_nodes: YearlySeries,
    /// Nodes whose last active year is `t`.
    pub removed_nodes: YearlySeries,
    /// Pair timelines whose first interval starts in `t`.
    pub new_timelines: YearlySeries,
    /// Pair timelines whose last interval ends in `t`.
    pub ended_timelines: YearlySeries,
}

pub fn process_counts(graph: &TemporalGraph) -> ProcessCounts {
    let span = graph.year_span();
    let nodes = graph.nodes();
    ProcessCounts {
        new_nodes: node_series(graph).new,
        removed_nodes: count_series("removed_nodes", span, nodes.iter().map(|n| n.last_active)),
        new_timelines: count_series(
            "new_timelines",
            span,
            graph.timelines().map(|t| t.first_start()),
        ),
        ended_timelines: count_series(
            "ended_timelines",
            span,
            graph.timelines().map(|t| t.last_end()),
        ),
    }
}

pub const DEFAULT_CENSOR_WINDOW: u32 = 5;

/// Node and edge addition/removal timescales. Removal timescales are
/// suppressed for the final `censor_window` years, where removals are
/// right-censored by the end of the data.
pub fn process_timescales(graph: &TemporalGraph, censor_window: u32) -> TimescaleSeries {
    timescales_from_counts(&process_counts(graph), censor_window)
}

pub fn timescales_from_counts(counts: &ProcessCounts, censor_window: u32) -> TimescaleSeries {
    let tau = |rate: &YearlySeries, cum_name: &str, name: &str| {
        timescale(&cumulative(cum_name, rate), rate)
            .expect("cumulative shares the rate's years")
            .renamed(name)
    };
    let tau_node_add = tau(&counts.new_nodes, "cumulative_nodes", "tau_node_add");
    let tau_edge_add = tau(&counts.new_timelines, "cumulative_timelines", "tau_edge_add");
    let last = counts.new_nodes.last_year();
    let censor = |s: YearlySeries| match last {
        Some(last) => {
            let cut = last - censor_window as Year;
            let first = s.first_year().unwrap_or(cut);
            s.clip(first, cut)
        }
        None => s,
    };
    let tau_node_rem = censor(tau(&counts.removed_nodes, "cumulative_removed", "tau_node_rem"));
    let tau_edge_rem = censor(tau(&counts.ended_timelines, "cumulative_ended", "tau_edge_rem"));

    let mut ratio = YearlySeries::new("tau_ratio");
    for (y, n) in tau_node_add.iter() {
        if let Some(e) = tau_edge_add.get(y) {
            ratio.put(y, n / e);
        }
    }
    TimescaleSeries {
        tau_node_add,
        tau_node_rem,
        tau_edge_add,
        tau_edge_rem,
        ratio,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockResponse {
    pub tau_node_change_pct: f64,
    pub tau_edge_change_pct: f64,
}

pub const MIN_BASELINE_YEARS: usize = 5;

/// Percent change of the epoch-mean timescale relative to the mean over the
/// `window` years before the epoch.
pub fn shock_response(
    ts: &TimescaleSeries,
    epoch: &EpochDefinition,
    window: u32,
) -> Result<ShockResponse, TimescaleError> {
    Ok(ShockResponse {
        tau_node_change_pct: window_change_pct(&ts.tau_node_add, epoch, window)?,
        tau_edge_change_pct: window_change_pct(&ts.tau_edge_add, epoch, window)?,
    })
}

pub fn window_change_pct(
    series: &YearlySeries,
    epoch: &EpochDefinition,
    window: u32,
) -> Result<f64, TimescaleError> {
    let lo = epoch.start - window as Year;
    let before: Vec<f64> = series.clip(lo, epoch.start - 1).iter().map(|(_, v)| v).collect();
    if before.len() < MIN_BASELINE_YEARS {
        return Err(TimescaleError::InsufficientBaseline {
            start: epoch.start,
            found: before.len(),
            needed: MIN_BASELINE_YEARS,
        });
    }
    let during: Vec<f64> = series.clip(epoch.start, epoch.end).iter().map(|(_, v)| v).collect();
    if during.is_empty() {
        return Err(TimescaleError::EmptyEpoch(epoch.name.clone()));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(100.0 * (mean(&during) / mean(&before) - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, ContributorId, GraphConfig, ProjectEvent};

    fn series(name: &str, pts: impl IntoIterator<Item = (Year, f64)>) -> YearlySeries {
        YearlySeries::from_pairs(name, pts).unwrap()
    }

    #[test]
    fn definition_and_zero_rate() {
        let total = series("n", [(2000, 10_000.0), (2001, 10_000.0)]);
        let rate = series("r", [(2000, 500.0), (2001, 0.0)]);
        let tau = timescale(&total, &rate).unwrap();
        assert_eq!(tau.get(2000), Some(20.0));
        assert_eq!(tau.get(2001), None);
    }

    #[test]
    fn misaligned_rejected() {
        let total = series("n", [(2000, 1.0)]);
        let rate = series("r", [(2001, 1.0)]);
        assert!(matches!(
            timescale(&total, &rate),
            Err(TimescaleError::Misaligned { .. })
        ));
    }

    #[test]
    fn exponential_growth_central_difference() {
        // N = e^{t/5}; a central-difference rate gives tau = 1/sinh(0.2).
        let n = |t: f64| (t / 5.0).exp();
        let total = series("n", (10..60).map(|t| (t, n(t as f64))));
        let rate = series(
            "r",
            (10..60).map(|t| (t, (n(t as f64 + 1.0) - n(t as f64 - 1.0)) / 2.0)),
        );
        let tau = timescale(&total, &rate).unwrap();
        for (_, v) in tau.iter() {
            assert!((v - 5.0).abs() / 5.0 < 0.03, "{v}");
        }
    }

    #[test]
    fn single_event_timescales() {
        let e = ProjectEvent::new("p", 2000, vec![ContributorId(0), ContributorId(1)]).unwrap();
        let g = build_graph([&e], GraphConfig::with_tau(2)).unwrap();
        let ts = process_timescales(&g, DEFAULT_CENSOR_WINDOW);
        assert_eq!(ts.tau_node_add.iter().collect::<Vec<_>>(), vec![(1998, 1.0)]);
        assert_eq!(ts.tau_edge_add.iter().collect::<Vec<_>>(), vec![(1998, 1.0)]);
        assert_eq!(ts.ratio.iter().collect::<Vec<_>>(), vec![(1998, 1.0)]);
        assert!(ts.tau_node_rem.is_empty());
    }

    #[test]
    fn shock_arithmetic() {
        let epoch = EpochDefinition::new("e", 1939, 1945).unwrap();
        let flat = series("t", (1920..1950).map(|y| (y, 10.0)));
        assert!(window_change_pct(&flat, &epoch, 10).unwrap().abs() < 1e-12);
        let bumped = series(
            "t",
            (1920..1950).map(|y| (y, if (1939..=1945).contains(&y) { 18.5 } else { 10.0 })),
        );
        assert!((window_change_pct(&bumped, &epoch, 10).unwrap() - 85.0).abs() < 1e-9);
        let short = series("t", (1936..1950).map(|y| (y, 10.0)));
        assert!(matches!(
            window_change_pct(&short, &epoch, 10),
            Err(TimescaleError::InsufficientBaseline { found: 3, .. })
        ));
    }
}
