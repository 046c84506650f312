//! Per-year tables that every downstream analysis reads, small enough to
//! persist after ingest so analyses never need the graph again.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fit::{duration_cohorts, edge_addition_histograms, CountHistogram, GroupedDurations};
use crate::graph::{BuildStats, TemporalGraph, Year};
use crate::series::{
    live_activity_series, node_series, single_year_series, EventAggregator, LiveActivity,
    NodeSeries, SingleYearSeries,
};
use crate::timescale::{process_counts, ProcessCounts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub tau_project: u32,
    pub year_span: Option<(Year, Year)>,
    pub build: BuildStats,
    pub node_count: u64,
    pub timeline_count: u64,
    pub nodes: NodeSeries,
    pub live: LiveActivity,
    pub single_year: SingleYearSeries,
    pub processes: ProcessCounts,
    pub edge_additions: BTreeMap<Year, CountHistogram>,
    /// Gross pair spans (τ included), by timeline start year.
    pub durations: BTreeMap<Year, GroupedDurations>,
    pub events: EventAggregator,
}

impl Aggregates {
    /// `events` must have seen exactly the events the graph admitted.
    pub fn from_graph(graph: &TemporalGraph, events: EventAggregator) -> Self {
        Self {
            tau_project: graph.tau_project(),
            year_span: graph.year_span(),
            build: *graph.build_stats(),
            node_count: graph.node_count() as u64,
            timeline_count: graph.timeline_count() as u64,
            nodes: node_series(graph),
            live: live_activity_series(graph),
            single_year: single_year_series(graph),
            processes: process_counts(graph),
            edge_additions: edge_addition_histograms(graph),
            durations: duration_cohorts(graph, false),
            events,
        }
    }

    /// Duration cohorts, optionally net of τ_project.
    pub fn duration_cohorts(&self, net_of_tau: bool) -> BTreeMap<Year, GroupedDurations> {
        if !net_of_tau || self.tau_project == 0 {
            return self.durations.clone();
        }
        self.durations
            .iter()
            .map(|(&y, g)| (y, g.shifted_down(self.tau_project)))
            .collect()
    }

    pub fn last_year(&self) -> Option<Year> {
        self.year_span.map(|s| s.1)
    }
}
