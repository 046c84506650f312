//! Per-year metric series: node counts, entrant fractions, single-year
//! lifetimes, team-size statistics, and population normalization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ProjectEvent, TemporalGraph, Year};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("year {year} outside population support [{first}, {last}]")]
    OutOfRange { year: Year, first: Year, last: Year },
    #[error("population table needs at least two anchors, got {0}")]
    TooFewAnchors(usize),
    #[error("population at year {0} must be positive and finite")]
    BadPopulation(Year),
    #[error("non-finite value {value} at year {year} in series `{name}`")]
    NonFinite { name: String, year: Year, value: f64 },
}

/// Named map from calendar year to value, ordered by year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearlySeries {
    pub name: String,
    values: BTreeMap<Year, f64>,
}

impl YearlySeries {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            values: BTreeMap::new(),
        }
    }

    pub fn from_pairs<I>(name: impl Into<String>, pairs: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (Year, f64)>,
    {
        let mut s = Self::new(name);
        for (year, value) in pairs {
            s.insert(year, value)?;
        }
        Ok(s)
    }

    pub fn insert(&mut self, year: Year, value: f64) -> Result<(), SeriesError> {
        if !value.is_finite() {
            return Err(SeriesError::NonFinite {
                name: self.name.clone(),
                year,
                value,
            });
        }
        self.values.insert(year, value);
        Ok(())
    }

    /// Inserts a value produced by arithmetic on finite counts.
    pub(crate) fn put(&mut self, year: Year, value: f64) {
        debug_assert!(value.is_finite(), "{}: {value} at {year}", self.name);
        self.values.insert(year, value);
    }

    pub fn get(&self, year: Year) -> Option<f64> {
        self.values.get(&year).copied()
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (Year, f64)> + '_ {
        self.values.iter().map(|(&y, &v)| (y, v))
    }

    pub fn years(&self) -> impl DoubleEndedIterator<Item = Year> + '_ {
        self.values.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first_year(&self) -> Option<Year> {
        self.values.keys().next().copied()
    }

    pub fn last_year(&self) -> Option<Year> {
        self.values.keys().next_back().copied()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Applies `f` to every value.
    pub fn map(&self, name: impl Into<String>, f: impl Fn(Year, f64) -> f64) -> Self {
        let mut out = Self::new(name);
        for (y, v) in self.iter() {
            out.put(y, f(y, v));
        }
        out
    }

    /// Keeps only years in `[lo, hi]`.
    pub fn clip(&self, lo: Year, hi: Year) -> Self {
        if lo > hi {
            return Self::new(self.name.clone());
        }
        Self {
            name: self.name.clone(),
            values: self.values.range(lo..=hi).map(|(&y, &v)| (y, v)).collect(),
        }
    }
}

/// Dense count series over `[first, last]`, zeros included.
pub(crate) fn count_series(
    name: &str,
    span: Option<(Year, Year)>,
    years: impl IntoIterator<Item = Year>,
) -> YearlySeries {
    let mut out = YearlySeries::new(name);
    let Some((first, last)) = span else {
        return out;
    };
    let mut counts = vec![0u64; (last - first + 1) as usize];
    for y in years {
        counts[(y - first) as usize] += 1;
    }
    for (i, c) in counts.into_iter().enumerate() {
        out.put(first + i as Year, c as f64);
    }
    out
}

pub(crate) fn cumulative(name: &str, rate: &YearlySeries) -> YearlySeries {
    let mut out = YearlySeries::new(name);
    let mut total = 0.0;
    for (y, v) in rate.iter() {
        total += v;
        out.put(y, total);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSeries {
    pub cumulative_total: YearlySeries,
    /// Nodes incident to at least one edge created that year.
    pub active: YearlySeries,
    pub new: YearlySeries,
}

/// Cumulative, active-with-new-edges, and newly joining node counts.
pub fn node_series(graph: &TemporalGraph) -> NodeSeries {
    let span = graph.year_span();
    let new = count_series("new_nodes", span, graph.nodes().iter().map(|n| n.first_active));
    let cumulative_total = cumulative("cumulative_nodes", &new);
    let mut incidence = graph.new_edge_incidence();
    incidence.dedup();
    let active = count_series(
        "active_new_edge_nodes",
        span,
        incidence.into_iter().map(|(y, _)| y),
    );
    NodeSeries {
        cumulative_total,
        active,
        new,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveActivity {
    pub active_nodes: YearlySeries,
    pub active_edges: YearlySeries,
}

/// Nodes and pair timelines with a live interval in each year, i.e.
/// `active_counts` evaluated over the whole span.
pub fn live_activity_series(graph: &TemporalGraph) -> LiveActivity {
    let mut active_nodes = YearlySeries::new("live_active_nodes");
    let mut active_edges = YearlySeries::new("live_active_edges");
    let Some((first, last)) = graph.year_span() else {
        return LiveActivity {
            active_nodes,
            active_edges,
        };
    };
    let width = (last - first + 2) as usize;
    let mut edge_delta = vec![0i64; width];
    let mut per_node = Vec::with_capacity(2 * graph.interval_count());
    for tl in graph.timelines() {
        for iv in tl.intervals {
            edge_delta[(iv.start - first) as usize] += 1;
            edge_delta[(iv.end - first + 1) as usize] -= 1;
            per_node.push((tl.u, iv.start, iv.end));
            per_node.push((tl.v, iv.start, iv.end));
        }
    }
    per_node.sort_unstable();
    let mut node_delta = vec![0i64; width];
    let mut i = 0;
    while i < per_node.len() {
        let node = per_node[i].0;
        let (mut lo, mut hi) = (per_node[i].1, per_node[i].2);
        i += 1;
        while i < per_node.len() && per_node[i].0 == node {
            let (s, e) = (per_node[i].1, per_node[i].2);
            if s <= hi + 1 {
                hi = hi.max(e);
            } else {
                node_delta[(lo - first) as usize] += 1;
                node_delta[(hi - first + 1) as usize] -= 1;
                lo = s;
                hi = e;
            }
            i += 1;
        }
        node_delta[(lo - first) as usize] += 1;
        node_delta[(hi - first + 1) as usize] -= 1;
    }
    let (mut e, mut n) = (0i64, 0i64);
    for k in 0..width - 1 {
        e += edge_delta[k];
        n += node_delta[k];
        let y = first + k as Year;
        active_edges.put(y, e as f64);
        active_nodes.put(y, n as f64);
    }
    LiveActivity {
        active_nodes,
        active_edges,
    }
}

/// Share of participants with new edges who joined that year. Years with no
/// such participants are omitted.
pub fn new_fraction_series(graph: &TemporalGraph) -> YearlySeries {
    new_fraction_from(&node_series(graph))
}

pub fn new_fraction_from(nodes: &NodeSeries) -> YearlySeries {
    let mut out = YearlySeries::new("new_fraction");
    for (y, active) in nodes.active.iter() {
        if active > 0.0 {
            let new = nodes.new.get(y).unwrap_or(0.0);
            out.put(y, new / active);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleYearSeries {
    /// Nodes whose first and last active year coincide, keyed by that year.
    pub count: YearlySeries,
    pub fraction: YearlySeries,
    /// Nodes with exactly one multi-member project, keyed by its completion
    /// year. Unlike `count` this does not depend on `tau_project`.
    pub single_project_count: YearlySeries,
    pub single_project_fraction: YearlySeries,
}

pub fn single_year_series(graph: &TemporalGraph) -> SingleYearSeries {
    let span = graph.year_span();
    let nodes = graph.nodes();
    let new = count_series("new", span, nodes.iter().map(|n| n.first_active));
    let count = count_series(
        "single_year_count",
        span,
        nodes
            .iter()
            .filter(|n| n.first_active == n.last_active)
            .map(|n| n.first_active),
    );
    let fraction = ratio_where_positive("single_year_fraction", &count, &new);

    let project_span = span.map(|(first, last)| (first + graph.tau_project() as Year, last));
    let new_by_project = count_series(
        "new_by_first_project",
        project_span,
        nodes.iter().map(|n| n.first_project_year),
    );
    let single_project_count = count_series(
        "single_project_count",
        project_span,
        nodes
            .iter()
            .filter(|n| n.projects == 1)
            .map(|n| n.first_project_year),
    );
    let single_project_fraction = ratio_where_positive(
        "single_project_fraction",
        &single_project_count,
        &new_by_project,
    );
    SingleYearSeries {
        count,
        fraction,
        single_project_count,
        single_project_fraction,
    }
}

fn ratio_where_positive(name: &str, num: &YearlySeries, den: &YearlySeries) -> YearlySeries {
    let mut out = YearlySeries::new(name);
    for (y, d) in den.iter() {
        if d > 0.0 {
            out.put(y, num.get(y).unwrap_or(0.0) / d);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamSizeStats {
    pub year: Year,
    pub mean: f64,
    /// Most frequent size; ties go to the smallest size.
    pub mode: u32,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSeries {
    pub event_count: YearlySeries,
    /// Fraction of events at each size; the last bin collects `size >= cap`.
    pub size_fractions: BTreeMap<u32, YearlySeries>,
    pub size_cap: u32,
    pub stats: Vec<TeamSizeStats>,
}

impl EventSeries {
    pub fn mean_size_series(&self) -> YearlySeries {
        let mut out = YearlySeries::new("mean_team_size");
        for s in &self.stats {
            out.put(s.year, s.mean);
        }
        out
    }
}

pub const DEFAULT_SIZE_CAP: u32 = 10;

/// Streaming per-year team-size histogram.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventAggregator {
    by_year: BTreeMap<Year, BTreeMap<u32, u64>>,
}

impl EventAggregator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, event: &ProjectEvent) {
        self.add_size(event.year, event.size() as u32);
    }

    pub fn add_size(&mut self, year: Year, size: u32) {
        *self.by_year.entry(year).or_default().entry(size).or_default() += 1;
    }

    pub fn merge(&mut self, other: &EventAggregator) {
        for (&y, hist) in &other.by_year {
            let mine = self.by_year.entry(y).or_default();
            for (&s, &c) in hist {
                *mine.entry(s).or_default() += c;
            }
        }
    }

    pub fn histograms(&self) -> &BTreeMap<Year, BTreeMap<u32, u64>> {
        &self.by_year
    }

    pub fn finish(&self, size_cap: u32) -> EventSeries {
        let size_cap = size_cap.max(1);
        let mut event_count = YearlySeries::new("event_count");
        let mut size_fractions: BTreeMap<u32, YearlySeries> = BTreeMap::new();
        let mut stats = Vec::new();
        for (&year, hist) in &self.by_year {
            let total: u64 = hist.values().sum();
            if total == 0 {
                continue;
            }
            event_count.put(year, total as f64);
            let mut binned: BTreeMap<u32, u64> = BTreeMap::new();
            let mut weighted = 0u128;
            let (mut mode, mut mode_count, mut max) = (0u32, 0u64, 0u32);
            for (&size, &c) in hist {
                *binned.entry(size.min(size_cap)).or_default() += c;
                weighted += size as u128 * c as u128;
                // ascending iteration, so strict > keeps the smallest on ties
                if c > mode_count {
                    mode = size;
                    mode_count = c;
                }
                max = max.max(size);
            }
            for (bin, c) in binned {
                size_fractions
                    .entry(bin)
                    .or_insert_with(|| YearlySeries::new(size_bin_name(bin, size_cap)))
                    .put(year, c as f64 / total as f64);
            }
            stats.push(TeamSizeStats {
                year,
                mean: weighted as f64 / total as f64,
                mode,
                max,
            });
        }
        EventSeries {
            event_count,
            size_fractions,
            size_cap,
            stats,
        }
    }
}

pub fn size_bin_name(bin: u32, cap: u32) -> String {
    if bin >= cap {
        format!("size_{cap}plus")
    } else {
        format!("size_{bin}")
    }
}

/// Per-year event counts and team-size statistics with the default bin cap.
pub fn event_series<'a>(events: impl IntoIterator<Item = &'a ProjectEvent>) -> EventSeries {
    let mut agg = EventAggregator::new();
    for e in events {
        agg.add(e);
    }
    agg.finish(DEFAULT_SIZE_CAP)
}

/// Population anchors, interpolated linearly between neighbours.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTable {
    anchors: BTreeMap<Year, f64>,
}

impl PopulationTable {
    pub fn new(anchors: BTreeMap<Year, f64>) -> Result<Self, SeriesError> {
        if anchors.len() < 2 {
            return Err(SeriesError::TooFewAnchors(anchors.len()));
        }
        if let Some((&y, _)) = anchors.iter().find(|(_, &p)| !(p.is_finite() && p > 0.0)) {
            return Err(SeriesError::BadPopulation(y));
        }
        Ok(Self { anchors })
    }

    pub fn anchors(&self) -> &BTreeMap<Year, f64> {
        &self.anchors
    }

    pub fn support(&self) -> (Year, Year) {
        let first = *self.anchors.keys().next().expect("≥2 anchors");
        let last = *self.anchors.keys().next_back().expect("≥2 anchors");
        (first, last)
    }
}

pub fn interpolate_population(table: &PopulationTable, year: Year) -> Result<f64, SeriesError> {
    let (first, last) = table.support();
    if year < first || year > last {
        return Err(SeriesError::OutOfRange { year, first, last });
    }
    if let Some(&p) = table.anchors.get(&year) {
        return Ok(p);
    }
    let (&y0, &p0) = table.anchors.range(..year).next_back().expect("inside support");
    let (&y1, &p1) = table.anchors.range(year..).next().expect("inside support");
    let w = (year - y0) as f64 / (y1 - y0) as f64;
    Ok(p0 + w * (p1 - p0))
}

/// Divides each value by the interpolated population of its year.
pub fn per_capita(series: &YearlySeries, table: &PopulationTable) -> Result<YearlySeries, SeriesError> {
    let mut out = YearlySeries::new(format!("{}_per_capita", series.name));
    for (y, v) in series.iter() {
        out.put(y, v / interpolate_population(table, y)?);
    }
    Ok(out)
}
