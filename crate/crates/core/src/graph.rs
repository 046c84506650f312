//! Temporal clique-expanded collaboration graph.
//!
//! Every project with `n` members becomes the `n(n-1)/2` edges of a complete
//! subgraph. An edge is live over the inclusive year interval
//! `[completion_year - tau_project, completion_year]`. Repeat collaborations
//! between the same pair are merged into a sorted list of disjoint intervals
//! (overlapping or adjacent intervals collapse into one), so the graph stores
//! one [`PairTimeline`] per contributor pair.
//!
//! Construction is accumulate-then-finalize: edges are buffered, periodically
//! sorted and coalesced, and the finished [`TemporalGraph`] is immutable.
//! Accumulators merge associatively and commutatively, so events may be
//! sharded arbitrarily across threads without changing the result.

use std::collections::HashSet;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Calendar year.
pub type Year = i32;

/// Dense contributor identifier assigned at ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContributorId(pub u32);

impl ContributorId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ContributorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("project `{0}` has no members")]
    EmptyProject(String),
    #[error("duplicate project id `{0}`")]
    DuplicateProject(String),
    #[error("duplicate project id detected while merging shards")]
    DuplicateAcrossShards,
}

/// One collaboration (paper, movie, ...).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectEvent {
    pub project_id: String,
    pub year: Year,
    members: Vec<ContributorId>,
}

impl ProjectEvent {
    /// Builds an event, sorting and deduplicating `members`.
    pub fn new(
        project_id: impl Into<String>,
        year: Year,
        members: Vec<ContributorId>,
    ) -> Result<Self, GraphError> {
        Self::with_dedup_count(project_id, year, members).map(|(event, _)| event)
    }

    /// Like [`ProjectEvent::new`], also returning how many duplicate members
    /// were dropped.
    pub fn with_dedup_count(
        project_id: impl Into<String>,
        year: Year,
        mut members: Vec<ContributorId>,
    ) -> Result<(Self, usize), GraphError> {
        let project_id = project_id.into();
        if members.is_empty() {
            return Err(GraphError::EmptyProject(project_id));
        }
        let before = members.len();
        members.sort_unstable();
        members.dedup();
        let removed = before - members.len();
        Ok((
            Self {
                project_id,
                year,
                members,
            },
            removed,
        ))
    }

    /// Members in ascending id order, without duplicates.
    pub fn members(&self) -> &[ContributorId] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Inclusive year interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: Year,
    pub end: Year,
}

impl Interval {
    pub fn new(start: Year, end: Year) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    #[inline]
    pub fn contains(&self, year: Year) -> bool {
        self.start <= year && year <= self.end
    }

    /// Inclusive length in years.
    #[inline]
    pub fn len(&self) -> u32 {
        (self.end - self.start) as u32 + 1
    }
}

/// A single clique-expansion edge, `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TemporalEdge {
    pub u: ContributorId,
    pub v: ContributorId,
    pub t_create: Year,
    pub t_remove: Year,
}

/// Expands a project into the canonical edges of its complete subgraph.
///
/// A one-member project yields no edges.
pub fn clique_expand(event: &ProjectEvent, tau_project: u32) -> Vec<TemporalEdge> {
    let members = event.members();
    let t_create = event.year - tau_project as Year;
    let n = members.len();
    let mut edges = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for (i, &u) in members.iter().enumerate() {
        for &v in &members[i + 1..] {
            edges.push(TemporalEdge {
                u,
                v,
                t_create,
                t_remove: event.year,
            });
        }
    }
    edges
}

/// Borrowed view of one contributor pair's merged activity intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairTimeline<'g> {
    pub u: ContributorId,
    pub v: ContributorId,
    pub intervals: &'g [Interval],
}

impl<'g> PairTimeline<'g> {
    pub fn new(u: ContributorId, v: ContributorId, intervals: &'g [Interval]) -> Self {
        Self { u, v, intervals }
    }

    pub fn first_start(&self) -> Year {
        self.intervals[0].start
    }

    pub fn last_end(&self) -> Year {
        self.intervals[self.intervals.len() - 1].end
    }

    pub fn is_active(&self, year: Year) -> bool {
        self.intervals.iter().any(|iv| iv.contains(year))
    }
}

/// Inclusive span from the first interval start to the last interval end.
pub fn pair_duration(timeline: &PairTimeline<'_>) -> u32 {
    (timeline.last_end() - timeline.first_start()) as u32 + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeLifespan {
    pub node: ContributorId,
    pub first_active_year: Year,
    pub last_active_year: Year,
}

/// Per-node facts kept by the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: ContributorId,
    pub first_active: Year,
    pub last_active: Year,
    /// Number of multi-member projects the node took part in.
    pub projects: u32,
    pub first_project_year: Year,
    pub last_project_year: Year,
}

impl NodeRecord {
    pub fn lifespan(&self) -> NodeLifespan {
        NodeLifespan {
            node: self.id,
            first_active_year: self.first_active,
            last_active_year: self.last_active,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphConfig {
    pub tau_project: u32,
    /// Accepted completion years (inclusive); `None` accepts everything.
    pub year_range: Option<(Year, Year)>,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            tau_project: 2,
            year_range: None,
        }
    }
}

impl GraphConfig {
    pub fn with_tau(tau_project: u32) -> Self {
        Self {
            tau_project,
            year_range: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub accepted: u64,
    pub rejected_out_of_range: u64,
    pub single_member: u64,
    pub clique_edges: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct RawInterval {
    u: u32,
    v: u32,
    start: Year,
    end: Year,
}

impl RawInterval {
    #[inline]
    fn key(&self) -> (u32, u32, Year, Year) {
        (self.u, self.v, self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct NodeAcc {
    first_project: Year,
    last_project: Year,
    projects: u32,
}

impl NodeAcc {
    const EMPTY: NodeAcc = NodeAcc {
        first_project: Year::MAX,
        last_project: Year::MIN,
        projects: 0,
    };

    fn absorb(&mut self, other: &NodeAcc) {
        self.first_project = self.first_project.min(other.first_project);
        self.last_project = self.last_project.max(other.last_project);
        self.projects += other.projects;
    }
}

/// Edge buffer plus node accumulators. Merging is associative and
/// commutative up to the final sort.
#[derive(Debug, Default, Clone)]
struct Accumulator {
    edges: Vec<RawInterval>,
    compacted_len: usize,
    nodes: Vec<NodeAcc>,
    clique_edges: u64,
}

const COMPACT_MIN: usize = 1 << 20;
const PAR_SORT_MIN: usize = 1 << 16;

impl Accumulator {
    fn add(&mut self, event: &ProjectEvent, tau: u32) {
        let members = event.members();
        if members.len() < 2 {
            return;
        }
        let start = event.year - tau as Year;
        let max_id = members[members.len() - 1].index();
        if self.nodes.len() <= max_id {
            self.nodes.resize(max_id + 1, NodeAcc::EMPTY);
        }
        let acc = NodeAcc {
            first_project: event.year,
            last_project: event.year,
            projects: 1,
        };
        for m in members {
            self.nodes[m.index()].absorb(&acc);
        }
        for (i, u) in members.iter().enumerate() {
            for v in &members[i + 1..] {
                self.edges.push(RawInterval {
                    u: u.0,
                    v: v.0,
                    start,
                    end: event.year,
                });
            }
        }
        self.clique_edges += (members.len() * (members.len() - 1) / 2) as u64;
        self.maybe_compact();
    }

    fn maybe_compact(&mut self) {
        if self.edges.len() >= COMPACT_MIN.max(2 * self.compacted_len) {
            compact(&mut self.edges);
            self.compacted_len = self.edges.len();
        }
    }

    fn merge(mut self, mut other: Accumulator) -> Accumulator {
        if other.nodes.len() > self.nodes.len() {
            std::mem::swap(&mut self.nodes, &mut other.nodes);
        }
        for (mine, theirs) in self.nodes.iter_mut().zip(&other.nodes) {
            mine.absorb(theirs);
        }
        self.edges.append(&mut other.edges);
        self.compacted_len += other.compacted_len;
        self.clique_edges += other.clique_edges;
        self.maybe_compact();
        self
    }
}

/// Sorts the buffer and coalesces overlapping or adjacent intervals of the
/// same pair.
fn compact(edges: &mut Vec<RawInterval>) {
    if edges.len() >= PAR_SORT_MIN {
        edges.par_sort_unstable_by_key(RawInterval::key);
    } else {
        edges.sort_unstable_by_key(RawInterval::key);
    }
    let mut write = 0usize;
    for read in 0..edges.len() {
        let cur = edges[read];
        if write > 0 {
            let last = &mut edges[write - 1];
            if last.u == cur.u && last.v == cur.v && cur.start <= last.end.saturating_add(1) {
                last.end = last.end.max(cur.end);
                continue;
            }
        }
        edges[write] = cur;
        write += 1;
    }
    edges.truncate(write);
}

fn project_fingerprint(project_id: &str) -> u128 {
    let mut lo = DefaultHasher::new();
    0u8.hash(&mut lo);
    project_id.hash(&mut lo);
    let mut hi = DefaultHasher::new();
    1u8.hash(&mut hi);
    project_id.hash(&mut hi);
    ((hi.finish() as u128) << 64) | lo.finish() as u128
}

/// Streaming builder for [`TemporalGraph`].
///
/// Memory is bounded by the number of nodes plus merged pair intervals (the
/// raw edge buffer is coalesced whenever it doubles), plus a 128-bit
/// fingerprint per accepted project for duplicate detection.
#[derive(Debug)]
pub struct GraphBuilder {
    config: GraphConfig,
    acc: Accumulator,
    seen_projects: HashSet<u128>,
    stats: BuildStats,
}

impl GraphBuilder {
    pub fn new(config: GraphConfig) -> Self {
        Self {
            config,
            acc: Accumulator::default(),
            seen_projects: HashSet::new(),
            stats: BuildStats::default(),
        }
    }

    pub fn config(&self) -> &GraphConfig {
        &self.config
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    /// Registers the project id and applies the year filter. Returns whether
    /// the event should contribute edges.
    fn admit(&mut self, event: &ProjectEvent) -> Result<bool, GraphError> {
        if let Some((lo, hi)) = self.config.year_range {
            if event.year < lo || event.year > hi {
                self.stats.rejected_out_of_range += 1;
                return Ok(false);
            }
        }
        if !self.seen_projects.insert(project_fingerprint(&event.project_id)) {
            return Err(GraphError::DuplicateProject(event.project_id.clone()));
        }
        self.stats.accepted += 1;
        if event.size() < 2 {
            self.stats.single_member += 1;
        }
        Ok(true)
    }

    /// Adds one event. Out-of-range events are counted and skipped; a
    /// repeated project id is an error.
    pub fn add(&mut self, event: &ProjectEvent) -> Result<bool, GraphError> {
        let admitted = self.admit(event)?;
        if admitted {
            self.acc.add(event, self.config.tau_project);
        }
        Ok(admitted)
    }

    /// Adds a batch, accumulating edges on `shards` parallel partitions.
    pub fn extend_sharded(
        &mut self,
        events: &[ProjectEvent],
        shards: usize,
    ) -> Result<(), GraphError> {
        let mut admitted = Vec::with_capacity(events.len());
        for event in events {
            if self.admit(event)? {
                admitted.push(event);
            }
        }
        let shards = shards.max(1);
        let tau = self.config.tau_project;
        let chunk = admitted.len().div_ceil(shards).max(1);
        let parts: Vec<Accumulator> = admitted
            .par_chunks(chunk)
            .map(|part| {
                let mut acc = Accumulator::default();
                for event in part {
                    acc.add(event, tau);
                }
                acc
            })
            .collect();
        let acc = std::mem::take(&mut self.acc);
        self.acc = parts.into_iter().fold(acc, Accumulator::merge);
        Ok(())
    }

    /// Merges another builder that saw a disjoint set of projects.
    pub fn merge(mut self, other: GraphBuilder) -> Result<GraphBuilder, GraphError> {
        debug_assert_eq!(self.config, other.config);
        let (mut big, small) = if self.seen_projects.len() >= other.seen_projects.len() {
            (std::mem::take(&mut self.seen_projects), other.seen_projects)
        } else {
            (other.seen_projects, std::mem::take(&mut self.seen_projects))
        };
        for fp in small {
            if !big.insert(fp) {
                return Err(GraphError::DuplicateAcrossShards);
            }
        }
        self.seen_projects = big;
        self.stats.accepted += other.stats.accepted;
        self.stats.rejected_out_of_range += other.stats.rejected_out_of_range;
        self.stats.single_member += other.stats.single_member;
        self.acc = std::mem::take(&mut self.acc).merge(other.acc);
        Ok(self)
    }

    pub fn finish(self) -> TemporalGraph {
        let mut acc = self.acc;
        compact(&mut acc.edges);
        let mut stats = self.stats;
        stats.clique_edges = acc.clique_edges;

        let mut pairs = Vec::new();
        let mut offsets = vec![0u32];
        let mut intervals = Vec::with_capacity(acc.edges.len());
        for e in &acc.edges {
            let pair = (ContributorId(e.u), ContributorId(e.v));
            if pairs.last() != Some(&pair) {
                if !pairs.is_empty() {
                    offsets.push(intervals.len() as u32);
                }
                pairs.push(pair);
            }
            intervals.push(Interval::new(e.start, e.end));
        }
        if !pairs.is_empty() {
            offsets.push(intervals.len() as u32);
        }
        drop(acc.edges);

        let tau = self.config.tau_project as Year;
        let nodes: Vec<NodeRecord> = acc
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.projects > 0)
            .map(|(i, n)| NodeRecord {
                id: ContributorId(i as u32),
                first_active: n.first_project - tau,
                last_active: n.last_project,
                projects: n.projects,
                first_project_year: n.first_project,
                last_project_year: n.last_project,
            })
            .collect();

        TemporalGraph {
            tau_project: self.config.tau_project,
            pairs,
            offsets,
            intervals,
            nodes,
            stats,
        }
    }
}

/// Immutable temporal graph: merged pair timelines plus node records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemporalGraph {
    tau_project: u32,
    pairs: Vec<(ContributorId, ContributorId)>,
    offsets: Vec<u32>,
    intervals: Vec<Interval>,
    nodes: Vec<NodeRecord>,
    stats: BuildStats,
}

/// Builds a graph from events in any order.
pub fn build_graph<'a, I>(events: I, config: GraphConfig) -> Result<TemporalGraph, GraphError>
where
    I: IntoIterator<Item = &'a ProjectEvent>,
{
    let mut builder = GraphBuilder::new(config);
    for event in events {
        builder.add(event)?;
    }
    Ok(builder.finish())
}

/// Builds a graph accumulating edges on `shards` parallel partitions. The
/// result equals [`build_graph`] for any shard count.
pub fn build_graph_sharded(
    events: &[ProjectEvent],
    config: GraphConfig,
    shards: usize,
) -> Result<TemporalGraph, GraphError> {
    let mut builder = GraphBuilder::new(config);
    builder.extend_sharded(events, shards)?;
    Ok(builder.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ActiveCounts {
    pub active_nodes: usize,
    pub active_edges: usize,
}

/// Nodes and pair timelines live in `year`.
pub fn active_counts(graph: &TemporalGraph, year: Year) -> ActiveCounts {
    let mut nodes = HashSet::new();
    let mut active_edges = 0;
    for tl in graph.timelines() {
        if tl.is_active(year) {
            active_edges += 1;
            nodes.insert(tl.u);
            nodes.insert(tl.v);
        }
    }
    ActiveCounts {
        active_nodes: nodes.len(),
        active_edges,
    }
}

impl TemporalGraph {
    pub fn tau_project(&self) -> u32 {
        self.tau_project
    }

    pub fn build_stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn timeline_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn interval_count(&self) -> usize {
        self.intervals.len()
    }

    /// Nodes with at least one edge, ascending by id.
    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node(&self, id: ContributorId) -> Option<&NodeRecord> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn lifespans(&self) -> impl Iterator<Item = NodeLifespan> + '_ {
        self.nodes.iter().map(NodeRecord::lifespan)
    }

    fn timeline_at(&self, i: usize) -> PairTimeline<'_> {
        let (u, v) = self.pairs[i];
        let lo = self.offsets[i] as usize;
        let hi = self.offsets[i + 1] as usize;
        PairTimeline::new(u, v, &self.intervals[lo..hi])
    }

    /// Timelines in canonical `(u, v)` order.
    pub fn timelines(&self) -> impl ExactSizeIterator<Item = PairTimeline<'_>> + '_ {
        (0..self.pairs.len()).map(move |i| self.timeline_at(i))
    }

    pub fn timeline(&self, a: ContributorId, b: ContributorId) -> Option<PairTimeline<'_>> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.pairs
            .binary_search(&key)
            .ok()
            .map(|i| self.timeline_at(i))
    }

    /// `(interval start year, endpoint)` for both endpoints of every merged
    /// interval, sorted. A node appears once per new interval it gained in
    /// that year, so run lengths are per-node new-edge counts.
    pub fn new_edge_incidence(&self) -> Vec<(Year, ContributorId)> {
        let mut out = Vec::with_capacity(2 * self.intervals.len());
        for tl in self.timelines() {
            for iv in tl.intervals {
                out.push((iv.start, tl.u));
                out.push((iv.start, tl.v));
            }
        }
        if out.len() >= PAR_SORT_MIN {
            out.par_sort_unstable();
        } else {
            out.sort_unstable();
        }
        out
    }

    /// First interval start and last interval end over the whole graph.
    pub fn year_span(&self) -> Option<(Year, Year)> {
        if self.nodes.is_empty() {
            return None;
        }
        let first = self.nodes.iter().map(|n| n.first_active).min()?;
        let last = self.nodes.iter().map(|n| n.last_active).max()?;
        Some((first, last))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(xs: &[u32]) -> Vec<ContributorId> {
        xs.iter().copied().map(ContributorId).collect()
    }

    fn ev(id: &str, year: Year, members: &[u32]) -> ProjectEvent {
        ProjectEvent::new(id, year, ids(members)).unwrap()
    }

    #[test]
    fn clique_sizes() {
        let e = ev("p", 2000, &[1, 2, 3]);
        let edges = clique_expand(&e, 2);
        assert_eq!(edges.len(), 3);
        assert!(edges
            .iter()
            .all(|e| e.t_create == 1998 && e.t_remove == 2000 && e.u < e.v));
        assert!(clique_expand(&ev("q", 2000, &[7]), 2).is_empty());
        assert_eq!(clique_expand(&ev("r", 2000, &[1, 2, 3, 4, 5]), 2).len(), 10);
    }

    #[test]
    fn members_deduplicated() {
        let (e, removed) =
            ProjectEvent::with_dedup_count("p", 2000, ids(&[3, 1, 3, 2])).unwrap();
        assert_eq!(e.members(), ids(&[1, 2, 3]).as_slice());
        assert_eq!(removed, 1);
        assert_eq!(
            ProjectEvent::new("x", 2000, vec![]),
            Err(GraphError::EmptyProject("x".into()))
        );
    }

    #[test]
    fn overlapping_projects_merge() {
        let g = build_graph(
            &[ev("a", 2000, &[1, 2]), ev("b", 2001, &[1, 2])],
            GraphConfig::with_tau(2),
        )
        .unwrap();
        let tl = g.timeline(ContributorId(2), ContributorId(1)).unwrap();
        assert_eq!(tl.intervals, &[Interval::new(1998, 2001)]);
    }

    #[test]
    fn distant_projects_stay_disjoint() {
        let g = build_graph(
            &[ev("a", 2000, &[1, 2]), ev("b", 1990, &[1, 2])],
            GraphConfig::with_tau(2),
        )
        .unwrap();
        let tl = g.timeline(ContributorId(1), ContributorId(2)).unwrap();
        assert_eq!(
            tl.intervals,
            &[Interval::new(1988, 1990), Interval::new(1998, 2000)]
        );
        assert_eq!(pair_duration(&tl), 13);
    }

    #[test]
    fn adjacent_intervals_merge() {
        let g = build_graph(
            &[ev("a", 2000, &[1, 2]), ev("b", 2003, &[1, 2])],
            GraphConfig::with_tau(2),
        )
        .unwrap();
        let tl = g.timeline(ContributorId(1), ContributorId(2)).unwrap();
        assert_eq!(tl.intervals, &[Interval::new(1998, 2003)]);
    }

    #[test]
    fn durations() {
        let single = [Interval::new(1998, 2000)];
        let one_year = [Interval::new(2000, 2000)];
        let a = ContributorId(0);
        let b = ContributorId(1);
        assert_eq!(pair_duration(&PairTimeline::new(a, b, &single)), 3);
        assert_eq!(pair_duration(&PairTimeline::new(a, b, &one_year)), 1);
    }

    #[test]
    fn active_counts_triangle() {
        let g = build_graph(&[ev("t", 2000, &[1, 2, 3])], GraphConfig::with_tau(2)).unwrap();
        assert_eq!(
            active_counts(&g, 1999),
            ActiveCounts {
                active_nodes: 3,
                active_edges: 3
            }
        );
        assert_eq!(active_counts(&g, 2001), ActiveCounts::default());
    }

    #[test]
    fn duplicate_project_rejected() {
        let err = build_graph(
            &[ev("p1", 2000, &[1, 2]), ev("p1", 2001, &[3, 4])],
            GraphConfig::default(),
        )
        .unwrap_err();
        assert_eq!(err, GraphError::DuplicateProject("p1".into()));
    }

    #[test]
    fn out_of_range_counted() {
        let config = GraphConfig {
            tau_project: 2,
            year_range: Some((1900, 2000)),
        };
        let g = build_graph(
            &[ev("a", 2000, &[1, 2]), ev("b", 2010, &[1, 3]), ev("c", 1800, &[2, 3])],
            config,
        )
        .unwrap();
        assert_eq!(g.build_stats().accepted, 1);
        assert_eq!(g.build_stats().rejected_out_of_range, 2);
        assert_eq!(g.timeline_count(), 1);
    }

    #[test]
    fn lifespans_follow_projects() {
        let g = build_graph(
            &[ev("a", 2000, &[1, 2]), ev("b", 2005, &[2, 3]), ev("c", 2006, &[9])],
            GraphConfig::with_tau(2),
        )
        .unwrap();
        let n2 = g.node(ContributorId(2)).unwrap();
        assert_eq!((n2.first_active, n2.last_active, n2.projects), (1998, 2005, 2));
        // solo projects produce no edges, so no node
        assert!(g.node(ContributorId(9)).is_none());
        assert_eq!(g.year_span(), Some((1998, 2005)));
    }

    #[test]
    fn compaction_is_idempotent() {
        let mut edges = vec![
            RawInterval { u: 1, v: 2, start: 5, end: 7 },
            RawInterval { u: 1, v: 2, start: 1, end: 3 },
            RawInterval { u: 1, v: 2, start: 4, end: 4 },
            RawInterval { u: 0, v: 2, start: 4, end: 4 },
        ];
        compact(&mut edges);
        let once = edges.clone();
        compact(&mut edges);
        assert_eq!(once, edges);
        assert_eq!(edges.len(), 2);
        assert_eq!((edges[1].start, edges[1].end), (1, 7));
    }
}
