//! Temporal collaboration networks built from dated multi-member projects.
//!
//! * [`graph`]: clique expansion into interval edges and the immutable
//!   [`TemporalGraph`](graph::TemporalGraph).
//! * [`series`]: yearly node, event and per-capita series.
//! * [`timescale`]: stock-over-flow timescales of node and edge processes.
//! * [`fit`]: power-law, Weibull and growth-regime fits.
//! * [`epoch`]: disruption, recovery and excess growth over historical
//!   windows.
//! * [`aggregate`]: the per-year tables persisted after ingest.
//! * [`synth`]: seeded event generator with planted parameters.

pub mod aggregate;
pub mod epoch;
pub mod fit;
pub mod graph;
pub mod series;
pub mod synth;
pub mod timescale;

pub use graph::{
    build_graph, build_graph_sharded, ContributorId, GraphBuilder, GraphConfig, GraphError,
    ProjectEvent, TemporalGraph, Year,
};
pub use series::YearlySeries;
