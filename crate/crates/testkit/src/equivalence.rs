//! Full comparison of the library's graph queries against [`NaiveGraph`].

use std::collections::BTreeMap;

use collabnet::fit::{duration_cohorts, edge_addition_samples};
use collabnet::graph::{active_counts, build_graph, pair_duration, GraphConfig};
use collabnet::series::{live_activity_series, node_series, single_year_series};
use collabnet::timescale::process_counts;
use collabnet::{ProjectEvent, Year};

use crate::naive::NaiveGraph;

fn check<T: PartialEq + std::fmt::Debug>(got: T, want: T, what: &str, n: &mut usize) -> Result<(), String> {
    *n += 1;
    if got == want {
        Ok(())
    } else {
        Err(format!("{what}: library {got:?}, oracle {want:?}"))
    }
}

/// Compares every series, active count, lifespan, interval run and
/// duration value; returns how many values were compared.
pub fn compare_with_naive(events: &[ProjectEvent], tau: u32) -> Result<usize, String> {
    let g = build_graph(events, GraphConfig::with_tau(tau)).map_err(|e| e.to_string())?;
    let n = NaiveGraph::new(events, tau);
    let mut count = 0;
    let c = &mut count;
    check(g.year_span(), n.span(), "year span", c)?;
    let Some((first, last)) = n.span() else {
        check(g.node_count(), 0, "node count", c)?;
        return Ok(count);
    };
    check(g.timeline_count(), n.pair_years.len(), "timeline count", c)?;
    check(g.node_count(), n.node_projects.len(), "node count", c)?;

    let ns = node_series(&g);
    let live = live_activity_series(&g);
    let single = single_year_series(&g);
    let counts = process_counts(&g);
    let f = |v: Option<f64>| v.map(|x| x as usize);
    for y in first..=last {
        check(f(ns.new.get(y)), Some(n.new_nodes(y)), &format!("new nodes {y}"), c)?;
        check(
            f(ns.cumulative_total.get(y)),
            Some(n.cumulative_nodes(y)),
            &format!("cumulative nodes {y}"),
            c,
        )?;
        let samples = edge_addition_samples(&g, y);
        check(f(ns.active.get(y)), Some(samples.len()), &format!("active nodes {y}"), c)?;
        check(samples, n.edge_addition_samples(y), &format!("edge additions {y}"), c)?;
        let ac = active_counts(&g, y);
        check(ac.active_edges, n.active_edges(y), &format!("active edges {y}"), c)?;
        check(ac.active_nodes, n.active_nodes(y), &format!("live nodes {y}"), c)?;
        check(f(live.active_edges.get(y)), Some(n.active_edges(y)), &format!("live edge series {y}"), c)?;
        check(f(live.active_nodes.get(y)), Some(n.active_nodes(y)), &format!("live node series {y}"), c)?;
        check(f(single.count.get(y)), Some(n.single_year_nodes(y)), &format!("single-year {y}"), c)?;
        check(f(counts.new_timelines.get(y)), Some(n.new_pairs(y)), &format!("new pairs {y}"), c)?;
        check(f(counts.ended_timelines.get(y)), Some(n.ended_pairs(y)), &format!("ended pairs {y}"), c)?;
    }
    for node in g.nodes() {
        check(node.first_active, n.first_active(node.id), &format!("first active {}", node.id), c)?;
        check(node.last_active, n.last_active(node.id), &format!("last active {}", node.id), c)?;
    }
    for tl in g.timelines() {
        let what = format!("pair ({}, {})", tl.u, tl.v);
        check(pair_duration(&tl), n.pair_duration(tl.u, tl.v), &what, c)?;
        let ivs: Vec<(Year, Year)> = tl.intervals.iter().map(|iv| (iv.start, iv.end)).collect();
        check(ivs, NaiveGraph::runs(&n.pair_years[&(tl.u, tl.v)]), &what, c)?;
    }
    let mut expected: BTreeMap<Year, BTreeMap<u32, u64>> = BTreeMap::new();
    for (&(a, b), years) in &n.pair_years {
        if *years.iter().next_back().expect("non-empty") < last {
            *expected
                .entry(*years.iter().next().expect("non-empty"))
                .or_default()
                .entry(n.pair_duration(a, b))
                .or_default() += 1;
        }
    }
    let got: BTreeMap<Year, BTreeMap<u32, u64>> = duration_cohorts(&g, false)
        .into_iter()
        .filter(|(_, d)| !d.complete.is_empty())
        .map(|(y, d)| (y, d.complete))
        .collect();
    check(got, expected, "complete duration cohorts", c)?;
    Ok(count)
}
