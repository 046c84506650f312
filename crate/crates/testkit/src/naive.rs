//! Brute-force year-set model of the temporal graph.

use std::collections::{BTreeMap, BTreeSet};

use collabnet::{ContributorId, ProjectEvent, Year};

/// Every pair's active years and every node's project years, kept as plain
/// sets.
#[derive(Debug, Clone, Default)]
pub struct NaiveGraph {
    pub tau: u32,
    pub pair_years: BTreeMap<(ContributorId, ContributorId), BTreeSet<Year>>,
    /// Years of multi-member projects per node.
    pub node_projects: BTreeMap<ContributorId, Vec<Year>>,
}

impl NaiveGraph {
    pub fn new(events: &[ProjectEvent], tau: u32) -> Self {
        let mut g = NaiveGraph {
            tau,
            ..Default::default()
        };
        for e in events {
            let m = e.members();
            if m.len() < 2 {
                continue;
            }
            for &a in m {
                g.node_projects.entry(a).or_default().push(e.year);
                for &b in m {
                    if a < b {
                        let set = g.pair_years.entry((a, b)).or_default();
                        for y in e.year - tau as Year..=e.year {
                            set.insert(y);
                        }
                    }
                }
            }
        }
        g
    }

    /// Maximal runs of consecutive years.
    pub fn runs(set: &BTreeSet<Year>) -> Vec<(Year, Year)> {
        let mut out: Vec<(Year, Year)> = Vec::new();
        for &y in set {
            match out.last_mut() {
                Some(last) if last.1 + 1 == y => last.1 = y,
                _ => out.push((y, y)),
            }
        }
        out
    }

    pub fn first_active(&self, n: ContributorId) -> Year {
        self.node_projects[&n].iter().min().unwrap() - self.tau as Year
    }

    pub fn last_active(&self, n: ContributorId) -> Year {
        *self.node_projects[&n].iter().max().unwrap()
    }

    pub fn span(&self) -> Option<(Year, Year)> {
        let nodes: Vec<_> = self.node_projects.keys().copied().collect();
        let lo = nodes.iter().map(|&n| self.first_active(n)).min()?;
        let hi = nodes.iter().map(|&n| self.last_active(n)).max()?;
        Some((lo, hi))
    }

    pub fn active_edges(&self, year: Year) -> usize {
        self.pair_years.values().filter(|s| s.contains(&year)).count()
    }

    pub fn active_nodes(&self, year: Year) -> usize {
        let mut nodes = BTreeSet::new();
        for (&(a, b), s) in &self.pair_years {
            if s.contains(&year) {
                nodes.insert(a);
                nodes.insert(b);
            }
        }
        nodes.len()
    }

    pub fn new_nodes(&self, year: Year) -> usize {
        self.node_projects
            .keys()
            .filter(|&&n| self.first_active(n) == year)
            .count()
    }

    pub fn cumulative_nodes(&self, year: Year) -> usize {
        self.node_projects
            .keys()
            .filter(|&&n| self.first_active(n) <= year)
            .count()
    }

    /// Nodes inside their `[first_active, last_active]` span.
    pub fn live_nodes(&self, year: Year) -> usize {
        self.node_projects
            .keys()
            .filter(|&&n| self.first_active(n) <= year && year <= self.last_active(n))
            .count()
    }

    /// Nodes whose lifespan is exactly one year and begins in `year`.
    pub fn single_year_nodes(&self, year: Year) -> usize {
        self.node_projects
            .keys()
            .filter(|&&n| self.first_active(n) == year && self.last_active(n) == year)
            .count()
    }

    pub fn pair_duration(&self, a: ContributorId, b: ContributorId) -> u32 {
        let s = &self.pair_years[&(a.min(b), a.max(b))];
        (s.iter().next_back().unwrap() - s.iter().next().unwrap()) as u32 + 1
    }

    /// Per-node count of activity runs that begin in `year`, by node id.
    pub fn edge_addition_samples(&self, year: Year) -> Vec<u32> {
        let mut counts: BTreeMap<ContributorId, u32> = BTreeMap::new();
        for (&(a, b), s) in &self.pair_years {
            if s.contains(&year) && !s.contains(&(year - 1)) {
                *counts.entry(a).or_default() += 1;
                *counts.entry(b).or_default() += 1;
            }
        }
        counts.into_values().collect()
    }

    /// Pairs whose first active year is `year`.
    pub fn new_pairs(&self, year: Year) -> usize {
        self.pair_years
            .values()
            .filter(|s| s.iter().next() == Some(&year))
            .count()
    }

    pub fn ended_pairs(&self, year: Year) -> usize {
        self.pair_years
            .values()
            .filter(|s| s.iter().next_back() == Some(&year))
            .count()
    }
}
