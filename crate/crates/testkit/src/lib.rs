//! Independent reference implementations used by collabnet's tests.
//!
//! Nothing here shares code with the library's algorithms: the naive oracle
//! stores every pair's activity as an explicit set of years and answers each
//! query by rescanning, and the samplers draw from textbook constructions.

pub mod equivalence;
pub mod naive;
pub mod samplers;

use collabnet::{ContributorId, ProjectEvent, Year};
use rand::Rng;

/// Random events with `n_events` projects over `years`, members drawn from
/// `0..n_contributors`, sizes in `1..=max_size` (duplicates allowed so the
/// dedup path is exercised).
pub fn random_events<R: Rng + ?Sized>(
    rng: &mut R,
    n_events: usize,
    n_contributors: u32,
    years: (Year, Year),
    max_size: usize,
) -> Vec<ProjectEvent> {
    (0..n_events)
        .map(|i| {
            let size = rng.random_range(1..=max_size);
            let members = (0..size)
                .map(|_| ContributorId(rng.random_range(0..n_contributors)))
                .collect();
            let year = rng.random_range(years.0..=years.1);
            ProjectEvent::new(format!("e{i}"), year, members).expect("non-empty")
        })
        .collect()
}
