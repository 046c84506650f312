//! Seeded generator of project-event streams with planted growth, team-size,
//! career, collaboration-length and shock structure.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`). Each calendar
//! year uses its own stream: the generator is seeded with
//! `seed_from_u64(seed)` and switched to stream `year as u64` before the
//! year's draws, so a year's output depends only on the seed, the year and
//! the contributor pool carried over from earlier years.
//!
//! Per year `t` (with `x = t - start_year + 1`):
//!
//! 1. `round(scale · g(x))` events open, where `g(x) = x^alpha`, continuing
//!    as `xb^alpha · (x/xb)^alpha2` from the breakpoint year `xb` on.
//! 2. Each event draws a team size; shock size multipliers rescale it with
//!    stochastic rounding.
//! 3. Of all member slots that year, exactly
//!    `round(slots · entrant_share · x^-entrant_decay · entry_multiplier)`
//!    are filled by new contributors, at uniformly chosen slots. The rest are
//!    drawn uniformly from contributors whose career has not elapsed,
//!    falling back to a new contributor when none is eligible.
//! 4. New contributors draw a whole-year Weibull career and join the pool
//!    at the end of the year.
//! 5. With a collaboration law configured, each team also draws a
//!    whole-year duration `D` and completes a second project with the same
//!    members in year `min(t + D - 1, end_year)` (none when that is `t`).

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ContributorId, ProjectEvent, Year};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSpec {
    pub alpha: f64,
    pub scale: f64,
    /// First calendar year of the second growth regime.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoint: Option<Year>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    /// No new events open after this year.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_year: Option<Year>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TeamSizeSpec {
    Fixed { size: u32 },
    Categorical { sizes: Vec<u32>, weights: Vec<f64> },
    /// Sizes `s = k + 1`, `k ∈ [1, max_degree]`, with `P(s) ∝ k^-gamma / s`,
    /// so that a uniformly chosen member of a uniformly chosen team gains `k`
    /// collaborators with probability `∝ k^-gamma`.
    DegreePowerLaw { gamma: f64, max_degree: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeibullSpec {
    pub weibull_k: f64,
    pub weibull_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSpec {
    pub name: String,
    pub start: Year,
    pub end: Year,
    pub entry_multiplier: f64,
    #[serde(default = "one")]
    pub size_multiplier: f64,
    /// Years after `end` over which multipliers return linearly to 1.
    #[serde(default)]
    pub recovery_ramp_years: u32,
}

fn one() -> f64 {
    1.0
}

impl ShockSpec {
    /// Fraction of the way from the shocked level back to 1 in `year`.
    fn weight(&self, year: Year) -> Option<f64> {
        if self.start <= year && year <= self.end {
            return Some(0.0);
        }
        let j = year - self.end;
        if j >= 1 && (j as u32) < self.recovery_ramp_years {
            return Some(j as f64 / self.recovery_ramp_years as f64);
        }
        None
    }

    pub fn entry_factor(&self, year: Year) -> f64 {
        self.weight(year)
            .map_or(1.0, |w| self.entry_multiplier + (1.0 - self.entry_multiplier) * w)
    }

    pub fn size_factor(&self, year: Year) -> f64 {
        self.weight(year)
            .map_or(1.0, |w| self.size_multiplier + (1.0 - self.size_multiplier) * w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub start_year: Year,
    pub end_year: Year,
    /// Fraction of member slots filled by new contributors.
    pub entrant_share: f64,
    /// The entrant share decays as `x^-entrant_decay`.
    #[serde(default)]
    pub entrant_decay: f64,
    /// Maximum events per contributor per year.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participation_cap: Option<u32>,
    pub growth: GrowthSpec,
    pub team_size: TeamSizeSpec,
    pub career: WeibullSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collaboration: Option<WeibullSpec>,
    #[serde(default, rename = "shock")]
    pub shocks: Vec<ShockSpec>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid scenario: {}", .fields.join("; "))]
pub struct ValidationError {
    pub fields: Vec<String>,
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut bad = Vec::new();
        let mut check = |ok: bool, msg: &str| {
            if !ok {
                bad.push(msg.to_string());
            }
        };
        check(self.start_year <= self.end_year, "end_year must not precede start_year");
        check(
            self.entrant_share.is_finite() && self.entrant_share > 0.0 && self.entrant_share <= 1.0,
            "entrant_share must be in (0, 1]",
        );
        check(
            self.entrant_decay.is_finite() && self.entrant_decay >= 0.0,
            "entrant_decay must be finite and non-negative",
        );
        check(self.participation_cap != Some(0), "participation_cap must be positive");
        check(self.growth.alpha.is_finite(), "growth.alpha must be finite");
        check(positive(self.growth.scale), "growth.scale must be positive");
        match (self.growth.breakpoint, self.growth.alpha2) {
            (Some(b), Some(a2)) => {
                check(
                    self.start_year < b && b <= self.end_year,
                    "growth.breakpoint must fall after start_year and within end_year",
                );
                check(a2.is_finite(), "growth.alpha2 must be finite");
            }
            (None, None) => {}
            _ => check(false, "growth.breakpoint and growth.alpha2 must be given together"),
        }
        match &self.team_size {
            TeamSizeSpec::Fixed { size } => check(*size >= 1, "team_size.size must be at least 1"),
            TeamSizeSpec::Categorical { sizes, weights } => {
                check(!sizes.is_empty(), "team_size.sizes must not be empty");
                check(
                    sizes.len() == weights.len(),
                    "team_size.sizes and team_size.weights must have equal length",
                );
                check(sizes.iter().all(|&s| s >= 1), "team_size.sizes must be at least 1");
                check(
                    weights.iter().all(|&w| positive(w)),
                    "team_size.weights must be positive",
                );
            }
            TeamSizeSpec::DegreePowerLaw { gamma, max_degree } => {
                check(positive(*gamma), "team_size.gamma must be positive");
                check(*max_degree >= 1, "team_size.max_degree must be at least 1");
            }
        }
        check(positive(self.career.weibull_k), "career.weibull_k must be positive");
        check(positive(self.career.weibull_lambda), "career.weibull_lambda must be positive");
        if let Some(c) = &self.collaboration {
            check(positive(c.weibull_k), "collaboration.weibull_k must be positive");
            check(
                positive(c.weibull_lambda),
                "collaboration.weibull_lambda must be positive",
            );
        }
        for s in &self.shocks {
            if s.start > s.end {
                bad.push(format!("shock `{}`: start must not follow end", s.name));
            }
            if !positive(s.entry_multiplier) {
                bad.push(format!("shock `{}`: entry_multiplier must be positive", s.name));
            }
            if !positive(s.size_multiplier) {
                bad.push(format!("shock `{}`: size_multiplier must be positive", s.name));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { fields: bad })
        }
    }

    /// Planted event-count curve `g(x)` before rounding and scaling.
    pub fn growth_curve(&self, year: Year) -> f64 {
        let x = (year - self.start_year + 1) as f64;
        let g = &self.growth;
        match (g.breakpoint, g.alpha2) {
            (Some(b), Some(a2)) if year >= b => {
                let xb = (b - self.start_year + 1) as f64;
                xb.powf(g.alpha) * (x / xb).powf(a2)
            }
            _ => x.powf(g.alpha),
        }
    }

    pub fn event_count(&self, year: Year) -> u64 {
        if self.growth.last_year.is_some_and(|ly| year > ly) {
            return 0;
        }
        (self.growth.scale * self.growth_curve(year)).round() as u64
    }

    pub fn entry_multiplier(&self, year: Year) -> f64 {
        self.shocks.iter().map(|s| s.entry_factor(year)).product()
    }

    pub fn size_multiplier(&self, year: Year) -> f64 {
        self.shocks.iter().map(|s| s.size_factor(year)).product()
    }

    pub fn entrant_fraction(&self, year: Year) -> f64 {
        let x = (year - self.start_year + 1) as f64;
        (self.entrant_share * x.powf(-self.entrant_decay) * self.entry_multiplier(year)).min(1.0)
    }
}

/// The planted parameters, echoed verbatim next to the generated events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: ScenarioConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub events: u64,
    pub closing_events: u64,
    pub contributors: u64,
    /// Survivor slots filled by a new contributor for lack of eligible ones.
    pub fallback_entrants: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub events: Vec<ProjectEvent>,
    pub truth: GroundTruth,
    pub stats: GenerationStats,
}

/// `λ (-ln u)^{1/k}`, the Weibull inverse survival function.
pub fn weibull_from_uniform(k: f64, lambda: f64, u: f64) -> f64 {
    lambda * (-u.ln()).powf(1.0 / k)
}

pub fn sample_weibull_continuous<R: Rng + ?Sized>(k: f64, lambda: f64, rng: &mut R) -> f64 {
    // 1 - [0, 1) is in (0, 1], keeping the logarithm finite.
    let u = 1.0 - rng.random::<f64>();
    weibull_from_uniform(k, lambda, u)
}

/// Weibull draw rounded up to whole years, at least 1.
pub fn sample_weibull<R: Rng + ?Sized>(k: f64, lambda: f64, rng: &mut R) -> u32 {
    whole_years(sample_weibull_continuous(k, lambda, rng))
}

pub fn whole_years(t: f64) -> u32 {
    // tolerate representation error just above an integer
    let c = (t - 1e-9).ceil();
    if c >= u32::MAX as f64 {
        u32::MAX
    } else {
        (c as u32).max(1)
    }
}

/// Cumulative table sampler over `values`.
#[derive(Debug, Clone)]
struct Table {
    values: Vec<u32>,
    cdf: Vec<f64>,
}

impl Table {
    fn new(values: Vec<u32>, weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        Self { values, cdf }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u).min(self.values.len() - 1);
        self.values[i]
    }
}

#[derive(Debug, Clone)]
enum SizeSampler {
    Fixed(u32),
    Table(Table),
}

impl SizeSampler {
    fn new(spec: &TeamSizeSpec) -> Self {
        match spec {
            TeamSizeSpec::Fixed { size } => SizeSampler::Fixed(*size),
            TeamSizeSpec::Categorical { sizes, weights } => {
                SizeSampler::Table(Table::new(sizes.clone(), weights))
            }
            TeamSizeSpec::DegreePowerLaw { gamma, max_degree } => {
                let values: Vec<u32> = (2..=max_degree + 1).collect();
                let weights: Vec<f64> = values
                    .iter()
                    .map(|&s| ((s - 1) as f64).powf(-gamma) / s as f64)
                    .collect();
                SizeSampler::Table(Table::new(values, &weights))
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self {
            SizeSampler::Fixed(s) => *s,
            SizeSampler::Table(t) => t.sample(rng),
        }
    }
}

/// Streams the scenario one calendar year at a time.
#[derive(Debug)]
pub struct EventGenerator {
    config: ScenarioConfig,
    sizes: SizeSampler,
    rng: ChaCha8Rng,
    year: Year,
    next_id: u32,
    /// `(contributor, last career year)`
    pool: Vec<(u32, Year)>,
    closing: BTreeMap<Year, Vec<Vec<u32>>>,
    stats: GenerationStats,
}

const SURVIVOR_ATTEMPTS: usize = 8;

impl EventGenerator {
    pub fn new(config: ScenarioConfig) -> Result<Self, ValidationError> {
        config.validate()?;
        Ok(Self {
            sizes: SizeSampler::new(&config.team_size),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            year: config.start_year,
            next_id: 0,
            pool: Vec::new(),
            closing: BTreeMap::new(),
            stats: GenerationStats::default(),
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn stats(&self) -> GenerationStats {
        self.stats
    }

    pub fn truth(&self) -> GroundTruth {
        GroundTruth {
            scenario: self.config.clone(),
        }
    }

    fn new_contributor(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id = self.next_id.checked_add(1).expect("contributor ids exhausted");
        self.stats.contributors += 1;
        id
    }

    /// Events completed in the next year, or `None` past `end_year`.
    pub fn next_year(&mut self) -> Option<(Year, Vec<ProjectEvent>)> {
        let t = self.year;
        if t > self.config.end_year {
            return None;
        }
        self.year += 1;
        self.rng.set_stream(t as i64 as u64);
        self.rng.set_word_pos(0);
        self.pool.retain(|&(_, last)| last >= t);

        let n_events = self.config.event_count(t);
        let size_mult = self.config.size_multiplier(t);
        let mut sizes = Vec::with_capacity(n_events as usize);
        for _ in 0..n_events {
            let base = self.sizes.sample(&mut self.rng);
            let s = if size_mult == 1.0 {
                base
            } else {
                let scaled = base as f64 * size_mult;
                let floor = scaled.floor();
                let extra = self.rng.random::<f64>() < scaled - floor;
                (floor as u32 + extra as u32).max(1)
            };
            sizes.push(s);
        }
        let slots: usize = sizes.iter().map(|&s| s as usize).sum();
        let n_new = ((slots as f64 * self.config.entrant_fraction(t)).round() as usize).min(slots);
        let mut is_new = vec![false; slots];
        for i in index::sample(&mut self.rng, slots, n_new) {
            is_new[i] = true;
        }

        let cap = self.config.participation_cap;
        let mut participation: HashMap<u32, u32> = HashMap::new();
        let mut entrants = Vec::new();
        let mut events = Vec::with_capacity(sizes.len());
        let mut slot = 0usize;
        for (i, &s) in sizes.iter().enumerate() {
            let mut members: Vec<u32> = Vec::with_capacity(s as usize);
            let mut in_team: HashSet<u32> = HashSet::new();
            for _ in 0..s {
                let mut chosen = None;
                if !is_new[slot] && !self.pool.is_empty() {
                    for _ in 0..SURVIVOR_ATTEMPTS {
                        let (c, _) = self.pool[self.rng.random_range(0..self.pool.len())];
                        let used = participation.get(&c).copied().unwrap_or(0);
                        if !in_team.contains(&c) && cap.is_none_or(|cap| used < cap) {
                            chosen = Some(c);
                            break;
                        }
                    }
                    if chosen.is_none() {
                        self.stats.fallback_entrants += 1;
                    }
                } else if !is_new[slot] {
                    self.stats.fallback_entrants += 1;
                }
                let c = match chosen {
                    Some(c) => c,
                    None => {
                        let c = self.new_contributor();
                        entrants.push(c);
                        c
                    }
                };
                *participation.entry(c).or_default() += 1;
                in_team.insert(c);
                members.push(c);
                slot += 1;
            }
            if let Some(collab) = self.config.collaboration {
                if members.len() >= 2 {
                    let d = sample_weibull(collab.weibull_k, collab.weibull_lambda, &mut self.rng);
                    let close = (t as i64 + d as i64 - 1).min(self.config.end_year as i64) as Year;
                    if close > t {
                        self.closing.entry(close).or_default().push(members.clone());
                    }
                }
            }
            events.push(
                ProjectEvent::new(
                    format!("p{t}-{i}"),
                    t,
                    members.into_iter().map(ContributorId).collect(),
                )
                .expect("teams have at least one member"),
            );
        }
        self.stats.events += events.len() as u64;

        if let Some(closing) = self.closing.remove(&t) {
            for (i, members) in closing.into_iter().enumerate() {
                events.push(
                    ProjectEvent::new(
                        format!("c{t}-{i}"),
                        t,
                        members.into_iter().map(ContributorId).collect(),
                    )
                    .expect("teams have at least one member"),
                );
                self.stats.closing_events += 1;
            }
        }

        let career = self.config.career;
        for c in entrants {
            let len = sample_weibull(career.weibull_k, career.weibull_lambda, &mut self.rng);
            let last = (t as i64 + len as i64 - 1).min(Year::MAX as i64) as Year;
            if last > t {
                self.pool.push((c, last));
            }
        }
        Some((t, events))
    }
}

pub fn generate(config: ScenarioConfig) -> Result<Generated, ValidationError> {
    let mut gen = EventGenerator::new(config)?;
    let mut events = Vec::new();
    while let Some((_, mut year_events)) = gen.next_year() {
        events.append(&mut year_events);
    }
    Ok(Generated {
        events,
        truth: gen.truth(),
        stats: gen.stats(),
    })
}
