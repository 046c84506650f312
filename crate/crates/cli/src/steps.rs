//! Analysis steps. Each renders its CSV files in memory from the cached
//! aggregates, so steps are independent and can run concurrently.

use collabnet::aggregate::Aggregates;
use collabnet::epoch::{epoch_report_matrix, CellStatus, EpochDefinition};
use collabnet::fit::{
    fit_growth, power_law_evolution, weibull_evolution, FitKind, FitResult, FitSkip,
    ParameterEvolution,
};
use collabnet::series::{new_fraction_from, per_capita, EventSeries, PopulationTable};
use collabnet::timescale::{shock_response, timescales_from_counts};
use collabnet::YearlySeries;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::table::{num, opt_num, series_table, Table};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub bytes: Vec<u8>,
}

fn output(name: &str, table: Table) -> Output {
    Output {
        name: name.to_string(),
        bytes: table.to_csv(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStatus {
    pub name: String,
    /// `ok` or `failed`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub problems: Vec<String>,
}

impl StepStatus {
    pub fn ok(&self) -> bool {
        self.problems.is_empty()
    }
}

pub struct StepResult {
    pub status: StepStatus,
    pub outputs: Vec<Output>,
}

fn finish(name: &str, outputs: Vec<Output>, problems: Vec<String>) -> StepResult {
    StepResult {
        status: StepStatus {
            name: name.to_string(),
            status: if problems.is_empty() { "ok" } else { "failed" }.to_string(),
            problems,
        },
        outputs,
    }
}

pub struct Context<'a> {
    pub aggregates: &'a Aggregates,
    pub config: &'a RunConfig,
    pub population: Option<&'a PopulationTable>,
    pub epochs: &'a [EpochDefinition],
}

impl Context<'_> {
    fn events(&self) -> EventSeries {
        self.aggregates.events.finish(self.config.size_cap)
    }

    /// Series examined by the epoch step.
    pub fn epoch_series(&self) -> Vec<YearlySeries> {
        let a = self.aggregates;
        vec![
            a.nodes.new.clone(),
            a.live.active_nodes.clone(),
            a.processes.new_timelines.clone().renamed("new_edges"),
            self.events().event_count,
            self.events().mean_size_series(),
        ]
    }
}

/// Fills years where `reference` has a value and `s` does not with zero.
fn zero_filled(s: &YearlySeries, reference: &YearlySeries) -> YearlySeries {
    let mut out = s.clone();
    for y in reference.years() {
        if s.get(y).is_none() {
            out.insert(y, 0.0).expect("finite");
        }
    }
    out
}

pub fn series_step(ctx: &Context<'_>) -> StepResult {
    let a = ctx.aggregates;
    let mut outputs = Vec::new();
    let mut problems = Vec::new();

    let new_fraction = new_fraction_from(&a.nodes);
    outputs.push(output(
        "node_series.csv",
        series_table(&[
            &a.nodes.new,
            &a.nodes.cumulative_total,
            &a.nodes.active,
            &a.live.active_nodes,
            &a.live.active_edges,
        ]),
    ));
    outputs.push(output("new_fraction.csv", series_table(&[&new_fraction])));
    let sy = &a.single_year;
    outputs.push(output(
        "single_year.csv",
        series_table(&[
            &sy.count,
            &sy.fraction,
            &sy.single_project_count,
            &sy.single_project_fraction,
        ]),
    ));

    let events = ctx.events();
    let mut stats = Table::new(&["year", "mean_team_size", "mode_team_size", "max_team_size"]);
    for s in &events.stats {
        stats.push(vec![s.year.to_string(), num(s.mean), s.mode.to_string(), s.max.to_string()]);
    }
    outputs.push(output("team_size_stats.csv", stats));
    outputs.push(output("event_series.csv", series_table(&[&events.event_count])));
    let fractions: Vec<YearlySeries> = events
        .size_fractions
        .values()
        .map(|s| zero_filled(s, &events.event_count))
        .collect();
    outputs.push(output(
        "team_size_fractions.csv",
        series_table(&fractions.iter().collect::<Vec<_>>()),
    ));

    if let Some(pop) = ctx.population {
        let (lo, hi) = pop.support();
        let mut per = Vec::new();
        for s in [&a.nodes.new, &a.nodes.cumulative_total, &a.live.active_nodes, &events.event_count] {
            match per_capita(&s.clip(lo, hi), pop) {
                Ok(p) => per.push(p),
                Err(e) => problems.push(format!("per capita `{}`: {e}", s.name)),
            }
        }
        if per.iter().all(YearlySeries::is_empty) {
            problems.push(format!(
                "population table ({lo}-{hi}) does not overlap the data"
            ));
        }
        outputs.push(output("per_capita.csv", series_table(&per.iter().collect::<Vec<_>>())));
    }
    finish("series", outputs, problems)
}

pub fn timescale_step(ctx: &Context<'_>) -> StepResult {
    let ts = timescales_from_counts(&ctx.aggregates.processes, ctx.config.censor_window);
    let mut outputs = vec![output(
        "timescales.csv",
        series_table(&[
            &ts.tau_node_add,
            &ts.tau_node_rem,
            &ts.tau_edge_add,
            &ts.tau_edge_rem,
            &ts.ratio,
        ]),
    )];
    let mut shocks = Table::new(&[
        "epoch",
        "start",
        "end",
        "status",
        "tau_node_change_pct",
        "tau_edge_change_pct",
    ]);
    for e in ctx.epochs {
        let mut row = vec![e.name.clone(), e.start.to_string(), e.end.to_string()];
        match shock_response(&ts, e, ctx.config.baseline_window) {
            Ok(r) => row.extend(["ok".into(), num(r.tau_node_change_pct), num(r.tau_edge_change_pct)]),
            Err(err) => row.extend([err.to_string(), String::new(), String::new()]),
        }
        shocks.push(row);
    }
    outputs.push(output("timescale_shocks.csv", shocks));
    finish("timescales", outputs, Vec::new())
}

fn kind_name(kind: FitKind) -> &'static str {
    match kind {
        FitKind::PowerLaw => "power-law",
        FitKind::Weibull => "weibull",
    }
}

pub fn fit_step(ctx: &Context<'_>) -> StepResult {
    let a = ctx.aggregates;
    let evo = ctx.config.evolution();
    let (power, weibull) = rayon::join(
        || power_law_evolution(&a.edge_additions, &evo),
        || weibull_evolution(&a.duration_cohorts(evo.net_of_tau), a.last_year(), &evo),
    );

    let mut pl = Table::new(&[
        "year", "gamma", "xmin", "n_samples", "log_likelihood", "ks_stat", "chi2", "dof",
    ]);
    for (y, r) in &power.fits {
        if let FitResult::PowerLaw(f) = r {
            pl.push(vec![
                y.to_string(),
                num(f.gamma),
                f.xmin.to_string(),
                f.n_samples.to_string(),
                num(f.log_likelihood),
                num(f.gof.ks_stat),
                num(f.gof.chi2),
                f.gof.dof.to_string(),
            ]);
        }
    }
    let mut wb = Table::new(&[
        "year",
        "k",
        "lambda",
        "n_samples",
        "n_censored",
        "log_likelihood",
        "iterations",
        "chi2",
        "dof",
        "censoring_affected",
    ]);
    for (y, r) in &weibull.fits {
        if let FitResult::Weibull {
            fit,
            censoring_affected,
        } = r
        {
            wb.push(vec![
                y.to_string(),
                num(fit.k),
                num(fit.lambda),
                fit.n_samples.to_string(),
                fit.n_censored.to_string(),
                num(fit.log_likelihood),
                fit.iterations.to_string(),
                num(fit.gof.chi2),
                fit.gof.dof.to_string(),
                censoring_affected.to_string(),
            ]);
        }
    }

    let mut skips = Table::new(&["kind", "year", "n_samples", "reason"]);
    let mut push_skips = |evo: &ParameterEvolution| {
        let mut sorted: Vec<&FitSkip> = evo.skips.iter().collect();
        sorted.sort_by_key(|s| s.year);
        for s in sorted {
            skips.push(vec![
                kind_name(s.kind).into(),
                s.year.to_string(),
                s.n_samples.to_string(),
                s.reason.clone(),
            ]);
        }
    };
    push_skips(&power);
    push_skips(&weibull);

    let mut growth = Table::new(&[
        "series",
        "t0",
        "alpha1",
        "alpha2",
        "breakpoint_year",
        "intercept1",
        "intercept2",
        "residual",
        "n_points",
        "dropped_years",
    ]);
    let events = ctx.events();
    for s in [&events.event_count, &a.nodes.new, &a.nodes.cumulative_total] {
        let Some(t0) = s.first_year() else {
            continue;
        };
        match fit_growth(s, t0) {
            Ok(f) => growth.push(vec![
                s.name.clone(),
                t0.to_string(),
                num(f.alpha1),
                num(f.alpha2),
                f.breakpoint_year.to_string(),
                num(f.intercept1),
                num(f.intercept2),
                num(f.residual),
                f.n_points.to_string(),
                f.dropped_years
                    .iter()
                    .map(|y| y.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            ]),
            Err(e) => skips.push(vec![
                "growth".into(),
                t0.to_string(),
                s.len().to_string(),
                format!("{}: {e}", s.name),
            ]),
        }
    }

    let outputs = vec![
        output("fit_power_law.csv", pl),
        output("fit_weibull.csv", wb),
        output("fit_growth.csv", growth),
        output("fit_skips.csv", skips),
    ];
    finish("fit", outputs, Vec::new())
}

pub fn epoch_step(ctx: &Context<'_>) -> StepResult {
    let reports = epoch_report_matrix(&ctx.epoch_series(), ctx.epochs, &ctx.config.epoch());
    let mut t = Table::new(&[
        "series",
        "epoch",
        "start",
        "end",
        "status",
        "decline_pct",
        "mean_decline_pct",
        "recovery_years",
        "excess_growth_pct",
        "baseline",
        "baseline_window",
        "baseline_points",
        "baseline_slope",
        "baseline_intercept",
        "message",
    ]);
    let mut problems = Vec::new();
    for r in &reports {
        let b = r.baseline.as_ref();
        t.push(vec![
            r.series_name.clone(),
            r.epoch.name.clone(),
            r.epoch.start.to_string(),
            r.epoch.end.to_string(),
            r.status.to_string(),
            opt_num(r.decline_pct),
            opt_num(r.mean_decline_pct),
            r.recovery.map(|x| x.to_string()).unwrap_or_default(),
            opt_num(r.excess_growth_pct),
            b.map(|b| b.kind.to_string()).unwrap_or_default(),
            b.map(|b| b.window.to_string()).unwrap_or_default(),
            b.map(|b| b.n_years.to_string()).unwrap_or_default(),
            opt_num(b.map(|b| b.slope)),
            opt_num(b.map(|b| b.intercept)),
            r.message.clone(),
        ]);
    }
    if !reports.is_empty() && reports.iter().all(|r| r.status != CellStatus::Ok) {
        problems.push("no epoch/series cell could be analysed".to_string());
    }
    finish("epochs", vec![output("epochs.csv", t)], problems)
}

/// Runs the requested steps concurrently and returns them in a fixed
/// order.
pub fn run_steps(ctx: &Context<'_>, which: &[&str]) -> Vec<StepResult> {
    let want = |n: &str| which.contains(&n);
    let ((series, timescales), (fit, epochs)) = rayon::join(
        || {
            rayon::join(
                || want("series").then(|| series_step(ctx)),
                || want("timescales").then(|| timescale_step(ctx)),
            )
        },
        || {
            rayon::join(
                || want("fit").then(|| fit_step(ctx)),
                || want("epochs").then(|| epoch_step(ctx)),
            )
        },
    );
    [series, timescales, fit, epochs].into_iter().flatten().collect()
}
