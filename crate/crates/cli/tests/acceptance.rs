//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails or exceeds its time limit.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use collabnet::epoch::EpochDefinition;
use collabnet::fit::{
    duration_cohorts, edge_addition_histograms, fit_growth, grouped_profile_loglik,
    grouped_profile_score, power_law_evolution, weibull_evolution, weibull_profile_loglik,
    weibull_profile_score, EvolutionConfig, FitResult, GroupedDurations, WeibullData,
};
use collabnet::graph::{build_graph, GraphConfig};
use collabnet::series::{
    event_series, interpolate_population, node_series, per_capita, EventAggregator,
    PopulationTable,
};
use collabnet::synth::{
    generate, whole_years, EventGenerator, GrowthSpec, ScenarioConfig, ShockSpec, TeamSizeSpec,
    WeibullSpec,
};
use collabnet::timescale::{process_timescales, shock_response, DEFAULT_CENSOR_WINDOW};
use collabnet::Year;
use collabnet_cli::ingest::Format;
use collabnet_cli::table::Table;
use collabnet_testkit::equivalence::compare_with_naive;
use collabnet_testkit::random_events;
use collabnet_testkit::samplers::weibull_samples;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Peak resident memory allowed for ingesting the 10^6-event file. Ingest
/// memory grows with contributors, pair timelines and accepted project ids,
/// never with the raw size of the file.
const INGEST_MEMORY_BUDGET_MIB: u64 = 512;

type Outcome = Result<String, String>;

fn criterion(n: u32, title: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let (ok, detail) = match result {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let in_time = elapsed <= limit;
    let pass = ok && in_time;
    println!(
        "{} criterion {n} ({title}): {detail}; {:.1}s of {}s{}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { " (time limit exceeded)" }
    );
    pass
}

fn base_scenario(seed: u64, start: Year, end: Year) -> ScenarioConfig {
    ScenarioConfig {
        seed,
        start_year: start,
        end_year: end,
        entrant_share: 0.5,
        entrant_decay: 0.0,
        participation_cap: None,
        growth: GrowthSpec {
            alpha: 1.0,
            scale: 10.0,
            breakpoint: None,
            alpha2: None,
            last_year: None,
        },
        team_size: TeamSizeSpec::Fixed { size: 2 },
        career: WeibullSpec {
            weibull_k: 1.0,
            weibull_lambda: 20.0,
        },
        collaboration: None,
        shocks: Vec::new(),
    }
}

fn within(label: &str, got: f64, want: f64, tol: f64, notes: &mut Vec<String>) -> bool {
    let ok = (got - want).abs() <= tol;
    notes.push(format!("{label} {got:.3} (planted {}, ±{tol})", (want * 1e9).round() / 1e9));
    ok
}

fn finish(ok: bool, notes: Vec<String>) -> Outcome {
    if ok {
        Ok(notes.join(", "))
    } else {
        Err(notes.join(", "))
    }
}

// 1 -----------------------------------------------------------------------

/// One year of teams with sizes planted so that members gain `k`
/// collaborators with probability `∝ k^-gamma`, `k ≤ max_degree`.
fn planted_gamma(gamma: f64, max_degree: u32, events: f64, seed: u64) -> Result<(f64, usize), String> {
    let mut c = base_scenario(seed, 2000, 2000);
    c.entrant_share = 1.0;
    c.growth.alpha = 0.0;
    c.growth.scale = events;
    c.team_size = TeamSizeSpec::DegreePowerLaw { gamma, max_degree };
    let g = build_graph(&generate(c).map_err(|e| e.to_string())?.events, GraphConfig::with_tau(2))
        .map_err(|e| e.to_string())?;
    let evo = power_law_evolution(&edge_addition_histograms(&g), &EvolutionConfig::default());
    match evo.fits.get(&1998) {
        Some(FitResult::PowerLaw(f)) => Ok((f.gamma, f.n_samples)),
        _ => Err(format!("no power-law fit for the cohort: {:?}", evo.skips)),
    }
}

/// One cohort of two-member teams whose repeat collaboration lands a
/// planted Weibull duration later; the run is long enough that censoring
/// only trims the tail.
fn planted_k(k: f64, seed: u64) -> Result<(f64, u64, u64), String> {
    let mut c = base_scenario(seed, 1800, 2000);
    c.entrant_share = 1.0;
    c.growth.alpha = 0.0;
    c.growth.scale = 100_000.0;
    c.growth.last_year = Some(1800);
    c.collaboration = Some(WeibullSpec {
        weibull_k: k,
        weibull_lambda: 10.0,
    });
    let g = build_graph(&generate(c).map_err(|e| e.to_string())?.events, GraphConfig::with_tau(2))
        .map_err(|e| e.to_string())?;
    let cfg = EvolutionConfig::default();
    let evo = weibull_evolution(&duration_cohorts(&g, true), g.year_span().map(|s| s.1), &cfg);
    match evo.fits.get(&1798) {
        Some(FitResult::Weibull { fit, .. }) => Ok((fit.k, fit.n_samples as u64, fit.n_censored as u64)),
        _ => Err(format!("no Weibull fit for the cohort: {:?}", evo.skips)),
    }
}

fn distributions() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    // Truncation at max_degree trades a small upward bias for lower
    // variance from team-clustered samples.
    for (gamma, max_degree, events, seed) in [(1.6, 1000, 120_000.0, 101), (2.1, 300, 100_000.0, 102)] {
        let (g, n) = planted_gamma(gamma, max_degree, events, seed)?;
        ok &= n >= 100_000;
        ok &= within(&format!("gamma[n={n}]"), g, gamma, 0.1, &mut notes);
    }
    for (k, seed) in [(0.2, 103), (0.5, 104)] {
        let (khat, n, censored) = planted_k(k, seed)?;
        ok &= n >= 100_000;
        ok &= within(&format!("k[n={n}, censored={censored}]"), khat, k, 0.03, &mut notes);
    }
    finish(ok, notes)
}

// 2 -----------------------------------------------------------------------

fn growth_regimes() -> Outcome {
    let (start, breakpoint) = (1900, 1979);
    let mut c = base_scenario(201, start, start + 119);
    c.growth = GrowthSpec {
        alpha: 2.3,
        scale: 1.0,
        breakpoint: Some(breakpoint),
        alpha2: Some(3.1),
        last_year: None,
    };
    c.team_size = TeamSizeSpec::Fixed { size: 1 };
    c.entrant_share = 0.05;
    let mut gen = EventGenerator::new(c).map_err(|e| e.to_string())?;
    let mut agg = EventAggregator::new();
    while let Some((_, events)) = gen.next_year() {
        events.iter().for_each(|e| agg.add(e));
    }
    let counts = agg.finish(10).event_count;
    let fit = fit_growth(&counts, start).map_err(|e| e.to_string())?;
    let mut notes = vec![format!("{} events", gen.stats().events)];
    let mut ok = within("alpha1", fit.alpha1, 2.3, 0.1, &mut notes);
    ok &= within("alpha2", fit.alpha2, 3.1, 0.1, &mut notes);
    ok &= within(
        "breakpoint",
        fit.breakpoint_year as f64,
        breakpoint as f64,
        1.0,
        &mut notes,
    );
    finish(ok, notes)
}

// 3 -----------------------------------------------------------------------

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_collabnet"));
    c.env_remove("COLLABNET_CACHE_DIR").stdout(Stdio::null());
    c
}

fn run_ok(cmd: &mut Command) -> Result<(), String> {
    let o = cmd.stderr(Stdio::piped()).output().map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{:?}: {}", o.status, String::from_utf8_lossy(&o.stderr)))
    }
}

const SHOCKS: [(&str, Year, Year, f64, u32); 3] = [
    ("WWI", 1914, 1918, 0.55, 5),
    ("WWII", 1939, 1944, 0.48, 3),
    ("Postwar dip", 1960, 1964, 0.72, 7),
];

fn shock_recovery() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let mut toml = String::from(
        "seed = 301\nstart_year = 1800\nend_year = 1985\nentrant_share = 0.5\n\
         [growth]\nalpha = 1.0\nscale = 10.0\n\
         [team_size]\nkind = \"fixed\"\nsize = 2\n\
         [career]\nweibull_k = 1.0\nweibull_lambda = 20.0\n",
    );
    let mut epochs = String::from("name,start,end\n");
    for (name, start, end, m, ramp) in SHOCKS {
        toml.push_str(&format!(
            "[[shock]]\nname = \"{name}\"\nstart = {start}\nend = {end}\nentry_multiplier = {m}\nrecovery_ramp_years = {ramp}\n"
        ));
        epochs.push_str(&format!("{name},{start},{end}\n"));
    }
    fs::write(dir.join("shocks.toml"), toml).map_err(|e| e.to_string())?;
    fs::write(dir.join("epochs.csv"), epochs).map_err(|e| e.to_string())?;
    let out = dir.join("out");
    run_ok(bin()
        .args(["report", "--tau-project", "0", "--scenario"])
        .arg(dir.join("shocks.toml"))
        .arg("--epochs")
        .arg(dir.join("epochs.csv"))
        .arg("--out")
        .arg(&out))?;
    let table = Table::parse(&fs::read(out.join("epochs.csv")).map_err(|e| e.to_string())?)?;
    let col = |name: &str| table.header.iter().position(|h| h == name).expect("column");
    let (series, epoch, status, decline, recovery) = (
        col("series"),
        col("epoch"),
        col("status"),
        col("decline_pct"),
        col("recovery_years"),
    );
    let mut ok = true;
    let mut notes = Vec::new();
    for (name, _, _, m, ramp) in SHOCKS {
        let row = table
            .rows
            .iter()
            .find(|r| r[series] == "new_nodes" && r[epoch] == name)
            .ok_or_else(|| format!("no new_nodes row for {name}"))?;
        if row[status] != "ok" {
            return Err(format!("{name}: {}", row[status]));
        }
        let d: f64 = row[decline].parse().map_err(|_| "decline")?;
        ok &= within(&format!("{name} decline"), d, 100.0 * (1.0 - m), 3.0, &mut notes);
        let r: f64 = row[recovery]
            .parse()
            .map_err(|_| format!("{name}: recovery `{}`", row[recovery]))?;
        ok &= within(&format!("{name} recovery"), r, ramp as f64, 1.0, &mut notes);
    }
    finish(ok, notes)
}

// 4 -----------------------------------------------------------------------

fn timescale_scenario(seed: u64, shock: Option<f64>) -> ScenarioConfig {
    let mut c = base_scenario(seed, 1800, 1960);
    c.team_size = TeamSizeSpec::Categorical {
        sizes: vec![2, 3, 4],
        weights: vec![0.5, 0.3, 0.2],
    };
    if let Some(m) = shock {
        c.shocks.push(ShockSpec {
            name: "entry shock".into(),
            start: 1914,
            end: 1918,
            entry_multiplier: m,
            size_multiplier: 1.0,
            recovery_ramp_years: 0,
        });
    }
    c
}

fn timescales() -> Outcome {
    let steady = build_graph(
        &generate(timescale_scenario(401, None)).map_err(|e| e.to_string())?.events,
        GraphConfig::with_tau(2),
    )
    .map_err(|e| e.to_string())?;
    let ts = process_timescales(&steady, DEFAULT_CENSOR_WINDOW);
    let (first, last) = steady.year_span().ok_or("empty graph")?;
    let tail: Vec<f64> = ts
        .ratio
        .clip((first + last) / 2, last)
        .iter()
        .map(|(_, v)| v)
        .collect();
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let sd = (tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (tail.len() - 1) as f64).sqrt();
    let cv = sd / mean;
    let mut ok = cv < 0.15;
    let mut notes = vec![format!("steady tau_N/tau_E CV {cv:.4} over {} years (< 0.15)", tail.len())];

    // With tau = 0 node entry years coincide with event years, so the
    // suppressed entry falls inside the epoch rather than tau years early.
    let shocked = build_graph(
        &generate(timescale_scenario(402, Some(0.54))).map_err(|e| e.to_string())?.events,
        GraphConfig::with_tau(0),
    )
    .map_err(|e| e.to_string())?;
    let ts = process_timescales(&shocked, DEFAULT_CENSOR_WINDOW);
    let epoch = EpochDefinition::new("entry shock", 1914, 1918).map_err(|e| e.to_string())?;
    let r = shock_response(&ts, &epoch, 10).map_err(|e| e.to_string())?;
    ok &= r.tau_node_change_pct >= 50.0 && r.tau_edge_change_pct.abs() <= 15.0;
    notes.push(format!(
        "entry shock: tau_N {:+.1}% (>= +50%), tau_E {:+.1}% (within ±15%)",
        r.tau_node_change_pct, r.tau_edge_change_pct
    ));
    finish(ok, notes)
}

// 5 -----------------------------------------------------------------------

fn brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let mut compared = 0;
    for i in 0..25 {
        let n_events = rng.random_range(1..=100);
        let events = random_events(&mut rng, n_events, 40, (1990, 2010), 6);
        for tau in [0, 1, 2, 5] {
            compared += compare_with_naive(&events, tau).map_err(|e| format!("fixture {i}, tau {tau}: {e}"))?;
        }
    }
    Ok(format!("25 fixtures x tau in {{0,1,2,5}}: {compared} values equal"))
}

// 6 -----------------------------------------------------------------------

fn five_point(f: impl Fn(f64) -> f64, k: f64) -> f64 {
    let h = 1e-4 * k;
    (-f(k + 2.0 * h) + 8.0 * f(k + h) - 8.0 * f(k - h) + f(k - 2.0 * h)) / (12.0 * h)
}

fn numerical_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(601);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(50..400);
        let xs = weibull_samples(rng.random_range(0.15..3.0), rng.random_range(0.5..50.0), n, &mut rng);
        let data = WeibullData::complete(&xs).map_err(|e| e.to_string())?;
        let k = rng.random_range(0.1..4.0);
        let an = weibull_profile_score(&data, k);
        let fd = five_point(|k| weibull_profile_loglik(&data, k), k);
        worst = worst.max((fd - an).abs() / an.abs());
    }
    let mut worst_grouped = 0.0f64;
    for _ in 0..20 {
        let mut data = GroupedDurations::default();
        for t in weibull_samples(rng.random_range(0.15..1.5), rng.random_range(2.0..30.0), 300, &mut rng) {
            let d = whole_years(t);
            if d >= 60 {
                data.add(60, true);
            } else {
                data.add(d, false);
            }
        }
        let k = rng.random_range(0.1..2.0);
        let an = grouped_profile_score(&data, k).map_err(|e| e.to_string())?;
        let fd = five_point(|k| grouped_profile_loglik(&data, k).expect("valid data"), k);
        worst_grouped = worst_grouped.max((fd - an).abs() / an.abs());
    }

    let mut c = base_scenario(602, 1850, 1990);
    c.team_size = TeamSizeSpec::Categorical {
        sizes: (1..=14).collect(),
        weights: (1..=14).map(|s| 1.0 / s as f64).collect(),
    };
    let events = generate(c).map_err(|e| e.to_string())?.events;
    let es = event_series(&events);
    let mut worst_sum = 0.0f64;
    for y in es.event_count.years() {
        let total: f64 = es.size_fractions.values().filter_map(|s| s.get(y)).sum();
        worst_sum = worst_sum.max((total - 1.0).abs());
    }

    let g = build_graph(&events, GraphConfig::with_tau(2)).map_err(|e| e.to_string())?;
    let nodes = node_series(&g).cumulative_total;
    let pop = PopulationTable::new(
        [(1800, 0.98e9), (1850, 1.26e9), (1900, 1.65e9), (1950, 2.52e9), (2000, 6.1e9)].into(),
    )
    .map_err(|e| e.to_string())?;
    let pc = per_capita(&nodes, &pop).map_err(|e| e.to_string())?;
    let mut worst_pc = 0.0f64;
    for (y, v) in nodes.iter() {
        let back = pc.get(y).ok_or("missing year")? * interpolate_population(&pop, y).map_err(|e| e.to_string())?;
        worst_pc = worst_pc.max((back - v).abs() / v.abs().max(f64::MIN_POSITIVE));
    }

    let ok = worst <= 1e-6 && worst_grouped <= 1e-6 && worst_sum <= 1e-12 && worst_pc < 1e-12;
    finish(
        ok,
        vec![
            format!("continuous Weibull score max rel err {worst:.2e}"),
            format!("grouped Weibull score max rel err {worst_grouped:.2e} (<= 1e-6, 20 points each)"),
            format!("team-size fraction sums max |1 - sum| {worst_sum:.1e} over {} years (<= 1e-12)", es.event_count.len()),
            format!("per-capita round trip max rel err {worst_pc:.1e} (< 1e-12)"),
        ],
    )
}

// 7 -----------------------------------------------------------------------

/// Runs `cmd` and returns its own peak RSS in KiB.
fn run_measured(cmd: &mut Command) -> Result<u64, String> {
    let child = cmd.stderr(Stdio::null()).spawn().map_err(|e| e.to_string())?;
    let mut status = 0;
    // SAFETY: rusage is plain data; wait4 fills it for our own child.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let pid = unsafe { libc::wait4(child.id() as libc::pid_t, &mut status, 0, &mut usage) };
    if pid < 0 {
        return Err(std::io::Error::last_os_error().to_string());
    }
    if !(libc::WIFEXITED(status) && libc::WEXITSTATUS(status) == 0) {
        return Err(format!("child exited with status {status}"));
    }
    Ok(usage.ru_maxrss as u64)
}

fn csv_outputs(dir: &Path) -> Result<Vec<(PathBuf, Vec<u8>)>, String> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = entry.map_err(|e| e.to_string())?.path();
        if p.extension().is_some_and(|e| e == "csv" || e == "json") {
            let bytes = fs::read(&p).map_err(|e| e.to_string())?;
            out.push((p.file_name().unwrap().into(), bytes));
        }
    }
    out.sort();
    Ok(out)
}

fn determinism_and_scale() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let mut c = base_scenario(701, 1900, 1999);
    c.growth.scale = 200.0;
    c.entrant_share = 0.3;
    c.team_size = TeamSizeSpec::Categorical {
        sizes: vec![1, 2, 3, 4, 5, 6],
        weights: vec![0.15, 0.35, 0.25, 0.12, 0.08, 0.05],
    };
    c.career = WeibullSpec {
        weibull_k: 0.7,
        weibull_lambda: 15.0,
    };
    let events = dir.join("events.jsonl");
    let stats = collabnet_cli::scenario::write_synthetic(c, &events, Format::Jsonl).map_err(|e| e.to_string())?;
    if stats.events < 1_000_000 {
        return Err(format!("only {} events", stats.events));
    }
    let file_mib = fs::metadata(&events).map_err(|e| e.to_string())?.len() >> 20;

    let rss_kib = run_measured(bin()
        .args(["--threads", "4", "ingest", "--events"])
        .arg(&events)
        .arg("--out")
        .arg(dir.join("ingest")))?;
    let rss_mib = rss_kib >> 10;
    let mut ok = rss_mib <= INGEST_MEMORY_BUDGET_MIB;
    let mut notes = vec![format!(
        "ingest of {} events ({file_mib} MiB file) peak RSS {rss_mib} MiB (budget {INGEST_MEMORY_BUDGET_MIB} MiB)",
        stats.events
    )];

    let a = dir.join("a");
    run_ok(bin()
        .args(["--threads", "1", "report", "--events"])
        .arg(&events)
        .arg("--out")
        .arg(&a))?;
    for threads in ["2", "8"] {
        let b = dir.join(format!("threads{threads}"));
        run_ok(bin()
            .args(["--threads", threads, "report", "--manifest"])
            .arg(a.join("manifest.json"))
            .arg("--out")
            .arg(&b))?;
        let (x, y) = (csv_outputs(&a)?, csv_outputs(&b)?);
        let same = x == y;
        ok &= same && x.len() > 10;
        notes.push(format!(
            "threads 1 vs {threads} from manifest: {} of {} files identical",
            x.iter().zip(&y).filter(|(p, q)| p == q).count(),
            x.len()
        ));
    }
    finish(ok, notes)
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "distribution round trip", s(120), distributions),
        criterion(2, "growth regimes", s(30), growth_regimes),
        criterion(3, "shock declines and recoveries", s(60), shock_recovery),
        criterion(4, "timescale behaviour", s(60), timescales),
        criterion(5, "brute-force equivalence", s(30), brute_force),
        criterion(6, "numerical checks", s(60), numerical_checks),
        criterion(7, "determinism and scale", s(300), determinism_and_scale),
    ];
    let failed = results.iter().filter(|r| !**r).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
