//! Verification batteries shared by `forage verify` and the acceptance test.
//!
//! Each numbered criterion is a list of [`Check`]s. Suites group the same
//! checks by the machinery they exercise (formulas, the grid oracle, Monte
//! Carlo, the cycle search, long-run exploitation).

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::closedform::{
    balanced_index, claim2_applies, claim2_explore_high_first, cutoff_pbar, cycle_inequality_groups, delta_pi,
    delta_pi_argmax, find_no_index_cycle, hat_p_l, indifference_time_tbar, payoff_disentangled, payoff_entangled,
    verify_cycle, CycleSearchBox, Preference,
};
use crate::error::{Error, Result};
use crate::model::{drift_posterior, NewsRegime, ProjectId, ProjectSpec, Scenario, TimeSpan};
use crate::oracle::{
    safe_threshold, value_iteration_safe, Line, Oracle, ValueGrid,
};
use crate::policy::{
    bad_news_policy, classical_policy, favorable_exploit, good_news_policy, optimal_policy, safe_project_policy,
    Schedule, TwoRiskyPolicy,
};
use crate::simulate::{
    asymptotic_exploitation_rate, default_horizon, exploration_switches, mean_and_se, monte_carlo, no_news_timeline,
    path_rng, run_path, with_thread_cap, WorldDraw,
};

pub const DEFAULT_SEED: u64 = 20_240_611;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub title: String,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

fn timed(title: &str, f: impl FnOnce() -> Result<Vec<Check>>) -> Result<Report> {
    let start = Instant::now();
    let checks = f()?;
    Ok(Report { title: title.to_owned(), checks, elapsed: start.elapsed() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Formulas,
    Oracle,
    MonteCarlo,
    Cycle,
    Asymptotic,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Formulas, Suite::Oracle, Suite::MonteCarlo, Suite::Cycle, Suite::Asymptotic];

    pub fn label(self) -> &'static str {
        match self {
            Suite::Formulas => "formulas",
            Suite::Oracle => "oracle",
            Suite::MonteCarlo => "montecarlo",
            Suite::Cycle => "cycle",
            Suite::Asymptotic => "asymptotic",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite `{s}` (formulas, oracle, montecarlo, cycle, asymptotic)")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Report> {
    timed(suite.label(), || {
        let mut out = Vec::new();
        match suite {
            Suite::Formulas => {
                out.extend(delta_surface_checks()?);
                out.extend(property_checks(seed)?);
            }
            Suite::Oracle => {
                out.extend(cutoff_checks()?);
                out.extend(payoff_oracle_checks()?);
                out.extend(balanced_index_checks(seed)?);
                out.extend(claim2_oracle_checks(seed)?);
                out.extend(bad_news_boundary_checks(seed)?);
            }
            Suite::MonteCarlo => {
                out.extend(payoff_monte_carlo_checks(seed)?);
                out.extend(good_news_structure_checks(seed)?);
                out.extend(bad_news_structure_checks(seed)?);
                out.extend(martingale_checks(seed)?);
            }
            Suite::Cycle => out.extend(cycle_checks()?),
            Suite::Asymptotic => out.extend(asymptotic_checks(seed)?),
        }
        Ok(out)
    })
}

/// Title and runtime budget of each numbered criterion.
pub const CRITERIA: [(&str, Duration); 9] = [
    ("cutoff agreement", Duration::from_secs(30)),
    ("payoff formulas", Duration::from_secs(120)),
    ("value of disentanglement surface", Duration::from_secs(10)),
    ("balanced index vs oracle", Duration::from_secs(1200)),
    ("no-index cycle", Duration::from_secs(1)),
    ("good-news structure", Duration::from_secs(1200)),
    ("bad-news structure", Duration::from_secs(1200)),
    ("asymptotic exploitation", Duration::from_secs(300)),
    ("property suites", Duration::from_secs(120)),
];

/// Criterion `k` (1-based), without the runtime budget.
pub fn criterion(k: usize, seed: u64) -> Result<Report> {
    let title = CRITERIA.get(k.wrapping_sub(1)).map(|c| c.0).ok_or_else(|| Error::Parse(format!("no criterion {k}")))?;
    timed(title, || {
        Ok(match k {
            1 => cutoff_checks()?,
            2 => [payoff_oracle_checks()?, payoff_monte_carlo_checks(seed)?].concat(),
            3 => delta_surface_checks()?,
            4 => balanced_index_checks(seed)?,
            5 => cycle_checks()?,
            6 => [good_news_structure_checks(seed)?, claim2_oracle_checks(seed)?].concat(),
            7 => [bad_news_structure_checks(seed)?, bad_news_boundary_checks(seed)?].concat(),
            8 => asymptotic_checks(seed)?,
            _ => [martingale_checks(seed)?, property_checks(seed)?].concat(),
        })
    })
}

// ---------------------------------------------------------------------------
// Scenario draws
// ---------------------------------------------------------------------------

const FIG_R: f64 = 1.0;
const FIG_LAMBDA: f64 = 5.0;
const FIG_RL: f64 = 10.0;
const FIG_RH: f64 = 15.0;

fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    path_rng(seed, tag)
}

fn safe_scenario(p: f64, regime: NewsRegime, alpha: f64) -> Result<Scenario> {
    let (g, b) = match regime {
        NewsRegime::GoodNews => (FIG_LAMBDA, 0.0),
        _ => (0.0, FIG_LAMBDA),
    };
    Scenario::new(ProjectSpec::safe(FIG_RL)?, ProjectSpec::new(p, FIG_RH, g, b)?, FIG_R, alpha)
}

fn rewards(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let (a, b): (f64, f64) = (rng.random_range(1.0..20.0), rng.random_range(1.0..20.0));
        if (a - b).abs() > 1e-3 {
            return (a.min(b), a.max(b));
        }
    }
}

/// Rates for one project; `pure` zeroes the slower rate.
fn rates(rng: &mut ChaCha8Rng, regime: NewsRegime, range: (f64, f64), max_ratio: f64, pure: bool) -> (f64, f64) {
    let fast = rng.random_range(range.0..range.1);
    let slow = if pure { 0.0 } else { fast * rng.random_range(0.0..max_ratio) };
    match regime {
        NewsRegime::GoodNews => (fast, slow),
        NewsRegime::BadNews => (slow, fast),
        NewsRegime::Balanced => (fast, fast),
    }
}

fn random_two_risky(rng: &mut ChaCha8Rng, regime: NewsRegime, rate_range: (f64, f64), max_ratio: f64) -> Result<Scenario> {
    let (rl, rh) = rewards(rng);
    let pure_share = 1.0 / 3.0;
    let pl = rng.random_range(0.05..0.95);
    let ph = rng.random_range(0.05..0.95);
    let pure_l = rng.random::<f64>() < pure_share;
    let pure_h = rng.random::<f64>() < pure_share;
    let (lg, lb) = rates(rng, regime, rate_range, max_ratio, pure_l);
    let (hg, hb) = rates(rng, regime, rate_range, max_ratio, pure_h);
    Scenario::new(ProjectSpec::new(pl, rl, lg, lb)?, ProjectSpec::new(ph, rh, hg, hb)?, 1.0, 0.0)
}

// ---------------------------------------------------------------------------
// 1. Cutoffs
// ---------------------------------------------------------------------------

fn cutoff_checks() -> Result<Vec<Check>> {
    let n = 400;
    [0.0, 0.25, 0.5, 1.0]
        .par_iter()
        .map(|&alpha| {
            let s = safe_scenario(0.5, NewsRegime::GoodNews, alpha)?;
            let grid = value_iteration_safe(&s, 2e-4, n)?;
            let got = safe_threshold(&grid)?;
            let want = cutoff_pbar(alpha, FIG_R, FIG_LAMBDA, FIG_RL, FIG_RH);
            let cells = (got - want).abs() * n as f64;
            Ok(Check::new(
                format!("oracle cutoff alpha={alpha}"),
                cells <= 2.0,
                format!("oracle {got:.6}, formula {want:.6}, gap {cells:.2} cells"),
            ))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// 2. Payoff formulas
// ---------------------------------------------------------------------------

const PAYOFF_POINTS: [f64; 10] = [0.05, 0.15, 0.25, 0.35, 0.45, 0.55, 0.65, 0.75, 0.85, 0.95];
const PAYOFF_GRID: usize = 2000;
const PAYOFF_STEP: f64 = 1e-3;

fn closed_payoff(p: f64, regime: NewsRegime, alpha: f64) -> Result<f64> {
    if alpha == 0.0 {
        payoff_disentangled(p, FIG_R, FIG_LAMBDA, regime, FIG_RL, FIG_RH)
    } else {
        payoff_entangled(p, FIG_R, FIG_LAMBDA, regime, FIG_RL, FIG_RH)
    }
}

fn payoff_oracle_checks() -> Result<Vec<Check>> {
    let cases: Vec<(NewsRegime, f64, f64)> = [NewsRegime::GoodNews, NewsRegime::BadNews]
        .into_iter()
        .flat_map(|reg| [0.0, 1.0].into_iter().flat_map(move |a| [PAYOFF_STEP, PAYOFF_STEP / 2.0].map(|d| (reg, a, d))))
        .collect();
    // max gap over the payoff points for each (regime, alpha, delta)
    let gaps: Vec<f64> = cases
        .par_iter()
        .map(|&(regime, alpha, delta)| {
            let s = safe_scenario(0.5, regime, alpha)?;
            let grid = value_iteration_safe(&s, delta, PAYOFF_GRID)?;
            PAYOFF_POINTS.iter().try_fold(0.0f64, |m, &p| Ok(m.max((grid.value_at(1.0, p) - closed_payoff(p, regime, alpha)?).abs())))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    let (mut coarse, mut fine) = (0.0f64, 0.0f64);
    for (k, &(regime, alpha, delta)) in cases.iter().enumerate() {
        if delta == PAYOFF_STEP {
            coarse = coarse.max(gaps[k]);
            let name = if alpha == 0.0 { "disentangled" } else { "entangled" };
            out.push(Check::new(
                format!("{name} payoff vs oracle, {regime} news"),
                gaps[k] <= 5e-3,
                format!("max gap {:.3e} at delta={delta}", gaps[k]),
            ));
        } else {
            fine = fine.max(gaps[k]);
        }
    }
    let ratio = fine / coarse;
    out.push(Check::new(
        "first-order convergence",
        (0.35..=0.65).contains(&ratio),
        format!("max gap {coarse:.3e} -> {fine:.3e} when halving delta (ratio {ratio:.3})"),
    ));
    Ok(out)
}

fn payoff_monte_carlo_checks(seed: u64) -> Result<Vec<Check>> {
    let paths = 100_000;
    let mut out = Vec::new();
    for (ri, regime) in [NewsRegime::GoodNews, NewsRegime::BadNews].into_iter().enumerate() {
        for (pi, &p) in PAYOFF_POINTS.iter().enumerate() {
            for alpha in [0.0, 1.0] {
                let s = safe_scenario(p, regime, alpha)?;
                let pol = safe_project_policy(&s)?;
                let stream = seed.wrapping_add((ri * 100 + pi * 2 + alpha as usize) as u64);
                let rep = monte_carlo(&pol, paths, default_horizon(&s), stream)?;
                let want = closed_payoff(p, regime, alpha)?;
                let z = (rep.mean - want) / rep.std_error;
                // deterministic paths have zero spread; allow the truncated tail
                let ok = (rep.mean - want).abs() <= 3.0 * rep.std_error + rep.tail_bound;
                out.push(Check::new(
                    format!("monte carlo {regime} news p={p} alpha={alpha}"),
                    ok,
                    format!("mean {:.5} +- {:.5}, formula {want:.5}, z = {z:+.2}", rep.mean, rep.std_error),
                ));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 3. Value of disentanglement surface
// ---------------------------------------------------------------------------

const SURFACE_N: usize = 50;

/// `SURFACE_N` ratios `r/lambda`, log-spaced over `[0.02, 20]`.
pub fn surface_ratios(n: usize) -> Vec<f64> {
    (0..n).map(|k| 0.02 * 1000f64.powf(k as f64 / (n - 1) as f64)).collect()
}

/// `n` interior priors `k / (n + 1)`.
pub fn surface_priors(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64 / (n + 1) as f64).collect()
}

fn dpi(p: f64, ratio: f64, regime: NewsRegime) -> Result<f64> {
    Ok(delta_pi(p, ratio, regime, FIG_RL, FIG_RH)?.delta_pi_normalized)
}

fn delta_surface_checks() -> Result<Vec<Check>> {
    let priors = surface_priors(SURFACE_N);
    let ratios = surface_ratios(SURFACE_N);
    let step = 1.0 / (SURFACE_N + 1) as f64;
    let p0 = FIG_RL / FIG_RH;
    let mut min_dpi = f64::INFINITY;
    let mut worst_flat = 0.0f64;
    let mut bad_good_argmax = Vec::new();
    let mut bad_bad_argmax = Vec::new();
    for &ratio in &ratios {
        let p1 = cutoff_pbar(1.0, ratio, 1.0, FIG_RL, FIG_RH);
        let mut best_bad = (0.0, f64::NEG_INFINITY);
        for &p in &priors {
            for regime in [NewsRegime::GoodNews, NewsRegime::BadNews] {
                let d = dpi(p, ratio, regime)?;
                min_dpi = min_dpi.min(d);
                if regime == NewsRegime::BadNews {
                    if p >= p0 {
                        worst_flat = worst_flat.max(d.abs());
                    }
                    if d > best_bad.1 {
                        best_bad = (p, d);
                    }
                }
            }
        }
        let star = delta_pi_argmax(NewsRegime::GoodNews, ratio, FIG_RL, FIG_RH)?;
        if !(star > p1 && star < p0) {
            bad_good_argmax.push(format!("r/lambda={ratio:.4}: {star:.5} not in ({p1:.5}, {p0:.5})"));
        }
        if (best_bad.0 - p1).abs() > step {
            bad_bad_argmax.push(format!("r/lambda={ratio:.4}: {:.5} vs {p1:.5}", best_bad.0));
        }
    }
    let mut out = vec![
        Check::new("non-negative", min_dpi >= -1e-12, format!("min over grid {min_dpi:.3e}")),
        Check::new(
            "flat for bad news above myopic cutoff",
            worst_flat < 1e-12,
            format!("max |delta_pi| {worst_flat:.3e}"),
        ),
        Check::new(
            "good-news maximizer between cutoffs",
            bad_good_argmax.is_empty(),
            if bad_good_argmax.is_empty() { "all 50 ratios".into() } else { bad_good_argmax.join("; ") },
        ),
        Check::new(
            "bad-news maximizer at entangled cutoff",
            bad_bad_argmax.is_empty(),
            if bad_bad_argmax.is_empty() { "all 50 ratios within one grid step".into() } else { bad_bad_argmax.join("; ") },
        ),
    ];
    // limits: each sequence shrinks and ends small
    let limit_tol = 1e-3;
    let tends_to_zero = |vals: &[f64]| vals.windows(2).all(|w| w[1].abs() <= w[0].abs()) && vals.last().unwrap().abs() < limit_tol;
    for regime in [NewsRegime::GoodNews, NewsRegime::BadNews] {
        let ratio = 0.5;
        let low: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&p| dpi(p, ratio, regime)).collect::<Result<_>>()?;
        let high: Vec<f64> = [1.0 - 1e-2, 1.0 - 1e-4, 1.0 - 1e-6].iter().map(|&p| dpi(p, ratio, regime)).collect::<Result<_>>()?;
        let patient: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&x| dpi(0.5, x, regime)).collect::<Result<_>>()?;
        let impatient: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&x| dpi(0.5, x, regime)).collect::<Result<_>>()?;
        for (what, vals) in [("p_H -> 0", low), ("p_H -> 1", high), ("r/lambda -> 0", patient), ("r/lambda -> inf", impatient)] {
            out.push(Check::new(
                format!("vanishes as {what}, {regime} news"),
                tends_to_zero(&vals),
                format!("{:.3e}, {:.3e}, {:.3e}", vals[0], vals[1], vals[2]),
            ));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 4. Balanced index vs oracle
// ---------------------------------------------------------------------------

/// Whether moving beliefs by at most `cells` grid cells flips `decide`.
fn near_flip(s: &Scenario, n: usize, cells: i32, decide: impl Fn(&Scenario) -> Option<bool>) -> bool {
    let base = decide(s);
    let h = 1.0 / n as f64;
    for dl in -cells..=cells {
        for dh in -cells..=cells {
            let mut t = *s;
            t.low.prior_good = (s.low.prior_good + dl as f64 * h).clamp(1e-6, 1.0 - 1e-6);
            t.high.prior_good = (s.high.prior_good + dh as f64 * h).clamp(1e-6, 1.0 - 1e-6);
            if decide(&t) != base {
                return true;
            }
        }
    }
    false
}

fn index_prefers_high(s: &Scenario) -> Option<bool> {
    match balanced_index(s, &s.prior_state()).ok()?.explored_first {
        Preference::High => Some(true),
        Preference::Low => Some(false),
        Preference::Either => None,
    }
}

fn oracle_two_risky(s: &Scenario) -> Result<ValueGrid> {
    Oracle::new(*s).solve_two_risky()
}

fn balanced_index_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng_for(seed, 4);
    let mut scenarios = Vec::new();
    while scenarios.len() < 50 {
        let (rl, rh) = rewards(&mut rng);
        let pl = rng.random_range(0.05..0.95);
        let ph = rng.random_range(0.05..0.95);
        let (ll, lh) = (rng.random_range(0.2..5.0), rng.random_range(0.2..5.0));
        let s = Scenario::new(ProjectSpec::balanced(pl, rl, ll)?, ProjectSpec::balanced(ph, rh, lh)?, 1.0, 0.0)?;
        if index_prefers_high(&s).is_some() {
            scenarios.push(s);
        }
    }
    let n = crate::oracle::DEFAULT_GRID;
    let results: Vec<(bool, bool)> = scenarios
        .par_iter()
        .map(|s| {
            let grid = oracle_two_risky(s)?;
            let oracle_high = grid.initial_choice().explore == ProjectId::High;
            let agree = Some(oracle_high) == index_prefers_high(s);
            Ok((agree, agree || near_flip(s, n, 2, index_prefers_high)))
        })
        .collect::<Result<_>>()?;
    let agree = results.iter().filter(|r| r.0).count();
    let far: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.1).map(|(i, _)| i).collect();
    Ok(vec![
        Check::new("index agrees with oracle", agree >= 48, format!("{agree}/50 scenarios")),
        Check::new(
            "mismatches near the index tie",
            far.is_empty(),
            if far.is_empty() { format!("{} mismatches, all within 2 cells", 50 - agree) } else { format!("far mismatches at {far:?}") },
        ),
    ])
}

// ---------------------------------------------------------------------------
// 5. No-index cycle
// ---------------------------------------------------------------------------

pub fn reference_cycle() -> Result<[ProjectSpec; 3]> {
    Ok([ProjectSpec::balanced(0.3, 10.0, 1.0)?, ProjectSpec::balanced(0.8, 5.0, 2.0)?, ProjectSpec::balanced(0.9, 3.8, 7.0)?])
}

fn cycle_checks() -> Result<Vec<Check>> {
    let mut triple = reference_cycle()?;
    let mut source = "reference triple";
    if !(cycle_inequality_groups(&triple).iter().all(|g| *g) && verify_cycle(&triple)) {
        triple = find_no_index_cycle(&CycleSearchBox::default())?;
        source = "searched triple";
    }
    let groups = cycle_inequality_groups(&triple);
    let show = |t: &ProjectSpec| format!("({}, {}, {})", t.prior_good, t.reward, t.rate_good);
    let mut out: Vec<Check> = groups
        .iter()
        .enumerate()
        .map(|(k, g)| Check::new(format!("inequality group {}", k + 1), *g, source))
        .collect();
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        let ok = crate::closedform::pairwise_preference(&triple[a], &triple[b]) == Some(0);
        out.push(Check::new(
            format!("project {} explored before project {}", a + 1, b + 1),
            ok,
            format!("{} vs {}", show(&triple[a]), show(&triple[b])),
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// 6. Good news
// ---------------------------------------------------------------------------

fn good_news_structure_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng_for(seed, 6);
    let scenarios: Vec<Scenario> =
        (0..30).map(|_| random_two_risky(&mut rng, NewsRegime::GoodNews, (0.2, 5.0), 0.9)).collect::<Result<_>>()?;
    let mut problems = Vec::new();
    let mut switched = 0;
    for (i, s) in scenarios.iter().enumerate() {
        let pol = good_news_policy(s)?;
        let segs = no_news_timeline(&pol, 100.0 / s.discount);
        let sw = exploration_switches(&segs);
        let state = s.prior_state();
        let x = favorable_exploit(s, &state, (0.0, 0.0));
        let y = x.other();
        let tbar = indifference_time_tbar(s.project(x), state.p(x), state.p(y) * s.project(y).reward);
        let first = segs[0].allocation.explored();
        switched += sw.len();
        let ok = match sw.as_slice() {
            [] => true,
            [(t, _)] => first == x && s.project(x).rate_bad > 0.0 && TimeSpan::Finite(*t) <= shift_tol(tbar),
            _ => false,
        };
        if !ok {
            problems.push(format!("#{i}: first {first}, switches {sw:?}, tbar {tbar}"));
        }
    }
    Ok(vec![Check::new(
        "at most one switch, no later than the indifference time",
        problems.is_empty(),
        if problems.is_empty() { format!("30 scenarios, {switched} switches") } else { problems.join("; ") },
    )])
}

fn shift_tol(t: TimeSpan) -> TimeSpan {
    match t {
        TimeSpan::Finite(v) => TimeSpan::Finite(v + 1e-9),
        inf => inf,
    }
}

fn claim2_scenario(rng: &mut ChaCha8Rng) -> Result<Scenario> {
    loop {
        let (rl, rh) = rewards(rng);
        let ph_max = (rl / rh).min(0.95);
        if ph_max <= 0.06 {
            continue;
        }
        let ph = rng.random_range(0.05..ph_max);
        let pl_max = ph * rh / rl;
        if pl_max <= 0.03 {
            continue;
        }
        let pl = rng.random_range(0.02..pl_max);
        let (lg, hg) = (rng.random_range(0.2..5.0), rng.random_range(0.2..5.0));
        let s = Scenario::new(ProjectSpec::new(pl, rl, lg, 0.0)?, ProjectSpec::new(ph, rh, hg, 0.0)?, 1.0, 0.0)?;
        if claim2_applies(&s, &s.prior_state()) {
            return Ok(s);
        }
    }
}

fn claim2_verdict(s: &Scenario) -> Option<bool> {
    claim2_explore_high_first(s, &s.prior_state()).ok()
}

fn claim2_oracle_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng_for(seed, 62);
    let scenarios: Vec<Scenario> = (0..30).map(|_| claim2_scenario(&mut rng)).collect::<Result<_>>()?;
    let n = crate::oracle::DEFAULT_GRID;
    let results: Vec<(bool, bool)> = scenarios
        .par_iter()
        .map(|s| {
            let grid = oracle_two_risky(s)?;
            let oracle_high = grid.initial_choice().explore == ProjectId::High;
            let agree = claim2_verdict(s) == Some(oracle_high);
            Ok((agree, agree || near_flip(s, n, 2, claim2_verdict)))
        })
        .collect::<Result<_>>()?;
    let agree = results.iter().filter(|r| r.0).count();
    let far: Vec<usize> = results.iter().enumerate().filter(|(_, r)| !r.1).map(|(i, _)| i).collect();
    Ok(vec![Check::new(
        "initial-choice inequality vs oracle",
        far.is_empty(),
        format!("{agree}/30 agree; mismatches beyond 2 cells: {far:?}"),
    )])
}

// ---------------------------------------------------------------------------
// 7. Bad news
// ---------------------------------------------------------------------------

fn bad_news_structure_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng_for(seed, 7);
    let scenarios: Vec<Scenario> =
        (0..30).map(|_| random_two_risky(&mut rng, NewsRegime::BadNews, (0.2, 5.0), 0.9)).collect::<Result<_>>()?;
    let mut problems = Vec::new();
    let (mut from_low, mut from_high) = (0, 0);
    for (i, s) in scenarios.iter().enumerate() {
        let pol = bad_news_policy(s)?;
        let segs = no_news_timeline(&pol, 100.0 / s.discount);
        let sw = exploration_switches(&segs);
        let first = segs[0].allocation.explored();
        let ok = match first {
            ProjectId::Low => {
                from_low += 1;
                matches!(sw.as_slice(), [(t, ProjectId::High)] if t.is_finite())
            }
            ProjectId::High => {
                from_high += 1;
                sw.is_empty()
            }
        };
        if !ok {
            problems.push(format!("#{i}: first {first}, switches {sw:?}"));
        }
    }
    Ok(vec![Check::new(
        "L-first switches to H in finite time, H-first never switches",
        problems.is_empty(),
        if problems.is_empty() { format!("{from_low} start on L, {from_high} start on H") } else { problems.join("; ") },
    )])
}

/// Explore-H boundary along `p_L` at fixed `p_H`, within the region where L
/// is favorable, together with the formula threshold clipped to that region.
pub fn bad_news_boundary(grid: &ValueGrid) -> Result<(f64, f64)> {
    let s = &grid.scenario;
    let p_hat = hat_p_l(s)?;
    let p_high = s.high.prior_good;
    let region_lo = p_high * s.high.reward / s.low.reward;
    let line = Line::AlongLow { p_high };
    let nodes: Vec<(f64, bool)> = grid
        .line_actions(line)
        .into_iter()
        .filter(|(p, _)| *p > region_lo && *p < 1.0)
        .map(|(p, a)| (p, a.explore == ProjectId::Low))
        .collect();
    let expected = p_hat.clamp(region_lo, 1.0);
    // The explore-L region is the longest run of explore-L nodes; an
    // explore-H strip hugging the favorability line is not the boundary.
    let mut best: Option<(usize, usize)> = None;
    let mut i = 0;
    while i < nodes.len() {
        if !nodes[i].1 {
            i += 1;
            continue;
        }
        let start = i;
        while i < nodes.len() && nodes[i].1 {
            i += 1;
        }
        if best.is_none_or(|(a, b)| i - start > b - a) {
            best = Some((start, i));
        }
    }
    let observed = match best {
        None => region_lo,
        Some((_, end)) if end == nodes.len() => 1.0,
        Some((_, end)) => 0.5 * (nodes[end - 1].0 + nodes[end].0),
    };
    Ok((observed, expected))
}

fn boundary_scenario(rng: &mut ChaCha8Rng) -> Result<Scenario> {
    loop {
        let s = random_two_risky(rng, NewsRegime::BadNews, (0.2, 5.0), 0.9)?;
        let p_hat = hat_p_l(&s)?;
        // a line p_H with L favorable for p_L well below the threshold
        let ph = 0.5 * p_hat.max(0.2) * s.low.reward / s.high.reward;
        if ph < 0.02 {
            continue;
        }
        let mut t = s;
        t.high.prior_good = ph;
        t.low.prior_good = 0.5 * (1.0 + ph * t.high.reward / t.low.reward).min(1.5);
        return Ok(t);
    }
}

fn bad_news_boundary_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng_for(seed, 72);
    let scenarios: Vec<Scenario> = (0..30).map(|_| boundary_scenario(&mut rng)).collect::<Result<_>>()?;
    let n = crate::oracle::DEFAULT_GRID;
    let results: Vec<(f64, f64)> =
        scenarios.par_iter().map(|s| bad_news_boundary(&oracle_two_risky(s)?)).collect::<Result<_>>()?;
    let far: Vec<String> = results
        .iter()
        .enumerate()
        .filter(|(_, (o, e))| (o - e).abs() * n as f64 > 2.0)
        .map(|(i, (o, e))| format!("#{i}: oracle {o:.4} vs {e:.4}"))
        .collect();
    let worst = results.iter().map(|(o, e)| (o - e).abs() * n as f64).fold(0.0, f64::max);
    // the formula bounds the explore-L region from above
    let above: Vec<String> = results
        .iter()
        .enumerate()
        .filter(|(_, (o, e))| (o - e) * n as f64 > 2.0)
        .map(|(i, (o, e))| format!("#{i}: oracle {o:.4} above {e:.4}"))
        .collect();
    Ok(vec![
        Check::new(
            "explore-H boundary vs threshold formula",
            far.is_empty(),
            if far.is_empty() { format!("30 scenarios, worst gap {worst:.2} cells") } else { far.join("; ") },
        ),
        Check::new(
            "explore-L region ends at or below threshold formula",
            above.is_empty(),
            if above.is_empty() { "30 scenarios".to_owned() } else { above.join("; ") },
        ),
    ])
}

// ---------------------------------------------------------------------------
// 8. Long-run exploitation
// ---------------------------------------------------------------------------

/// `50 / max(r, smallest positive news rate)`.
pub fn check_time(s: &Scenario) -> f64 {
    let min_rate = [s.low.rate_good, s.low.rate_bad, s.high.rate_good, s.high.rate_bad]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    50.0 / s.discount.max(min_rate)
}

/// Classical bad-news configuration in which L is explored forever.
pub fn incomplete_learning_example() -> Result<Scenario> {
    Scenario::new(ProjectSpec::new(0.9, 10.0, 0.0, 1.0)?, ProjectSpec::new(0.3, 15.0, 0.0, 1.0)?, 1.0, 1.0)
}

fn asymptotic_checks(seed: u64) -> Result<Vec<Check>> {
    let paths = 10_000;
    let mut rng = rng_for(seed, 8);
    let mut out = Vec::new();
    for regime in [NewsRegime::Balanced, NewsRegime::GoodNews, NewsRegime::BadNews] {
        for k in 0..5 {
            let s = random_two_risky(&mut rng, regime, (0.5, 5.0), 0.5)?;
            let pol = optimal_policy(&s)?;
            let t = check_time(&s);
            let rate = asymptotic_exploitation_rate(pol.as_ref(), t, paths, seed.wrapping_add(k))?;
            out.push(Check::new(
                format!("{regime} news scenario {}", k + 1),
                rate >= 0.95,
                format!("best project exploited on {:.2}% of paths at t={t:.1}", 100.0 * rate),
            ));
        }
    }
    let s = incomplete_learning_example()?;
    let pol = classical_policy(&s)?;
    let rate = asymptotic_exploitation_rate(&pol, check_time(&s), paths, seed)?;
    out.push(Check::new(
        "classical policy learns incompletely",
        rate < 0.9,
        format!("best project exploited on {:.2}% of paths", 100.0 * rate),
    ));
    Ok(out)
}

// ---------------------------------------------------------------------------
// 9. Properties
// ---------------------------------------------------------------------------

fn martingale_checks(seed: u64) -> Result<Vec<Check>> {
    let paths = 100_000u64;
    let cases = [
        (
            "good news",
            Scenario::new(ProjectSpec::new(0.4, 10.0, 2.0, 0.5)?, ProjectSpec::new(0.6, 15.0, 1.5, 0.3)?, 1.0, 0.0)?,
        ),
        (
            "bad news",
            Scenario::new(ProjectSpec::new(0.7, 10.0, 0.2, 1.8)?, ProjectSpec::new(0.35, 15.0, 0.0, 2.5)?, 1.0, 0.0)?,
        ),
    ];
    let mut out = Vec::new();
    for (ci, (label, s)) in cases.iter().enumerate() {
        let pol = TwoRiskyPolicy::scheduled(s, Schedule::switch_at(ProjectId::High, 0.8));
        let t = 1.5;
        let stream = seed.wrapping_add(90 + ci as u64);
        let beliefs: Vec<(f64, f64)> = with_thread_cap(|| {
            (0..paths)
                .into_par_iter()
                .map(|i| {
                    let mut rng = path_rng(stream, i);
                    let world = WorldDraw::sample(s, &mut rng);
                    let tr = run_path(&pol, world, &mut rng, t + 1.0).expect("positive horizon");
                    let b = tr.belief_at(s, t);
                    (b.p_low, b.p_high)
                })
                .collect()
        });
        for (name, prior, xs) in [
            ("p_L", s.low.prior_good, beliefs.iter().map(|b| b.0).collect::<Vec<_>>()),
            ("p_H", s.high.prior_good, beliefs.iter().map(|b| b.1).collect::<Vec<_>>()),
        ] {
            let (mean, se) = mean_and_se(&xs);
            let z = (mean - prior) / se;
            out.push(Check::new(
                format!("belief martingale {name}, {label}"),
                z.abs() <= 3.0,
                format!("mean {mean:.5} +- {se:.5} vs prior {prior}, z = {z:+.2}"),
            ));
        }
    }
    Ok(out)
}

fn property_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = rng_for(seed, 9);
    let draws = 1000;

    let mut worst_drift = 0.0f64;
    for _ in 0..draws {
        let p = rng.random_range(0.01..0.99);
        let (g, b) = (rng.random_range(0.0..5.0), rng.random_range(0.0..5.0));
        let a = rng.random_range(0.0..1.0);
        let (t1, t2) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
        let two = drift_posterior(drift_posterior(p, g, b, a, t1), g, b, a, t2);
        let one = drift_posterior(p, g, b, a, t1 + t2);
        worst_drift = worst_drift.max((two - one).abs());
    }

    let mut worst_jump = 0.0f64;
    for _ in 0..draws {
        let (rl, rh) = rewards(&mut rng);
        let r = rng.random_range(0.05..5.0);
        let lam = rng.random_range(0.2..10.0);
        for regime in [NewsRegime::GoodNews, NewsRegime::BadNews] {
            let branches: [(f64, fn(f64, f64, f64, NewsRegime, f64, f64) -> Result<f64>); 2] =
                [(rl / rh, payoff_disentangled), (cutoff_pbar(1.0, r, lam, rl, rh), payoff_entangled)];
            for (c, f) in branches {
                let eps = 4.0 * f64::EPSILON * c;
                let jump = (f(c + eps, r, lam, regime, rl, rh)? - f(c - eps, r, lam, regime, rl, rh)?).abs();
                worst_jump = worst_jump.max(jump);
            }
        }
    }

    let mut violations = Vec::new();
    for _ in 0..draws {
        let (rl, rh) = rewards(&mut rng);
        let r = rng.random_range(0.05..5.0);
        let lam = rng.random_range(0.2..10.0);
        let alpha = rng.random_range(0.0..1.0);
        let c = cutoff_pbar(alpha, r, lam, rl, rh);
        let f = 1.01;
        let tol = 1e-14;
        let monotone = [
            ("alpha", cutoff_pbar((alpha + 0.01).min(1.0), r, lam, rl, rh) <= c + tol),
            ("discount", cutoff_pbar(alpha, r * f, lam, rl, rh) >= c - tol),
            ("rate", cutoff_pbar(alpha, r, lam * f, rl, rh) <= c + tol),
            ("low reward", cutoff_pbar(alpha, r, lam, (rl * f).min(rh), rh) >= c - tol),
            ("high reward", cutoff_pbar(alpha, r, lam, rl, rh * f) <= c + tol),
            ("bracket", cutoff_pbar(1.0, r, lam, rl, rh) <= c + tol && c <= rl / rh + tol),
        ];
        for (name, ok) in monotone {
            if !ok {
                violations.push(format!("{name} at alpha={alpha:.3} r={r:.3} lam={lam:.3} R=({rl:.3},{rh:.3})"));
            }
        }
    }

    Ok(vec![
        Check::new("drift composition", worst_drift <= 1e-12, format!("max error {worst_drift:.2e} over {draws} draws")),
        Check::new("payoff branch continuity", worst_jump <= 1e-12, format!("max jump {worst_jump:.2e} over {draws} draws")),
        Check::new(
            "cutoff monotonicity",
            violations.is_empty(),
            if violations.is_empty() { format!("{draws} draws") } else { violations.join("; ") },
        ),
    ])
}
