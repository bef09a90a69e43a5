//! Command-line front end. The `forage` binary is a thin wrapper around
//! [`main_with_args`].
//!
//! Exit codes: 0 success, 1 failed verification, 2 parse error, 3 any other
//! library error (regime or precondition violations among them).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::closedform::{delta_pi, myopic_cutoff, pairwise_preference, scenario_cutoff, verify_cycle};
use crate::error::{Error, Result};
use crate::model::{NewsRegime, ProjectId, Scenario};
use crate::oracle::{safe_threshold, Oracle, ValueGrid, DEFAULT_GRID};
use crate::policy::{optimal_policy, Policy};
use crate::scenario_file::{with_axis, ScenarioFile};
use crate::simulate::{
    default_horizon, exploitation_switches, exploration_switches, monte_carlo, no_news_timeline, seeded_path, Segment,
};
use crate::verify::{reference_cycle, run_suite, surface_priors, surface_ratios, Suite, DEFAULT_SEED};

/// Paths whose segments `simulate --out` writes.
const TRACE_PATHS: u64 = 10;

#[derive(Debug, Parser)]
#[command(name = "forage", version, about = "Two-armed Poisson bandits with separable attention and investment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Monte Carlo paths.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub paths: usize,

    /// Grid resolution: oracle cells per axis, or surface nodes per axis.
    #[arg(long, global = true)]
    pub grid: Option<usize>,

    /// Write CSV output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Exploitation cutoffs for a safe low project, with the oracle threshold.
    Cutoff,
    /// Value of disentanglement over (p_H, r/lambda).
    DeltaSurface,
    /// Optimal policy descriptor and its no-news timeline.
    Policy,
    /// Monte Carlo payoff of the optimal policy.
    Simulate,
    /// Run a verification suite: formulas, oracle, montecarlo, cycle, asymptotic.
    Verify { suite: String },
    /// Three balanced projects whose pairwise exploration choices cycle.
    Cycle,
    /// Dynamic-programming value grid as CSV.
    Oracle,
}

/// What a command produced: a report for stdout, CSV for `--out` (or
/// stdout), and whether its checks passed.
#[derive(Debug, Default)]
pub struct Output {
    pub report: String,
    pub csv: Option<String>,
    pub passed: bool,
}

/// Parse `args` (program name first), run, print, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code.clamp(0, 255) as u8;
        }
    };
    match run(&cli).and_then(|out| emit(&cli, &out).map(|()| out.passed)) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn emit(cli: &Cli, out: &Output) -> Result<()> {
    let io = |e: std::io::Error| Error::Precondition(format!("cannot write output: {e}"));
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(out.report.as_bytes()).map_err(io)?;
    if let Some(csv) = &out.csv {
        match &cli.out {
            Some(path) => std::fs::write(path, csv).map_err(|e| io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?,
            None => stdout.write_all(csv.as_bytes()).map_err(io)?,
        }
    }
    stdout.flush().map_err(io)
}

/// Run the parsed command without touching stdout.
pub fn run(cli: &Cli) -> Result<Output> {
    match &cli.command {
        Command::Cutoff => cmd_cutoff(&load(cli)?.scenario()?, cli.grid.unwrap_or(DEFAULT_GRID)),
        Command::DeltaSurface => cmd_delta_surface(&load(cli)?, cli.grid.unwrap_or(50)),
        Command::Policy => cmd_policy(&load(cli)?.scenario()?, cli.grid.unwrap_or(DEFAULT_GRID)),
        Command::Simulate => cmd_simulate(&load(cli)?.scenario()?, cli.paths, cli.seed, cli.out.is_some()),
        Command::Verify { suite } => cmd_verify(suite.parse()?, cli.seed),
        Command::Cycle => cmd_cycle(),
        Command::Oracle => cmd_oracle(&load(cli)?.scenario()?, cli.grid.unwrap_or(DEFAULT_GRID)),
    }
}

fn load(cli: &Cli) -> Result<ScenarioFile> {
    match &cli.scenario {
        Some(p) => ScenarioFile::load(Path::new(p)),
        None => Err(Error::Parse("this command needs --scenario <path>".into())),
    }
}

/// Float text with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn label(id: ProjectId) -> &'static str {
    id.label()
}

fn time_text(t: Option<f64>) -> String {
    t.map_or_else(|| "none".to_owned(), |t| t.to_string())
}

pub fn cmd_cutoff(s: &Scenario, grid: usize) -> Result<Output> {
    let p_m = myopic_cutoff(s)?;
    let at = |alpha: f64| -> Result<f64> {
        let mut t = *s;
        t.alpha = alpha;
        scenario_cutoff(&t)
    };
    let pbar = scenario_cutoff(s)?;
    let oracle = safe_threshold(&Oracle::new(*s).grid(grid).solve_safe()?)?;
    let gap = (oracle - pbar).abs() * grid as f64;
    let mut r = String::new();
    writeln!(r, "alpha = {}", s.alpha).unwrap();
    writeln!(r, "p_myopic = {p_m}").unwrap();
    writeln!(r, "p_bar_alpha = {pbar}").unwrap();
    writeln!(r, "p_bar_0 = {}", at(0.0)?).unwrap();
    writeln!(r, "p_bar_1 = {}", at(1.0)?).unwrap();
    writeln!(r, "oracle_threshold = {oracle}").unwrap();
    writeln!(r, "oracle_grid = {grid}").unwrap();
    writeln!(r, "gap_cells = {gap:.3}").unwrap();
    Ok(Output { report: r, csv: None, passed: true })
}

/// Priors come from a `high.prior` sweep, ratios from a `discount` sweep
/// divided by the news rate; otherwise `grid` nodes per axis.
pub fn cmd_delta_surface(file: &ScenarioFile, grid: usize) -> Result<Output> {
    let s = file.scenario()?;
    if !s.has_safe_low() {
        return Err(Error::Precondition("delta-surface needs a safe low project".into()));
    }
    let regime = s.regime();
    if regime == NewsRegime::Balanced {
        return Err(Error::Precondition("delta-surface needs pure good or bad news".into()));
    }
    let lam = s.high.max_rate();
    let priors = match file.sweep_for("high.prior") {
        Some(sw) => sw.values(),
        None => surface_priors(grid),
    };
    let ratios = match file.sweep_for("discount") {
        Some(sw) => {
            // validate each swept discount
            sw.values().into_iter().map(|r| with_axis(&s, "discount", r).map(|_| r / lam)).collect::<Result<_>>()?
        }
        None => surface_ratios(grid),
    };
    let mut csv = String::from("p_H,r_over_lambda,regime,pi_alpha0,pi_alpha1,delta_pi\n");
    for &ratio in &ratios {
        for &p in &priors {
            let d = delta_pi(p, ratio, regime, s.low.reward, s.high.reward)?;
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                fmt_f64(p),
                fmt_f64(ratio),
                regime,
                fmt_f64(d.pi_alpha0),
                fmt_f64(d.pi_alpha1),
                fmt_f64(d.delta_pi_normalized)
            )
            .unwrap();
        }
    }
    let report = format!("rows = {}\nregime = \"{regime}\"\n", priors.len() * ratios.len());
    Ok(Output { report, csv: Some(csv), passed: true })
}

pub fn cmd_policy(s: &Scenario, samples: usize) -> Result<Output> {
    if s.has_safe_low() || s.alpha != 0.0 {
        return Err(Error::Precondition("policy needs two risky projects and alpha = 0".into()));
    }
    let pol = optimal_policy(s)?;
    let probe = no_news_timeline(pol.as_ref(), 100.0 / s.discount);
    let explore = exploration_switches(&probe);
    let exploit = exploitation_switches(&probe);
    let last = explore.iter().chain(&exploit).map(|e| e.0).fold(0.0, f64::max);
    let horizon = (2.0 * last).max(10.0 / s.discount);
    let segs = no_news_timeline(pol.as_ref(), horizon);

    let mut r = pol.descriptor().to_string();
    let t_switch = explore.first().map(|e| e.0);
    writeln!(r, "T = {}", time_text(t_switch)).unwrap();
    for (k, (t, id)) in exploit.iter().enumerate() {
        writeln!(r, "t{} = {t}  # exploit {id}", k + 1).unwrap();
    }
    if exploit.is_empty() {
        writeln!(r, "t1 = none").unwrap();
    }
    Ok(Output { report: r, csv: Some(timeline_csv(s, &segs, horizon, samples)), passed: true })
}

/// Uniform samples over `[0, horizon]` merged with segment boundaries.
fn timeline_csv(s: &Scenario, segs: &[Segment], horizon: f64, samples: usize) -> String {
    let mut times: Vec<f64> = (0..=samples.max(1)).map(|k| horizon * k as f64 / samples.max(1) as f64).collect();
    times.extend(segs.iter().map(|g| g.start).filter(|t| *t < horizon));
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut csv = String::from("t,p_L,p_H,explored,exploited\n");
    for t in times {
        let i = segs.partition_point(|g| g.end <= t).min(segs.len() - 1);
        let g = &segs[i];
        let st = g.state.drift(s, g.allocation.attention(), t - g.start);
        let a = g.allocation;
        writeln!(
            csv,
            "{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(st.p_low),
            fmt_f64(st.p_high),
            label(a.explored()),
            label(a.exploited())
        )
        .unwrap();
    }
    csv
}

pub fn cmd_simulate(s: &Scenario, paths: usize, seed: u64, trace: bool) -> Result<Output> {
    if paths == 0 {
        return Err(Error::Precondition("--paths must be at least 1".into()));
    }
    let pol = optimal_policy(s)?;
    let horizon = default_horizon(s);
    let rep = monte_carlo(pol.as_ref(), paths, horizon, seed)?;
    let mut r = String::new();
    writeln!(r, "policy = \"{}\"", pol.descriptor().kind.label()).unwrap();
    writeln!(r, "paths = {}", rep.n_paths).unwrap();
    writeln!(r, "horizon = {}", rep.horizon).unwrap();
    writeln!(r, "mean = {}", rep.mean).unwrap();
    writeln!(r, "std_error = {}", rep.std_error).unwrap();
    writeln!(r, "tail_bound = {}", rep.tail_bound).unwrap();
    writeln!(r, "seed = {seed}").unwrap();
    let csv = if trace { Some(trace_csv(pol.as_ref(), horizon, seed, paths)?) } else { None };
    Ok(Output { report: r, csv, passed: true })
}

fn trace_csv(pol: &dyn Policy, horizon: f64, seed: u64, paths: usize) -> Result<String> {
    let mut csv = String::from("path,start,end,p_L,p_H,explore_L,explore_H,exploit_L,exploit_H\n");
    for i in 0..TRACE_PATHS.min(paths as u64) {
        let tr = seeded_path(pol, horizon, seed, i)?;
        for g in &tr.segments {
            let a = g.allocation;
            let row = [g.start, g.end, g.state.p_low, g.state.p_high, a.explore_low, a.explore_high, a.exploit_low, a.exploit_high];
            let cells: Vec<String> = row.iter().map(|x| fmt_f64(*x)).collect();
            writeln!(csv, "{i},{}", cells.join(",")).unwrap();
        }
    }
    Ok(csv)
}

pub fn cmd_verify(suite: Suite, seed: u64) -> Result<Output> {
    let rep = run_suite(suite, seed)?;
    let mut r = String::new();
    for c in &rep.checks {
        writeln!(r, "{c}").unwrap();
    }
    let failed = rep.failures().count();
    writeln!(r, "{}: {} checks, {failed} failed, {:.1}s", rep.title, rep.checks.len(), rep.elapsed.as_secs_f64()).unwrap();
    Ok(Output { report: r, csv: None, passed: rep.passed() })
}

pub fn cmd_cycle() -> Result<Output> {
    let triple = reference_cycle()?;
    let mut r = String::new();
    for (k, p) in triple.iter().enumerate() {
        writeln!(r, "project {} = (prior {}, reward {}, rate {})", k + 1, p.prior_good, p.reward, p.rate_good).unwrap();
    }
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        let winner = match pairwise_preference(&triple[a], &triple[b]) {
            Some(0) => format!("{}", a + 1),
            Some(_) => format!("{}", b + 1),
            None => "tie".to_owned(),
        };
        writeln!(r, "{} vs {}: explore {winner} first", a + 1, b + 1).unwrap();
    }
    let ok = verify_cycle(&triple);
    writeln!(r, "cycle = {ok}").unwrap();
    Ok(Output { report: r, csv: None, passed: ok })
}

pub fn cmd_oracle(s: &Scenario, grid: usize) -> Result<Output> {
    let o = Oracle::new(*s).grid(grid);
    let g = if s.has_safe_low() { o.solve_safe()? } else { o.solve_two_risky()? };
    let report = format!("grid = {grid}\niterations = {}\nsup_change = {}\n", g.iterations, g.sup_change);
    Ok(Output { report, csv: Some(grid_csv(&g)), passed: true })
}

/// One row per node: coordinates, value and greedy action.
pub fn grid_csv(g: &ValueGrid) -> String {
    let n = g.n();
    let mut csv = String::from("p_L,p_H,value,explore,exploit\n");
    let lows: Vec<usize> = if g.grid_spec.two_dim { (0..=n).collect() } else { vec![0] };
    for i in lows {
        let p_low = if g.grid_spec.two_dim { g.node_p(i) } else { 1.0 };
        for j in 0..=n {
            let a = g.action_node(i, j);
            writeln!(
                csv,
                "{},{},{},{},{}",
                fmt_f64(p_low),
                fmt_f64(g.node_p(j)),
                fmt_f64(g.value_node(i, j)),
                label(a.explore),
                label(a.exploit)
            )
            .unwrap();
        }
    }
    csv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProjectSpec;

    fn fig1(alpha: f64, g: f64, b: f64) -> Scenario {
        Scenario::new(ProjectSpec::safe(10.0).unwrap(), ProjectSpec::new(0.5, 15.0, g, b).unwrap(), 1.0, alpha).unwrap()
    }

    #[test]
    fn cutoff_report_alpha_one() {
        let out = cmd_cutoff(&fig1(1.0, 5.0, 0.0), 400).unwrap();
        assert!(out.report.contains("p_bar_alpha = 0.25"), "{}", out.report);
        assert!(out.report.contains("p_bar_0 = 0.6666666666666666"), "{}", out.report);
    }

    #[test]
    fn cutoff_rejects_two_risky() {
        let s = Scenario::new(
            ProjectSpec::balanced(0.5, 10.0, 1.0).unwrap(),
            ProjectSpec::balanced(0.5, 15.0, 1.0).unwrap(),
            1.0,
            0.0,
        )
        .unwrap();
        assert_eq!(cmd_cutoff(&s, 100).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn floats_carry_17_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn cycle_passes() {
        assert!(cmd_cycle().unwrap().passed);
    }
}
