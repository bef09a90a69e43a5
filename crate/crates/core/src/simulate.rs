//! Event-driven Monte Carlo over continuous time.
//!
//! A path draws both project qualities, then repeatedly asks the policy for a
//! plan. Within a plan the attention split is constant, so the first news time
//! on each explored project is exponential and is sampled exactly. Payoffs are
//! integrated in closed form over each constant segment.
//!
//! Path `i` uses a ChaCha8 stream keyed by `(master_seed, i)`, and results are
//! reduced pairwise in path order, so means do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{jump_posterior, Allocation, BeliefState, News, ProjectId, Scenario, TimeSpan, Valence};
use crate::policy::Policy;

/// Cap on plan segments per path, a guard against policies that stall.
const MAX_SEGMENTS: usize = 1_000_000;

/// Realized project qualities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldDraw {
    pub low_good: bool,
    pub high_good: bool,
}

impl WorldDraw {
    pub fn sample<R: Rng>(s: &Scenario, rng: &mut R) -> Self {
        let low_good = rng.random::<f64>() < s.low.prior_good;
        let high_good = rng.random::<f64>() < s.high.prior_good;
        Self { low_good, high_good }
    }

    pub fn is_good(&self, id: ProjectId) -> bool {
        match id {
            ProjectId::Low => self.low_good,
            ProjectId::High => self.high_good,
        }
    }

    /// Realized flow payoff of an allocation.
    pub fn flow(&self, s: &Scenario, a: &Allocation) -> f64 {
        ProjectId::BOTH
            .into_iter()
            .filter(|id| self.is_good(*id))
            .map(|id| a.exploit(id) * s.project(id).reward)
            .sum()
    }

    /// Best project in hindsight, `None` when both are bad.
    pub fn best(&self) -> Option<ProjectId> {
        if self.high_good {
            Some(ProjectId::High)
        } else if self.low_good {
            Some(ProjectId::Low)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub news: News,
}

/// Constant allocation over `[start, end)`; `state` holds beliefs at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub allocation: Allocation,
    pub state: BeliefState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub world: WorldDraw,
    pub events: Vec<Event>,
    pub segments: Vec<Segment>,
    pub payoff: f64,
    /// Beliefs at the horizon.
    pub final_state: BeliefState,
}

impl Trajectory {
    /// Beliefs at clock `t` (within the simulated horizon).
    pub fn belief_at(&self, s: &Scenario, t: f64) -> BeliefState {
        let i = self.segments.partition_point(|seg| seg.end <= t);
        match self.segments.get(i) {
            Some(seg) => seg.state.drift(s, seg.allocation.attention(), t - seg.start),
            None => self.final_state,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub mean: f64,
    /// Infinite when only one path was run.
    pub std_error: f64,
    pub n_paths: usize,
    pub horizon: f64,
    /// `e^{-r horizon} R_H`, an upper bound on the truncated payoff per path.
    pub tail_bound: f64,
}

/// `30 / r`.
pub fn default_horizon(s: &Scenario) -> f64 {
    30.0 / s.discount
}

/// Normalized discounted payoff of a constant flow over `[t0, t1)`.
pub fn segment_payoff(flow: f64, r: f64, t0: f64, t1: f64) -> f64 {
    if flow == 0.0 {
        return 0.0;
    }
    // e^{-r t0} (1 - e^{-r (t1 - t0)}), accurate for short segments
    flow * (-r * t0).exp() * -(-r * (t1 - t0)).exp_m1()
}

/// Per-path generator for `(master_seed, path)`.
pub fn path_rng(master_seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path);
    rng
}

fn exponential<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    // 1 - U lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln() / rate
}

struct PathRun {
    payoff: f64,
    final_state: BeliefState,
    events: Vec<Event>,
    segments: Vec<Segment>,
}

fn simulate<R: Rng>(policy: &dyn Policy, world: WorldDraw, rng: &mut R, horizon: f64, record: bool) -> PathRun {
    let s = policy.scenario();
    let r = s.discount;
    let mut state = s.prior_state();
    let mut clock = 0.0;
    let mut payoff = 0.0;
    let mut events = Vec::new();
    let mut segments = Vec::new();

    for _ in 0..MAX_SEGMENTS {
        if clock >= horizon {
            break;
        }
        let plan = policy.plan(&state, clock);
        let a = plan.allocation;
        debug_assert!(a.check(s.alpha).is_ok(), "{a:?} at {state:?}");
        let mut end = match plan.until {
            TimeSpan::Finite(t) => t.min(horizon),
            TimeSpan::Infinite => horizon,
        };
        if end <= clock {
            // a switch time that rounds onto the current clock
            end = (clock + 1e-12 * clock.max(1.0)).min(horizon);
        }

        let mut next: Option<Event> = None;
        for id in state.unresolved().collect::<Vec<_>>() {
            let spec = s.project(id);
            let good = world.is_good(id);
            let rate = a.explore(id) * if good { spec.rate_good } else { spec.rate_bad };
            if rate > 0.0 {
                let t = clock + exponential(rng, rate);
                if t < end && next.is_none_or(|e| t < e.time) {
                    let valence = if good { Valence::Good } else { Valence::Bad };
                    next = Some(Event { time: t, news: News::new(id, valence) });
                }
            }
        }

        let stop = next.map_or(end, |e| e.time);
        payoff += segment_payoff(world.flow(s, &a), r, clock, stop);
        if record {
            segments.push(Segment { start: clock, end: stop, allocation: a, state });
        }
        state = state.drift(s, a.attention(), stop - clock);
        if let Some(e) = next {
            state = jump_posterior(&state, e.news).expect("news only arrives on unresolved projects");
            if record {
                events.push(e);
            }
        }
        clock = stop;
    }
    PathRun { payoff, final_state: state, events, segments }
}

/// Run one path against a fixed world.
pub fn run_path<R: Rng>(policy: &dyn Policy, world: WorldDraw, rng: &mut R, horizon: f64) -> Result<Trajectory> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidField { field: "horizon", reason: "must be positive".into() });
    }
    let run = simulate(policy, world, rng, horizon, true);
    Ok(Trajectory { world, events: run.events, segments: run.segments, payoff: run.payoff, final_state: run.final_state })
}

/// Path `index` of a Monte Carlo run: the world is the first draw of the stream.
pub fn seeded_path(policy: &dyn Policy, horizon: f64, master_seed: u64, index: u64) -> Result<Trajectory> {
    let mut rng = path_rng(master_seed, index);
    let world = WorldDraw::sample(policy.scenario(), &mut rng);
    run_path(policy, world, &mut rng, horizon)
}

/// Sum in a fixed binary tree so the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Thread cap from `FORAGE_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("FORAGE_THREADS").ok()?.trim().parse().ok().filter(|n| *n > 0)
}

/// Run `f` on a pool capped by `FORAGE_THREADS`, or on the global pool.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

fn per_path<T: Send>(n_paths: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    with_thread_cap(|| (0..n_paths as u64).into_par_iter().map(f).collect())
}

/// Mean and standard error of `xs`.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let sq: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Payoffs of paths `0..n_paths`, in path order.
pub fn path_payoffs(policy: &dyn Policy, n_paths: usize, horizon: f64, master_seed: u64) -> Result<Vec<f64>> {
    if n_paths == 0 {
        return Err(Error::InvalidField { field: "paths", reason: "need at least one path".into() });
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidField { field: "horizon", reason: "must be positive".into() });
    }
    Ok(per_path(n_paths, |i| {
        let mut rng = path_rng(master_seed, i);
        let world = WorldDraw::sample(policy.scenario(), &mut rng);
        simulate(policy, world, &mut rng, horizon, false).payoff
    }))
}

pub fn monte_carlo(policy: &dyn Policy, n_paths: usize, horizon: f64, master_seed: u64) -> Result<MonteCarloReport> {
    let payoffs = path_payoffs(policy, n_paths, horizon, master_seed)?;
    let (mean, std_error) = mean_and_se(&payoffs);
    let s = policy.scenario();
    Ok(MonteCarloReport { mean, std_error, n_paths, horizon, tail_bound: (-s.discount * horizon).exp() * s.high.reward })
}

/// Fraction of paths whose exploited project at `t_check` is the best one in
/// hindsight. Paths where both projects are bad always count.
pub fn asymptotic_exploitation_rate(policy: &dyn Policy, t_check: f64, n_paths: usize, master_seed: u64) -> Result<f64> {
    if n_paths == 0 {
        return Err(Error::InvalidField { field: "paths", reason: "need at least one path".into() });
    }
    if !(t_check > 0.0) {
        return Err(Error::InvalidField { field: "t_check", reason: "must be positive".into() });
    }
    let hits = per_path(n_paths, |i| {
        let mut rng = path_rng(master_seed, i);
        let world = WorldDraw::sample(policy.scenario(), &mut rng);
        let run = simulate(policy, world, &mut rng, t_check, false);
        match world.best() {
            None => 1u64,
            Some(best) => u64::from(policy.decide(&run.final_state, t_check).exploited() == best),
        }
    });
    Ok(hits.iter().sum::<u64>() as f64 / n_paths as f64)
}

/// Plan segments along the path on which no news ever arrives.
pub fn no_news_timeline(policy: &dyn Policy, horizon: f64) -> Vec<Segment> {
    let s = policy.scenario();
    let mut state = s.prior_state();
    let mut clock = 0.0;
    let mut out: Vec<Segment> = Vec::new();
    while clock < horizon && out.len() < MAX_SEGMENTS {
        let plan = policy.plan(&state, clock);
        let mut end = plan.until.finite().map_or(horizon, |t| t.min(horizon));
        if end <= clock {
            end = (clock + 1e-12 * clock.max(1.0)).min(horizon);
        }
        out.push(Segment { start: clock, end, allocation: plan.allocation, state });
        state = state.drift(s, plan.allocation.attention(), end - clock);
        clock = end;
    }
    out
}

/// Clocks at which the explored project changes, with the new project.
pub fn exploration_switches(segments: &[Segment]) -> Vec<(f64, ProjectId)> {
    segments
        .windows(2)
        .filter(|w| w[0].allocation.explored() != w[1].allocation.explored())
        .map(|w| (w[1].start, w[1].allocation.explored()))
        .collect()
}

/// Clocks at which the exploited project changes, with the new project.
pub fn exploitation_switches(segments: &[Segment]) -> Vec<(f64, ProjectId)> {
    segments
        .windows(2)
        .filter(|w| w[0].allocation.exploited() != w[1].allocation.exploited())
        .map(|w| (w[1].start, w[1].allocation.exploited()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{payoff_disentangled, payoff_entangled};
    use crate::model::{drift_posterior, NewsRegime, ProjectSpec};
    use crate::policy::{safe_project_policy, Schedule, TwoRiskyPolicy};

    fn safe(alpha: f64, p: f64, g: f64, b: f64) -> Scenario {
        Scenario::new(ProjectSpec::safe(10.0).unwrap(), ProjectSpec::new(p, 15.0, g, b).unwrap(), 1.0, alpha).unwrap()
    }

    #[test]
    fn both_bad_pays_nothing() {
        let s = Scenario::new(
            ProjectSpec::new(0.5, 10.0, 1.0, 0.5).unwrap(),
            ProjectSpec::new(0.5, 15.0, 2.0, 1.0).unwrap(),
            1.0,
            0.0,
        )
        .unwrap();
        let pol = TwoRiskyPolicy::scheduled(&s, Schedule::switch_at(ProjectId::High, 1.0));
        let world = WorldDraw { low_good: false, high_good: false };
        let tr = run_path(&pol, world, &mut path_rng(1, 0), 30.0).unwrap();
        assert_eq!(tr.payoff, 0.0);
    }

    #[test]
    fn exploit_high_forever_closed_form() {
        let s = safe(0.0, 0.9, 0.0, 5.0);
        let pol = safe_project_policy(&s).unwrap();
        let world = WorldDraw { low_good: true, high_good: true };
        let tr = run_path(&pol, world, &mut path_rng(3, 0), 7.0).unwrap();
        assert!(tr.events.is_empty());
        assert!((tr.payoff - 15.0 * (1.0 - (-7.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn segment_refinement_composes() {
        let (flow, r) = (13.7, 0.8);
        let whole = segment_payoff(flow, r, 0.3, 5.1);
        let cuts = [0.3, 0.31, 1.0, 2.5, 2.5000001, 5.1];
        let parts: f64 = cuts.windows(2).map(|w| segment_payoff(flow, r, w[0], w[1])).sum();
        assert!((whole - parts).abs() <= 1e-12 * whole);
    }

    #[test]
    fn first_news_time_is_exponential() {
        // p_H below the cutoff: L is exploited and H gets 1 - alpha attention
        let alpha = 0.4;
        let s = safe(alpha, 0.1, 5.0, 0.0);
        let pol = safe_project_policy(&s).unwrap();
        let world = WorldDraw { low_good: true, high_good: true };
        let mut times: Vec<f64> = (0..10_000)
            .map(|i| run_path(&pol, world, &mut path_rng(11, i), 1e3).unwrap().events[0].time)
            .collect();
        times.sort_by(f64::total_cmp);
        let rate = (1.0 - alpha) * 5.0;
        let n = times.len() as f64;
        let ks = times
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let f = 1.0 - (-rate * t).exp();
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value
        assert!(ks < 1.63 / n.sqrt(), "KS statistic {ks}");
    }

    #[test]
    fn monte_carlo_matches_safe_payoffs() {
        let s = safe(0.0, 0.5, 5.0, 0.0);
        let pol = safe_project_policy(&s).unwrap();
        let rep = monte_carlo(&pol, 40_000, default_horizon(&s), 5).unwrap();
        let want = payoff_disentangled(0.5, 1.0, 5.0, NewsRegime::GoodNews, 10.0, 15.0).unwrap();
        assert!((rep.mean - want).abs() < 3.0 * rep.std_error, "{rep:?} vs {want}");

        let s1 = safe(1.0, 0.5, 5.0, 0.0);
        let pol1 = safe_project_policy(&s1).unwrap();
        let rep1 = monte_carlo(&pol1, 40_000, default_horizon(&s1), 5).unwrap();
        let want1 = payoff_entangled(0.5, 1.0, 5.0, NewsRegime::GoodNews, 10.0, 15.0).unwrap();
        assert!((rep1.mean - want1).abs() < 3.0 * rep1.std_error, "{rep1:?} vs {want1}");
    }

    #[test]
    fn single_path_is_deterministic() {
        let s = safe(0.2, 0.7, 2.0, 1.0);
        let pol = safe_project_policy(&s).unwrap();
        let a = seeded_path(&pol, 30.0, 42, 0).unwrap();
        let b = seeded_path(&pol, 30.0, 42, 0).unwrap();
        assert_eq!(a, b);
        let ra = monte_carlo(&pol, 1, 30.0, 42).unwrap();
        assert_eq!(ra.mean.to_bits(), a.payoff.to_bits());
    }

    #[test]
    fn mean_independent_of_thread_count() {
        let s = safe(0.0, 0.6, 3.0, 0.5);
        let pol = safe_project_policy(&s).unwrap();
        let base = monte_carlo(&pol, 5_000, 30.0, 9).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = one.install(|| monte_carlo(&pol, 5_000, 30.0, 9).unwrap());
        assert_eq!(base.mean.to_bits(), serial.mean.to_bits());
        assert_eq!(base.std_error.to_bits(), serial.std_error.to_bits());
    }

    #[test]
    fn no_news_posterior_matches_drift() {
        let s = safe(0.0, 0.6, 2.0, 0.0);
        let pol = TwoRiskyPolicy::scheduled(&s, Schedule::forever(ProjectId::High));
        let t = 0.4;
        let (mut quiet, mut good) = (0.0, 0.0);
        for i in 0..20_000 {
            let tr = seeded_path(&pol, t, 17, i).unwrap();
            if tr.events.is_empty() {
                quiet += 1.0;
                good += f64::from(u8::from(tr.world.high_good));
            }
        }
        let frac = good / quiet;
        let want = drift_posterior(0.6, 2.0, 0.0, 1.0, t);
        let se = (want * (1.0 - want) / quiet).sqrt();
        assert!((frac - want).abs() < 3.0 * se, "{frac} vs {want}");
    }

    #[test]
    fn timeline_follows_schedule() {
        let s = Scenario::new(
            ProjectSpec::new(0.5, 10.0, 2.0, 0.5).unwrap(),
            ProjectSpec::new(0.5, 15.0, 2.0, 0.5).unwrap(),
            1.0,
            0.0,
        )
        .unwrap();
        let pol = TwoRiskyPolicy::scheduled(&s, Schedule::switch_at(ProjectId::High, 0.7));
        let segs = no_news_timeline(&pol, 10.0);
        let sw = exploration_switches(&segs);
        assert_eq!(sw.len(), 1);
        assert!((sw[0].0 - 0.7).abs() < 1e-15 && sw[0].1 == ProjectId::Low);
        assert_eq!(segs.last().unwrap().end, 10.0);
    }

    #[test]
    fn known_bad_worlds_count_as_hits() {
        let s = safe(0.0, 0.5, 5.0, 0.0);
        let pol = safe_project_policy(&s).unwrap();
        let rate = asymptotic_exploitation_rate(&pol, 10.0, 2_000, 1).unwrap();
        assert!(rate > 0.99, "{rate}");
    }

    #[test]
    fn pairwise_sum_exact_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500_500.0);
    }
}
