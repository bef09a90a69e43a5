//! Optimal policies and the classical fully entangled baseline.
//!
//! A policy maps beliefs and the no-news clock to an [`Allocation`]. Every
//! policy also reports how long its current allocation stays valid absent
//! news, which lets the simulator integrate payoffs exactly.
//!
//! With `alpha = 0` the exploited project is always the favorable one. At an
//! exact tie the policy picks the project that is favorable an instant later
//! under the current drift, and H if the drift does not separate them. This
//! keeps decisions a function of the current state only.

pub mod path;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use path::{schedule_value, Schedule};

use crate::closedform::{
    balanced_index, claim1_d, claim1_switch_probability, claim2_applies, claim2_explore_high_first, cutoff_pbar,
    gittins_index_classical, hat_p_l, indifference_time_tbar,
};
use crate::error::{Error, Result};
use crate::model::{drift_posterior, drift_time, Allocation, BeliefState, NewsRegime, ProjectId, Resolution, Scenario, TimeSpan};

const TIE_TOL: f64 = 1e-12;
const INDEX_TIE_TOL: f64 = 1e-7;
/// Value gain, relative to `R_x`, a searched schedule needs over a rule.
const SEARCH_MARGIN: f64 = 1e-9;

/// Allocation and the clock up to which it stays valid absent news.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub allocation: Allocation,
    pub until: TimeSpan,
}

pub trait Policy: Send + Sync {
    fn scenario(&self) -> &Scenario;

    /// Allocation at `state` after `clock` units of time, together with the
    /// clock at which it may next change if no news arrives.
    fn plan(&self, state: &BeliefState, clock: f64) -> Plan;

    fn decide(&self, state: &BeliefState, clock: f64) -> Allocation {
        self.plan(state, clock).allocation
    }

    fn descriptor(&self) -> PolicyDescriptor;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    SafeProject,
    Balanced,
    GoodNews,
    BadNews,
    Classical,
    Scheduled,
}

impl PolicyKind {
    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::SafeProject => "safe-project",
            PolicyKind::Balanced => "balanced",
            PolicyKind::GoodNews => "good-news",
            PolicyKind::BadNews => "bad-news",
            PolicyKind::Classical => "classical",
            PolicyKind::Scheduled => "scheduled",
        }
    }
}

/// Structured summary of a policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyDescriptor {
    pub kind: PolicyKind,
    pub regime: NewsRegime,
    pub alpha: f64,
    pub initial_explored: ProjectId,
    pub initial_exploited: ProjectId,
    /// Clock at which exploration switches absent news; `None` when the
    /// policy has no such switch.
    pub switch_time: Option<TimeSpan>,
    pub cutoffs: Vec<(String, f64)>,
}

impl fmt::Display for PolicyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "kind = \"{}\"", self.kind.label())?;
        writeln!(f, "regime = \"{}\"", self.regime)?;
        writeln!(f, "alpha = {}", self.alpha)?;
        writeln!(f, "initial_explored = \"{}\"", self.initial_explored)?;
        writeln!(f, "initial_exploited = \"{}\"", self.initial_exploited)?;
        match self.switch_time {
            Some(TimeSpan::Finite(t)) => writeln!(f, "switch_time = {t}")?,
            Some(TimeSpan::Infinite) => writeln!(f, "switch_time = \"inf\"")?,
            None => writeln!(f, "switch_time = \"none\"")?,
        }
        for (name, v) in &self.cutoffs {
            writeln!(f, "{name} = {v}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------

/// Rate of change of `p_z` absent news under attention `a`.
fn belief_speed(s: &Scenario, state: &BeliefState, id: ProjectId, a: f64) -> f64 {
    if state.is_resolved(id) || a == 0.0 {
        return 0.0;
    }
    let p = state.p(id);
    -s.project(id).rate_gap() * a * p * (1.0 - p)
}

fn attention_of(id: ProjectId, a: f64) -> (f64, f64) {
    match id {
        ProjectId::Low => (a, 1.0 - a),
        ProjectId::High => (1.0 - a, a),
    }
}

fn pick(low: bool) -> ProjectId {
    if low {
        ProjectId::Low
    } else {
        ProjectId::High
    }
}

/// Favorable project with drift-aware tie breaking.
pub fn favorable_exploit(s: &Scenario, state: &BeliefState, attention: (f64, f64)) -> ProjectId {
    let vl = state.p_low * s.low.reward;
    let vh = state.p_high * s.high.reward;
    let tol = TIE_TOL * vl.max(vh).max(f64::MIN_POSITIVE);
    if vl - vh > tol {
        return ProjectId::Low;
    }
    if vh - vl > tol {
        return ProjectId::High;
    }
    let dl = s.low.reward * belief_speed(s, state, ProjectId::Low, attention.0);
    let dh = s.high.reward * belief_speed(s, state, ProjectId::High, attention.1);
    pick(dl > dh)
}

/// Time until `p` drifts to `target`; infinite if it never does or the
/// crossing is not strictly ahead.
fn crossing(p: f64, target: f64, g: f64, b: f64, a: f64) -> TimeSpan {
    if a == 0.0 || !(target > 0.0 && target < 1.0) {
        return TimeSpan::Infinite;
    }
    match drift_time(p, target, g, b, a) {
        TimeSpan::Finite(t) if t > 0.0 => TimeSpan::Finite(t),
        _ => TimeSpan::Infinite,
    }
}

/// Time until the favorable project changes under constant attention.
fn favorable_flip(s: &Scenario, state: &BeliefState, attention: (f64, f64)) -> TimeSpan {
    let mut t = TimeSpan::Infinite;
    for (id, a) in [(ProjectId::Low, attention.0), (ProjectId::High, attention.1)] {
        if state.is_resolved(id) || a == 0.0 {
            continue;
        }
        let other = id.other();
        let (v, v_other) = (state.p(id) * s.project(id).reward, state.p(other) * s.project(other).reward);
        // sitting on the tie just crossed: drift is monotone, so never again
        if (v - v_other).abs() <= TIE_TOL * v.max(v_other).max(f64::MIN_POSITIVE) {
            continue;
        }
        let target = v_other / s.project(id).reward;
        let spec = s.project(id);
        t = t.min(crossing(state.p(id), target, spec.rate_good, spec.rate_bad, a));
    }
    t
}

fn shift(t: TimeSpan, clock: f64) -> TimeSpan {
    match t {
        TimeSpan::Finite(d) => TimeSpan::Finite(clock + d),
        TimeSpan::Infinite => TimeSpan::Infinite,
    }
}

// ---------------------------------------------------------------------------
// Safe low project
// ---------------------------------------------------------------------------

/// Exploit H iff `p_H >= pbar(alpha)`; explore H with all attention not
/// reserved for the exploited project.
#[derive(Debug, Clone)]
pub struct SafeProjectPolicy {
    scenario: Scenario,
    cutoff: f64,
}

pub fn safe_project_policy(scenario: &Scenario) -> Result<SafeProjectPolicy> {
    if !scenario.has_safe_low() {
        return Err(Error::Precondition("safe-project policy needs p_L = 1".into()));
    }
    let s = scenario;
    let cutoff = cutoff_pbar(s.alpha, s.discount, s.high.max_rate(), s.low.reward, s.high.reward);
    Ok(SafeProjectPolicy { scenario: *scenario, cutoff })
}

impl SafeProjectPolicy {
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn exploit(&self, state: &BeliefState) -> ProjectId {
        match state.resolved_high {
            Resolution::KnownGood => return ProjectId::High,
            Resolution::KnownBad => return ProjectId::Low,
            Resolution::Unknown => {}
        }
        let d = state.p_high - self.cutoff;
        if d > TIE_TOL {
            ProjectId::High
        } else if d < -TIE_TOL {
            ProjectId::Low
        } else {
            // exploiting H gives it full attention; follow the drift
            pick(self.scenario.high.rate_gap() > 0.0)
        }
    }
}

impl Policy for SafeProjectPolicy {
    fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn plan(&self, state: &BeliefState, clock: f64) -> Plan {
        let s = &self.scenario;
        let exploit = self.exploit(state);
        let allocation = match exploit {
            ProjectId::High => Allocation::pure(ProjectId::High, ProjectId::High),
            ProjectId::Low => Allocation::constrained(ProjectId::Low, s.alpha),
        };
        let until = if state.is_resolved(ProjectId::High) {
            TimeSpan::Infinite
        } else {
            let h = &s.high;
            shift(crossing(state.p_high, self.cutoff, h.rate_good, h.rate_bad, allocation.explore_high), clock)
        };
        Plan { allocation, until }
    }

    fn descriptor(&self) -> PolicyDescriptor {
        let s = &self.scenario;
        let a = self.decide(&s.prior_state(), 0.0);
        let lam = s.high.max_rate();
        let switch_time = (s.high.rate_gap() > 0.0 && s.high.prior_good > self.cutoff)
            .then(|| drift_time(s.high.prior_good, self.cutoff, s.high.rate_good, s.high.rate_bad, 1.0));
        PolicyDescriptor {
            kind: PolicyKind::SafeProject,
            regime: s.regime(),
            alpha: s.alpha,
            initial_explored: a.explored(),
            initial_exploited: a.exploited(),
            switch_time,
            cutoffs: vec![
                ("p_myopic".into(), s.low.reward / s.high.reward),
                ("p_bar_alpha".into(), self.cutoff),
                ("p_bar_0".into(), cutoff_pbar(0.0, s.discount, lam, s.low.reward, s.high.reward)),
                ("p_bar_1".into(), cutoff_pbar(1.0, s.discount, lam, s.low.reward, s.high.reward)),
            ],
        }
    }
}

// ---------------------------------------------------------------------------
// Two risky projects, alpha = 0
// ---------------------------------------------------------------------------

/// Follows a no-news exploration [`Schedule`] until the first news, then
/// explores the unresolved project. Exploitation is always favorable.
#[derive(Debug, Clone)]
pub struct TwoRiskyPolicy {
    scenario: Scenario,
    kind: PolicyKind,
    schedule: Schedule,
    cutoffs: Vec<(String, f64)>,
}

impl TwoRiskyPolicy {
    /// Arbitrary schedule; used to compare against perturbed strategies.
    pub fn scheduled(scenario: &Scenario, schedule: Schedule) -> Self {
        Self { scenario: *scenario, kind: PolicyKind::Scheduled, schedule: schedule.canonical(), cutoffs: Vec::new() }
    }

    pub fn schedule(&self) -> Schedule {
        self.schedule
    }

    /// Expected payoff from the prior, evaluated along the no-news path.
    pub fn expected_value(&self) -> f64 {
        schedule_value(&self.scenario, &self.scenario.prior_state(), self.schedule)
    }
}

impl Policy for TwoRiskyPolicy {
    fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn plan(&self, state: &BeliefState, clock: f64) -> Plan {
        let s = &self.scenario;
        let (explore, scheduled_until) = match (state.is_resolved(ProjectId::Low), state.is_resolved(ProjectId::High)) {
            (false, false) => {
                let until = match self.schedule.switch {
                    TimeSpan::Finite(t) if clock < t => TimeSpan::Finite(t),
                    _ => TimeSpan::Infinite,
                };
                (self.schedule.explored_at(clock), until)
            }
            (true, false) => (ProjectId::High, TimeSpan::Infinite),
            (false, true) => (ProjectId::Low, TimeSpan::Infinite),
            (true, true) => (ProjectId::High, TimeSpan::Infinite),
        };
        let attention = attention_of(explore, 1.0);
        let exploit = favorable_exploit(s, state, attention);
        let until = scheduled_until.min(shift(favorable_flip(s, state, attention), clock));
        Plan { allocation: Allocation::pure(explore, exploit), until }
    }

    fn descriptor(&self) -> PolicyDescriptor {
        let s = &self.scenario;
        let a = self.decide(&s.prior_state(), 0.0);
        let switch_time = match self.kind {
            PolicyKind::Balanced => None,
            _ => Some(self.schedule.switch),
        };
        PolicyDescriptor {
            kind: self.kind,
            regime: s.regime(),
            alpha: s.alpha,
            initial_explored: a.explored(),
            initial_exploited: a.exploited(),
            switch_time,
            cutoffs: self.cutoffs.clone(),
        }
    }
}

fn require_two_risky(scenario: &Scenario, regime: NewsRegime) -> Result<()> {
    if scenario.alpha != 0.0 {
        return Err(Error::Precondition("two-risky policies assume alpha = 0".into()));
    }
    if scenario.regime() != regime {
        return Err(Error::Precondition(format!("scenario has {} news, policy needs {regime}", scenario.regime())));
    }
    Ok(())
}

/// Explore the project with the larger information index until news.
pub fn balanced_policy(scenario: &Scenario) -> Result<TwoRiskyPolicy> {
    require_two_risky(scenario, NewsRegime::Balanced)?;
    let report = balanced_index(scenario, &scenario.prior_state())?;
    Ok(TwoRiskyPolicy {
        scenario: *scenario,
        kind: PolicyKind::Balanced,
        schedule: Schedule::forever(report.explored_first.or(ProjectId::High)),
        cutoffs: vec![("index_low".into(), report.index_low), ("index_high".into(), report.index_high)],
    })
}

/// Switch time maximizing the schedule value over `[0, t_max]`, plus
/// "never" when `allow_never` is set. An infinite `t_max` searches `[0, 40/r]`.
pub fn best_switch(scenario: &Scenario, first: ProjectId, t_max: TimeSpan, allow_never: bool) -> (Schedule, f64) {
    let state = scenario.prior_state();
    let value = |t: f64| schedule_value(scenario, &state, Schedule::switch_at(first, t));
    let (upper, points) = match t_max {
        TimeSpan::Finite(t) => (t, 32),
        TimeSpan::Infinite => (40.0 / scenario.discount, 64),
    };
    let mut best = (Schedule::switch_at(first, 0.0), value(0.0));
    let mut best_k = 0;
    if upper > 0.0 {
        for k in 1..=points {
            let t = upper * k as f64 / points as f64;
            let v = value(t);
            if v > best.1 {
                best = (Schedule::switch_at(first, t), v);
                best_k = k;
            }
        }
        // golden section around the best grid point
        let step = upper / points as f64;
        let (mut a, mut b) = ((best_k as f64 - 1.0).max(0.0) * step, ((best_k + 1) as f64 * step).min(upper));
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
        let (mut fc, mut fd) = (value(c), value(d));
        while b - a > 1e-9 * upper.max(1.0) {
            if fc >= fd {
                (b, d, fd) = (d, c, fc);
                c = b - phi * (b - a);
                fc = value(c);
            } else {
                (a, c, fc) = (c, d, fd);
                d = a + phi * (b - a);
                fd = value(d);
            }
        }
        let t = 0.5 * (a + b);
        let v = value(t);
        if v > best.1 {
            best = (Schedule::switch_at(first, t), v);
        }
    }
    if allow_never {
        let v = schedule_value(scenario, &state, Schedule::forever(first));
        if v > best.1 {
            best = (Schedule::forever(first), v);
        }
    }
    (best.0.canonical(), best.1)
}

/// Good news: explore the favorable project for a time `T` no later than the
/// indifference time, then the other one; or explore one project until news.
pub fn good_news_policy(scenario: &Scenario) -> Result<TwoRiskyPolicy> {
    require_two_risky(scenario, NewsRegime::GoodNews)?;
    let s = scenario;
    let state = s.prior_state();
    let mut cutoffs = Vec::new();
    let schedule = if state.is_resolved(ProjectId::Low) || state.is_resolved(ProjectId::High) {
        Schedule::forever(if state.is_resolved(ProjectId::Low) { ProjectId::High } else { ProjectId::Low })
    } else {
        let x = favorable_exploit(s, &state, (0.0, 0.0));
        let y = x.other();
        let (sx, sy) = (s.project(x), s.project(y));
        let (px, vy) = (state.p(x), state.p(y) * sy.reward);
        let tbar = indifference_time_tbar(sx, px, vy);
        if let TimeSpan::Finite(t) = tbar {
            cutoffs.push(("tbar_favorable".into(), t));
        }
        if claim2_applies(s, &state) {
            let high_first = claim2_explore_high_first(s, &state)?;
            Schedule::forever(pick(!high_first))
        } else if sx.rate_bad == 0.0 {
            let vx = schedule_value(s, &state, Schedule::forever(x));
            let vy_first = schedule_value(s, &state, Schedule::forever(y));
            Schedule::forever(if vy_first > vx { y } else { x })
        } else if sy.reward > px * sx.reward && px * sx.reward > vy {
            let rule = match claim1_switch_probability(sx, sy) {
                Ok(root) => {
                    if let Some(p) = root {
                        cutoffs.push(("claim1_root".into(), p));
                    }
                    let p_end = vy / sx.reward;
                    if claim1_d(sx, sy, px) <= 0.0 {
                        Schedule::forever(y)
                    } else if let Some(p) = root.filter(|p| *p > p_end && *p < px) {
                        Schedule { first: x, switch: drift_time(px, p, sx.rate_good, sx.rate_bad, 1.0) }
                    } else {
                        // exploring x stays worthwhile up to the tie; decide there
                        // by comparing information indices
                        let t = tbar.as_f64();
                        let p_tie = drift_posterior(px, sx.rate_good, sx.rate_bad, 1.0, t);
                        if sy.rate_good * (1.0 - state.p(y)) > sx.rate_good * (1.0 - p_tie) {
                            Schedule::switch_at(x, t)
                        } else {
                            Schedule::forever(x)
                        }
                    }
                }
                Err(_) => best_switch(s, x, tbar, true).0,
            };
            // The D rule is exact when y's news is balanced; with bad news on
            // y it can miss, so keep it only if no schedule does better.
            let (searched, v_searched) = best_switch(s, x, tbar, true);
            if v_searched > schedule_value(s, &state, rule.canonical()) + SEARCH_MARGIN * sx.reward {
                searched
            } else {
                rule
            }
        } else {
            best_switch(s, x, tbar, true).0
        }
    };
    Ok(TwoRiskyPolicy { scenario: *s, kind: PolicyKind::GoodNews, schedule: schedule.canonical(), cutoffs })
}

/// Bad news: explore H from the start when it dominates; otherwise explore
/// L for a while, then H until news.
pub fn bad_news_policy(scenario: &Scenario) -> Result<TwoRiskyPolicy> {
    require_two_risky(scenario, NewsRegime::BadNews)?;
    let s = scenario;
    let state = s.prior_state();
    let p_hat = hat_p_l(s)?;
    let cutoffs = vec![("hat_p_l".into(), p_hat)];
    let (vl, vh) = (state.p_low * s.low.reward, state.p_high * s.high.reward);
    let schedule = if state.is_resolved(ProjectId::Low) || state.is_resolved(ProjectId::High) {
        Schedule::forever(if state.is_resolved(ProjectId::Low) { ProjectId::High } else { ProjectId::Low })
    } else if vh >= s.low.reward {
        Schedule::forever(ProjectId::High)
    } else {
        let l = &s.low;
        let to = |p: f64| {
            if p <= state.p_low {
                TimeSpan::Finite(0.0)
            } else if p >= 1.0 {
                TimeSpan::Infinite
            } else {
                drift_time(state.p_low, p, l.rate_good, l.rate_bad, 1.0)
            }
        };
        if vl > vh {
            if state.p_low >= p_hat {
                Schedule::forever(ProjectId::High)
            } else {
                best_switch(s, ProjectId::Low, to(p_hat), false).0
            }
        } else {
            best_switch(s, ProjectId::Low, to(p_hat.max(vh / l.reward)), false).0
        }
    };
    Ok(TwoRiskyPolicy { scenario: *s, kind: PolicyKind::BadNews, schedule: schedule.canonical(), cutoffs })
}

// ---------------------------------------------------------------------------
// Classical baseline, alpha = 1
// ---------------------------------------------------------------------------

/// Explore and exploit the project with the larger classical index. In good
/// news, equal indices are kept equal by splitting attention so both fall at
/// the same rate.
#[derive(Debug, Clone)]
pub struct ClassicalPolicy {
    scenario: Scenario,
    split_step: f64,
}

pub fn classical_policy(scenario: &Scenario) -> Result<ClassicalPolicy> {
    if scenario.alpha != 1.0 {
        return Err(Error::Precondition("classical policy needs alpha = 1".into()));
    }
    let lam = scenario.low.max_rate().max(scenario.high.max_rate()).max(scenario.discount);
    Ok(ClassicalPolicy { scenario: *scenario, split_step: 0.01 / lam })
}

impl ClassicalPolicy {
    pub fn index(&self, state: &BeliefState, id: ProjectId) -> f64 {
        let spec = self.scenario.project(id);
        match state.resolution(id) {
            Resolution::KnownGood => spec.reward,
            Resolution::KnownBad => 0.0,
            Resolution::Unknown => gittins_index_classical(state.p(id), spec.reward, spec.max_rate(), self.scenario.discount),
        }
    }

    /// `|d index / dt|` per unit of attention.
    fn index_speed(&self, state: &BeliefState, id: ProjectId) -> f64 {
        let s = &self.scenario;
        let spec = s.project(id);
        let (p, r, lam) = (state.p(id), s.discount, spec.max_rate());
        spec.rate_gap().abs() * p * (1.0 - p) * spec.reward * (r + lam) * r / (r + p * lam).powi(2)
    }

    /// Belief at which the index of `id` equals `level`.
    fn inverse_index(&self, id: ProjectId, level: f64) -> f64 {
        let s = &self.scenario;
        let spec = s.project(id);
        let (r, lam) = (s.discount, spec.max_rate());
        level * r / (spec.reward * (r + lam) - level * lam)
    }
}

impl Policy for ClassicalPolicy {
    fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn plan(&self, state: &BeliefState, clock: f64) -> Plan {
        let s = &self.scenario;
        let (il, ih) = (self.index(state, ProjectId::Low), self.index(state, ProjectId::High));
        let good = s.regime() == NewsRegime::GoodNews;
        let both_open = !state.is_resolved(ProjectId::Low) && !state.is_resolved(ProjectId::High);
        let tie = (il - ih).abs() <= INDEX_TIE_TOL * il.max(ih).max(f64::MIN_POSITIVE);
        if tie && good && both_open {
            let (kl, kh) = (self.index_speed(state, ProjectId::Low), self.index_speed(state, ProjectId::High));
            let theta = if kl + kh > 0.0 { kh / (kl + kh) } else { 0.5 };
            return Plan { allocation: Allocation::split(theta), until: TimeSpan::Finite(clock + self.split_step) };
        }
        let z = if tie {
            // in good news the explored index falls, so a known project wins the tie
            if good && state.is_resolved(ProjectId::Low) != state.is_resolved(ProjectId::High) {
                pick(state.is_resolved(ProjectId::Low))
            } else {
                ProjectId::High
            }
        } else {
            pick(il > ih)
        };
        let until = if good && !state.is_resolved(z) {
            let spec = s.project(z);
            let target = self.inverse_index(z, self.index(state, z.other()));
            shift(crossing(state.p(z), target, spec.rate_good, spec.rate_bad, 1.0), clock)
        } else {
            TimeSpan::Infinite
        };
        Plan { allocation: Allocation::pure(z, z), until }
    }

    fn descriptor(&self) -> PolicyDescriptor {
        let s = &self.scenario;
        let st = s.prior_state();
        let a = self.decide(&st, 0.0);
        PolicyDescriptor {
            kind: PolicyKind::Classical,
            regime: s.regime(),
            alpha: s.alpha,
            initial_explored: a.explored(),
            initial_exploited: a.exploited(),
            switch_time: None,
            cutoffs: vec![
                ("index_low".into(), self.index(&st, ProjectId::Low)),
                ("index_high".into(), self.index(&st, ProjectId::High)),
            ],
        }
    }
}

/// The optimal policy for a scenario: safe-project rule when L is known,
/// classical rule when `alpha = 1`, otherwise the `alpha = 0` rule for the
/// scenario's news regime.
pub fn optimal_policy(scenario: &Scenario) -> Result<Box<dyn Policy>> {
    if scenario.has_safe_low() {
        return Ok(Box::new(safe_project_policy(scenario)?));
    }
    if scenario.alpha == 1.0 {
        return Ok(Box::new(classical_policy(scenario)?));
    }
    if scenario.alpha != 0.0 {
        return Err(Error::Precondition("two risky projects are supported for alpha = 0 or alpha = 1 only".into()));
    }
    Ok(match scenario.regime() {
        NewsRegime::Balanced => Box::new(balanced_policy(scenario)?),
        NewsRegime::GoodNews => Box::new(good_news_policy(scenario)?),
        NewsRegime::BadNews => Box::new(bad_news_policy(scenario)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProjectSpec;

    fn safe(alpha: f64, g: f64, b: f64, p: f64) -> Scenario {
        Scenario::new(ProjectSpec::safe(10.0).unwrap(), ProjectSpec::new(p, 15.0, g, b).unwrap(), 1.0, alpha).unwrap()
    }

    #[test]
    fn safe_policy_below_cutoff_exploits_low() {
        let s = safe(0.3, 5.0, 0.0, 0.2);
        let pol = safe_project_policy(&s).unwrap();
        let plan = pol.plan(&s.prior_state(), 0.0);
        assert_eq!(plan.allocation.exploit_low, 1.0);
        assert!((plan.allocation.explore_high - 0.7).abs() < 1e-15);
        assert_eq!(plan.until, TimeSpan::Infinite);
        plan.allocation.check(0.3).unwrap();
    }

    #[test]
    fn safe_policy_switch_time_inverts_drift() {
        let s = safe(0.5, 5.0, 0.0, 0.9);
        let pol = safe_project_policy(&s).unwrap();
        let plan = pol.plan(&s.prior_state(), 0.0);
        assert_eq!(plan.allocation.exploit_high, 1.0);
        let t = plan.until.finite().unwrap();
        let p = drift_posterior(0.9, 5.0, 0.0, 1.0, t);
        assert!((p - pol.cutoff()).abs() < 1e-12);
        // at the cutoff, the next instant exploits L
        let at = BeliefState::new(1.0, p);
        assert_eq!(pol.plan(&at, t).allocation.exploit_low, 1.0);
    }

    #[test]
    fn safe_policy_bad_news_never_switches() {
        let s = safe(0.5, 0.0, 5.0, 0.9);
        let plan = safe_project_policy(&s).unwrap().plan(&s.prior_state(), 0.0);
        assert_eq!(plan.until, TimeSpan::Infinite);
        assert_eq!(plan.allocation.exploit_high, 1.0);
    }

    fn two(pl: f64, l: (f64, f64), ph: f64, h: (f64, f64)) -> Scenario {
        Scenario::new(
            ProjectSpec::new(pl, 10.0, l.0, l.1).unwrap(),
            ProjectSpec::new(ph, 15.0, h.0, h.1).unwrap(),
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn balanced_policy_explores_index_argmax() {
        let s = two(0.8, (2.0, 2.0), 0.4, (2.0, 2.0));
        let pol = balanced_policy(&s).unwrap();
        assert_eq!(pol.schedule(), Schedule::forever(ProjectId::High));
        let plan = pol.plan(&s.prior_state(), 0.0);
        assert_eq!(plan.allocation.exploit_low, 1.0);
        assert_eq!(plan.until, TimeSpan::Infinite);
    }

    #[test]
    fn good_news_pure_never_switches() {
        let s = two(0.3, (1.0, 0.0), 0.4, (4.0, 0.0));
        let pol = good_news_policy(&s).unwrap();
        assert_eq!(pol.schedule().switch, TimeSpan::Infinite);
    }

    #[test]
    fn good_news_switch_within_tbar() {
        let s = two(0.5, (3.0, 0.5), 0.6, (3.0, 2.0));
        let pol = good_news_policy(&s).unwrap();
        if let TimeSpan::Finite(t) = pol.schedule().switch {
            let tbar = indifference_time_tbar(&s.high, 0.6, 5.0).as_f64();
            assert!(t <= tbar + 1e-9);
        }
    }

    #[test]
    fn d_rule_matches_numeric_optimum() {
        // Claim-1 region: R_y > p_x R_x > p_y R_y
        for (pl, ph, l, h) in [
            (0.3, 0.5, (2.0, 0.5), (3.0, 1.0)),
            (0.4, 0.55, (4.0, 0.2), (2.0, 1.5)),
            (0.2, 0.6, (1.0, 0.1), (3.0, 2.5)),
        ] {
            let s = two(pl, l, ph, h);
            let pol = good_news_policy(&s).unwrap();
            let x = ProjectId::High;
            let tbar = indifference_time_tbar(&s.high, ph, pl * 10.0);
            let (_, best) = best_switch(&s, x, tbar, true);
            let best = best.max(schedule_value(&s, &s.prior_state(), Schedule::forever(ProjectId::Low)));
            let v = pol.expected_value();
            assert!(v >= best - 1e-6, "{:?}: {v} vs {best}", pol.schedule());
        }
    }

    #[test]
    fn bad_news_dominant_high_explored_first() {
        let s = two(0.5, (0.5, 2.0), 0.8, (1.0, 2.0));
        let pol = bad_news_policy(&s).unwrap();
        assert_eq!(pol.schedule(), Schedule::forever(ProjectId::High));
    }

    #[test]
    fn bad_news_low_start_switches_in_finite_time() {
        let s = two(0.4, (0.0, 2.0), 0.1, (1.0, 1.5));
        let pol = bad_news_policy(&s).unwrap();
        let sch = pol.schedule();
        assert_eq!(sch.first, ProjectId::Low);
        assert!(sch.switch.is_finite());
    }

    #[test]
    fn classical_safe_case_switches_at_pbar1() {
        let s = safe(1.0, 5.0, 0.0, 0.5);
        let pol = classical_policy(&s).unwrap();
        let plan = pol.plan(&s.prior_state(), 0.0);
        assert_eq!(plan.allocation, Allocation::pure(ProjectId::High, ProjectId::High));
        let t = plan.until.finite().unwrap();
        let p = drift_posterior(0.5, 5.0, 0.0, 1.0, t);
        assert!((p - 0.25).abs() < 1e-12);
    }

    #[test]
    fn classical_identical_projects_split_evenly() {
        let spec = ProjectSpec::new(0.5, 10.0, 2.0, 0.0).unwrap();
        let s = Scenario::symmetric(spec, 1.0, 1.0).unwrap();
        let pol = classical_policy(&s).unwrap();
        let a = pol.decide(&s.prior_state(), 0.0);
        assert!((a.explore_low - 0.5).abs() < 1e-12 && (a.exploit_low - 0.5).abs() < 1e-12);
        a.check(1.0).unwrap();
    }

    #[test]
    fn optimal_policy_dispatch() {
        assert_eq!(optimal_policy(&safe(0.4, 5.0, 0.0, 0.5)).unwrap().descriptor().kind, PolicyKind::SafeProject);
        let s = two(0.3, (1.0, 0.0), 0.4, (4.0, 0.0));
        assert_eq!(optimal_policy(&s).unwrap().descriptor().kind, PolicyKind::GoodNews);
        let mut s1 = s;
        s1.alpha = 1.0;
        assert_eq!(optimal_policy(&s1).unwrap().descriptor().kind, PolicyKind::Classical);
        s1.alpha = 0.5;
        assert!(optimal_policy(&s1).is_err());
    }
}
