//! Domain types and Bayesian belief dynamics.
//!
//! Two projects, `Low` and `High`, are each good or bad. A good project pays
//! its reward flow forever, a bad one pays nothing. Attention directed at a
//! project produces conclusive news at a Poisson rate that depends on the
//! project's quality: `rate_good` when it is good, `rate_bad` when it is bad.
//! Absent news the posterior drifts deterministically; news resolves the
//! project for good.
//!
//! Drift is computed in log-odds space, where the no-news update is a constant
//! shift of `(rate_bad - rate_good) * attention * t`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Posteriors are clamped to this distance from 0 and 1 inside drift
/// computations only. Stored beliefs are never clamped.
const DRIFT_CLAMP: f64 = 1e-15;

/// Tolerance used when checking that allocation budgets sum to one.
pub const BUDGET_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Identifiers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProjectId {
    Low,
    High,
}

impl ProjectId {
    pub const BOTH: [ProjectId; 2] = [ProjectId::Low, ProjectId::High];

    pub fn other(self) -> ProjectId {
        match self {
            ProjectId::Low => ProjectId::High,
            ProjectId::High => ProjectId::Low,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProjectId::Low => "L",
            ProjectId::High => "H",
        }
    }
}

impl fmt::Display for ProjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of a myopic comparison of expected reward flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Favorable {
    Low,
    High,
    Both,
}

impl Favorable {
    /// The favorable project, with exact ties resolved to `tie`.
    pub fn or(self, tie: ProjectId) -> ProjectId {
        match self {
            Favorable::Low => ProjectId::Low,
            Favorable::High => ProjectId::High,
            Favorable::Both => tie,
        }
    }

    pub fn includes(self, id: ProjectId) -> bool {
        matches!(
            (self, id),
            (Favorable::Both, _) | (Favorable::Low, ProjectId::Low) | (Favorable::High, ProjectId::High)
        )
    }
}

// ---------------------------------------------------------------------------
// Durations that may be infinite
// ---------------------------------------------------------------------------

/// A length of time that may be "never".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeSpan {
    Finite(f64),
    Infinite,
}

impl TimeSpan {
    pub fn is_finite(self) -> bool {
        matches!(self, TimeSpan::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            TimeSpan::Finite(t) => Some(t),
            TimeSpan::Infinite => None,
        }
    }

    /// Value as `f64`, with `Infinite` mapped to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn min(self, other: TimeSpan) -> TimeSpan {
        match (self, other) {
            (TimeSpan::Finite(a), TimeSpan::Finite(b)) => TimeSpan::Finite(a.min(b)),
            (TimeSpan::Finite(a), TimeSpan::Infinite) | (TimeSpan::Infinite, TimeSpan::Finite(a)) => {
                TimeSpan::Finite(a)
            }
            (TimeSpan::Infinite, TimeSpan::Infinite) => TimeSpan::Infinite,
        }
    }
}

impl PartialOrd for TimeSpan {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for TimeSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeSpan::Finite(t) => write!(f, "{t}"),
            TimeSpan::Infinite => f.write_str("inf"),
        }
    }
}

// ---------------------------------------------------------------------------
// Projects and scenarios
// ---------------------------------------------------------------------------

/// One arm: prior, reward flow when good, and conclusive-news rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectSpec {
    pub prior_good: f64,
    pub reward: f64,
    pub rate_good: f64,
    pub rate_bad: f64,
}

impl ProjectSpec {
    pub fn new(prior_good: f64, reward: f64, rate_good: f64, rate_bad: f64) -> Result<Self> {
        let spec = Self { prior_good, reward, rate_good, rate_bad };
        spec.validate()?;
        Ok(spec)
    }

    /// Project whose good and bad news share one arrival rate.
    pub fn balanced(prior_good: f64, reward: f64, rate: f64) -> Result<Self> {
        Self::new(prior_good, reward, rate, rate)
    }

    /// A project known to be good. News rates are irrelevant and left at zero.
    pub fn safe(reward: f64) -> Result<Self> {
        Self::new(1.0, reward, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let field = |field, reason: &str| Error::InvalidField { field, reason: reason.to_string() };
        if !(self.prior_good > 0.0 && self.prior_good <= 1.0) {
            return Err(field("prior_good", "must lie in (0, 1]"));
        }
        if !(self.reward > 0.0 && self.reward.is_finite()) {
            return Err(field("reward", "must be positive and finite"));
        }
        for (name, rate) in [("rate_good", self.rate_good), ("rate_bad", self.rate_bad)] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(field(name, "must be non-negative and finite"));
            }
        }
        // A project already known to be good never needs news.
        if !self.is_safe() && self.max_rate() <= 0.0 {
            return Err(field("rate_good", "at least one news rate must be positive"));
        }
        Ok(())
    }

    pub fn is_safe(&self) -> bool {
        self.prior_good >= 1.0
    }

    pub fn max_rate(&self) -> f64 {
        self.rate_good.max(self.rate_bad)
    }

    /// `rate_good - rate_bad`: positive in good-news settings.
    pub fn rate_gap(&self) -> f64 {
        self.rate_good - self.rate_bad
    }

    pub fn expected_reward(&self, p: f64) -> f64 {
        p * self.reward
    }
}

/// Two projects, a discount rate and the entanglement fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub low: ProjectSpec,
    pub high: ProjectSpec,
    pub discount: f64,
    pub alpha: f64,
}

impl Scenario {
    pub fn new(low: ProjectSpec, high: ProjectSpec, discount: f64, alpha: f64) -> Result<Self> {
        let scenario = Self { low, high, discount, alpha };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Two ex-ante identical projects. Equal rewards break the strict reward
    /// ordering every other constructor enforces; use only for symmetric
    /// illustrations.
    pub fn symmetric(project: ProjectSpec, discount: f64, alpha: f64) -> Result<Self> {
        project.validate()?;
        let scenario = Self { low: project, high: project, discount, alpha };
        scenario.validate_common()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.low.validate()?;
        self.high.validate()?;
        if self.high.reward <= self.low.reward {
            return Err(Error::RewardOrder { low: self.low.reward, high: self.high.reward });
        }
        if self.high.is_safe() {
            return Err(Error::InvalidField {
                field: "high.prior_good",
                reason: "the high-reward project must be risky (prior < 1)".into(),
            });
        }
        self.validate_common()
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount.is_finite()) {
            return Err(Error::InvalidField { field: "discount", reason: "must be positive and finite".into() });
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidField { field: "alpha", reason: "must lie in [0, 1]".into() });
        }
        classify_regime(self).map(|_| ())
    }

    pub fn project(&self, id: ProjectId) -> &ProjectSpec {
        match id {
            ProjectId::Low => &self.low,
            ProjectId::High => &self.high,
        }
    }

    pub fn project_mut(&mut self, id: ProjectId) -> &mut ProjectSpec {
        match id {
            ProjectId::Low => &mut self.low,
            ProjectId::High => &mut self.high,
        }
    }

    pub fn has_safe_low(&self) -> bool {
        self.low.is_safe()
    }

    /// News regime. Scenarios are validated on construction, so this cannot
    /// fail for a value built through [`Scenario::new`].
    pub fn regime(&self) -> NewsRegime {
        classify_regime(self).expect("validated scenario has a consistent regime")
    }

    pub fn prior_state(&self) -> BeliefState {
        BeliefState::new(self.low.prior_good, self.high.prior_good)
    }
}

// ---------------------------------------------------------------------------
// News regime
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NewsRegime {
    GoodNews,
    BadNews,
    Balanced,
}

impl NewsRegime {
    pub fn of(spec: &ProjectSpec) -> NewsRegime {
        match spec.rate_good.partial_cmp(&spec.rate_bad) {
            Some(Ordering::Greater) => NewsRegime::GoodNews,
            Some(Ordering::Less) => NewsRegime::BadNews,
            _ => NewsRegime::Balanced,
        }
    }

    /// Pure news: one of the two rates is zero.
    pub fn is_pure(spec: &ProjectSpec) -> bool {
        spec.rate_good.min(spec.rate_bad) == 0.0 && spec.max_rate() > 0.0
    }

    pub fn label(self) -> &'static str {
        match self {
            NewsRegime::GoodNews => "good",
            NewsRegime::BadNews => "bad",
            NewsRegime::Balanced => "balanced",
        }
    }
}

impl fmt::Display for NewsRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Classify the scenario by the common sign of `rate_good - rate_bad`.
///
/// A safe low project carries no information, so only the high project's
/// rates matter in that case.
pub fn classify_regime(scenario: &Scenario) -> Result<NewsRegime> {
    let high = NewsRegime::of(&scenario.high);
    if scenario.low.is_safe() {
        return Ok(high);
    }
    let low = NewsRegime::of(&scenario.low);
    if low != high {
        return Err(Error::MixedRegime {
            low_diff: scenario.low.rate_gap(),
            high_diff: scenario.high.rate_gap(),
        });
    }
    Ok(high)
}

// ---------------------------------------------------------------------------
// Beliefs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolution {
    Unknown,
    KnownGood,
    KnownBad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Valence {
    Good,
    Bad,
}

/// A conclusive signal about one project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct News {
    pub project: ProjectId,
    pub valence: Valence,
}

impl News {
    pub fn new(project: ProjectId, valence: Valence) -> Self {
        Self { project, valence }
    }
}

/// Posterior beliefs on both projects plus resolution flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub p_low: f64,
    pub p_high: f64,
    pub resolved_low: Resolution,
    pub resolved_high: Resolution,
}

impl BeliefState {
    /// Beliefs with flags derived from the probabilities: exactly 1 is known
    /// good, exactly 0 is known bad.
    pub fn new(p_low: f64, p_high: f64) -> Self {
        let flag = |p: f64| {
            if p >= 1.0 {
                Resolution::KnownGood
            } else if p <= 0.0 {
                Resolution::KnownBad
            } else {
                Resolution::Unknown
            }
        };
        Self { p_low, p_high, resolved_low: flag(p_low), resolved_high: flag(p_high) }
    }

    pub fn p(&self, id: ProjectId) -> f64 {
        match id {
            ProjectId::Low => self.p_low,
            ProjectId::High => self.p_high,
        }
    }

    pub fn set_p(&mut self, id: ProjectId, p: f64) {
        match id {
            ProjectId::Low => self.p_low = p,
            ProjectId::High => self.p_high = p,
        }
    }

    pub fn resolution(&self, id: ProjectId) -> Resolution {
        match id {
            ProjectId::Low => self.resolved_low,
            ProjectId::High => self.resolved_high,
        }
    }

    fn set_resolution(&mut self, id: ProjectId, r: Resolution) {
        match id {
            ProjectId::Low => self.resolved_low = r,
            ProjectId::High => self.resolved_high = r,
        }
    }

    pub fn is_resolved(&self, id: ProjectId) -> bool {
        self.resolution(id) != Resolution::Unknown
    }

    pub fn unresolved(&self) -> impl Iterator<Item = ProjectId> + '_ {
        ProjectId::BOTH.into_iter().filter(|id| !self.is_resolved(*id))
    }

    /// Beliefs after `t` units of time without news, with attention split
    /// `(attention_low, attention_high)`.
    pub fn drift(&self, scenario: &Scenario, attention: (f64, f64), t: f64) -> BeliefState {
        let mut next = *self;
        for (id, a) in [(ProjectId::Low, attention.0), (ProjectId::High, attention.1)] {
            if !self.is_resolved(id) {
                let spec = scenario.project(id);
                next.set_p(id, drift_posterior(self.p(id), spec.rate_good, spec.rate_bad, a, t));
            }
        }
        next
    }

    pub fn invariants_hold(&self) -> bool {
        let ok = |p: f64, r: Resolution| {
            (0.0..=1.0).contains(&p)
                && match r {
                    Resolution::KnownGood => p == 1.0,
                    Resolution::KnownBad => p == 0.0,
                    Resolution::Unknown => true,
                }
        };
        ok(self.p_low, self.resolved_low) && ok(self.p_high, self.resolved_high)
    }
}

/// Apply a conclusive news event.
pub fn jump_posterior(state: &BeliefState, event: News) -> Result<BeliefState> {
    if state.is_resolved(event.project) {
        return Err(Error::AlreadyResolved(event.project));
    }
    let mut next = *state;
    let (p, flag) = match event.valence {
        Valence::Good => (1.0, Resolution::KnownGood),
        Valence::Bad => (0.0, Resolution::KnownBad),
    };
    next.set_p(event.project, p);
    next.set_resolution(event.project, flag);
    Ok(next)
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(DRIFT_CLAMP, 1.0 - DRIFT_CLAMP);
    (p / (1.0 - p)).ln()
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Posterior after `t` units of no news while paying `attention` to a
/// project with the given news rates.
pub fn drift_posterior(p: f64, rate_good: f64, rate_bad: f64, attention: f64, t: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return p;
    }
    let shift = (rate_bad - rate_good) * attention * t;
    if shift == 0.0 {
        return p;
    }
    logistic(logit(p) + shift)
}

/// Time without news for the posterior to move from `from` to `to` under
/// constant attention. `Infinite` when the drift never reaches `to`.
pub fn drift_time(from: f64, to: f64, rate_good: f64, rate_bad: f64, attention: f64) -> TimeSpan {
    if from == to {
        return TimeSpan::Finite(0.0);
    }
    let speed = (rate_bad - rate_good) * attention;
    if speed == 0.0 || !(0.0 < to && to < 1.0) || !(0.0 < from && from < 1.0) {
        return TimeSpan::Infinite;
    }
    let t = (logit(to) - logit(from)) / speed;
    if t >= 0.0 {
        TimeSpan::Finite(t)
    } else {
        TimeSpan::Infinite
    }
}

/// Expected discount `E[e^{-r τ}]` at an exponential news time of rate `lam`.
pub fn expected_discount(r: f64, lam: f64) -> f64 {
    if lam.is_infinite() {
        return 1.0;
    }
    lam / (r + lam)
}

/// The myopically optimal project.
pub fn favorable(state: &BeliefState, scenario: &Scenario) -> Favorable {
    let low = state.p_low * scenario.low.reward;
    let high = state.p_high * scenario.high.reward;
    match low.partial_cmp(&high) {
        Some(Ordering::Greater) => Favorable::Low,
        Some(Ordering::Less) => Favorable::High,
        _ => Favorable::Both,
    }
}

// ---------------------------------------------------------------------------
// Allocations
// ---------------------------------------------------------------------------

/// Attention (exploration) and investment (exploitation) split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub explore_low: f64,
    pub explore_high: f64,
    pub exploit_low: f64,
    pub exploit_high: f64,
}

impl Allocation {
    /// Whole attention budget on `explore`, whole investment on `exploit`.
    pub fn pure(explore: ProjectId, exploit: ProjectId) -> Self {
        let unit = |id: ProjectId, target: ProjectId| if id == target { 1.0 } else { 0.0 };
        Self {
            explore_low: unit(ProjectId::Low, explore),
            explore_high: unit(ProjectId::High, explore),
            exploit_low: unit(ProjectId::Low, exploit),
            exploit_high: unit(ProjectId::High, exploit),
        }
    }

    /// Exploit `exploit`, give it exactly `alpha` attention and the rest to
    /// the other project.
    pub fn constrained(exploit: ProjectId, alpha: f64) -> Self {
        let mut alloc = Self::pure(exploit.other(), exploit);
        alloc.set_explore(exploit, alpha);
        alloc.set_explore(exploit.other(), 1.0 - alpha);
        alloc
    }

    /// Explore and exploit the low project with weight `low_share`, the high
    /// project with the rest.
    pub fn split(low_share: f64) -> Self {
        Self {
            explore_low: low_share,
            explore_high: 1.0 - low_share,
            exploit_low: low_share,
            exploit_high: 1.0 - low_share,
        }
    }

    pub fn explore(&self, id: ProjectId) -> f64 {
        match id {
            ProjectId::Low => self.explore_low,
            ProjectId::High => self.explore_high,
        }
    }

    pub fn exploit(&self, id: ProjectId) -> f64 {
        match id {
            ProjectId::Low => self.exploit_low,
            ProjectId::High => self.exploit_high,
        }
    }

    fn set_explore(&mut self, id: ProjectId, v: f64) {
        match id {
            ProjectId::Low => self.explore_low = v,
            ProjectId::High => self.explore_high = v,
        }
    }

    pub fn attention(&self) -> (f64, f64) {
        (self.explore_low, self.explore_high)
    }

    /// Project receiving the larger share of attention (ties go to High).
    pub fn explored(&self) -> ProjectId {
        if self.explore_low > self.explore_high {
            ProjectId::Low
        } else {
            ProjectId::High
        }
    }

    /// Project receiving the larger share of investment (ties go to High).
    pub fn exploited(&self) -> ProjectId {
        if self.exploit_low > self.exploit_high {
            ProjectId::Low
        } else {
            ProjectId::High
        }
    }

    /// Unit budgets and the entanglement constraint.
    pub fn check(&self, alpha: f64) -> Result<()> {
        let parts = [self.explore_low, self.explore_high, self.exploit_low, self.exploit_high];
        if parts.iter().any(|v| !(-BUDGET_TOL..=1.0 + BUDGET_TOL).contains(v)) {
            return Err(Error::Precondition(format!("allocation share outside [0,1]: {self:?}")));
        }
        if (self.explore_low + self.explore_high - 1.0).abs() > BUDGET_TOL {
            return Err(Error::Precondition(format!("attention budget does not sum to 1: {self:?}")));
        }
        if (self.exploit_low + self.exploit_high - 1.0).abs() > BUDGET_TOL {
            return Err(Error::Precondition(format!("investment budget does not sum to 1: {self:?}")));
        }
        for id in ProjectId::BOTH {
            if self.exploit(id) >= 1.0 - BUDGET_TOL && self.explore(id) < alpha - BUDGET_TOL {
                return Err(Error::Precondition(format!(
                    "exploited project {id} receives {} attention, below alpha = {alpha}",
                    self.explore(id)
                )));
            }
        }
        Ok(())
    }
}
