//! Closed-form quantities: cutoffs, payoff formulas, information indices,
//! indifference times and switch points.
//!
//! Payoffs are flow-normalized: a perpetual reward flow `R` is worth `R`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{expected_discount, favorable, BeliefState, Favorable, NewsRegime, ProjectId, ProjectSpec, Scenario, TimeSpan};

// ---------------------------------------------------------------------------
// Safe-project case
// ---------------------------------------------------------------------------

/// Odds against a project being good, `(1 - p) / p`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct OddsRatio {
    pub value: f64,
}

impl OddsRatio {
    pub fn of(p: f64) -> Self {
        Self { value: (1.0 - p) / p }
    }
}

fn omega(p: f64) -> f64 {
    OddsRatio::of(p).value
}

/// Myopic exploitation cutoff `R_L / R_H` for a scenario with a safe low project.
pub fn myopic_cutoff(scenario: &Scenario) -> Result<f64> {
    if !scenario.has_safe_low() {
        return Err(Error::Precondition("myopic cutoff needs a safe low project".into()));
    }
    Ok(scenario.low.reward / scenario.high.reward)
}

/// Posterior above which the risky project is exploited under the
/// entanglement constraint `alpha`. `lam` is the larger of the risky
/// project's two news rates.
pub fn cutoff_pbar(alpha: f64, r: f64, lam: f64, rl: f64, rh: f64) -> f64 {
    (r + lam * (1.0 - alpha)) * rl / ((r + lam) * rh - lam * alpha * rl)
}

/// Flow gain from briefly deviating to exploit the risky project.
pub fn deviation_gain_rate(p: f64, alpha: f64, r: f64, lam: f64, rl: f64, rh: f64) -> f64 {
    -r * (rl - p * rh) + p * lam * alpha * (r / (r + (1.0 - alpha) * lam)) * (rh - rl)
}

/// [`cutoff_pbar`] for a safe-low scenario.
pub fn scenario_cutoff(scenario: &Scenario) -> Result<f64> {
    myopic_cutoff(scenario)?;
    Ok(cutoff_pbar(
        scenario.alpha,
        scenario.discount,
        scenario.high.max_rate(),
        scenario.low.reward,
        scenario.high.reward,
    ))
}

fn require_pure(regime: NewsRegime) -> Result<()> {
    if regime == NewsRegime::Balanced {
        return Err(Error::Precondition("payoff formula is stated for pure good or bad news".into()));
    }
    Ok(())
}

/// Expected payoff with full disentanglement (`alpha = 0`), safe low
/// project, pure news at rate `lam`.
pub fn payoff_disentangled(p: f64, r: f64, lam: f64, regime: NewsRegime, rl: f64, rh: f64) -> Result<f64> {
    require_pure(regime)?;
    if p <= 0.0 {
        return Ok(rl);
    }
    if p >= 1.0 {
        return Ok(rh);
    }
    let p0 = rl / rh;
    let rho = expected_discount(r, lam);
    let exponent = r / lam;
    // at p0 the bad-news branches agree; the upper one is alpha-free, so
    // take it there to keep the difference to the entangled payoff exact
    Ok(match regime {
        NewsRegime::GoodNews if p <= p0 => rl + p * rho * (rh - rl),
        NewsRegime::GoodNews => p * rh + (1.0 - p) * (omega(p) / omega(p0)).powf(exponent) * rho * rl,
        _ if p < p0 => rl + p * (omega(p0) / omega(p)).powf(exponent) * rho * (rh - rl),
        _ => p * rh + (1.0 - p) * rho * rl,
    })
}

/// Expected payoff with full entanglement (`alpha = 1`), safe low project,
/// pure news at rate `lam`.
pub fn payoff_entangled(p: f64, r: f64, lam: f64, regime: NewsRegime, rl: f64, rh: f64) -> Result<f64> {
    require_pure(regime)?;
    let p1 = cutoff_pbar(1.0, r, lam, rl, rh);
    if p <= p1 {
        return Ok(rl);
    }
    if p >= 1.0 {
        return Ok(rh);
    }
    let rho = expected_discount(r, lam);
    Ok(match regime {
        NewsRegime::GoodNews => {
            let decay = (omega(p) / omega(p1)).powf(r / lam);
            p * rh + (1.0 - p) / (1.0 - p1) * decay * (rl - p1 * rh)
        }
        _ => p * rh + (1.0 - p) * rho * rl,
    })
}

/// Expected payoff under the `alpha` constraint with balanced news at rate
/// `lam` and a safe low project.
pub fn payoff_balanced_constrained(p: f64, alpha: f64, r: f64, lam: f64, rl: f64, rh: f64) -> f64 {
    if p >= cutoff_pbar(alpha, r, lam, rl, rh) {
        p * rh + (1.0 - p) * expected_discount(r, lam) * rl
    } else {
        let eff = lam * (1.0 - alpha);
        rl + p * eff / (r + eff) * (rh - rl)
    }
}

/// Optimal `alpha = 0` payoff with a safe low project for arbitrary news
/// rates `(g, b)` of the risky project.
///
/// The policy explores the risky project throughout and exploits it iff
/// `p >= R_L/R_H`; the value is assembled from the drift time to that cutoff.
pub fn safe_payoff_disentangled(p: f64, r: f64, g: f64, b: f64, rl: f64, rh: f64) -> f64 {
    if p <= 0.0 {
        return rl;
    }
    if p >= 1.0 {
        return rh;
    }
    let p0 = rl / rh;
    let (rho_g, rho_b) = (expected_discount(r, g), expected_discount(r, b));
    if g == b {
        return payoff_balanced_constrained(p, 0.0, r, g, rl, rh);
    }
    let tbar = |from: f64| {
        // drift time from `from` to p0 under full attention
        let t = ((omega(p0)).ln() - (omega(from)).ln()) / (g - b);
        t.max(0.0)
    };
    if g > b {
        if p < p0 {
            return rl + p * rho_g * (rh - rl);
        }
        let t = tbar(p);
        let w = (-r * t).exp();
        let (zg, zb) = ((-g * t).exp(), (-b * t).exp());
        p * (rh - zg * w * (1.0 - rho_g) * (rh - rl)) + (1.0 - p) * rl * (rho_b * (1.0 - zb * w) + zb * w)
    } else {
        if p >= p0 {
            return p * rh + (1.0 - p) * rho_b * rl;
        }
        let t = tbar(p);
        let w = (-r * t).exp();
        let (zg, zb) = ((-g * t).exp(), (-b * t).exp());
        p * (rl + (rh - rl) * (rho_g * (1.0 - zg * w) + zg * w)) + (1.0 - p) * (rl - zb * w * (1.0 - rho_b) * rl)
    }
}

/// Payoffs with and without the entanglement constraint and their
/// normalized difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafeCasePayoffs {
    pub pi_alpha0: f64,
    pub pi_alpha1: f64,
    pub delta_pi_normalized: f64,
}

/// Normalized value of disentanglement. Only the ratio `r / lam` matters,
/// so the formulas are evaluated at `lam = 1`.
pub fn delta_pi(p: f64, r_over_lam: f64, regime: NewsRegime, rl: f64, rh: f64) -> Result<SafeCasePayoffs> {
    let pi_alpha0 = payoff_disentangled(p, r_over_lam, 1.0, regime, rl, rh)?;
    let pi_alpha1 = payoff_entangled(p, r_over_lam, 1.0, regime, rl, rh)?;
    Ok(SafeCasePayoffs {
        pi_alpha0,
        pi_alpha1,
        delta_pi_normalized: (pi_alpha0 - pi_alpha1) / (p * rh + (1.0 - p) * rl),
    })
}

const ARGMAX_SCAN: f64 = 1e-4;

/// Prior maximizing [`delta_pi`]: uniform scan at `1e-4`, then golden
/// section around the best scan point. Ties go to the smaller prior.
pub fn delta_pi_argmax(regime: NewsRegime, r_over_lam: f64, rl: f64, rh: f64) -> Result<f64> {
    require_pure(regime)?;
    let f = |p: f64| delta_pi(p, r_over_lam, regime, rl, rh).map(|d| d.delta_pi_normalized).unwrap_or(f64::NAN);
    let n = (1.0 / ARGMAX_SCAN).round() as usize;
    let mut best = (1, f64::NEG_INFINITY);
    for i in 1..n {
        let v = f(i as f64 * ARGMAX_SCAN);
        if v > best.1 {
            best = (i, v);
        }
    }
    let (mut a, mut b) = ((best.0 - 1) as f64 * ARGMAX_SCAN, (best.0 + 1) as f64 * ARGMAX_SCAN);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let refined = 0.5 * (a + b);
    let scan_p = best.0 as f64 * ARGMAX_SCAN;
    Ok(if f(refined) > best.1 { refined } else { scan_p })
}

// ---------------------------------------------------------------------------
// Two risky projects: balanced news
// ---------------------------------------------------------------------------

/// Preferred project, with exact ties reported as `Either`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preference {
    Low,
    High,
    Either,
}

impl Preference {
    pub fn or(self, tie: ProjectId) -> ProjectId {
        match self {
            Preference::Low => ProjectId::Low,
            Preference::High => ProjectId::High,
            Preference::Either => tie,
        }
    }

    fn compare(low: f64, high: f64) -> Self {
        if low > high {
            Preference::Low
        } else if high > low {
            Preference::High
        } else {
            Preference::Either
        }
    }
}

/// Success probability adjusted upward for an unfavorable project: the
/// probability at which it would just match the other project's value.
pub fn adjusted_prob(scenario: &Scenario, state: &BeliefState, x: ProjectId) -> f64 {
    let y = x.other();
    let px = state.p(x);
    if favorable(state, scenario).includes(x) {
        return px;
    }
    (state.p(y) * scenario.project(y).reward / scenario.project(x).reward).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancedIndexReport {
    pub index_low: f64,
    pub index_high: f64,
    pub adjusted_p_low: f64,
    pub adjusted_p_high: f64,
    pub explored_first: Preference,
}

/// Information index `lam_z (1 - p~_z)` for balanced news with `alpha = 0`.
pub fn balanced_index(scenario: &Scenario, state: &BeliefState) -> Result<BalancedIndexReport> {
    if scenario.regime() != NewsRegime::Balanced {
        return Err(Error::Precondition("balanced index needs balanced news".into()));
    }
    let index = |id: ProjectId, pt: f64| {
        if state.is_resolved(id) {
            0.0
        } else {
            scenario.project(id).rate_good * (1.0 - pt)
        }
    };
    let adjusted_p_low = adjusted_prob(scenario, state, ProjectId::Low);
    let adjusted_p_high = adjusted_prob(scenario, state, ProjectId::High);
    let index_low = index(ProjectId::Low, adjusted_p_low);
    let index_high = index(ProjectId::High, adjusted_p_high);
    Ok(BalancedIndexReport {
        index_low,
        index_high,
        adjusted_p_low,
        adjusted_p_high,
        explored_first: Preference::compare(index_low, index_high),
    })
}

/// Value of exploring `first` until news and then the other project, under
/// balanced news with `alpha = 0`.
pub fn balanced_sequential_value(scenario: &Scenario, state: &BeliefState, first: ProjectId) -> f64 {
    let r = scenario.discount;
    let rho = |id: ProjectId| {
        if state.is_resolved(id) {
            0.0
        } else {
            expected_discount(r, scenario.project(id).rate_good)
        }
    };
    let v = |id: ProjectId| state.p(id) * scenario.project(id).reward;
    let e0 = v(ProjectId::Low).max(v(ProjectId::High));
    let learn = |x: ProjectId| {
        let (px, rx, vy) = (state.p(x), scenario.project(x).reward, v(x.other()));
        px * rx.max(vy) + (1.0 - px) * vy
    };
    let e_star = {
        let (ph, rh) = (state.p_high, scenario.high.reward);
        let (pl, rl) = (state.p_low, scenario.low.reward);
        ph * rh.max(pl * rl) + (1.0 - ph) * pl * rl
    };
    let (rx, ry) = (rho(first), rho(first.other()));
    (1.0 - rx) * e0 + rx * (1.0 - ry) * learn(first) + rx * ry * e_star
}

// ---------------------------------------------------------------------------
// No-index cycle
// ---------------------------------------------------------------------------

/// Ranges for the random cycle search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSearchBox {
    pub prior: (f64, f64),
    pub reward: (f64, f64),
    pub rate: (f64, f64),
    pub draws: usize,
    pub seed: u64,
}

impl Default for CycleSearchBox {
    fn default() -> Self {
        Self { prior: (0.05, 0.95), reward: (1.0, 20.0), rate: (0.2, 10.0), draws: 2_000_000, seed: 7 }
    }
}

/// The three inequality groups of the cycle construction, for projects
/// labelled 1, 2, 3 in order.
pub fn cycle_inequality_groups(triple: &[ProjectSpec; 3]) -> [bool; 3] {
    let [a, b, c] = triple;
    let v = |s: &ProjectSpec| s.prior_good * s.reward;
    let lam = |s: &ProjectSpec| s.rate_good;
    [
        v(b) > v(a) && lam(b) * (1.0 - b.prior_good) < lam(a) * (1.0 - v(b) / a.reward),
        v(b) > c.reward && c.reward > v(c) && v(c) > v(a),
        lam(c) * (1.0 - c.prior_good) > lam(a) * (1.0 - v(c) / a.reward),
    ]
}

/// Which of two balanced projects is explored first when they face each
/// other, or `None` if they cannot form a scenario or tie.
pub fn pairwise_preference(x: &ProjectSpec, y: &ProjectSpec) -> Option<usize> {
    let (low, high, x_is_low) = if x.reward < y.reward { (x, y, true) } else { (y, x, false) };
    let scenario = Scenario::new(*low, *high, 1.0, 0.0).ok()?;
    let report = balanced_index(&scenario, &scenario.prior_state()).ok()?;
    match (report.explored_first, x_is_low) {
        (Preference::Either, _) => None,
        (Preference::Low, true) | (Preference::High, false) => Some(0),
        _ => Some(1),
    }
}

/// Pairwise checks: 1 beats 2, 2 beats 3, 3 beats 1.
pub fn verify_cycle(triple: &[ProjectSpec; 3]) -> bool {
    let [a, b, c] = triple;
    pairwise_preference(a, b) == Some(0) && pairwise_preference(b, c) == Some(0) && pairwise_preference(c, a) == Some(0)
}

/// Search the box for three balanced projects whose pairwise exploration
/// preferences form a cycle.
pub fn find_no_index_cycle(search: &CycleSearchBox) -> Result<[ProjectSpec; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut draw = |range: (f64, f64)| {
        if range.0 == range.1 {
            range.0
        } else {
            rng.random_range(range.0..range.1)
        }
    };
    for _ in 0..search.draws {
        let mut project = || {
            let (p, r, l) = (draw(search.prior), draw(search.reward), draw(search.rate));
            ProjectSpec::balanced(p, r, l)
        };
        let (Ok(a), Ok(b), Ok(c)) = (project(), project(), project()) else { continue };
        let triple = [a, b, c];
        if cycle_inequality_groups(&triple).iter().all(|g| *g) && verify_cycle(&triple) {
            return Ok(triple);
        }
    }
    Err(Error::NoCycle { draws: search.draws })
}

// ---------------------------------------------------------------------------
// Two risky projects: good and bad news
// ---------------------------------------------------------------------------

/// No-news exploration time of `x` until its expected value `p_x R_x`
/// falls to `other_expected`.
pub fn indifference_time_tbar(x: &ProjectSpec, p_x: f64, other_expected: f64) -> TimeSpan {
    if p_x * x.reward <= other_expected {
        return TimeSpan::Finite(0.0);
    }
    let gap = x.rate_gap();
    if gap <= 0.0 || p_x >= 1.0 || other_expected <= 0.0 {
        return TimeSpan::Infinite;
    }
    let q = other_expected;
    TimeSpan::Finite((p_x * (x.reward - q) / (q * (1.0 - p_x))).ln() / gap)
}

/// Switch-point function: positive where exploring the favorable `x`
/// beats switching to `y`.
pub fn claim1_d(x: &ProjectSpec, y: &ProjectSpec, p: f64) -> f64 {
    x.rate_bad * (1.0 - p) - y.rate_good * (1.0 - p * x.reward / y.reward)
}

/// Root of [`claim1_d`] in `(0, min(1, R_y/R_x))`, the range where `x`
/// can still be favorable.
pub fn claim1_switch_probability(x: &ProjectSpec, y: &ProjectSpec) -> Result<Option<f64>> {
    let slope = y.rate_good * x.reward / y.reward - x.rate_bad;
    if slope == 0.0 {
        return Err(Error::NonGenericSlope);
    }
    let root = (y.rate_good - x.rate_bad) / slope;
    let upper = (y.reward / x.reward).min(1.0);
    Ok((root > 0.0 && root < upper).then_some(root))
}

/// Whether `state` lies in the region covered by the initial-choice
/// inequality: pure good news and `p_L R_L < p_H R_H < R_L`.
pub fn claim2_applies(scenario: &Scenario, state: &BeliefState) -> bool {
    let (vl, vh) = (state.p_low * scenario.low.reward, state.p_high * scenario.high.reward);
    scenario.low.rate_bad == 0.0
        && scenario.high.rate_bad == 0.0
        && scenario.regime() == NewsRegime::GoodNews
        && !state.is_resolved(ProjectId::Low)
        && !state.is_resolved(ProjectId::High)
        && vl < vh
        && vh < scenario.low.reward
}

/// Terms of the initial-choice inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Claim2Terms {
    pub tbar_high: f64,
    pub w: f64,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn claim2_terms(scenario: &Scenario, state: &BeliefState) -> Result<Claim2Terms> {
    if !claim2_applies(scenario, state) {
        return Err(Error::Precondition(
            "initial-choice inequality needs pure good news and p_L R_L < p_H R_H < R_L".into(),
        ));
    }
    let r = scenario.discount;
    let (l, h) = (&scenario.low, &scenario.high);
    let tbar_high = indifference_time_tbar(h, state.p_high, state.p_low * l.reward).as_f64();
    let w = (-r * tbar_high).exp();
    let rho_l = expected_discount(r, l.rate_good);
    let p_tilde_l = state.p_high * h.reward / l.reward;
    let lhs = h.rate_good * (w - rho_l) / (1.0 - rho_l) * (1.0 - state.p_high);
    let rhs = l.rate_good * (1.0 - p_tilde_l);
    Ok(Claim2Terms { tbar_high, w, lhs, rhs })
}

/// True when exploring H first is optimal.
pub fn claim2_explore_high_first(scenario: &Scenario, state: &BeliefState) -> Result<bool> {
    claim2_terms(scenario, state).map(|t| t.lhs >= t.rhs)
}

/// Threshold on `p_L` at which bad-news exploration moves from L to H: the
/// fixed point where both information indices coincide.
pub fn hat_p_l(scenario: &Scenario) -> Result<f64> {
    if scenario.regime() != NewsRegime::BadNews {
        return Err(Error::Precondition("threshold is defined for bad news".into()));
    }
    let lb = scenario.low.rate_bad;
    let hg = scenario.high.rate_good;
    if lb <= hg {
        return Ok(0.0);
    }
    let ratio = scenario.low.reward / scenario.high.reward;
    Ok(((lb - hg) / (lb - hg * ratio)).clamp(0.0, 1.0))
}

/// Classical index `pR(r + lam) / (r + p lam)`.
pub fn gittins_index_classical(p: f64, reward: f64, lam: f64, r: f64) -> f64 {
    p * reward * (r + lam) / (r + p * lam)
}

/// Whether x is favorable in the sense of [`favorable`], ties to `tie`.
pub fn favorable_or(scenario: &Scenario, state: &BeliefState, tie: ProjectId) -> ProjectId {
    match favorable(state, scenario) {
        Favorable::Both => tie,
        f => f.or(tie),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const R: f64 = 1.0;
    const LAM: f64 = 5.0;
    const RL: f64 = 10.0;
    const RH: f64 = 15.0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn cutoffs() {
        assert!(close(cutoff_pbar(0.0, R, LAM, RL, RH), 2.0 / 3.0, 1e-15));
        assert!(close(cutoff_pbar(1.0, R, LAM, RL, RH), 0.25, 1e-15));
        assert!(close(cutoff_pbar(1.0, 1e12, LAM, RL, RH), 2.0 / 3.0, 1e-9));
        for a in [0.0, 0.3, 0.7, 1.0] {
            let p = cutoff_pbar(a, R, LAM, RL, RH);
            assert!(deviation_gain_rate(p, a, R, LAM, RL, RH).abs() < 1e-12);
        }
        assert!(deviation_gain_rate(0.5, 0.0, R, LAM, RL, RH) < 0.0);
        assert!(deviation_gain_rate(2.0 / 3.0, 1.0, R, LAM, RL, RH) > 0.0);
    }

    #[test]
    fn myopic_cutoff_needs_safe_low() {
        let low = ProjectSpec::safe(10.0).unwrap();
        let high = ProjectSpec::new(0.5, 15.0, 5.0, 0.0).unwrap();
        let s = Scenario::new(low, high, 1.0, 0.0).unwrap();
        assert!(close(myopic_cutoff(&s).unwrap(), 2.0 / 3.0, 1e-15));
        let risky = Scenario::new(ProjectSpec::new(0.5, 10.0, 1.0, 0.0).unwrap(), high, 1.0, 0.0).unwrap();
        assert!(myopic_cutoff(&risky).is_err());
    }

    #[test]
    fn prop_a_examples() {
        let v = payoff_disentangled(0.5, R, LAM, NewsRegime::GoodNews, RL, RH).unwrap();
        assert!(close(v, 10.0 + 0.5 * (5.0 / 6.0) * 5.0, 1e-12));
        assert_eq!(payoff_disentangled(1.0, R, LAM, NewsRegime::GoodNews, RL, RH).unwrap(), RH);
        assert!(payoff_disentangled(0.5, R, LAM, NewsRegime::Balanced, RL, RH).is_err());
    }

    #[test]
    fn prop_b_examples() {
        // Omega(0.5)/Omega(0.25) = 1/3, exponent 0.2
        let want = 7.5 + 0.5 / 0.75 * (1.0f64 / 3.0).powf(0.2) * (10.0 - 0.25 * 15.0);
        let v = payoff_entangled(0.5, R, LAM, NewsRegime::GoodNews, RL, RH).unwrap();
        assert!(close(v, want, 1e-12));
        assert!(close(v, 10.845, 1e-3));
        for regime in [NewsRegime::GoodNews, NewsRegime::BadNews] {
            assert_eq!(payoff_entangled(0.2, R, LAM, regime, RL, RH).unwrap(), RL);
        }
        let v = payoff_entangled(0.5, R, LAM, NewsRegime::BadNews, RL, RH).unwrap();
        assert!(close(v, 7.5 + 0.5 * 5.0 / 6.0 * 10.0, 1e-12));
    }

    #[test]
    fn delta_pi_examples() {
        let d = delta_pi(0.5, 0.2, NewsRegime::GoodNews, RL, RH).unwrap();
        assert!(close(d.delta_pi_normalized, (12.083333333333334 - 10.845) / 12.5, 1e-4));
        assert!(close(d.delta_pi_normalized, 0.099, 1e-3));
        for p in [0.7, 0.8, 0.99] {
            let d = delta_pi(p, 0.2, NewsRegime::BadNews, RL, RH).unwrap();
            assert!(d.delta_pi_normalized.abs() < 1e-12);
        }
    }

    #[test]
    fn delta_pi_argmax_locations() {
        let p1 = cutoff_pbar(1.0, 0.2, 1.0, RL, RH);
        let g = delta_pi_argmax(NewsRegime::GoodNews, 0.2, RL, RH).unwrap();
        assert!(g > p1 && g < 2.0 / 3.0);
        let b = delta_pi_argmax(NewsRegime::BadNews, 0.2, RL, RH).unwrap();
        assert!(close(b, p1, 1e-4), "{b} vs {p1}");
    }

    #[test]
    fn balanced_constrained_examples() {
        let a0 = payoff_balanced_constrained(0.5, 0.0, R, LAM, RL, RH);
        let pa = payoff_disentangled(0.5, R, LAM, NewsRegime::GoodNews, RL, RH).unwrap();
        assert!(close(a0, pa, 1e-12));
        assert!(close(payoff_balanced_constrained(1.0, 0.4, R, LAM, RL, RH), RH, 1e-12));
        // above the cutoff for every alpha beyond alpha*, the value is constant
        let p = 0.5;
        let v1 = payoff_balanced_constrained(p, 0.8, R, LAM, RL, RH);
        let v2 = payoff_balanced_constrained(p, 1.0, R, LAM, RL, RH);
        assert!(cutoff_pbar(0.8, R, LAM, RL, RH) < p);
        assert!(close(v1, v2, 1e-12));
    }

    #[test]
    fn general_safe_value_reduces_to_pure_formulas() {
        for p in [0.1, 0.4, 0.66, 0.7, 0.95] {
            let g = safe_payoff_disentangled(p, R, LAM, 0.0, RL, RH);
            let ga = payoff_disentangled(p, R, LAM, NewsRegime::GoodNews, RL, RH).unwrap();
            assert!(close(g, ga, 1e-12), "good p={p}: {g} vs {ga}");
            let b = safe_payoff_disentangled(p, R, 0.0, LAM, RL, RH);
            let ba = payoff_disentangled(p, R, LAM, NewsRegime::BadNews, RL, RH).unwrap();
            assert!(close(b, ba, 1e-12), "bad p={p}: {b} vs {ba}");
        }
    }

    #[test]
    fn general_safe_value_continuous_at_cutoff() {
        let p0 = RL / RH;
        for (g, b) in [(3.0, 1.0), (1.0, 4.0)] {
            let lo = safe_payoff_disentangled(p0 - 1e-12, R, g, b, RL, RH);
            let hi = safe_payoff_disentangled(p0 + 1e-12, R, g, b, RL, RH);
            assert!(close(lo, hi, 1e-9));
        }
    }

    fn balanced_pair(pl: f64, rl: f64, ll: f64, ph: f64, rh: f64, lh: f64) -> Scenario {
        Scenario::new(
            ProjectSpec::balanced(pl, rl, ll).unwrap(),
            ProjectSpec::balanced(ph, rh, lh).unwrap(),
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn adjusted_prob_examples() {
        let s = balanced_pair(0.9, 10.0, 1.0, 0.3, 15.0, 1.0);
        let st = s.prior_state();
        assert_eq!(adjusted_prob(&s, &st, ProjectId::Low), 0.9);
        assert!(close(adjusted_prob(&s, &st, ProjectId::High), 0.6, 1e-15));
        let s = balanced_pair(0.9, 10.0, 1.0, 0.3, 15.0, 1.0);
        let st = BeliefState::new(0.9, 0.6);
        assert_eq!(adjusted_prob(&s, &st, ProjectId::High), 0.6);
        assert_eq!(adjusted_prob(&s, &st, ProjectId::Low), 0.9);
        let s = balanced_pair(0.5, 10.0, 1.0, 0.9, 15.0, 1.0);
        assert_eq!(adjusted_prob(&s, &s.prior_state(), ProjectId::Low), 1.0);
    }

    #[test]
    fn balanced_index_examples() {
        let s = Scenario::new(ProjectSpec::safe(10.0).unwrap(), ProjectSpec::balanced(0.5, 15.0, 2.0).unwrap(), 1.0, 0.0)
            .unwrap();
        let rep = balanced_index(&s, &s.prior_state()).unwrap();
        assert_eq!(rep.index_low, 0.0);
        assert_eq!(rep.explored_first, Preference::High);

        let s = balanced_pair(0.8, 10.0, 2.0, 0.4, 15.0, 2.0);
        let rep = balanced_index(&s, &s.prior_state()).unwrap();
        assert!(rep.adjusted_p_high <= rep.adjusted_p_low);
        assert_eq!(rep.explored_first, Preference::High);

        let a = balanced_index(&balanced_pair(0.3, 10.0, 2.0, 0.5, 15.0, 2.0), &BeliefState::new(0.3, 0.5)).unwrap();
        let b = balanced_index(&balanced_pair(0.3, 10.0, 2.0, 0.6, 15.0, 2.0), &BeliefState::new(0.3, 0.6)).unwrap();
        assert!(b.index_high < a.index_high);
    }

    #[test]
    fn sequential_value_examples() {
        let s = balanced_pair(0.4, 10.0, 3.0, 0.5, 15.0, 0.5);
        let st = s.prior_state();
        let (vl, vh) = (
            balanced_sequential_value(&s, &st, ProjectId::Low),
            balanced_sequential_value(&s, &st, ProjectId::High),
        );
        let rep = balanced_index(&s, &st).unwrap();
        assert_eq!(vl > vh, rep.explored_first == Preference::Low);

        let fast = balanced_pair(0.4, 10.0, 1e12, 0.5, 15.0, 1e12);
        let e_star = 0.5 * 15.0 + 0.5 * 0.4 * 10.0;
        assert!(close(balanced_sequential_value(&fast, &st, ProjectId::Low), e_star, 1e-9));
        assert!(close(balanced_sequential_value(&fast, &st, ProjectId::High), e_star, 1e-9));
    }

    #[test]
    fn reference_cycle_triple() {
        let triple = [
            ProjectSpec::balanced(0.3, 10.0, 1.0).unwrap(),
            ProjectSpec::balanced(0.8, 5.0, 2.0).unwrap(),
            ProjectSpec::balanced(0.9, 3.8, 7.0).unwrap(),
        ];
        assert_eq!(cycle_inequality_groups(&triple), [true, true, true]);
        assert!(verify_cycle(&triple));
    }

    #[test]
    fn cycle_search_finds_verified_triple() {
        let found = find_no_index_cycle(&CycleSearchBox { draws: 200_000, ..Default::default() }).unwrap();
        assert!(verify_cycle(&found));
        assert_eq!(cycle_inequality_groups(&found), [true, true, true]);
    }

    #[test]
    fn degenerate_box_has_no_cycle() {
        let search = CycleSearchBox { prior: (0.5, 0.5), reward: (3.0, 3.0), rate: (1.0, 1.0), draws: 100, seed: 1 };
        assert!(matches!(find_no_index_cycle(&search), Err(Error::NoCycle { draws: 100 })));
    }

    #[test]
    fn tbar_examples() {
        let x = ProjectSpec::new(0.5, 15.0, 1.0, 0.0).unwrap();
        let t = indifference_time_tbar(&x, 0.5, 5.0).finite().unwrap();
        assert!(close(t, std::f64::consts::LN_2, 1e-14));
        assert_eq!(indifference_time_tbar(&x, 0.5, 7.5), TimeSpan::Finite(0.0));
        let bal = ProjectSpec::balanced(0.5, 15.0, 1.0).unwrap();
        assert_eq!(indifference_time_tbar(&bal, 0.5, 5.0), TimeSpan::Infinite);
    }

    #[test]
    fn claim1_examples() {
        let spec = |b: f64, g: f64, r: f64| ProjectSpec { prior_good: 0.5, reward: r, rate_good: g, rate_bad: b };
        // x with no bad news
        assert_eq!(claim1_switch_probability(&spec(0.0, 3.0, 15.0), &spec(0.0, 1.0, 10.0)).unwrap(), None);
        assert_eq!(claim1_switch_probability(&spec(2.0, 3.0, 15.0), &spec(0.0, 1.0, 10.0)).unwrap(), None);
        let root = claim1_switch_probability(&spec(1.0, 3.0, 15.0), &spec(0.0, 2.0, 12.0)).unwrap().unwrap();
        assert!(close(root, 2.0 / 3.0, 1e-15));
        assert_eq!(
            claim1_switch_probability(&spec(1.5, 3.0, 15.0), &spec(0.0, 1.0, 10.0)),
            Err(Error::NonGenericSlope)
        );
    }

    #[test]
    fn claim2_reduces_to_index_comparison_at_zero_tbar() {
        // p_L R_L = p_H R_H gives tbar_H = 0, w = 1
        let s = Scenario::new(
            ProjectSpec::new(0.45, 10.0, 1.0, 0.0).unwrap(),
            ProjectSpec::new(0.3, 15.0, 4.0, 0.0).unwrap(),
            1.0,
            0.0,
        )
        .unwrap();
        let st = BeliefState::new(0.45 - 1e-13, 0.3);
        let t = claim2_terms(&s, &st).unwrap();
        assert!(t.tbar_high < 1e-9 && close(t.w, 1.0, 1e-9));
        assert!(close(t.lhs, 4.0 * 0.7, 1e-9));
    }

    #[test]
    fn claim2_explores_l_when_rho_l_exceeds_w() {
        let s = Scenario::new(
            ProjectSpec::new(0.3, 10.0, 50.0, 0.0).unwrap(),
            ProjectSpec::new(0.6, 15.0, 1.0, 0.0).unwrap(),
            1.0,
            0.0,
        )
        .unwrap();
        let t = claim2_terms(&s, &s.prior_state()).unwrap();
        assert!(expected_discount(1.0, 50.0) > t.w);
        assert!(!claim2_explore_high_first(&s, &s.prior_state()).unwrap());
    }

    #[test]
    fn claim2_rejects_outside_region() {
        let s = Scenario::new(
            ProjectSpec::new(0.3, 10.0, 1.0, 0.0).unwrap(),
            ProjectSpec::new(0.9, 15.0, 1.0, 0.0).unwrap(),
            1.0,
            0.0,
        )
        .unwrap();
        assert!(claim2_explore_high_first(&s, &s.prior_state()).is_err());
    }

    fn bad_news(lb: f64, hg: f64) -> Scenario {
        Scenario::new(
            ProjectSpec::new(0.5, 10.0, 0.0, lb).unwrap(),
            ProjectSpec::new(0.5, 15.0, hg, hg + 1.0).unwrap(),
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn hat_p_examples() {
        assert!(close(hat_p_l(&bad_news(2.0, 1.0)).unwrap(), 0.75, 1e-15));
        assert_eq!(hat_p_l(&bad_news(2.0, 2.0)).unwrap(), 0.0);
        assert!(hat_p_l(&bad_news(1e9, 1.0)).unwrap() > 0.999_999);
    }

    #[test]
    fn gittins_examples() {
        assert_eq!(gittins_index_classical(1.0, 10.0, 5.0, 1.0), 10.0);
        assert_eq!(gittins_index_classical(0.5, 10.0, 0.0, 1.0), 5.0);
        assert!(close(gittins_index_classical(0.5, 10.0, 5.0, 1.0), 30.0 / 3.5, 1e-12));
        // index equals R_L exactly at the alpha = 1 cutoff
        let p1 = cutoff_pbar(1.0, R, LAM, RL, RH);
        assert!(close(gittins_index_classical(p1, RH, LAM, R), RL, 1e-12));
    }
}
