//! Exact expected value of a no-news exploration schedule with `alpha = 0`.
//!
//! A schedule explores `first` until clock `switch`, then the other project
//! until news. Exploitation always follows the favorable project. After news
//! on one project the remaining problem has a closed-form value, so the total
//! is a one-dimensional integral along the no-news path:
//!
//! `V = ∫ e^{-rt} S(t) [ r·max_z p_z R_z + Σ_z a_z (p_z g_z C_z^good + (1-p_z) b_z C_z^bad) ] dt`
//!
//! where `S` is the no-news survival probability. The integral is split at
//! every kink of the integrand and evaluated with Gauss-Legendre panels.

use serde::{Deserialize, Serialize};

use crate::closedform::safe_payoff_disentangled;
use crate::model::{drift_posterior, BeliefState, ProjectId, Scenario, TimeSpan};

/// Explore `first` until `switch`, then the other project.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub first: ProjectId,
    pub switch: TimeSpan,
}

impl Schedule {
    pub fn forever(first: ProjectId) -> Self {
        Self { first, switch: TimeSpan::Infinite }
    }

    pub fn switch_at(first: ProjectId, t: f64) -> Self {
        Self { first, switch: TimeSpan::Finite(t) }
    }

    /// Project explored at `clock`, absent news.
    pub fn explored_at(&self, clock: f64) -> ProjectId {
        match self.switch {
            TimeSpan::Finite(t) if clock >= t => self.first.other(),
            _ => self.first,
        }
    }

    /// A zero-length first phase is the same as exploring the other project forever.
    pub fn canonical(self) -> Self {
        match self.switch {
            TimeSpan::Finite(t) if t <= 0.0 => Schedule::forever(self.first.other()),
            _ => self,
        }
    }
}

const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Remaining value once news has resolved one project.
fn continuation(s: &Scenario, z: ProjectId, good: bool, p_low: f64, p_high: f64) -> f64 {
    match (z, good) {
        (ProjectId::High, true) => s.high.reward,
        (ProjectId::High, false) => p_low * s.low.reward,
        (ProjectId::Low, false) => p_high * s.high.reward,
        (ProjectId::Low, true) => {
            safe_payoff_disentangled(p_high, s.discount, s.high.rate_good, s.high.rate_bad, s.low.reward, s.high.reward)
        }
    }
}

/// One no-news phase exploring `z` from `start`, with beliefs `state` and
/// survival `surv` at `start`.
struct Phase<'a> {
    s: &'a Scenario,
    z: ProjectId,
    start: f64,
    state: BeliefState,
    surv: f64,
}

impl Phase<'_> {
    fn learning(&self) -> bool {
        !self.state.is_resolved(self.z)
    }

    /// Beliefs and survival after `tau` in the phase.
    fn at(&self, tau: f64) -> (f64, f64, f64) {
        let (mut pl, mut ph) = (self.state.p_low, self.state.p_high);
        if !self.learning() {
            return (pl, ph, self.surv);
        }
        let spec = self.s.project(self.z);
        let p0 = self.state.p(self.z);
        let p = drift_posterior(p0, spec.rate_good, spec.rate_bad, 1.0, tau);
        let surv = self.surv * (p0 * (-spec.rate_good * tau).exp() + (1.0 - p0) * (-spec.rate_bad * tau).exp());
        match self.z {
            ProjectId::Low => pl = p,
            ProjectId::High => ph = p,
        }
        (pl, ph, surv)
    }

    /// Integrand without the discount factor.
    fn density(&self, tau: f64) -> f64 {
        let s = self.s;
        let (pl, ph, surv) = self.at(tau);
        let mut v = s.discount * (pl * s.low.reward).max(ph * s.high.reward);
        if self.learning() {
            let spec = s.project(self.z);
            let p = if self.z == ProjectId::Low { pl } else { ph };
            v += p * spec.rate_good * continuation(s, self.z, true, pl, ph);
            v += (1.0 - p) * spec.rate_bad * continuation(s, self.z, false, pl, ph);
        }
        surv * v
    }

    /// Phase-relative times at which the integrand has a kink.
    fn kinks(&self) -> Vec<f64> {
        if !self.learning() {
            return Vec::new();
        }
        let s = self.s;
        let spec = s.project(self.z);
        let other = self.z.other();
        let mut targets = vec![self.state.p(other) * s.project(other).reward / spec.reward];
        if self.z == ProjectId::High {
            targets.push(s.low.reward / s.high.reward);
        }
        targets
            .into_iter()
            .filter_map(|p| {
                crate::model::drift_time(self.state.p(self.z), p, spec.rate_good, spec.rate_bad, 1.0).finite()
            })
            .filter(|t| *t > 0.0)
            .collect()
    }

    /// `∫_a^b e^{-r(start+tau)} density(tau) dtau`, `b` possibly infinite.
    fn integrate(&self, a: f64, b: f64, panel: f64) -> f64 {
        let r = self.s.discount;
        let mut total = 0.0;
        let mut lo = a;
        while lo < b {
            let hi = (lo + panel).min(b);
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let mut acc = 0.0;
            for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let tau = mid + half * x;
                acc += w * (-r * (self.start + tau)).exp() * self.density(tau);
            }
            total += half * acc;
            lo = hi;
            // remaining mass is bounded by e^{-rt} times the largest flow
            if b.is_infinite() && (-r * (self.start + lo)).exp() * self.at(lo).2 < 1e-16 {
                break;
            }
        }
        total
    }
}

/// Expected payoff of `schedule` from `state` (both projects unresolved or
/// the low project known), with `alpha = 0` and favorable exploitation.
pub fn schedule_value(s: &Scenario, state: &BeliefState, schedule: Schedule) -> f64 {
    let lam = s.low.max_rate().max(s.high.max_rate()).max(s.discount);
    let panel = (0.25 / lam).min(std::f64::consts::LN_2 / s.discount);

    let mut total = 0.0;
    let mut phase = Phase { s, z: schedule.first, start: 0.0, state: *state, surv: 1.0 };
    for (z, len) in [(schedule.first, schedule.switch.as_f64()), (schedule.first.other(), f64::INFINITY)] {
        phase.z = z;
        if len <= 0.0 {
            continue;
        }
        let mut cuts: Vec<f64> = phase.kinks().into_iter().filter(|t| *t < len).collect();
        cuts.push(0.0);
        cuts.push(len);
        cuts.sort_by(f64::total_cmp);
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                total += phase.integrate(w[0], w[1], panel);
            }
        }
        if len.is_infinite() {
            break;
        }
        let (pl, ph, surv) = phase.at(len);
        phase.state.p_low = pl;
        phase.state.p_high = ph;
        phase.surv = surv;
        phase.start += len;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{balanced_sequential_value, payoff_disentangled};
    use crate::model::{NewsRegime, ProjectSpec};

    #[test]
    fn safe_case_matches_closed_form() {
        for (g, b, regime) in [(5.0, 0.0, NewsRegime::GoodNews), (0.0, 5.0, NewsRegime::BadNews)] {
            for p in [0.1, 0.5, 0.7, 0.9] {
                let s = Scenario::new(ProjectSpec::safe(10.0).unwrap(), ProjectSpec::new(p, 15.0, g, b).unwrap(), 1.0, 0.0)
                    .unwrap();
                let v = schedule_value(&s, &s.prior_state(), Schedule::forever(ProjectId::High));
                let want = payoff_disentangled(p, 1.0, 5.0, regime, 10.0, 15.0).unwrap();
                assert!((v - want).abs() < 1e-9, "p={p}: {v} vs {want}");
            }
        }
    }

    #[test]
    fn balanced_matches_sequential_value() {
        let s = Scenario::new(
            ProjectSpec::balanced(0.6, 10.0, 1.5).unwrap(),
            ProjectSpec::balanced(0.35, 15.0, 0.7).unwrap(),
            0.8,
            0.0,
        )
        .unwrap();
        for first in ProjectId::BOTH {
            let v = schedule_value(&s, &s.prior_state(), Schedule::forever(first));
            let want = balanced_sequential_value(&s, &s.prior_state(), first);
            assert!((v - want).abs() < 1e-9, "{first}: {v} vs {want}");
        }
    }

    #[test]
    fn canonical_zero_switch() {
        let sch = Schedule::switch_at(ProjectId::High, 0.0).canonical();
        assert_eq!(sch, Schedule::forever(ProjectId::Low));
        assert_eq!(Schedule::switch_at(ProjectId::High, 2.0).explored_at(2.0), ProjectId::Low);
    }
}
