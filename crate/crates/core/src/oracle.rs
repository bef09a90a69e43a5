//! Discrete-time value iteration on a belief grid.
//!
//! Each step of length `delta` pays the exploited project's expected flow,
//! then either news arrives on the explored project (exact Poisson
//! probabilities over the step) or the posterior drifts by Bayes' rule. Drifted
//! beliefs are linearly interpolated between grid nodes. Values are
//! flow-normalized.
//!
//! Resolved projects live on the grid edges (`p = 0` or `p = 1`), so news
//! moves the state onto an edge node and the edges are solved by the same
//! recursion.
//!
//! Under the same-sign assumption the no-news drift moves every posterior in
//! one direction, so visiting nodes against the drift makes a Gauss-Seidel
//! sweep exact up to the self-loop of the node being updated, which is solved
//! in closed form. A plain Jacobi iteration is available for cross-checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{drift_posterior, NewsRegime, ProjectId, Scenario};

pub const DEFAULT_GRID: usize = 400;
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_STEP_PROB: f64 = 0.1;
const SNAP: f64 = 1e-9;

/// One (explore, exploit) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub explore: ProjectId,
    pub exploit: ProjectId,
}

impl Action {
    pub fn new(explore: ProjectId, exploit: ProjectId) -> Self {
        Self { explore, exploit }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SolveMethod {
    /// Gauss-Seidel against the drift with exact self-loops.
    OrderedSweep,
    /// Synchronous value iteration from a constant initial guess.
    Jacobi { init: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Cells per axis; nodes sit at `i / n`.
    pub n: usize,
    pub delta: f64,
    /// `false` for the one-risky-project grid over `p_H` only.
    pub two_dim: bool,
}

/// Converged values and greedy actions over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    pub grid_spec: GridSpec,
    pub scenario: Scenario,
    /// Explore and exploit the same project (full entanglement, two risky projects).
    pub entangled: bool,
    pub values: Vec<f64>,
    pub policy_map: Vec<Action>,
    pub iterations: usize,
    pub sup_change: f64,
    /// Sup-norm change per iteration.
    pub sup_history: Vec<f64>,
}

/// Solver settings.
#[derive(Debug, Clone, Copy)]
pub struct Oracle {
    scenario: Scenario,
    grid_n: usize,
    delta: Option<f64>,
    tolerance: f64,
    max_iterations: usize,
    method: SolveMethod,
    entangled: bool,
}

impl Oracle {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            grid_n: DEFAULT_GRID,
            delta: None,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: 10_000_000,
            method: SolveMethod::OrderedSweep,
            entangled: false,
        }
    }

    pub fn grid(mut self, n: usize) -> Self {
        self.grid_n = n;
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn method(mut self, method: SolveMethod) -> Self {
        self.method = method;
        self
    }

    /// Two-risky grid with explore = exploit.
    pub fn entangled(mut self, yes: bool) -> Self {
        self.entangled = yes;
        self
    }

    /// Default step: `1e-3 / max(r, largest news rate)`.
    pub fn default_delta(scenario: &Scenario) -> f64 {
        let lam = scenario.low.max_rate().max(scenario.high.max_rate());
        1e-3 / scenario.discount.max(lam)
    }

    fn step(&self) -> Result<f64> {
        let delta = self.delta.unwrap_or_else(|| Self::default_delta(&self.scenario));
        if !(delta > 0.0) {
            return Err(Error::InvalidField { field: "delta", reason: "must be positive".into() });
        }
        if self.grid_n < 2 {
            return Err(Error::InvalidField { field: "grid", reason: "need at least 2 cells".into() });
        }
        let s = &self.scenario;
        let lam = s.low.max_rate().max(s.high.max_rate());
        let prob = (lam * delta).max(s.discount * delta);
        if prob >= MAX_STEP_PROB {
            return Err(Error::StepTooCoarse { prob });
        }
        Ok(delta)
    }

    /// One risky project (H) against a safe low project.
    pub fn solve_safe(&self) -> Result<ValueGrid> {
        if !self.scenario.has_safe_low() {
            return Err(Error::Precondition("safe-case oracle needs p_L = 1".into()));
        }
        let delta = self.step()?;
        let model = Model::new(&self.scenario, self.grid_n, delta, false, false);
        self.run(model)
    }

    /// Both projects risky, `alpha = 0` unless entangled.
    pub fn solve_two_risky(&self) -> Result<ValueGrid> {
        let s = &self.scenario;
        if !self.entangled && s.alpha != 0.0 {
            return Err(Error::Precondition("two-risky oracle is defined for alpha = 0".into()));
        }
        for spec in [&s.low, &s.high] {
            if !(spec.prior_good > 0.0 && spec.prior_good < 1.0) {
                return Err(Error::Precondition("two-risky oracle needs both priors in (0, 1)".into()));
            }
        }
        let delta = self.step()?;
        let model = Model::new(s, self.grid_n, delta, true, self.entangled);
        self.run(model)
    }

    fn run(&self, model: Model) -> Result<ValueGrid> {
        let (values, iterations, sup_history) = match self.method {
            SolveMethod::OrderedSweep => model.ordered_sweep(self.tolerance, self.max_iterations),
            SolveMethod::Jacobi { init } => model.jacobi(init, self.tolerance, self.max_iterations),
        };
        let policy_map = model.greedy(&values);
        Ok(ValueGrid {
            grid_spec: GridSpec { n: model.n, delta: model.delta, two_dim: model.two_dim },
            scenario: self.scenario,
            entangled: model.entangled,
            values,
            policy_map,
            iterations,
            sup_change: sup_history.last().copied().unwrap_or(f64::INFINITY),
            sup_history,
        })
    }
}

/// Safe-case oracle with the given step and grid.
pub fn value_iteration_safe(scenario: &Scenario, delta: f64, grid_n: usize) -> Result<ValueGrid> {
    Oracle::new(*scenario).delta(delta).grid(grid_n).solve_safe()
}

/// Two-risky oracle (`alpha = 0`) with the given step and grid.
pub fn value_iteration_two_risky(scenario: &Scenario, delta: f64, grid_n: usize) -> Result<ValueGrid> {
    Oracle::new(*scenario).delta(delta).grid(grid_n).solve_two_risky()
}

// ---------------------------------------------------------------------------
// Transition model
// ---------------------------------------------------------------------------

/// Contribution `c + sum(w_k V[k])` of one action at one node.
#[derive(Debug, Clone, Copy)]
struct Trans {
    c: f64,
    targets: [(u32, f64); 4],
}

impl Trans {
    fn eval(&self, v: &[f64]) -> f64 {
        self.c + self.targets.iter().map(|&(k, w)| w * v[k as usize]).sum::<f64>()
    }

    /// Value with the self-loop on `node` solved exactly.
    fn eval_self(&self, node: usize, v: &[f64]) -> f64 {
        let mut acc = self.c;
        let mut stay = 0.0;
        for &(k, w) in &self.targets {
            if k as usize == node {
                stay += w;
            } else {
                acc += w * v[k as usize];
            }
        }
        acc / (1.0 - stay)
    }
}

struct Model {
    n: usize,
    delta: f64,
    two_dim: bool,
    entangled: bool,
    actions: Vec<Action>,
    trans: Vec<Trans>,
    order: Vec<usize>,
}

/// Position of `p` on the axis as (lower node, weight on upper node).
fn locate(p: f64, n: usize) -> (usize, f64) {
    let mut x = p.clamp(0.0, 1.0) * n as f64;
    if (x - x.round()).abs() < SNAP {
        x = x.round();
    }
    let j = (x.floor() as usize).min(n - 1);
    (j, x - j as f64)
}

impl Model {
    fn new(scenario: &Scenario, n: usize, delta: f64, two_dim: bool, entangled: bool) -> Self {
        use ProjectId::{High, Low};
        let actions: Vec<Action> = if !two_dim {
            vec![Action::new(High, High), Action::new(High, Low)]
        } else if entangled {
            vec![Action::new(High, High), Action::new(Low, Low)]
        } else {
            vec![
                Action::new(High, High),
                Action::new(High, Low),
                Action::new(Low, High),
                Action::new(Low, Low),
            ]
        };
        let side = n + 1;
        let nodes = if two_dim { side * side } else { side };
        let beta = (-scenario.discount * delta).exp();
        let alpha = scenario.alpha;
        let idx = |i: usize, j: usize| if two_dim { i * side + j } else { j };

        let mut trans = Vec::with_capacity(nodes * actions.len());
        for node in 0..nodes {
            let (i, j) = if two_dim { (node / side, node % side) } else { (n, node) };
            let p = [i as f64 / n as f64, j as f64 / n as f64];
            for a in &actions {
                // attention on each project
                let att = if two_dim {
                    let x = if a.explore == Low { 1.0 } else { 0.0 };
                    [x, 1.0 - x]
                } else {
                    let h = if a.exploit == High { 1.0 } else { 1.0 - alpha };
                    [0.0, h]
                };
                let pz = |id: ProjectId| p[id as usize];
                let flow = pz(a.exploit) * scenario.project(a.exploit).reward * (1.0 - beta);

                let mut targets = [(node as u32, 0.0); 4];
                let mut stay_p = [i, j];
                let mut slot = 0;
                let mut no_news = 1.0;
                let mut drift_axis = None;
                for id in [Low, High] {
                    let k = id as usize;
                    if att[k] == 0.0 {
                        continue;
                    }
                    let spec = scenario.project(id);
                    let pg = pz(id) * (1.0 - (-spec.rate_good * att[k] * delta).exp());
                    let pb = (1.0 - pz(id)) * (1.0 - (-spec.rate_bad * att[k] * delta).exp());
                    let mut good = [i, j];
                    good[k] = n;
                    let mut bad = [i, j];
                    bad[k] = 0;
                    targets[slot] = (idx(good[0], good[1]) as u32, beta * pg);
                    targets[slot + 1] = (idx(bad[0], bad[1]) as u32, beta * pb);
                    slot += 2;
                    no_news -= pg + pb;
                    drift_axis = Some((k, drift_posterior(pz(id), spec.rate_good, spec.rate_bad, att[k], delta)));
                }
                match drift_axis {
                    Some((k, p_next)) => {
                        let (lo, w) = locate(p_next, n);
                        stay_p[k] = lo;
                        let lo_node = idx(stay_p[0], stay_p[1]);
                        stay_p[k] = lo + 1;
                        let hi_node = idx(stay_p[0], stay_p[1]);
                        targets[slot] = (lo_node as u32, beta * no_news * (1.0 - w));
                        targets[slot + 1] = (hi_node as u32, beta * no_news * w);
                    }
                    None => targets[slot] = (node as u32, beta * no_news),
                }
                trans.push(Trans { c: flow, targets });
            }
        }

        let order = Self::order(scenario, n, two_dim);
        Self { n, delta, two_dim, entangled, actions, trans, order }
    }

    /// Visit order: corners, edges, then the interior, each against the drift.
    fn order(scenario: &Scenario, n: usize, two_dim: bool) -> Vec<usize> {
        let ascending = match scenario.regime() {
            NewsRegime::GoodNews | NewsRegime::Balanced => true,
            NewsRegime::BadNews => false,
        };
        let axis: Vec<usize> = if ascending { (0..=n).collect() } else { (0..=n).rev().collect() };
        if !two_dim {
            let mut order = vec![0, n];
            order.extend(axis.iter().copied().filter(|&j| j != 0 && j != n));
            return order;
        }
        let side = n + 1;
        let idx = |i: usize, j: usize| i * side + j;
        let interior = |k: &usize| *k != 0 && *k != n;
        let mut order = vec![idx(0, 0), idx(0, n), idx(n, 0), idx(n, n)];
        for edge in [0, n] {
            order.extend(axis.iter().filter(|k| interior(k)).map(|&j| idx(edge, j)));
            order.extend(axis.iter().filter(|k| interior(k)).map(|&i| idx(i, edge)));
        }
        for &i in axis.iter().filter(|k| interior(k)) {
            order.extend(axis.iter().filter(|k| interior(k)).map(|&j| idx(i, j)));
        }
        order
    }

    fn n_actions(&self) -> usize {
        self.actions.len()
    }

    fn node_trans(&self, node: usize) -> &[Trans] {
        let a = self.n_actions();
        &self.trans[node * a..(node + 1) * a]
    }

    fn ordered_sweep(&self, tol: f64, max_iter: usize) -> (Vec<f64>, usize, Vec<f64>) {
        let mut v = vec![0.0; self.order.len()];
        let mut history = Vec::new();
        for _ in 0..max_iter.max(1) {
            let mut change: f64 = 0.0;
            for &node in &self.order {
                let best = self
                    .node_trans(node)
                    .iter()
                    .map(|t| t.eval_self(node, &v))
                    .fold(f64::NEG_INFINITY, f64::max);
                change = change.max((best - v[node]).abs());
                v[node] = best;
            }
            history.push(change);
            if change < tol {
                break;
            }
        }
        let iterations = history.len();
        (v, iterations, history)
    }

    fn jacobi(&self, init: f64, tol: f64, max_iter: usize) -> (Vec<f64>, usize, Vec<f64>) {
        let nodes = self.order.len();
        let mut v = vec![init; nodes];
        let mut next = vec![0.0; nodes];
        let mut history = Vec::new();
        for _ in 0..max_iter {
            next.par_iter_mut().enumerate().for_each(|(node, out)| {
                *out = self.node_trans(node).iter().map(|t| t.eval(&v)).fold(f64::NEG_INFINITY, f64::max);
            });
            let change = v.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            std::mem::swap(&mut v, &mut next);
            history.push(change);
            if change < tol {
                break;
            }
        }
        let iterations = history.len();
        (v, iterations, history)
    }

    /// Greedy action per node. Ties keep the earlier action in the list.
    fn greedy(&self, v: &[f64]) -> Vec<Action> {
        (0..v.len())
            .map(|node| {
                let mut best = (self.actions[0], f64::NEG_INFINITY);
                for (a, t) in self.actions.iter().zip(self.node_trans(node)) {
                    let q = t.eval(v);
                    if q > best.1 {
                        best = (*a, q);
                    }
                }
                best.0
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

/// A line through the grid along which a threshold is extracted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Line {
    /// The single axis of a safe-case grid.
    Safe,
    /// Vary `p_L` at the node nearest to the given `p_H`.
    AlongLow { p_high: f64 },
    /// Vary `p_H` at the node nearest to the given `p_L`.
    AlongHigh { p_low: f64 },
}

impl ValueGrid {
    pub fn n(&self) -> usize {
        self.grid_spec.n
    }

    pub fn node_p(&self, i: usize) -> f64 {
        i as f64 / self.grid_spec.n as f64
    }

    fn index(&self, i_low: usize, i_high: usize) -> usize {
        if self.grid_spec.two_dim {
            i_low * (self.n() + 1) + i_high
        } else {
            i_high
        }
    }

    pub fn value_node(&self, i_low: usize, i_high: usize) -> f64 {
        self.values[self.index(i_low, i_high)]
    }

    pub fn action_node(&self, i_low: usize, i_high: usize) -> Action {
        self.policy_map[self.index(i_low, i_high)]
    }

    /// Interpolated value (bilinear on two-dimensional grids).
    pub fn value_at(&self, p_low: f64, p_high: f64) -> f64 {
        let n = self.n();
        let (jh, wh) = locate(p_high, n);
        let along_high = |il: usize| (1.0 - wh) * self.value_node(il, jh) + wh * self.value_node(il, jh + 1);
        if !self.grid_spec.two_dim {
            return along_high(0);
        }
        let (jl, wl) = locate(p_low, n);
        (1.0 - wl) * along_high(jl) + wl * along_high(jl + 1)
    }

    fn actions(&self) -> Vec<Action> {
        use ProjectId::{High, Low};
        if !self.grid_spec.two_dim {
            vec![Action::new(High, High), Action::new(High, Low)]
        } else if self.entangled {
            vec![Action::new(High, High), Action::new(Low, Low)]
        } else {
            vec![Action::new(High, High), Action::new(High, Low), Action::new(Low, High), Action::new(Low, Low)]
        }
    }

    /// One-step lookahead values at an arbitrary belief, using the
    /// interpolated value function as continuation.
    pub fn q_values(&self, p_low: f64, p_high: f64) -> Vec<(Action, f64)> {
        let s = &self.scenario;
        let delta = self.grid_spec.delta;
        let beta = (-s.discount * delta).exp();
        let p_low = if self.grid_spec.two_dim { p_low } else { 1.0 };
        self.actions()
            .into_iter()
            .map(|a| {
                let p = [p_low, p_high];
                let att = if self.grid_spec.two_dim {
                    if a.explore == ProjectId::Low { [1.0, 0.0] } else { [0.0, 1.0] }
                } else if a.exploit == ProjectId::High {
                    [0.0, 1.0]
                } else {
                    [0.0, 1.0 - s.alpha]
                };
                let mut q = p[a.exploit as usize] * s.project(a.exploit).reward * (1.0 - beta);
                let mut no_news = 1.0;
                let mut next = p;
                for id in ProjectId::BOTH {
                    let k = id as usize;
                    if att[k] == 0.0 {
                        continue;
                    }
                    let spec = s.project(id);
                    let pg = p[k] * (1.0 - (-spec.rate_good * att[k] * delta).exp());
                    let pb = (1.0 - p[k]) * (1.0 - (-spec.rate_bad * att[k] * delta).exp());
                    let (mut good, mut bad) = (p, p);
                    good[k] = 1.0;
                    bad[k] = 0.0;
                    q += beta * (pg * self.value_at(good[0], good[1]) + pb * self.value_at(bad[0], bad[1]));
                    no_news -= pg + pb;
                    next[k] = drift_posterior(p[k], spec.rate_good, spec.rate_bad, att[k], delta);
                }
                q += beta * no_news * self.value_at(next[0], next[1]);
                (a, q)
            })
            .collect()
    }

    /// Best action at an arbitrary belief and its margin over the best
    /// action that explores the other project (zero on safe grids).
    pub fn choice_at(&self, p_low: f64, p_high: f64) -> (Action, f64) {
        let q = self.q_values(p_low, p_high);
        let best = q.iter().copied().fold((q[0].0, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
        let rival = q
            .iter()
            .filter(|(a, _)| a.explore != best.0.explore)
            .map(|x| x.1)
            .fold(f64::NEG_INFINITY, f64::max);
        let margin = if rival.is_finite() { best.1 - rival } else { 0.0 };
        (best.0, margin)
    }

    /// Best action at the scenario's priors.
    pub fn initial_choice(&self) -> Action {
        self.choice_at(self.scenario.low.prior_good, self.scenario.high.prior_good).0
    }

    /// Nodes along `line` as (belief coordinate, action).
    pub fn line_actions(&self, line: Line) -> Vec<(f64, Action)> {
        let n = self.n();
        let nearest = |p: f64| ((p * n as f64).round() as usize).min(n);
        (0..=n)
            .map(|k| {
                let a = match line {
                    Line::Safe => self.action_node(0, k),
                    Line::AlongLow { p_high } => self.action_node(k, nearest(p_high)),
                    Line::AlongHigh { p_low } => self.action_node(nearest(p_low), k),
                };
                (self.node_p(k), a)
            })
            .collect()
    }
}

/// Belief at which `predicate` flips along `line`, restricted to nodes in
/// `range`. Returns the midpoint of the two bracketing nodes.
pub fn extract_threshold(
    grid: &ValueGrid,
    line: Line,
    range: (f64, f64),
    predicate: impl Fn(Action) -> bool,
) -> Result<f64> {
    let points: Vec<(f64, bool)> = grid
        .line_actions(line)
        .into_iter()
        .filter(|(p, _)| *p >= range.0 && *p <= range.1)
        .map(|(p, a)| (p, predicate(a)))
        .collect();
    let flips: Vec<usize> = (1..points.len()).filter(|&k| points[k].1 != points[k - 1].1).collect();
    match flips.as_slice() {
        [] => Err(Error::NoCrossing),
        [k] => Ok(0.5 * (points[k - 1].0 + points[*k].0)),
        many => Err(Error::NonMonotone { crossings: many.len() }),
    }
}

/// Exploitation threshold of a safe-case grid.
pub fn safe_threshold(grid: &ValueGrid) -> Result<f64> {
    extract_threshold(grid, Line::Safe, (0.0, 1.0), |a| a.exploit == ProjectId::High)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::cutoff_pbar;
    use crate::model::ProjectSpec;

    fn safe(alpha: f64, g: f64, b: f64) -> Scenario {
        Scenario::new(ProjectSpec::safe(10.0).unwrap(), ProjectSpec::new(0.5, 15.0, g, b).unwrap(), 1.0, alpha).unwrap()
    }

    #[test]
    fn safe_thresholds_match_cutoff() {
        for alpha in [0.0, 0.5, 1.0] {
            let s = safe(alpha, 5.0, 0.0);
            let g = value_iteration_safe(&s, 2e-4, 400).unwrap();
            let t = safe_threshold(&g).unwrap();
            let want = cutoff_pbar(alpha, 1.0, 5.0, 10.0, 15.0);
            assert!((t - want).abs() <= 2.0 / 400.0, "alpha={alpha}: {t} vs {want}");
            assert!(g.sup_change < DEFAULT_TOLERANCE);
        }
    }

    #[test]
    fn certainty_node_is_reward() {
        let g = value_iteration_safe(&safe(0.3, 5.0, 0.0), 1e-3, 100).unwrap();
        assert!((g.value_node(0, 100) - 15.0).abs() < 1e-9);
        assert!((g.value_node(0, 0) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn coarse_step_rejected() {
        let s = safe(0.0, 5.0, 0.0);
        assert!(matches!(value_iteration_safe(&s, 0.05, 100), Err(Error::StepTooCoarse { .. })));
    }

    #[test]
    fn constant_map_has_no_crossing() {
        let s = safe(0.0, 5.0, 0.0);
        let g = value_iteration_safe(&s, 1e-3, 50).unwrap();
        assert_eq!(
            extract_threshold(&g, Line::Safe, (0.0, 1.0), |_| true),
            Err(Error::NoCrossing)
        );
    }

    #[test]
    fn jacobi_and_sweep_agree() {
        let s = safe(0.4, 3.0, 1.0);
        let a = Oracle::new(s).grid(40).delta(2e-2).solve_safe().unwrap();
        let b = Oracle::new(s).grid(40).delta(2e-2).method(SolveMethod::Jacobi { init: 0.0 }).solve_safe().unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-7, "{x} vs {y}");
        }
    }

    #[test]
    fn safe_strip_of_two_risky_grid_matches_safe_grid() {
        let low = ProjectSpec::new(0.5, 10.0, 2.0, 0.5).unwrap();
        let high = ProjectSpec::new(0.5, 15.0, 3.0, 1.0).unwrap();
        let two = value_iteration_two_risky(&Scenario::new(low, high, 1.0, 0.0).unwrap(), 1e-3, 60).unwrap();
        let one = value_iteration_safe(
            &Scenario::new(ProjectSpec::safe(10.0).unwrap(), high, 1.0, 0.0).unwrap(),
            1e-3,
            60,
        )
        .unwrap();
        for j in 0..=60 {
            assert!((two.value_node(60, j) - one.value_node(0, j)).abs() < 1e-8);
        }
    }
}
