//! C ABI over `forage`.
//!
//! Every fallible function returns a [`ForageStatus`]; on failure the message
//! is available from [`forage_last_error`] on the same thread. Handles are
//! opaque and owned by the caller, who releases them with the matching
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use forage::closedform::{payoff_disentangled, payoff_entangled, scenario_cutoff};
use forage::model::{BeliefState, ProjectSpec, Scenario};
use forage::oracle::{safe_threshold, Oracle};
use forage::policy::{optimal_policy, Policy};
use forage::scenario_file::ScenarioFile;
use forage::simulate::{default_horizon, monte_carlo};
use forage::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForageStatus {
    Ok = 0,
    NullPointer = 1,
    /// A field is out of range or a scenario file does not parse.
    InvalidArgument = 2,
    /// The call does not apply to this scenario (regime, alpha, safe project).
    Precondition = 3,
    Internal = 4,
}

/// One project: prior probability of being good, flow reward when good,
/// and news rates in the good and bad state.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct ForageProject {
    pub prior: f64,
    pub reward: f64,
    pub rate_good: f64,
    pub rate_bad: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ForageAllocation {
    pub explore_low: f64,
    pub explore_high: f64,
    pub exploit_low: f64,
    pub exploit_high: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ForageMonteCarlo {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub horizon: f64,
    pub tail_bound: f64,
}

/// Opaque scenario handle.
pub struct ForageScenario {
    inner: Scenario,
}

/// Opaque policy handle.
pub struct ForagePolicy {
    inner: Box<dyn Policy>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ForageStatus {
    match e.exit_code() {
        2 => ForageStatus::InvalidArgument,
        _ => ForageStatus::Precondition,
    }
}

/// Run `f`, record any error, and never unwind into C.
fn guard(f: impl FnOnce() -> Result<(), (ForageStatus, String)>) -> ForageStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ForageStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ForageStatus::Internal
        }
    }
}

fn lib<T>(r: forage::Result<T>) -> Result<T, (ForageStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (ForageStatus, String)> {
    p.as_ref().ok_or_else(|| (ForageStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (ForageStatus, String)> {
    p.as_mut().ok_or_else(|| (ForageStatus::NullPointer, format!("{what} is null")))
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn forage_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn forage_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validate and build a scenario. `*out` receives a handle to free with
/// [`forage_scenario_free`].
///
/// # Safety
/// `low`, `high` and `out` must be valid pointers or null.
#[no_mangle]
pub unsafe extern "C" fn forage_scenario_new(
    low: *const ForageProject,
    high: *const ForageProject,
    discount: f64,
    alpha: f64,
    out: *mut *mut ForageScenario,
) -> ForageStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let spec = |p: &ForageProject| ProjectSpec::new(p.prior, p.reward, p.rate_good, p.rate_bad);
        let (low, high) = (lib(spec(deref(low, "low")?))?, lib(spec(deref(high, "high")?))?);
        let s = lib(Scenario::new(low, high, discount, alpha))?;
        *out = Box::into_raw(Box::new(ForageScenario { inner: s }));
        Ok(())
    })
}

/// Build a scenario from the text of a TOML scenario file.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` a valid pointer or null.
#[no_mangle]
pub unsafe extern "C" fn forage_scenario_from_toml(text: *const c_char, out: *mut *mut ForageScenario) -> ForageStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if text.is_null() {
            return Err((ForageStatus::NullPointer, "text is null".into()));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|e| (ForageStatus::InvalidArgument, e.to_string()))?;
        let s = lib(ScenarioFile::parse(text).and_then(|f| f.scenario()))?;
        *out = Box::into_raw(Box::new(ForageScenario { inner: s }));
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn forage_scenario_free(s: *mut ForageScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Posterior cutoff above which the risky project is exploited, for a
/// scenario whose low project is safe.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn forage_cutoff(s: *const ForageScenario, out: *mut f64) -> ForageStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = lib(scenario_cutoff(&deref(s, "scenario")?.inner))?;
        Ok(())
    })
}

/// Closed-form payoffs at prior `p_high` with and without entanglement for
/// a safe low project and pure news.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn forage_payoffs(
    s: *const ForageScenario,
    p_high: f64,
    pi_alpha0: *mut f64,
    pi_alpha1: *mut f64,
) -> ForageStatus {
    guard(|| {
        let s = &deref(s, "scenario")?.inner;
        let (a0, a1) = (out_ptr(pi_alpha0, "pi_alpha0")?, out_ptr(pi_alpha1, "pi_alpha1")?);
        if !s.has_safe_low() {
            return Err((ForageStatus::Precondition, "payoff formulas need a safe low project".into()));
        }
        if !(0.0..=1.0).contains(&p_high) {
            return Err((ForageStatus::InvalidArgument, format!("p_high = {p_high} is not a probability")));
        }
        let (r, lam, regime) = (s.discount, s.high.max_rate(), s.regime());
        *a0 = lib(payoff_disentangled(p_high, r, lam, regime, s.low.reward, s.high.reward))?;
        *a1 = lib(payoff_entangled(p_high, r, lam, regime, s.low.reward, s.high.reward))?;
        Ok(())
    })
}

/// Exploitation threshold read off a dynamic-programming solve with `grid`
/// cells, for a safe low project.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn forage_oracle_threshold(s: *const ForageScenario, grid: u32, out: *mut f64) -> ForageStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let s = &deref(s, "scenario")?.inner;
        if !s.has_safe_low() {
            return Err((ForageStatus::Precondition, "threshold needs a safe low project".into()));
        }
        let g = lib(Oracle::new(*s).grid(grid as usize).solve_safe())?;
        *out = lib(safe_threshold(&g))?;
        Ok(())
    })
}

/// Optimal policy for the scenario.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn forage_policy_new(s: *const ForageScenario, out: *mut *mut ForagePolicy) -> ForageStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let pol = lib(optimal_policy(&deref(s, "scenario")?.inner))?;
        *out = Box::into_raw(Box::new(ForagePolicy { inner: pol }));
        Ok(())
    })
}

/// # Safety
/// `p` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn forage_policy_free(p: *mut ForagePolicy) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Allocation at beliefs `(p_low, p_high)` after `clock` units without news.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn forage_policy_decide(
    p: *const ForagePolicy,
    p_low: f64,
    p_high: f64,
    clock: f64,
    out: *mut ForageAllocation,
) -> ForageStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let pol = &deref(p, "policy")?.inner;
        if !(0.0..=1.0).contains(&p_low) || !(0.0..=1.0).contains(&p_high) || !(clock >= 0.0) {
            return Err((ForageStatus::InvalidArgument, "beliefs must lie in [0, 1] and clock be >= 0".into()));
        }
        let a = pol.decide(&BeliefState::new(p_low, p_high), clock);
        *out = ForageAllocation {
            explore_low: a.explore_low,
            explore_high: a.explore_high,
            exploit_low: a.exploit_low,
            exploit_high: a.exploit_high,
        };
        Ok(())
    })
}

/// Monte Carlo payoff over `n_paths` seeded paths with horizon `30 / r`.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn forage_monte_carlo(
    p: *const ForagePolicy,
    n_paths: u64,
    seed: u64,
    out: *mut ForageMonteCarlo,
) -> ForageStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let pol = &deref(p, "policy")?.inner;
        let rep = lib(monte_carlo(pol.as_ref(), n_paths as usize, default_horizon(pol.scenario()), seed))?;
        *out = ForageMonteCarlo {
            mean: rep.mean,
            std_error: rep.std_error,
            n_paths: rep.n_paths as u64,
            horizon: rep.horizon,
            tail_bound: rep.tail_bound,
        };
        Ok(())
    })
}
