//! TOML scenario files.
//!
//! ```toml
//! discount = 1.0
//! alpha = 0.0
//!
//! [low]
//! prior = 1.0
//! reward = 10.0
//! rate_good = 0.0
//! rate_bad = 0.0
//!
//! [high]
//! prior = 0.5
//! reward = 15.0
//! rate_good = 5.0
//! rate_bad = 0.0
//!
//! [[sweep]]
//! axis = "high.prior"
//! from = 0.01
//! to = 0.99
//! steps = 50
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ProjectId, ProjectSpec, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectTable {
    pub prior: f64,
    pub reward: f64,
    pub rate_good: f64,
    pub rate_bad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: String,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub discount: f64,
    pub alpha: f64,
    pub low: ProjectTable,
    pub high: ProjectTable,
    #[serde(default)]
    pub sweep: Vec<Sweep>,
}

/// Scalar fields a sweep may vary.
pub const AXES: [&str; 10] = [
    "discount",
    "alpha",
    "low.prior",
    "low.reward",
    "low.rate_good",
    "low.rate_bad",
    "high.prior",
    "high.reward",
    "high.rate_good",
    "high.rate_bad",
];

impl Sweep {
    /// `steps` evenly spaced values from `from` to `to` inclusive.
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.from],
            n => (0..n).map(|k| self.from + (self.to - self.from) * k as f64 / (n - 1) as f64).collect(),
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_owned()))?;
        for sw in &file.sweep {
            if !AXES.contains(&sw.axis.as_str()) {
                return Err(Error::Parse(format!("sweep axis `{}` is not a scenario field", sw.axis)));
            }
            if sw.steps == 0 || !sw.from.is_finite() || !sw.to.is_finite() {
                return Err(Error::Parse(format!("sweep over `{}` needs finite bounds and steps >= 1", sw.axis)));
            }
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let spec = |t: &ProjectTable| ProjectSpec::new(t.prior, t.reward, t.rate_good, t.rate_bad);
        Scenario::new(spec(&self.low)?, spec(&self.high)?, self.discount, self.alpha)
    }

    pub fn sweep_for(&self, axis: &str) -> Option<&Sweep> {
        self.sweep.iter().find(|s| s.axis == axis)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        let table = |p: &ProjectSpec| ProjectTable {
            prior: p.prior_good,
            reward: p.reward,
            rate_good: p.rate_good,
            rate_bad: p.rate_bad,
        };
        Self { discount: s.discount, alpha: s.alpha, low: table(&s.low), high: table(&s.high), sweep: Vec::new() }
    }
}

/// Copy of `s` with one swept field replaced; the result is revalidated.
pub fn with_axis(s: &Scenario, axis: &str, value: f64) -> Result<Scenario> {
    let mut out = *s;
    let (target, field) = match axis.split_once('.') {
        Some(("low", f)) => (Some(ProjectId::Low), f),
        Some(("high", f)) => (Some(ProjectId::High), f),
        None => (None, axis),
        _ => return Err(Error::Parse(format!("unknown axis `{axis}`"))),
    };
    match (target, field) {
        (None, "discount") => out.discount = value,
        (None, "alpha") => out.alpha = value,
        (Some(id), f) => {
            let p = out.project_mut(id);
            match f {
                "prior" => p.prior_good = value,
                "reward" => p.reward = value,
                "rate_good" => p.rate_good = value,
                "rate_bad" => p.rate_bad = value,
                _ => return Err(Error::Parse(format!("unknown axis `{axis}`"))),
            }
        }
        _ => return Err(Error::Parse(format!("unknown axis `{axis}`"))),
    }
    out.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAFE: &str = r#"
discount = 1.0
alpha = 0.5

[low]
prior = 1.0
reward = 10.0
rate_good = 0.0
rate_bad = 0.0

[high]
prior = 0.5
reward = 15.0
rate_good = 5.0
rate_bad = 0.0

[[sweep]]
axis = "high.prior"
from = 0.1
to = 0.9
steps = 5
"#;

    #[test]
    fn parses_and_builds() {
        let f = ScenarioFile::parse(SAFE).unwrap();
        let s = f.scenario().unwrap();
        assert!(s.has_safe_low());
        let v = f.sweep[0].values();
        assert_eq!(v.len(), 5);
        assert!(v.iter().zip([0.1, 0.3, 0.5, 0.7, 0.9]).all(|(a, b)| (a - b).abs() < 1e-15));
        let s2 = with_axis(&s, "high.prior", 0.7).unwrap();
        assert_eq!(s2.high.prior_good, 0.7);
    }

    #[test]
    fn unknown_key_is_named() {
        let bad = SAFE.replace("rate_bad = 0.0\n\n[high]", "rate_bda = 0.0\n\n[high]");
        let err = ScenarioFile::parse(&bad).unwrap_err();
        assert!(err.to_string().contains("rate_bda"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bad_axis_rejected() {
        let bad = SAFE.replace("axis = \"high.prior\"", "axis = \"high.colour\"");
        assert!(matches!(ScenarioFile::parse(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn round_trip() {
        let f = ScenarioFile::parse(SAFE).unwrap();
        let s = f.scenario().unwrap();
        let text = toml::to_string(&ScenarioFile::from(&s)).unwrap();
        assert_eq!(ScenarioFile::parse(&text).unwrap().scenario().unwrap(), s);
    }
}
