use thiserror::Error;

use crate::model::ProjectId;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid value for `{field}`: {reason}")]
    InvalidField { field: &'static str, reason: String },

    #[error("news rates violate the same-sign assumption (low: {low_diff:+}, high: {high_diff:+})")]
    MixedRegime { low_diff: f64, high_diff: f64 },

    #[error("high-reward project must pay strictly more than the low-reward one ({high} <= {low})")]
    RewardOrder { low: f64, high: f64 },

    #[error("news event on project {0:?}, which is already resolved")]
    AlreadyResolved(ProjectId),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate switch-point function: slope vanishes (λ_x^b·R_y = λ_y^g·R_x)")]
    NonGenericSlope,

    #[error("no cycle found in the search box after {draws} draws")]
    NoCycle { draws: usize },

    #[error("time step too coarse: per-step event probability {prob:.4} exceeds 0.1")]
    StepTooCoarse { prob: f64 },

    #[error("policy map has no crossing along the requested axis")]
    NoCrossing,

    #[error("policy map is not monotone along the requested axis ({crossings} crossings)")]
    NonMonotone { crossings: usize },
}

impl Error {
    /// Process exit code: 2 for malformed input, 3 for violated preconditions.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Parse(_) | Error::InvalidField { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
