//! Two-armed Poisson bandits in which attention (exploration) and
//! investment (exploitation) can be separated.

pub mod cli;
pub mod closedform;
pub mod error;
pub mod model;
pub mod oracle;
pub mod policy;
pub mod scenario_file;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
