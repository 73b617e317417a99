//! Command implementations behind the `axsr` binary. Each command reads a
//! scenario, fans independent runs out over a thread pool and writes
//! manifest-tagged tables into an output directory.

use std::path::Path;

use thiserror::Error;

pub mod commands;
pub mod output;

pub use commands::*;
pub use output::Format;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unreadable or invalid input files.
    #[error("{0}")]
    Input(String),
    /// Something that should not happen given valid input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<axsr::scenario::ScenarioError> for CliError {
    fn from(e: axsr::scenario::ScenarioError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<axsr::desim::SimError> for CliError {
    fn from(e: axsr::desim::SimError) -> Self {
        use axsr::desim::SimError;
        match e {
            SimError::Internal(_) => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<axsr::ctmn::CtmnError> for CliError {
    fn from(e: axsr::ctmn::CtmnError) -> Self {
        use axsr::ctmn::CtmnError;
        match e {
            CtmnError::Singular(_) | CtmnError::ServiceTime { .. } => CliError::Internal(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

/// Parses `a..b` (half-open) or `a..=b` into a seed list.
pub fn parse_seed_range(s: &str) -> Result<Vec<u64>, String> {
    let (a, b, inclusive) = if let Some((a, b)) = s.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = s.split_once("..") {
        (a, b, false)
    } else {
        let v: u64 = s.trim().parse().map_err(|_| format!("bad seed range {s:?}"))?;
        return Ok(vec![v]);
    };
    let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range {s:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range {s:?}"))?;
    let end = if inclusive { b.checked_add(1).ok_or("seed range overflows")? } else { b };
    if end <= a {
        return Err(format!("empty seed range {s:?}"));
    }
    Ok((a..end).collect())
}
