//! Crate-wide error taxonomy.
//!
//! Three families, matching how callers are expected to react:
//! contract violations (caller bug, fail fast), invalid configuration
//! (user input, report and exit), and numeric failures (data-dependent,
//! recoverable at the run level: a seed that blows up is recorded as
//! prematurely terminated while sibling seeds continue).

use crate::distributions::HeadKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    /// An API precondition was broken by the caller.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A configuration value is outside its documented domain.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A non-finite value or a failed numeric procedure was detected.
    /// Carries enough context to identify the head and coordinate at fault.
    #[error("numeric failure: {what}{}{}{}",
        head.map(|h| format!(" [head {h}]")).unwrap_or_default(),
        dim.map(|d| format!(" [dim {d}]")).unwrap_or_default(),
        step.map(|s| format!(" [step {s}]")).unwrap_or_default())]
    Numeric {
        what: String,
        head: Option<HeadKind>,
        dim: Option<usize>,
        step: Option<usize>,
    },
}

impl CoreError {
    pub fn contract(msg: impl Into<String>) -> Self {
        CoreError::Contract(msg.into())
    }

    pub fn invalid_config(msg: impl Into<String>) -> Self {
        CoreError::InvalidConfig(msg.into())
    }

    pub fn numeric(what: impl Into<String>) -> Self {
        CoreError::Numeric {
            what: what.into(),
            head: None,
            dim: None,
            step: None,
        }
    }

    pub fn numeric_at(
        what: impl Into<String>,
        head: Option<HeadKind>,
        dim: Option<usize>,
        step: Option<usize>,
    ) -> Self {
        CoreError::Numeric {
            what: what.into(),
            head,
            dim,
            step,
        }
    }

    /// True for the `Numeric` family; used by drivers to decide between
    /// aborting the process and marking a single run as failed.
    pub fn is_numeric(&self) -> bool {
        matches!(self, CoreError::Numeric { .. })
    }
}

pub type CoreResult<T> = Result<T, CoreError>;
