use thiserror::Error;

/// A value broke one of its type invariants; `field` names the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invariant violated on `{field}`: {reason}")]
pub struct InvariantViolation {
    pub field: String,
    pub reason: String,
}

impl InvariantViolation {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
