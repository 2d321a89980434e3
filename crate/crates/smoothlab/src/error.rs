//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// An action profile contains an action outside the acting player's set.
    #[error("invalid profile: player {player} action {action:?} not available for type {type_id:?}")]
    InvalidProfile {
        player: usize,
        action: String,
        type_id: String,
    },

    /// An action violates a family-specific feasibility rule.
    #[error("invalid action for player {player}: {reason}")]
    InvalidAction { player: usize, reason: String },

    /// A deviation map produced an action outside the deviator's action set.
    #[error("invalid deviation for player {player} at type profile {type_profile:?}")]
    InvalidDeviation {
        player: usize,
        type_profile: Vec<String>,
    },

    /// A check was invoked on the wrong game class.
    #[error("wrong smoothness variant: {0}")]
    WrongVariant(String),

    /// An enumeration would exceed the configured guard.
    #[error("search space of size {size} exceeds guard {guard}")]
    GuardExceeded { size: u128, guard: u128 },

    /// Malformed instance or run-spec document.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },

    /// A domain invariant failed at construction time.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;
