//! Diagnostic environments for action-space scaling.

pub mod clickpixel;
pub mod whack;

pub use clickpixel::{ClickPixel, ClickPixelConfig};
pub use whack::{Whack, WhackConfig};

/// Largest accepted board side.
pub const MAX_SIDE: usize = 256;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ToyError {
    #[error("board side must be in 2..=256, got {0}")]
    Side(usize),
    #[error("episode length must be at least 1")]
    EpisodeLength,
    #[error("highlight probability must lie in [0, 1], got {0}")]
    Probability(f64),
    #[error("action {got} out of range 0..{n}")]
    ActionRange { got: i64, n: usize },
    #[error("action has length {got}, expected {expected}")]
    ActionLength { got: usize, expected: usize },
    #[error("call reset before step")]
    NotReset,
    #[error("episode is over; call reset")]
    EpisodeOver,
}

/// `q × q` observation plus step outcome, shared by both toys.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ToyStep {
    pub observation: Vec<Vec<f64>>,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
}
