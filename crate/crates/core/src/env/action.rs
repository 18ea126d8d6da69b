//! Continuous action vector layout.
//!
//! `a[2p]` / `a[2p + 1]` are the include / exclude activations of board
//! position `p`; the trailing `|G|·κ` block is a row-major strategy × rank grid
//! read by argmax.

use serde::{Deserialize, Serialize};

use crate::game::{GameState, NormalizedLabel, BOARD_SIZE};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodedAction {
    /// Board positions of the target set, ascending.
    pub targets: Vec<usize>,
    pub strategy_index: usize,
    pub rank: usize,
    /// True when no position passed the include test and the repair rule picked one.
    pub fallback: bool,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ActionError {
    #[error("action has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("action contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("no unrevealed words left for the agent")]
    NoTargets,
}

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Decodes `a` against `state` from the point of view of `team`'s spymaster.
pub fn decode_action(
    a: &[f64],
    state: &GameState,
    team: crate::game::Team,
    strategies: usize,
    kappa: usize,
) -> Result<DecodedAction, ActionError> {
    let expected = 2 * BOARD_SIZE + strategies * kappa;
    if a.len() != expected {
        return Err(ActionError::Length { got: a.len(), expected });
    }
    if let Some(i) = a.iter().position(|v| !v.is_finite()) {
        return Err(ActionError::NonFinite(i));
    }
    let eligible: Vec<usize> = (0..BOARD_SIZE)
        .filter(|&p| !state.is_revealed(p) && state.normalized_label(p, team) == NormalizedLabel::Mine)
        .collect();
    let mut targets: Vec<usize> = eligible.iter().copied().filter(|&p| a[2 * p] > a[2 * p + 1]).collect();
    let mut fallback = false;
    if targets.is_empty() {
        let mut best: Option<(usize, f64)> = None;
        for &p in &eligible {
            let margin = a[2 * p] - a[2 * p + 1];
            if best.is_none_or(|(_, m)| margin > m) {
                best = Some((p, margin));
            }
        }
        let (p, _) = best.ok_or(ActionError::NoTargets)?;
        targets.push(p);
        fallback = true;
    }
    let block = argmax_first(&a[2 * BOARD_SIZE..]);
    Ok(DecodedAction {
        targets,
        strategy_index: block / kappa,
        rank: block % kappa,
        fallback,
    })
}

/// One-hot action selecting exactly `targets`, strategy and rank.
pub fn encode_action(targets: &[usize], strategy_index: usize, rank: usize, strategies: usize, kappa: usize) -> Vec<f64> {
    assert!(strategy_index < strategies && rank < kappa, "strategy or rank out of range");
    let mut a = vec![0.0; 2 * BOARD_SIZE + strategies * kappa];
    for p in 0..BOARD_SIZE {
        if targets.contains(&p) {
            a[2 * p] = 1.0;
        } else {
            a[2 * p + 1] = 1.0;
        }
    }
    a[2 * BOARD_SIZE + strategy_index * kappa + rank] = 1.0;
    a
}
