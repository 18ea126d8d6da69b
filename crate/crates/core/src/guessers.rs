//! Simulated operatives: turn a hint into an ordered guess sequence and play
//! out a team turn.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingError, EmbeddingStore};
use crate::game::{GameError, GameState, GuessOutcome, Hint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuesserMode {
    Greedy,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GuesserParams {
    pub mode: GuesserMode,
    /// Similarity floor: only words with `s(clue, w) > lambda` are guessed.
    pub lambda: f64,
    /// Softmax temperature of the stochastic guesser.
    pub tau: f64,
    pub seed: u64,
}

impl Default for GuesserParams {
    fn default() -> Self {
        Self {
            mode: GuesserMode::Greedy,
            lambda: 0.0,
            tau: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GuesserError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("temperature must be positive, got {0}")]
    Temperature(f64),
}

/// `(position, similarity)` of unrevealed board words above the floor, in board order.
fn pool(
    store: &EmbeddingStore,
    state: &GameState,
    hint: &Hint,
    lambda: f64,
) -> Result<Vec<(usize, f64)>, EmbeddingError> {
    let clue = store.vector(&hint.clue)?;
    let mut out = Vec::new();
    for (p, w) in state.words().iter().enumerate() {
        if state.is_revealed(p) {
            continue;
        }
        let s = crate::embedding::cosine32(clue, store.vector(w)?);
        if s > lambda {
            out.push((p, s));
        }
    }
    Ok(out)
}

/// The `n` most similar unrevealed words above `lambda`, descending; ties by
/// board position.
pub fn greedy_guess_order(
    store: &EmbeddingStore,
    state: &GameState,
    hint: &Hint,
    params: &GuesserParams,
) -> Result<Vec<usize>, GuesserError> {
    let mut candidates = pool(store, state, hint, params.lambda)?;
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(candidates
        .into_iter()
        .take(hint.count as usize)
        .map(|(p, _)| p)
        .collect())
}

/// Softmax probabilities of `exp(s / tau)` over `similarities`, max-shifted.
pub fn softmax(similarities: &[f64], tau: f64) -> Vec<f64> {
    let max = similarities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = similarities.iter().map(|s| ((s - max) / tau).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Up to `n` words drawn without replacement from `softmax(s(clue, .) / tau)`
/// over the unrevealed words above `lambda`.
pub fn stochastic_guess_order<R: Rng + ?Sized>(
    store: &EmbeddingStore,
    state: &GameState,
    hint: &Hint,
    params: &GuesserParams,
    rng: &mut R,
) -> Result<Vec<usize>, GuesserError> {
    if params.tau.is_nan() || params.tau <= 0.0 {
        return Err(GuesserError::Temperature(params.tau));
    }
    let mut remaining = pool(store, state, hint, params.lambda)?;
    let mut order = Vec::with_capacity(hint.count as usize);
    while order.len() < hint.count as usize && !remaining.is_empty() {
        let sims: Vec<f64> = remaining.iter().map(|(_, s)| *s).collect();
        let probs = softmax(&sims, params.tau);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = remaining.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = i;
                break;
            }
        }
        order.push(remaining.remove(pick).0);
    }
    Ok(order)
}

pub fn guess_order<R: Rng + ?Sized>(
    store: &EmbeddingStore,
    state: &GameState,
    hint: &Hint,
    params: &GuesserParams,
    rng: &mut R,
) -> Result<Vec<usize>, GuesserError> {
    match params.mode {
        GuesserMode::Greedy => greedy_guess_order(store, state, hint, params),
        GuesserMode::Stochastic => stochastic_guess_order(store, state, hint, params, rng),
    }
}

/// Plays the acting team's guesses for `hint`, then passes the turn (unless
/// the game ended). Stops at the first non-own reveal, at game over, or after
/// `hint.count` guesses.
pub fn simulate_team_turn<R: Rng + ?Sized>(
    store: &EmbeddingStore,
    state: &mut GameState,
    hint: &Hint,
    params: &GuesserParams,
    rng: &mut R,
) -> Result<Vec<GuessOutcome>, GuesserError> {
    if state.is_terminal() {
        return Err(GameError::GameOver.into());
    }
    state.validate_hint(hint)?;
    let team = state.acting_team();
    let order = guess_order(store, state, hint, params, rng)?;
    let mut outcomes = Vec::with_capacity(order.len());
    for p in order {
        let outcome = state.reveal(team, p)?;
        let stop = !outcome.turn_continues || outcome.game_over;
        outcomes.push(outcome);
        if stop {
            break;
        }
    }
    state.end_turn();
    Ok(outcomes)
}
