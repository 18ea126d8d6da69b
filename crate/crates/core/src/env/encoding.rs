//! Observation layouts.
//!
//! Both layouts end with the same six status rows, one column per board
//! position: four one-hot label rows (mine, opposing, bystander, assassin,
//! relative to the agent), the reveal mask, and a row filled with the agent's
//! remaining word count divided by nine.

use serde::{Serialize, Serializer};

use crate::embedding::{EmbeddingError, EmbeddingStore};
use crate::game::{GameState, NormalizedLabel, Team, BOARD_SIZE, FIRST_TEAM_WORDS};

pub const STATUS_ROWS: usize = 6;
pub const GOAL_LEN: usize = BOARD_SIZE;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EncodingError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("board word {0:?} is outside the first {1} deck words")]
    OutsideDeck(String, usize),
    #[error("board must hold exactly 25 words")]
    BoardSize,
}

impl PartialEq for EmbeddingError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}

/// Row-major real matrix with 25 columns. Serializes as nested arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    rows: usize,
    data: Vec<f64>,
}

impl Observation {
    pub fn zeros(rows: usize) -> Self {
        Self {
            rows,
            data: vec![0.0; rows * BOARD_SIZE],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        BOARD_SIZE
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, BOARD_SIZE)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * BOARD_SIZE + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * BOARD_SIZE + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * BOARD_SIZE..(r + 1) * BOARD_SIZE]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.data.chunks(BOARD_SIZE).map(<[f64]>::to_vec).collect()
    }
}

impl Serialize for Observation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.data.chunks(BOARD_SIZE))
    }
}

fn write_status(obs: &mut Observation, start: usize, state: &GameState, team: Team) {
    for p in 0..BOARD_SIZE {
        let label = state.normalized_label(p, team);
        obs.set(start + label.index(), p, 1.0);
        obs.set(start + 4, p, if state.is_revealed(p) { 1.0 } else { 0.0 });
        obs.set(start + 5, p, state.remaining(team) as f64 / FIRST_TEAM_WORDS as f64);
    }
    debug_assert_eq!(NormalizedLabel::ALL.len(), 4);
}

/// Pairwise board similarity matrices (one per store) over the status rows.
pub fn encode_pwcsm(state: &GameState, stores: &[&EmbeddingStore], team: Team) -> Result<Observation, EncodingError> {
    if state.words().len() != BOARD_SIZE {
        return Err(EncodingError::BoardSize);
    }
    let mut obs = Observation::zeros(stores.len() * BOARD_SIZE + STATUS_ROWS);
    for (k, store) in stores.iter().enumerate() {
        let rows: Vec<usize> = state
            .words()
            .iter()
            .map(|w| store.row_of(w).ok_or_else(|| EmbeddingError::UnknownWord(w.clone())))
            .collect::<Result<_, _>>()?;
        for a in 0..BOARD_SIZE {
            for b in 0..BOARD_SIZE {
                obs.set(k * BOARD_SIZE + a, b, store.row_similarity(rows[a], rows[b]));
            }
        }
    }
    write_status(&mut obs, stores.len() * BOARD_SIZE, state, team);
    Ok(obs)
}

/// Deck membership bits wrapped into `vocab_size / 25` rows over the status rows.
/// Deck word `r` sits at `(r / 25, r % 25)`.
pub fn encode_ohwe(
    state: &GameState,
    deck: &[String],
    vocab_size: usize,
    team: Team,
) -> Result<Observation, EncodingError> {
    let head = vocab_size / BOARD_SIZE;
    let mut obs = Observation::zeros(head + STATUS_ROWS);
    let vocab = &deck[..vocab_size.min(deck.len())];
    for w in state.words() {
        let r = vocab
            .iter()
            .position(|d| d == w)
            .ok_or_else(|| EncodingError::OutsideDeck(w.clone(), vocab_size))?;
        obs.set(r / BOARD_SIZE, r % BOARD_SIZE, 1.0);
    }
    if state.words().len() == BOARD_SIZE {
        write_status(&mut obs, head, state, team);
    }
    Ok(obs)
}

/// Goal vector: remaining agent words, opponent-cleared flag, assassin flag, zeros.
pub fn goal_vector(state: &GameState, team: Team) -> Vec<f64> {
    let mut g = vec![0.0; GOAL_LEN];
    g[0] = state.remaining(team) as f64;
    g[1] = if state.has_cleared(team.other()) { 1.0 } else { 0.0 };
    g[2] = if state.assassin_revealed_by().is_some() { 1.0 } else { 0.0 };
    g
}
