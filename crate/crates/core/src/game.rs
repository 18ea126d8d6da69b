//! Codenames rules: board setup, hidden labels, guess resolution, turn
//! alternation, termination and the spymaster reward.

use std::fmt;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingStore;

pub const BOARD_SIZE: usize = 25;
pub const FIRST_TEAM_WORDS: usize = 9;
pub const SECOND_TEAM_WORDS: usize = 8;
pub const BYSTANDERS: usize = 7;
pub const MAX_HINT_COUNT: u8 = 9;

pub const REWARD_WIN: f64 = 0.0;
pub const REWARD_STEP: f64 = -1.0;
pub const REWARD_ASSASSIN: f64 = -25.0;

#[derive(Debug, Error, PartialEq)]
pub enum GameError {
    #[error("word list has {0} words, need at least 25")]
    ShortWordList(usize),
    #[error("board word {0:?} is not in the embedding vocabulary")]
    OutOfVocabulary(String),
    #[error("{0:?} is not on the board")]
    NotOnBoard(String),
    #[error("{0:?} is already revealed")]
    AlreadyRevealed(String),
    #[error("the game is over")]
    GameOver,
    #[error("hint count {0} outside 1..=9")]
    HintCount(u8),
    #[error("illegal clue {clue:?}: {reason}")]
    IllegalHint { clue: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Team {
    Red,
    Blue,
}

impl Team {
    pub fn other(self) -> Team {
        match self {
            Team::Red => Team::Blue,
            Team::Blue => Team::Red,
        }
    }

    pub fn label(self) -> Label {
        match self {
            Team::Red => Label::Red,
            Team::Blue => Label::Blue,
        }
    }
}

impl fmt::Display for Team {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Team::Red => "red",
            Team::Blue => "blue",
        })
    }
}

/// Oracle card label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Red,
    Blue,
    Bystander,
    Assassin,
}

/// Label relative to a team; row order of the label block in observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizedLabel {
    Mine,
    Opposing,
    Bystander,
    Assassin,
}

impl NormalizedLabel {
    pub const ALL: [NormalizedLabel; 4] = [
        NormalizedLabel::Mine,
        NormalizedLabel::Opposing,
        NormalizedLabel::Bystander,
        NormalizedLabel::Assassin,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Label {
    pub fn normalized(self, team: Team) -> NormalizedLabel {
        match self {
            Label::Bystander => NormalizedLabel::Bystander,
            Label::Assassin => NormalizedLabel::Assassin,
            l if l == team.label() => NormalizedLabel::Mine,
            _ => NormalizedLabel::Opposing,
        }
    }
}

/// What ends a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleSet {
    /// Environment rules: only the agent's team clearing its words (or an
    /// assassin reveal) ends the episode; the opponent clearing is recorded
    /// but play continues.
    AgentEpisode,
    /// Table rules: the first team to clear its words wins.
    Standard,
}

/// A spymaster hint `(clue, n)` with `n` in `1..=9`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hint {
    pub clue: String,
    pub count: u8,
}

impl Hint {
    pub fn new(clue: impl Into<String>, count: u8) -> Result<Self, GameError> {
        if !(1..=MAX_HINT_COUNT).contains(&count) {
            return Err(GameError::HintCount(count));
        }
        Ok(Self {
            clue: clue.into().to_lowercase(),
            count,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuessOutcome {
    pub word: String,
    pub position: usize,
    pub label: Label,
    /// Label relative to the guessing team.
    pub normalized: NormalizedLabel,
    pub turn_continues: bool,
    pub game_over: bool,
    pub winner: Option<Team>,
}

/// Full game state; the spymaster MDP state is (board, mask, labels
/// normalized to the acting team).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    words: Vec<String>,
    labels: Vec<Label>,
    revealed: Vec<bool>,
    acting: Team,
    first_team: Team,
    agent_team: Team,
    turn_index: u32,
    winner: Option<Team>,
    assassin_revealed_by: Option<Team>,
    cleared: Vec<Team>,
    rules: RuleSet,
}

impl GameState {
    /// Deals a seeded board: 25 distinct words, 9/8/7/1 labels with the first
    /// mover holding nine. The agent always plays red; `agent_team_first`
    /// decides whether red moves first.
    pub fn new_game(
        store: &EmbeddingStore,
        wordlist: &[String],
        seed: u64,
        agent_team_first: bool,
    ) -> Result<Self, GameError> {
        if wordlist.len() < BOARD_SIZE {
            return Err(GameError::ShortWordList(wordlist.len()));
        }
        if let Some(w) = wordlist.iter().find(|w| !store.contains(w)) {
            return Err(GameError::OutOfVocabulary(w.clone()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words: Vec<String> = sample(&mut rng, wordlist.len(), BOARD_SIZE)
            .into_iter()
            .map(|i| wordlist[i].clone())
            .collect();
        let agent_team = Team::Red;
        let first = if agent_team_first { agent_team } else { agent_team.other() };
        let mut labels = Vec::with_capacity(BOARD_SIZE);
        labels.extend(std::iter::repeat_n(first.label(), FIRST_TEAM_WORDS));
        labels.extend(std::iter::repeat_n(first.other().label(), SECOND_TEAM_WORDS));
        labels.extend(std::iter::repeat_n(Label::Bystander, BYSTANDERS));
        labels.push(Label::Assassin);
        labels.shuffle(&mut rng);
        Ok(Self::from_parts(words, labels, first, agent_team))
    }

    /// A state with explicit words and labels (scripted boards, tests).
    pub fn from_parts(words: Vec<String>, labels: Vec<Label>, first_team: Team, agent_team: Team) -> Self {
        let n = words.len();
        Self {
            words: words.into_iter().map(|w| w.to_lowercase()).collect(),
            labels,
            revealed: vec![false; n],
            acting: first_team,
            first_team,
            agent_team,
            turn_index: 0,
            winner: None,
            assassin_revealed_by: None,
            cleared: Vec::new(),
            rules: RuleSet::AgentEpisode,
        }
    }

    pub fn with_rules(mut self, rules: RuleSet) -> Self {
        self.rules = rules;
        self
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn revealed(&self) -> &[bool] {
        &self.revealed
    }

    pub fn is_revealed(&self, position: usize) -> bool {
        self.revealed[position]
    }

    pub fn acting_team(&self) -> Team {
        self.acting
    }

    pub fn first_team(&self) -> Team {
        self.first_team
    }

    pub fn agent_team(&self) -> Team {
        self.agent_team
    }

    pub fn turn_index(&self) -> u32 {
        self.turn_index
    }

    pub fn winner(&self) -> Option<Team> {
        self.winner
    }

    pub fn rules(&self) -> RuleSet {
        self.rules
    }

    pub fn assassin_revealed_by(&self) -> Option<Team> {
        self.assassin_revealed_by
    }

    /// Whether `team` has revealed all of its words.
    pub fn has_cleared(&self, team: Team) -> bool {
        self.cleared.contains(&team)
    }

    pub fn position_of(&self, word: &str) -> Option<usize> {
        let word = word.to_lowercase();
        self.words.iter().position(|w| *w == word)
    }

    pub fn normalized_label(&self, position: usize, team: Team) -> NormalizedLabel {
        self.labels[position].normalized(team)
    }

    /// Unrevealed board positions labeled for `team`.
    pub fn unrevealed_of(&self, team: Team) -> Vec<usize> {
        (0..self.words.len())
            .filter(|&p| !self.revealed[p] && self.labels[p] == team.label())
            .collect()
    }

    pub fn remaining(&self, team: Team) -> usize {
        self.unrevealed_of(team).len()
    }

    /// Unrevealed positions that are bad for `team`, with their labels.
    pub fn unrevealed_bad_for(&self, team: Team) -> Vec<(usize, NormalizedLabel)> {
        (0..self.words.len())
            .filter(|&p| !self.revealed[p])
            .map(|p| (p, self.labels[p].normalized(team)))
            .filter(|(_, l)| *l != NormalizedLabel::Mine)
            .collect()
    }

    pub fn revealed_count(&self) -> usize {
        self.revealed.iter().filter(|&&r| r).count()
    }

    pub fn is_terminal(&self) -> bool {
        self.winner.is_some()
    }

    /// A clue is illegal when it equals, contains, or is contained in any
    /// board word (case-insensitive).
    pub fn legal_hint(&self, clue: &str) -> bool {
        self.illegal_reason(clue).is_none()
    }

    /// The offending board word, if the clue is illegal.
    pub fn illegal_reason(&self, clue: &str) -> Option<String> {
        let clue = clue.trim().to_lowercase();
        if clue.is_empty() {
            return Some("clue is empty".into());
        }
        self.words.iter().find_map(|w| {
            if *w == clue {
                Some(format!("{clue:?} is a board word"))
            } else if w.contains(&clue) {
                Some(format!("{clue:?} is a substring of board word {w:?}"))
            } else if clue.contains(w.as_str()) {
                Some(format!("{clue:?} contains board word {w:?}"))
            } else {
                None
            }
        })
    }

    pub fn validate_hint(&self, hint: &Hint) -> Result<(), GameError> {
        if !(1..=MAX_HINT_COUNT).contains(&hint.count) {
            return Err(GameError::HintCount(hint.count));
        }
        match self.illegal_reason(&hint.clue) {
            Some(reason) => Err(GameError::IllegalHint {
                clue: hint.clue.clone(),
                reason,
            }),
            None => Ok(()),
        }
    }

    pub fn apply_guess(&mut self, team: Team, word: &str) -> Result<GuessOutcome, GameError> {
        let position = self
            .position_of(word)
            .ok_or_else(|| GameError::NotOnBoard(word.to_string()))?;
        self.reveal(team, position)
    }

    /// Reveals the card at `position` on behalf of `team`.
    pub fn reveal(&mut self, team: Team, position: usize) -> Result<GuessOutcome, GameError> {
        if self.is_terminal() {
            return Err(GameError::GameOver);
        }
        if self.revealed[position] {
            return Err(GameError::AlreadyRevealed(self.words[position].clone()));
        }
        self.revealed[position] = true;
        let label = self.labels[position];
        let normalized = label.normalized(team);

        if label == Label::Assassin {
            self.assassin_revealed_by = Some(team);
            self.winner = Some(team.other());
        } else {
            for t in [team, team.other()] {
                if !self.cleared.contains(&t) && self.remaining(t) == 0 {
                    self.cleared.push(t);
                    let ends = match self.rules {
                        RuleSet::Standard => true,
                        RuleSet::AgentEpisode => t == self.agent_team,
                    };
                    if ends && self.winner.is_none() {
                        self.winner = Some(t);
                    }
                }
            }
        }
        let game_over = self.is_terminal();
        Ok(GuessOutcome {
            word: self.words[position].clone(),
            position,
            label,
            normalized,
            turn_continues: normalized == NormalizedLabel::Mine && !game_over,
            game_over,
            winner: self.winner,
        })
    }

    /// Hands the turn to the other team.
    pub fn end_turn(&mut self) {
        if !self.is_terminal() {
            self.acting = self.acting.other();
        }
        self.turn_index += 1;
    }
}

/// Reward of one agent transition `prev -> next`: 0 when the agent's team has
/// won, -25 when the agent's guessers revealed the assassin, -1 otherwise.
pub fn reward(prev: &GameState, next: &GameState, agent_team: Team) -> f64 {
    if next.winner() == Some(agent_team) {
        REWARD_WIN
    } else if next.assassin_revealed_by() == Some(agent_team) && prev.assassin_revealed_by().is_none() {
        REWARD_ASSASSIN
    } else {
        REWARD_STEP
    }
}
