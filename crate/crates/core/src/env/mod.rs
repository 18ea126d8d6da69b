//! The spymaster MDP as a reset/step environment.
//!
//! The agent is the red spymaster and moves first. One `step` is a full
//! round: the agent's hint and its guessers' reveals, then (if the game is
//! still running) a scripted blue turn.

pub mod action;
pub mod config;
pub mod encoding;
pub mod trajectory;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ann::ClueSearch;
use crate::embedding::EmbeddingStore;
use crate::game::{self, GameError, GameState, GuessOutcome, Hint, Team, BOARD_SIZE, FIRST_TEAM_WORDS};
use crate::guessers::{self, GuesserError, GuesserParams};
use crate::scoring::{self, ScoringError, ScoringParams, Strategy, TargetSet};
use crate::seed;

pub use action::{decode_action, encode_action, ActionError, DecodedAction};
pub use config::{ConfigError, Encoding, EnvConfig, OpponentConfig};
pub use encoding::{encode_ohwe, encode_pwcsm, goal_vector, EncodingError, Observation};
pub use trajectory::{replay, Event, ReplayError, ReplaySummary};

pub const AGENT_TEAM: Team = Team::Red;
pub const OPPONENT_TEAM: Team = Team::Blue;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Guesser(#[from] GuesserError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error("deck has {got} words, the configuration needs at least {needed}")]
    DeckTooSmall { got: usize, needed: usize },
    #[error("expected {expected} similarity stores, got {got}")]
    StoreCount { expected: usize, got: usize },
    #[error("call reset before step")]
    NotReset,
    #[error("episode is over; call reset")]
    EpisodeOver,
}

/// Shape and bounds of a space, in the form RL adapters expect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Space {
    Box { shape: Vec<usize>, low: f64, high: f64 },
    Discrete { n: usize },
    MultiBinary { n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spaces {
    pub observation: Space,
    pub action: Space,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub goal: Option<Space>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResetResult {
    pub observation: Observation,
    pub goal: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub hint: Hint,
    pub targets: Vec<String>,
    pub strategy: Option<Strategy>,
    pub rank: Option<usize>,
    /// Include bits selected nothing; the repair rule chose the target.
    pub decode_fallback: bool,
    /// No candidate survived; the hint is the nearest legal word to the targets.
    pub barren: bool,
    pub agent_guesses: Vec<GuessOutcome>,
    pub opponent_hint: Option<Hint>,
    pub opponent_guesses: Vec<GuessOutcome>,
    pub step: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub goal: Vec<f64>,
    pub info: StepInfo,
}

/// Spymaster environment over one embedding store and clue search backend.
pub struct CodenamesEnv {
    config: EnvConfig,
    search: ClueSearch,
    similarity_stores: Vec<Arc<EmbeddingStore>>,
    deck: Vec<String>,
    state: Option<GameState>,
    episode_seed: u64,
    episodes: u64,
    steps: u32,
    done: bool,
    agent_rng: ChaCha8Rng,
    opponent_rng: ChaCha8Rng,
    log: Option<Vec<Event>>,
}

impl CodenamesEnv {
    /// The PWCSM blocks all use the clue store; see [`Self::with_similarity_stores`].
    pub fn new(config: EnvConfig, search: ClueSearch, deck: Vec<String>) -> Result<Self, EnvError> {
        config.validate()?;
        let needed = match config.encoding {
            Encoding::Ohwe => config.vocab_size,
            Encoding::Pwcsm => BOARD_SIZE,
        };
        if deck.len() < needed {
            return Err(EnvError::DeckTooSmall { got: deck.len(), needed });
        }
        let store = search.store();
        if let Some(w) = deck.iter().find(|w| !store.contains(w)) {
            return Err(GameError::OutOfVocabulary(w.clone()).into());
        }
        let similarity_stores = vec![store.clone(); config.j];
        Ok(Self {
            config,
            search,
            similarity_stores,
            deck,
            state: None,
            episode_seed: 0,
            episodes: 0,
            steps: 0,
            done: false,
            agent_rng: ChaCha8Rng::seed_from_u64(0),
            opponent_rng: ChaCha8Rng::seed_from_u64(0),
            log: None,
        })
    }

    /// Uses `stores` (exactly `j` of them) for the PWCSM similarity blocks.
    pub fn with_similarity_stores(mut self, stores: Vec<Arc<EmbeddingStore>>) -> Result<Self, EnvError> {
        if stores.len() != self.config.j {
            return Err(EnvError::StoreCount {
                expected: self.config.j,
                got: stores.len(),
            });
        }
        if let Some(w) = stores.iter().flat_map(|s| self.deck.iter().filter(|w| !s.contains(w))).next() {
            return Err(GameError::OutOfVocabulary(w.clone()).into());
        }
        self.similarity_stores = stores;
        Ok(self)
    }

    /// Starts recording the trajectory log (cleared on every reset).
    pub fn record(&mut self, on: bool) {
        self.log = on.then(Vec::new);
    }

    pub fn log(&self) -> Option<&[Event]> {
        self.log.as_deref()
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn search(&self) -> &ClueSearch {
        &self.search
    }

    pub fn store(&self) -> &Arc<EmbeddingStore> {
        self.search.store()
    }

    pub fn deck(&self) -> &[String] {
        &self.deck
    }

    pub fn state(&self) -> Option<&GameState> {
        self.state.as_ref()
    }

    pub fn steps(&self) -> u32 {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn episode_seed(&self) -> u64 {
        self.episode_seed
    }

    pub fn spaces(&self) -> Spaces {
        let low = match self.config.encoding {
            Encoding::Pwcsm => -1.0,
            Encoding::Ohwe => 0.0,
        };
        Spaces {
            observation: Space::Box {
                shape: vec![self.config.observation_rows(), BOARD_SIZE],
                low,
                high: 1.0,
            },
            action: Space::Box {
                shape: vec![self.config.action_len()],
                low: 0.0,
                high: 1.0,
            },
            goal: Some(Space::Box {
                shape: vec![encoding::GOAL_LEN],
                low: 0.0,
                high: FIRST_TEAM_WORDS as f64,
            }),
        }
    }

    /// New episode. An explicit `seed` wins; otherwise the seed is derived
    /// from `config.seed` and the number of episodes started so far.
    pub fn reset(&mut self, seed: Option<u64>) -> Result<ResetResult, EnvError> {
        let episode_seed = seed.unwrap_or_else(|| seed::derive(self.config.seed, self.episodes));
        let deck = match self.config.encoding {
            Encoding::Ohwe => &self.deck[..self.config.vocab_size],
            Encoding::Pwcsm => &self.deck[..],
        };
        let state = GameState::new_game(self.search.store(), deck, episode_seed, true)?;
        self.episodes += 1;
        self.episode_seed = episode_seed;
        self.steps = 0;
        self.done = false;
        let opp = self.config.opponent.guesser.unwrap_or(self.config.guesser);
        self.agent_rng = ChaCha8Rng::seed_from_u64(seed::derive(episode_seed, self.config.guesser.seed));
        self.opponent_rng = ChaCha8Rng::seed_from_u64(seed::derive(episode_seed, !opp.seed));
        if let Some(log) = self.log.as_mut() {
            log.clear();
            log.push(Event::Reset {
                seed: episode_seed,
                words: state.words().to_vec(),
                labels: state.labels().to_vec(),
                first_team: state.first_team(),
                agent_team: state.agent_team(),
            });
        }
        self.state = Some(state);
        Ok(ResetResult {
            observation: self.observe()?,
            goal: self.goal()?,
            seed: episode_seed,
        })
    }

    pub fn observe(&self) -> Result<Observation, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        Ok(match self.config.encoding {
            Encoding::Pwcsm => {
                let stores: Vec<&EmbeddingStore> = self.similarity_stores.iter().map(|s| s.as_ref()).collect();
                encode_pwcsm(state, &stores, AGENT_TEAM)?
            }
            Encoding::Ohwe => encode_ohwe(state, &self.deck, self.config.vocab_size, AGENT_TEAM)?,
        })
    }

    pub fn goal(&self) -> Result<Vec<f64>, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        Ok(goal_vector(state, AGENT_TEAM))
    }

    pub fn decode(&self, action: &[f64]) -> Result<DecodedAction, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        Ok(decode_action(
            action,
            state,
            AGENT_TEAM,
            self.config.strategies.len(),
            self.config.kappa,
        )?)
    }

    fn ready(&self) -> Result<&GameState, EnvError> {
        let state = self.state.as_ref().ok_or(EnvError::NotReset)?;
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        Ok(state)
    }

    /// Action vector step: decode, generate candidates, hint, play the round.
    pub fn step(&mut self, action: &[f64]) -> Result<StepResult, EnvError> {
        let state = self.ready()?;
        let decoded = self.decode(action)?;
        let strategy = self.config.strategies[decoded.strategy_index];
        let targets = TargetSet::new(state, decoded.targets.clone())?;
        let params = ScoringParams {
            lambda_t: self.config.lambda_t,
            ..ScoringParams::new(strategy, self.config.kappa)
        };
        let (clue, barren) = match scoring::generate_candidates(&targets, state, &params, &self.search) {
            Ok(mut cands) => {
                let rank = decoded.rank.min(cands.len() - 1);
                (cands.swap_remove(rank).clue, false)
            }
            Err(ScoringError::BarrenTargetSet) => {
                (scoring::nearest_legal_clue(targets.positions(), state, &self.search)?.clue, true)
            }
            Err(e) => return Err(e.into()),
        };
        let hint = Hint::new(clue, decoded.targets.len() as u8)?;
        let mut info = self.blank_info(hint.clone(), targets.words(state));
        info.strategy = Some(strategy);
        info.rank = Some(decoded.rank);
        info.decode_fallback = decoded.fallback;
        info.barren = barren;
        self.advance(hint, info)
    }

    /// Plays an explicit hint for the agent. Counts above the number of the
    /// agent's remaining words are reduced to it.
    pub fn step_hint(&mut self, hint: Hint) -> Result<StepResult, EnvError> {
        let state = self.ready()?;
        let remaining = state.remaining(AGENT_TEAM) as u8;
        let hint = Hint::new(hint.clue, hint.count.min(remaining.max(1)))?;
        state.validate_hint(&hint)?;
        let info = self.blank_info(hint.clone(), Vec::new());
        self.advance(hint, info)
    }

    fn blank_info(&self, hint: Hint, targets: Vec<&str>) -> StepInfo {
        StepInfo {
            hint,
            targets: targets.into_iter().map(str::to_string).collect(),
            strategy: None,
            rank: None,
            decode_fallback: false,
            barren: false,
            agent_guesses: Vec::new(),
            opponent_hint: None,
            opponent_guesses: Vec::new(),
            step: self.steps + 1,
        }
    }

    fn advance(&mut self, hint: Hint, mut info: StepInfo) -> Result<StepResult, EnvError> {
        let store = self.search.store().clone();
        let mut state = self.state.clone().ok_or(EnvError::NotReset)?;
        let prev = state.clone();

        info.agent_guesses = guessers::simulate_team_turn(&store, &mut state, &hint, &self.config.guesser, &mut self.agent_rng)?;
        self.log_turn(AGENT_TEAM, &hint, &info.agent_guesses, state.is_terminal());

        if !state.is_terminal() {
            let opp_params: GuesserParams = self.config.opponent.guesser.unwrap_or(self.config.guesser);
            let pick = if state.remaining(OPPONENT_TEAM) > 0 {
                scoring::best_single_target_hint(&state, OPPONENT_TEAM, &self.search)?
            } else {
                None
            };
            match pick {
                Some((_, cand)) => {
                    let opp_hint = Hint::new(cand.clue, 1)?;
                    info.opponent_guesses =
                        guessers::simulate_team_turn(&store, &mut state, &opp_hint, &opp_params, &mut self.opponent_rng)?;
                    self.log_turn(OPPONENT_TEAM, &opp_hint, &info.opponent_guesses, state.is_terminal());
                    info.opponent_hint = Some(opp_hint);
                }
                None => {
                    state.end_turn();
                    self.log_event(Event::EndTurn { team: OPPONENT_TEAM });
                }
            }
        }

        let reward = game::reward(&prev, &state, AGENT_TEAM);
        self.steps += 1;
        let terminated = state.is_terminal();
        let truncated = !terminated && self.steps >= self.config.max_turns;
        self.done = terminated || truncated;
        self.log_event(Event::Reward {
            step: self.steps,
            reward,
            terminated,
            truncated,
        });
        self.state = Some(state);
        Ok(StepResult {
            observation: self.observe()?,
            reward,
            terminated,
            truncated,
            goal: self.goal()?,
            info,
        })
    }

    fn log_event(&mut self, e: Event) {
        if let Some(log) = self.log.as_mut() {
            log.push(e);
        }
    }

    fn log_turn(&mut self, team: Team, hint: &Hint, guesses: &[GuessOutcome], game_over: bool) {
        self.log_event(Event::Hint {
            team,
            clue: hint.clue.clone(),
            count: hint.count,
        });
        for g in guesses {
            self.log_event(Event::Guess {
                team,
                word: g.word.clone(),
                position: g.position,
                label: g.label,
            });
        }
        if !game_over {
            self.log_event(Event::EndTurn { team });
        }
    }
}
