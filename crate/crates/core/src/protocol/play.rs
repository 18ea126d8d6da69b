//! Human play over the protocol. The human is red and moves first; blue is
//! the scripted team (greedy single-word spymaster plus simulated guessers).

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{parse, to_json, HintPayload, ProtocolError, ServerContext};
use crate::env::{Event, AGENT_TEAM, OPPONENT_TEAM};
use crate::game::{GameState, GuessOutcome, Hint, Label, RuleSet, Team};
use crate::guessers::{self, GuesserParams};
use crate::scoring;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlayRole {
    /// The server gives hints; the human flips cards.
    HumanGuesser,
    /// The human gives hints; simulated guessers flip cards.
    HumanSpymaster,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayNew {
    role: PlayRole,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    guesser: Option<GuesserParams>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GuessPayload {
    word: String,
}

#[derive(Serialize)]
struct Card<'a> {
    word: &'a str,
    revealed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
}

#[derive(Serialize)]
struct PlayView<'a> {
    role: PlayRole,
    seed: u64,
    your_team: Team,
    cards: Vec<Card<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hint: Option<&'a Hint>,
    guesses_left: u8,
    outcomes: &'a [GuessOutcome],
    events: &'a [Event],
    game_over: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    winner: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    winner_team: Option<Team>,
}

pub struct PlaySession {
    ctx: Arc<ServerContext>,
    role: PlayRole,
    seed: u64,
    state: GameState,
    guesser: GuesserParams,
    red_rng: ChaCha8Rng,
    blue_rng: ChaCha8Rng,
    events: Vec<Event>,
    hint: Option<Hint>,
    guesses_left: u8,
    outcomes: Vec<GuessOutcome>,
}

fn out_of_turn(msg: &str) -> ProtocolError {
    ProtocolError::new("out_of_turn", msg)
}

impl PlaySession {
    pub fn start(ctx: Arc<ServerContext>, payload: Value) -> Result<Self, ProtocolError> {
        let p: PlayNew = parse(payload)?;
        let seed = p.seed.unwrap_or(ctx.config.seed);
        let guesser = p.guesser.unwrap_or(ctx.config.guesser);
        if guesser.tau.is_nan() || guesser.tau <= 0.0 {
            return Err(ProtocolError::new("bad_config", "tau must be positive"));
        }
        let state = GameState::new_game(ctx.search.store(), &ctx.deck, seed, true)?.with_rules(RuleSet::Standard);
        let mut session = Self {
            red_rng: ChaCha8Rng::seed_from_u64(seed::derive(seed, guesser.seed)),
            blue_rng: ChaCha8Rng::seed_from_u64(seed::derive(seed, !guesser.seed)),
            ctx,
            role: p.role,
            seed,
            state,
            guesser,
            events: Vec::new(),
            hint: None,
            guesses_left: 0,
            outcomes: Vec::new(),
        };
        if session.role == PlayRole::HumanGuesser {
            session.spymaster_hint()?;
        }
        Ok(session)
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    fn ensure(&self, role: PlayRole, what: &str) -> Result<(), ProtocolError> {
        if self.state.is_terminal() {
            return Err(ProtocolError::new("game_over", "the game is over; start a new one with play_new"));
        }
        if self.role != role {
            return Err(out_of_turn(what));
        }
        Ok(())
    }

    /// The server's red spymaster hint for the human guesser.
    fn spymaster_hint(&mut self) -> Result<(), ProtocolError> {
        let pick = scoring::best_single_target_hint(&self.state, AGENT_TEAM, &self.ctx.search)
            .map_err(|e| ProtocolError::new("env_error", e.to_string()))?;
        let (_, cand) = pick.ok_or_else(|| ProtocolError::new("env_error", "no legal clue for any red word"))?;
        let hint = Hint::new(cand.clue, 1)?;
        self.events.push(Event::Hint {
            team: AGENT_TEAM,
            clue: hint.clue.clone(),
            count: hint.count,
        });
        self.guesses_left = hint.count;
        self.hint = Some(hint);
        Ok(())
    }

    fn push_turn(&mut self, team: Team, hint: &Hint, outcomes: &[GuessOutcome]) {
        self.events.push(Event::Hint {
            team,
            clue: hint.clue.clone(),
            count: hint.count,
        });
        for o in outcomes {
            self.events.push(Event::Guess {
                team,
                word: o.word.clone(),
                position: o.position,
                label: o.label,
            });
        }
        if !self.state.is_terminal() {
            self.events.push(Event::EndTurn { team });
        }
    }

    fn opponent_turn(&mut self) -> Result<(), ProtocolError> {
        if self.state.is_terminal() {
            return Ok(());
        }
        let store = self.ctx.search.store().clone();
        let pick = scoring::best_single_target_hint(&self.state, OPPONENT_TEAM, &self.ctx.search)
            .map_err(|e| ProtocolError::new("env_error", e.to_string()))?;
        match pick {
            Some((_, cand)) => {
                let hint = Hint::new(cand.clue, 1)?;
                let outcomes =
                    guessers::simulate_team_turn(&store, &mut self.state, &hint, &self.guesser, &mut self.blue_rng)
                        .map_err(|e| ProtocolError::new("env_error", e.to_string()))?;
                self.push_turn(OPPONENT_TEAM, &hint, &outcomes);
                self.outcomes.extend(outcomes);
            }
            None => {
                self.state.end_turn();
                self.events.push(Event::EndTurn { team: OPPONENT_TEAM });
            }
        }
        Ok(())
    }

    fn finish_human_turn(&mut self) -> Result<(), ProtocolError> {
        self.hint = None;
        self.guesses_left = 0;
        if !self.state.is_terminal() {
            self.state.end_turn();
            self.events.push(Event::EndTurn { team: AGENT_TEAM });
        }
        self.opponent_turn()?;
        if !self.state.is_terminal() {
            self.spymaster_hint()?;
        }
        Ok(())
    }

    pub fn guess(&mut self, payload: Value) -> Result<String, ProtocolError> {
        self.ensure(PlayRole::HumanGuesser, "guesses come from the simulated guessers in human_spymaster games")?;
        let p: GuessPayload = parse(payload)?;
        self.outcomes.clear();
        let outcome = self.state.apply_guess(AGENT_TEAM, &p.word.to_lowercase())?;
        self.events.push(Event::Guess {
            team: AGENT_TEAM,
            word: outcome.word.clone(),
            position: outcome.position,
            label: outcome.label,
        });
        self.guesses_left = self.guesses_left.saturating_sub(1);
        let continues = outcome.turn_continues && self.guesses_left > 0;
        self.outcomes.push(outcome);
        if !continues {
            self.finish_human_turn()?;
        }
        Ok(self.view_json())
    }

    pub fn end_turn(&mut self, payload: Value) -> Result<String, ProtocolError> {
        self.ensure(PlayRole::HumanGuesser, "only the human guesser ends turns")?;
        if !(payload.is_null() || payload.as_object().is_some_and(|m| m.is_empty())) {
            return Err(ProtocolError::new("bad_request", "play_end_turn takes no payload"));
        }
        self.outcomes.clear();
        self.finish_human_turn()?;
        Ok(self.view_json())
    }

    pub(crate) fn hint(&mut self, p: HintPayload) -> Result<String, ProtocolError> {
        self.ensure(PlayRole::HumanSpymaster, "hints come from the server in human_guesser games")?;
        let hint = Hint::new(p.clue, p.count)?;
        self.state.validate_hint(&hint)?;
        let store = self.ctx.search.store().clone();
        if !store.contains(&hint.clue) {
            return Err(ProtocolError::new(
                "unknown_word",
                format!("{:?} is not in the embedding vocabulary", hint.clue),
            ));
        }
        self.outcomes.clear();
        let outcomes = guessers::simulate_team_turn(&store, &mut self.state, &hint, &self.guesser, &mut self.red_rng)
            .map_err(|e| ProtocolError::new("env_error", e.to_string()))?;
        self.push_turn(AGENT_TEAM, &hint, &outcomes);
        self.outcomes = outcomes;
        self.hint = Some(hint);
        self.opponent_turn()?;
        Ok(self.view_json())
    }

    pub fn view_json(&self) -> String {
        let over = self.state.is_terminal();
        let show_all = over || self.role == PlayRole::HumanSpymaster;
        let cards = self
            .state
            .words()
            .iter()
            .enumerate()
            .map(|(p, w)| {
                let revealed = self.state.is_revealed(p);
                Card {
                    word: w,
                    revealed,
                    label: (revealed || show_all).then(|| self.state.labels()[p]),
                }
            })
            .collect();
        let winner = self.state.winner();
        to_json(&PlayView {
            role: self.role,
            seed: self.seed,
            your_team: AGENT_TEAM,
            cards,
            hint: self.hint.as_ref(),
            guesses_left: self.guesses_left,
            outcomes: &self.outcomes,
            events: &self.events,
            game_over: over,
            winner: winner.map(|t| if t == AGENT_TEAM { "you" } else { "opponent" }),
            winner_team: winner,
        })
    }
}
