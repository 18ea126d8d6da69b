//! JSON-lines episode log and its replay.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::game::{self, GameError, GameState, Hint, Label, Team};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Reset {
        seed: u64,
        words: Vec<String>,
        labels: Vec<Label>,
        first_team: Team,
        agent_team: Team,
    },
    Hint {
        team: Team,
        clue: String,
        count: u8,
    },
    Guess {
        team: Team,
        word: String,
        position: usize,
        label: Label,
    },
    EndTurn {
        team: Team,
    },
    Reward {
        step: u32,
        reward: f64,
        terminated: bool,
        truncated: bool,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum ReplayError {
    #[error("log does not start with a reset event")]
    NoReset,
    #[error("event {index}: {source}")]
    Game { index: usize, source: GameError },
    #[error("event {index}: guess of {word:?} revealed {found:?}, log says {logged:?}")]
    LabelMismatch {
        index: usize,
        word: String,
        found: Label,
        logged: Label,
    },
    #[error("event {index}: recomputed reward {recomputed} differs from logged {logged}")]
    RewardMismatch { index: usize, recomputed: f64, logged: f64 },
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    pub steps: u32,
    pub total_return: f64,
    pub rewards: Vec<f64>,
    pub final_state: GameState,
}

/// Re-applies every hint and guess of one episode from its board, recomputing
/// each step reward against the log.
pub fn replay(events: &[Event]) -> Result<ReplaySummary, ReplayError> {
    let Some(Event::Reset {
        words,
        labels,
        first_team,
        agent_team,
        ..
    }) = events.first()
    else {
        return Err(ReplayError::NoReset);
    };
    let agent = *agent_team;
    let mut state = GameState::from_parts(words.clone(), labels.clone(), *first_team, agent);
    let mut before_step = state.clone();
    let mut rewards = Vec::new();
    for (index, e) in events.iter().enumerate().skip(1) {
        let game = |source| ReplayError::Game { index, source };
        match e {
            Event::Reset { .. } => break,
            Event::Hint { clue, count, .. } => {
                let hint = Hint::new(clue.clone(), *count).map_err(game)?;
                state.validate_hint(&hint).map_err(game)?;
            }
            Event::Guess {
                team, word, label, ..
            } => {
                let out = state.apply_guess(*team, word).map_err(game)?;
                if out.label != *label {
                    return Err(ReplayError::LabelMismatch {
                        index,
                        word: word.clone(),
                        found: out.label,
                        logged: *label,
                    });
                }
            }
            Event::EndTurn { .. } => state.end_turn(),
            Event::Reward { reward, .. } => {
                let r = game::reward(&before_step, &state, agent);
                if r != *reward {
                    return Err(ReplayError::RewardMismatch {
                        index,
                        recomputed: r,
                        logged: *reward,
                    });
                }
                rewards.push(r);
                before_step = state.clone();
            }
        }
    }
    Ok(ReplaySummary {
        steps: rewards.len() as u32,
        total_return: rewards.iter().sum(),
        rewards,
        final_state: state,
    })
}

pub fn write_jsonl<W: Write>(mut out: W, events: &[Event]) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<Event>, ReplayError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|source| ReplayError::Parse { line: i + 1, source })?);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reset() -> Event {
        let mut labels = vec![Label::Red; 9];
        labels.extend([Label::Blue; 8]);
        labels.extend([Label::Bystander; 7]);
        labels.push(Label::Assassin);
        Event::Reset {
            seed: 1,
            words: (0..25).map(|i| format!("w{i:02}")).collect(),
            labels,
            first_team: Team::Red,
            agent_team: Team::Red,
        }
    }

    fn guess(team: Team, p: usize, label: Label) -> Event {
        Event::Guess {
            team,
            word: format!("w{p:02}"),
            position: p,
            label,
        }
    }

    #[test]
    fn replays_and_round_trips() {
        let events = vec![
            reset(),
            Event::Hint {
                team: Team::Red,
                clue: "zz".into(),
                count: 2,
            },
            guess(Team::Red, 0, Label::Red),
            guess(Team::Red, 20, Label::Bystander),
            Event::EndTurn { team: Team::Red },
            guess(Team::Blue, 9, Label::Blue),
            Event::EndTurn { team: Team::Blue },
            Event::Reward {
                step: 1,
                reward: -1.0,
                terminated: false,
                truncated: false,
            },
            guess(Team::Red, 24, Label::Assassin),
            Event::Reward {
                step: 2,
                reward: -25.0,
                terminated: true,
                truncated: false,
            },
        ];
        let s = replay(&events).unwrap();
        assert_eq!(s.rewards, vec![-1.0, -25.0]);
        assert_eq!(s.total_return, -26.0);
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &events).unwrap();
        assert_eq!(read_jsonl(&buf[..]).unwrap(), events);
    }

    #[test]
    fn detects_tampering() {
        let events = vec![
            reset(),
            guess(Team::Red, 0, Label::Blue),
        ];
        assert!(matches!(replay(&events), Err(ReplayError::LabelMismatch { .. })));
        let events = vec![
            reset(),
            Event::Reward {
                step: 1,
                reward: 0.0,
                terminated: false,
                truncated: false,
            },
        ];
        assert!(matches!(replay(&events), Err(ReplayError::RewardMismatch { .. })));
        assert!(matches!(replay(&[]), Err(ReplayError::NoReset)));
        let bad_hint = vec![
            reset(),
            Event::Hint {
                team: Team::Red,
                clue: "w01x".into(),
                count: 1,
            },
        ];
        assert!(matches!(replay(&bad_hint), Err(ReplayError::Game { index: 1, .. })));
    }
}
