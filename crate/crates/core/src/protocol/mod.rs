//! JSON-lines control protocol.
//!
//! Each request line is `{"id": any, "cmd": string, "payload": object}`; each
//! response line is `{"id", "ok": true, "payload"}` or
//! `{"id", "ok": false, "error": {"code", "message"}}`. Payloads are the
//! serde form of the in-process result types, so a wire client sees the same
//! bytes as a direct `serde_json` dump of the environment's output.

pub mod play;
pub mod server;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ann::ClueSearch;
use crate::env::{CodenamesEnv, EnvConfig, EnvError, Space, Spaces};
use crate::game::{GameError, GameState, Hint, Label, Team};
use crate::toy::{ClickPixel, ClickPixelConfig, ToyError, Whack, WhackConfig};

pub use play::{PlayRole, PlaySession};
pub use server::{serve_lines, serve_listener, serve_stdio, serve_tcp, DEFAULT_PORT};

pub const PROTOCOL_VERSION: u32 = 1;
pub const ENCODINGS: [&str; 2] = ["pwcsm", "ohwe"];
pub const ENVS: [&str; 3] = ["codenames", "clickpixel", "whack"];

/// Immutable state shared by every session of a server.
#[derive(Debug, Clone)]
pub struct ServerContext {
    pub search: ClueSearch,
    pub deck: Vec<String>,
    pub config: EnvConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub line: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolError {
    pub code: &'static str,
    pub message: String,
}

impl ProtocolError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<EnvError> for ProtocolError {
    fn from(e: EnvError) -> Self {
        let e = match e {
            EnvError::Game(g) => return g.into(),
            e => e,
        };
        let code = match &e {
            EnvError::EpisodeOver => "episode_over",
            EnvError::NotReset => "not_reset",
            EnvError::Action(_) => "invalid_action",
            EnvError::Config(_) => "bad_config",
            _ => "env_error",
        };
        Self::new(code, e.to_string())
    }
}

impl From<GameError> for ProtocolError {
    fn from(e: GameError) -> Self {
        let code = match &e {
            GameError::IllegalHint { .. } => "illegal_hint",
            GameError::HintCount(_) => "bad_hint_count",
            GameError::NotOnBoard(_) => "not_on_board",
            GameError::AlreadyRevealed(_) => "already_revealed",
            GameError::GameOver => "game_over",
            _ => "game_error",
        };
        Self::new(code, e.to_string())
    }
}

impl From<ToyError> for ProtocolError {
    fn from(e: ToyError) -> Self {
        let code = match &e {
            ToyError::EpisodeOver => "episode_over",
            ToyError::NotReset => "not_reset",
            ToyError::ActionRange { .. } | ToyError::ActionLength { .. } => "invalid_action",
            _ => "bad_config",
        };
        Self::new(code, e.to_string())
    }
}

#[derive(Debug, Deserialize)]
struct Request {
    #[serde(default)]
    id: Value,
    cmd: String,
    #[serde(default)]
    payload: Value,
}

enum EnvHandle {
    Codenames(Box<CodenamesEnv>),
    ClickPixel(ClickPixel),
    Whack(Whack),
}

#[derive(Serialize)]
struct Hello {
    protocol_version: u32,
    encodings: [&'static str; 2],
    envs: [&'static str; 3],
}

#[derive(Serialize)]
struct Made {
    env_id: u64,
    env: &'static str,
    spaces: Spaces,
}

#[derive(Serialize)]
struct ToyReset {
    observation: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Closed {
    closed: bool,
}

/// Spymaster view of a Codenames board (labels included).
#[derive(Serialize)]
struct BoardState<'a> {
    words: &'a [String],
    labels: &'a [Label],
    revealed: &'a [bool],
    acting_team: Team,
    turn_index: u32,
    winner: Option<Team>,
    steps: u32,
    done: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MakeEnvPayload {
    env: String,
    #[serde(default)]
    config: Option<Value>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvRef {
    env_id: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ResetPayload {
    env_id: u64,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepPayload {
    env_id: u64,
    #[serde(default)]
    action: Option<Value>,
    #[serde(default)]
    hint: Option<HintPayload>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct HintPayload {
    pub clue: String,
    pub count: u8,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ClosePayload {
    #[serde(default)]
    env_id: Option<u64>,
}

pub(crate) fn parse<T: DeserializeOwned>(payload: Value) -> Result<T, ProtocolError> {
    let payload = if payload.is_null() {
        Value::Object(Default::default())
    } else {
        payload
    };
    serde_json::from_value(payload).map_err(|e| ProtocolError::new("bad_request", e.to_string()))
}

pub(crate) fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("protocol payloads serialize")
}

/// Overlays the keys of `over` on the serde form of `base`.
fn overlay<T: Serialize + DeserializeOwned>(base: &T, over: Option<Value>) -> Result<T, ProtocolError> {
    let Some(over) = over else {
        return serde_json::from_value(serde_json::to_value(base).expect("config serializes"))
            .map_err(|e| ProtocolError::new("bad_config", e.to_string()));
    };
    let Value::Object(over) = over else {
        return Err(ProtocolError::new("bad_config", "config must be an object"));
    };
    let mut merged = serde_json::to_value(base).expect("config serializes");
    if let Value::Object(m) = &mut merged {
        m.extend(over);
    }
    serde_json::from_value(merged).map_err(|e| ProtocolError::new("bad_config", e.to_string()))
}

/// Formats a success line. The payload bytes are spliced in verbatim.
pub fn ok_line(id: &Value, payload_json: &str) -> String {
    format!("{{\"id\":{},\"ok\":true,\"payload\":{}}}", to_json(id), payload_json)
}

pub fn error_line(id: &Value, code: &str, message: &str, line: Option<&str>) -> String {
    #[derive(Serialize)]
    struct Envelope<'a> {
        id: &'a Value,
        ok: bool,
        error: ErrorBody,
    }
    to_json(&Envelope {
        id,
        ok: false,
        error: ErrorBody {
            code: code.to_string(),
            message: message.to_string(),
            line: line.map(str::to_string),
        },
    })
}

/// One client connection: its environments and at most one play session.
pub struct Session {
    ctx: Arc<ServerContext>,
    envs: BTreeMap<u64, EnvHandle>,
    next_id: u64,
    play: Option<PlaySession>,
    closed: bool,
}

/// Longest request line echoed back in a `bad_json` error.
const ECHO_LIMIT: usize = 512;

impl Session {
    pub fn new(ctx: Arc<ServerContext>) -> Self {
        Self {
            ctx,
            envs: BTreeMap::new(),
            next_id: 1,
            play: None,
            closed: false,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Handles one request line and returns the response line (no newline).
    pub fn handle_line(&mut self, line: &str) -> String {
        let req: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                let echo: String = line.chars().take(ECHO_LIMIT).collect();
                let id = serde_json::from_str::<Value>(line)
                    .ok()
                    .and_then(|v| v.get("id").cloned())
                    .unwrap_or(Value::Null);
                return error_line(&id, "bad_json", &e.to_string(), Some(&echo));
            }
        };
        match self.dispatch(&req.cmd, req.payload) {
            Ok(payload) => ok_line(&req.id, &payload),
            Err(e) => error_line(&req.id, e.code, &e.message, None),
        }
    }

    fn dispatch(&mut self, cmd: &str, payload: Value) -> Result<String, ProtocolError> {
        match cmd {
            "hello" => Ok(to_json(&Hello {
                protocol_version: PROTOCOL_VERSION,
                encodings: ENCODINGS,
                envs: ENVS,
            })),
            "make_env" => self.make_env(parse(payload)?),
            "reset" => self.reset(parse(payload)?),
            "step" => self.step(parse(payload)?),
            "spaces" => {
                let r: EnvRef = parse(payload)?;
                Ok(to_json(&spaces_of(self.env(r.env_id)?)))
            }
            "render_state" => {
                let r: EnvRef = parse(payload)?;
                self.render(r.env_id)
            }
            "play_new" => {
                let p = PlaySession::start(self.ctx.clone(), payload)?;
                let out = p.view_json();
                self.play = Some(p);
                Ok(out)
            }
            "play_hint" | "play_guess" | "play_end_turn" => {
                let play = self
                    .play
                    .as_mut()
                    .ok_or_else(|| ProtocolError::new("no_game", "start a game with play_new"))?;
                match cmd {
                    "play_hint" => play.hint(parse(payload)?),
                    "play_guess" => play.guess(payload),
                    _ => play.end_turn(payload),
                }
            }
            "close" => {
                let p: ClosePayload = parse(payload)?;
                match p.env_id {
                    Some(id) => {
                        self.envs
                            .remove(&id)
                            .ok_or_else(|| ProtocolError::new("unknown_env", format!("no env {id}")))?;
                    }
                    None => self.closed = true,
                }
                Ok(to_json(&Closed { closed: true }))
            }
            other => Err(ProtocolError::new("unknown_cmd", format!("unknown command {other:?}"))),
        }
    }

    fn env(&mut self, id: u64) -> Result<&mut EnvHandle, ProtocolError> {
        self.envs
            .get_mut(&id)
            .ok_or_else(|| ProtocolError::new("unknown_env", format!("no env {id}")))
    }

    fn make_env(&mut self, p: MakeEnvPayload) -> Result<String, ProtocolError> {
        let (handle, name) = match p.env.as_str() {
            "codenames" => {
                let mut config: EnvConfig = overlay(&self.ctx.config, p.config)?;
                if let Some(s) = p.seed {
                    config.seed = s;
                }
                let env = CodenamesEnv::new(config, self.ctx.search.clone(), self.ctx.deck.clone())?;
                (EnvHandle::Codenames(Box::new(env)), "codenames")
            }
            "clickpixel" => {
                let mut config: ClickPixelConfig = overlay(&ClickPixelConfig::default(), p.config)?;
                if let Some(s) = p.seed {
                    config.seed = s;
                }
                (EnvHandle::ClickPixel(ClickPixel::new(config)?), "clickpixel")
            }
            "whack" => {
                let mut config: WhackConfig = overlay(&WhackConfig::default(), p.config)?;
                if let Some(s) = p.seed {
                    config.seed = s;
                }
                (EnvHandle::Whack(Whack::new(config)?), "whack")
            }
            other => return Err(ProtocolError::new("unknown_env", format!("unknown environment {other:?}"))),
        };
        let id = self.next_id;
        self.next_id += 1;
        let spaces = spaces_of(&handle);
        self.envs.insert(id, handle);
        Ok(to_json(&Made {
            env_id: id,
            env: name,
            spaces,
        }))
    }

    fn reset(&mut self, p: ResetPayload) -> Result<String, ProtocolError> {
        Ok(match self.env(p.env_id)? {
            EnvHandle::Codenames(env) => to_json(&env.reset(p.seed)?),
            EnvHandle::ClickPixel(env) => to_json(&ToyReset {
                observation: env.reset(p.seed),
            }),
            EnvHandle::Whack(env) => to_json(&ToyReset {
                observation: env.reset(p.seed),
            }),
        })
    }

    fn step(&mut self, p: StepPayload) -> Result<String, ProtocolError> {
        let handle = self.env(p.env_id)?;
        let action = p.action;
        Ok(match handle {
            EnvHandle::Codenames(env) => match (action, p.hint) {
                (Some(a), None) => to_json(&env.step(&real_vector(a)?)?),
                (None, Some(h)) => {
                    let hint = Hint::new(h.clue, h.count).map_err(ProtocolError::from)?;
                    to_json(&env.step_hint(hint)?)
                }
                _ => return Err(ProtocolError::new("bad_request", "give exactly one of action or hint")),
            },
            EnvHandle::ClickPixel(env) => {
                let a = action.ok_or_else(|| ProtocolError::new("bad_request", "missing action"))?;
                let cell = match &a {
                    Value::Number(n) => n.as_i64(),
                    Value::Array(v) if v.len() == 1 => v[0].as_i64(),
                    _ => None,
                }
                .ok_or_else(|| ProtocolError::new("invalid_action", "clickpixel action is one integer cell index"))?;
                to_json(&env.step(cell)?)
            }
            EnvHandle::Whack(env) => {
                let a = action.ok_or_else(|| ProtocolError::new("bad_request", "missing action"))?;
                to_json(&env.step(&real_vector(a)?)?)
            }
        })
    }

    fn render(&mut self, id: u64) -> Result<String, ProtocolError> {
        Ok(match self.env(id)? {
            EnvHandle::Codenames(env) => {
                let state: &GameState = env.state().ok_or_else(|| ProtocolError::from(EnvError::NotReset))?;
                to_json(&BoardState {
                    words: state.words(),
                    labels: state.labels(),
                    revealed: state.revealed(),
                    acting_team: state.acting_team(),
                    turn_index: state.turn_index(),
                    winner: state.winner(),
                    steps: env.steps(),
                    done: env.is_done(),
                })
            }
            EnvHandle::ClickPixel(env) => to_json(&ToyReset {
                observation: env.observe(),
            }),
            EnvHandle::Whack(env) => to_json(&ToyReset {
                observation: env.observe(),
            }),
        })
    }
}

fn spaces_of(handle: &EnvHandle) -> Spaces {
    match handle {
        EnvHandle::Codenames(env) => env.spaces(),
        EnvHandle::ClickPixel(env) => {
            let q = env.config().q;
            Spaces {
                observation: Space::Box {
                    shape: vec![q, q],
                    low: 0.0,
                    high: 1.0,
                },
                action: Space::Discrete { n: q * q },
                goal: None,
            }
        }
        EnvHandle::Whack(env) => {
            let q = env.config().q;
            Spaces {
                observation: Space::Box {
                    shape: vec![q, q],
                    low: 0.0,
                    high: 1.0,
                },
                action: Space::MultiBinary { n: q * q },
                goal: None,
            }
        }
    }
}

fn real_vector(v: Value) -> Result<Vec<f64>, ProtocolError> {
    let bad = || ProtocolError::new("invalid_action", "action must be an array of numbers");
    match v {
        Value::Array(items) => items.iter().map(|x| x.as_f64().ok_or_else(bad)).collect(),
        _ => Err(bad()),
    }
}
