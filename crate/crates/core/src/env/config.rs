use serde::{Deserialize, Serialize};

use crate::game::BOARD_SIZE;
use crate::guessers::GuesserParams;
use crate::scoring::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Pwcsm,
    Ohwe,
}

/// The scripted opposing team. Its spymaster always gives the best
/// single-target `g_mean` clue; its guessers default to the agent's settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpponentConfig {
    pub guesser: Option<GuesserParams>,
}

/// Environment configuration; the JSON form uses these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub encoding: Encoding,
    /// Number of similarity matrices in the PWCSM layout.
    pub j: usize,
    /// Deck size for the OHWE layout; must be a multiple of 25.
    pub vocab_size: usize,
    /// Scoring strategies the action can choose from (`G`).
    pub strategies: Vec<Strategy>,
    /// Candidates per strategy (`κ`).
    pub kappa: usize,
    /// Threshold for `Minimax` scoring.
    pub lambda_t: f64,
    pub guesser: GuesserParams,
    pub opponent: OpponentConfig,
    /// Agent turns before truncation.
    pub max_turns: u32,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            encoding: Encoding::Pwcsm,
            j: 1,
            vocab_size: 400,
            strategies: vec![Strategy::Mean, Strategy::Minimax],
            kappa: 10,
            lambda_t: 0.3,
            guesser: GuesserParams::default(),
            opponent: OpponentConfig::default(),
            max_turns: 25,
            seed: 0,
        }
    }
}

/// Upper bounds that keep hostile configs from allocating without limit.
pub const MAX_KAPPA: usize = 1024;
pub const MAX_J: usize = 16;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("j must be in 1..=16")]
    J,
    #[error("vocab_size {0} must be a positive multiple of 25")]
    VocabSize(usize),
    #[error("at least one strategy is required")]
    NoStrategies,
    #[error("strategy {0:?} is not available to the agent (use mean or minimax)")]
    Strategy(Strategy),
    #[error("strategies must not repeat")]
    DuplicateStrategy,
    #[error("kappa must be in 1..=1024")]
    Kappa,
    #[error("max_turns must be at least 1")]
    ZeroTurns,
    #[error("tau must be positive")]
    Tau,
    #[error("lambda must lie in [-1, 1]")]
    Lambda,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=MAX_J).contains(&self.j) {
            return Err(ConfigError::J);
        }
        if self.encoding == Encoding::Ohwe && (self.vocab_size == 0 || !self.vocab_size.is_multiple_of(BOARD_SIZE)) {
            return Err(ConfigError::VocabSize(self.vocab_size));
        }
        if self.strategies.is_empty() {
            return Err(ConfigError::NoStrategies);
        }
        if let Some(s) = self
            .strategies
            .iter()
            .find(|s| !matches!(s, Strategy::Mean | Strategy::Minimax))
        {
            return Err(ConfigError::Strategy(*s));
        }
        if (1..self.strategies.len()).any(|i| self.strategies[..i].contains(&self.strategies[i])) {
            return Err(ConfigError::DuplicateStrategy);
        }
        if !(1..=MAX_KAPPA).contains(&self.kappa) {
            return Err(ConfigError::Kappa);
        }
        if self.max_turns == 0 {
            return Err(ConfigError::ZeroTurns);
        }
        for g in std::iter::once(&self.guesser).chain(self.opponent.guesser.as_ref()) {
            if g.tau.is_nan() || g.tau <= 0.0 {
                return Err(ConfigError::Tau);
            }
            if !(-1.0..=1.0).contains(&g.lambda) {
                return Err(ConfigError::Lambda);
            }
        }
        Ok(())
    }

    pub fn action_len(&self) -> usize {
        2 * BOARD_SIZE + self.strategies.len() * self.kappa
    }

    pub fn observation_rows(&self) -> usize {
        let head = match self.encoding {
            Encoding::Pwcsm => self.j * BOARD_SIZE,
            Encoding::Ohwe => self.vocab_size / BOARD_SIZE,
        };
        head + super::encoding::STATUS_ROWS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_sizes() {
        let c = EnvConfig::default();
        c.validate().unwrap();
        assert_eq!(c.action_len(), 70);
        assert_eq!(c.observation_rows(), 31);
        let o = EnvConfig {
            encoding: Encoding::Ohwe,
            ..Default::default()
        };
        assert_eq!(o.observation_rows(), 22);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let c: EnvConfig = serde_json::from_str(r#"{"encoding":"ohwe","kappa":3,"guesser":{"mode":"stochastic","lambda":0.1,"tau":0.05,"seed":4}}"#).unwrap();
        assert_eq!(c.encoding, Encoding::Ohwe);
        assert_eq!(c.kappa, 3);
        let back: EnvConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<EnvConfig>(r#"{"bogus":1}"#).is_err());
        let bad = EnvConfig {
            encoding: Encoding::Ohwe,
            vocab_size: 410,
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::VocabSize(410)));
        let bad = EnvConfig {
            strategies: vec![Strategy::KimEnergy],
            ..Default::default()
        };
        assert_eq!(bad.validate(), Err(ConfigError::Strategy(Strategy::KimEnergy)));
    }
}
