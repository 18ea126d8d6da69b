use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ToyError, ToyStep};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WhackConfig {
    pub q: usize,
    pub episode_len: u32,
    pub highlight_prob: f64,
    pub seed: u64,
}

impl Default for WhackConfig {
    fn default() -> Self {
        Self {
            q: 5,
            episode_len: 99,
            highlight_prob: 0.5,
            seed: 0,
        }
    }
}

/// Select exactly the highlighted cells. Reward is per-cell accuracy.
#[derive(Debug, Clone)]
pub struct Whack {
    config: WhackConfig,
    rng: ChaCha8Rng,
    highlight: Vec<bool>,
    steps: u32,
    done: bool,
    started: bool,
    episodes: u64,
}

impl Whack {
    pub fn new(config: WhackConfig) -> Result<Self, ToyError> {
        if !(2..=super::MAX_SIDE).contains(&config.q) {
            return Err(ToyError::Side(config.q));
        }
        if config.episode_len == 0 {
            return Err(ToyError::EpisodeLength);
        }
        if !(0.0..=1.0).contains(&config.highlight_prob) {
            return Err(ToyError::Probability(config.highlight_prob));
        }
        let cells = config.q * config.q;
        Ok(Self {
            config,
            rng: ChaCha8Rng::seed_from_u64(0),
            highlight: vec![false; cells],
            steps: 0,
            done: false,
            started: false,
            episodes: 0,
        })
    }

    pub fn config(&self) -> &WhackConfig {
        &self.config
    }

    pub fn cells(&self) -> usize {
        self.config.q * self.config.q
    }

    pub fn highlight(&self) -> &[bool] {
        &self.highlight
    }

    fn draw(&mut self) {
        let p = self.config.highlight_prob;
        for h in self.highlight.iter_mut() {
            *h = self.rng.random_bool(p);
        }
    }

    pub fn reset(&mut self, seed: Option<u64>) -> Vec<Vec<f64>> {
        let s = seed.unwrap_or_else(|| seed::derive(self.config.seed, self.episodes));
        self.episodes += 1;
        self.rng = ChaCha8Rng::seed_from_u64(s);
        self.steps = 0;
        self.done = false;
        self.started = true;
        self.draw();
        self.observe()
    }

    pub fn observe(&self) -> Vec<Vec<f64>> {
        self.highlight
            .chunks(self.config.q)
            .map(|r| r.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect())
            .collect()
    }

    /// `action[i] >= 0.5` selects cell `i`.
    pub fn step(&mut self, action: &[f64]) -> Result<ToyStep, ToyError> {
        if !self.started {
            return Err(ToyError::NotReset);
        }
        if self.done {
            return Err(ToyError::EpisodeOver);
        }
        if action.len() != self.cells() {
            return Err(ToyError::ActionLength {
                got: action.len(),
                expected: self.cells(),
            });
        }
        let hits = action
            .iter()
            .zip(&self.highlight)
            .filter(|(&a, &h)| (a >= 0.5) == h)
            .count();
        let reward = hits as f64 / self.cells() as f64;
        self.steps += 1;
        let terminated = self.steps >= self.config.episode_len;
        self.done = terminated;
        if !terminated {
            self.draw();
        }
        Ok(ToyStep {
            observation: self.observe(),
            reward,
            terminated,
            truncated: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_example() {
        let mut env = Whack::new(WhackConfig {
            q: 2,
            ..Default::default()
        })
        .unwrap();
        env.reset(Some(0));
        env.highlight = vec![true, false, false, false];
        let s = env.step(&[1.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.reward, 0.75);
    }

    #[test]
    fn oracle_scores_episode_len() {
        let mut env = Whack::new(WhackConfig::default()).unwrap();
        let mut obs = env.reset(Some(11));
        let mut total = 0.0;
        loop {
            let s = env.step(&obs.concat()).unwrap();
            total += s.reward;
            obs = s.observation;
            if s.terminated {
                break;
            }
        }
        assert_eq!(total, 99.0);
        assert_eq!(env.step(&[0.0; 25]), Err(ToyError::EpisodeOver));
    }

    #[test]
    fn seeded_and_validated() {
        let mut a = Whack::new(WhackConfig::default()).unwrap();
        let mut b = Whack::new(WhackConfig::default()).unwrap();
        assert_eq!(a.reset(Some(4)), b.reset(Some(4)));
        assert_eq!(
            a.step(&[0.0; 3]),
            Err(ToyError::ActionLength { got: 3, expected: 25 })
        );
        assert!(Whack::new(WhackConfig {
            highlight_prob: 1.5,
            ..Default::default()
        })
        .is_err());
        assert!(Whack::new(WhackConfig {
            episode_len: 0,
            ..Default::default()
        })
        .is_err());
    }
}
