use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ToyError, ToyStep};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClickPixelConfig {
    pub q: usize,
    /// End the episode after the first click, hit or miss.
    pub one_move: bool,
    /// A miss costs the number of steps taken so far instead of 1.
    pub linear_reward: bool,
    pub max_steps: u32,
    pub seed: u64,
}

impl Default for ClickPixelConfig {
    fn default() -> Self {
        Self {
            q: 4,
            one_move: false,
            linear_reward: false,
            max_steps: 100,
            seed: 0,
        }
    }
}

/// Find the single highlighted cell. Clicked cells show 0.5, the target 1.0.
#[derive(Debug, Clone)]
pub struct ClickPixel {
    config: ClickPixelConfig,
    target: usize,
    clicked: Vec<bool>,
    steps: u32,
    done: bool,
    started: bool,
    episodes: u64,
}

impl ClickPixel {
    pub fn new(config: ClickPixelConfig) -> Result<Self, ToyError> {
        if !(2..=super::MAX_SIDE).contains(&config.q) {
            return Err(ToyError::Side(config.q));
        }
        if config.max_steps == 0 {
            return Err(ToyError::EpisodeLength);
        }
        let cells = config.q * config.q;
        Ok(Self {
            config,
            target: 0,
            clicked: vec![false; cells],
            steps: 0,
            done: false,
            started: false,
            episodes: 0,
        })
    }

    pub fn config(&self) -> &ClickPixelConfig {
        &self.config
    }

    pub fn cells(&self) -> usize {
        self.config.q * self.config.q
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn reset(&mut self, seed: Option<u64>) -> Vec<Vec<f64>> {
        let s = seed.unwrap_or_else(|| seed::derive(self.config.seed, self.episodes));
        self.episodes += 1;
        self.target = ChaCha8Rng::seed_from_u64(s).random_range(0..self.cells());
        self.clicked.iter_mut().for_each(|c| *c = false);
        self.steps = 0;
        self.done = false;
        self.started = true;
        self.observe()
    }

    pub fn observe(&self) -> Vec<Vec<f64>> {
        let q = self.config.q;
        (0..q)
            .map(|r| {
                (0..q)
                    .map(|c| {
                        let i = r * q + c;
                        if i == self.target {
                            1.0
                        } else if self.clicked[i] {
                            0.5
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn step(&mut self, action: i64) -> Result<ToyStep, ToyError> {
        if !self.started {
            return Err(ToyError::NotReset);
        }
        if self.done {
            return Err(ToyError::EpisodeOver);
        }
        let n = self.cells();
        if action < 0 || action as usize >= n {
            return Err(ToyError::ActionRange { got: action, n });
        }
        let cell = action as usize;
        self.steps += 1;
        self.clicked[cell] = true;
        let hit = cell == self.target;
        let reward = if hit {
            0.0
        } else if self.config.linear_reward {
            -(self.steps as f64)
        } else {
            -1.0
        };
        let terminated = hit || self.config.one_move;
        let truncated = !terminated && self.steps >= self.config.max_steps;
        self.done = terminated || truncated;
        Ok(ToyStep {
            observation: self.observe(),
            reward,
            terminated,
            truncated,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimal_first_click() {
        let mut env = ClickPixel::new(ClickPixelConfig::default()).unwrap();
        let obs = env.reset(Some(3));
        let flat: Vec<f64> = obs.concat();
        let t = flat.iter().position(|&v| v == 1.0).unwrap();
        assert_eq!(t, env.target());
        let s = env.step(t as i64).unwrap();
        assert_eq!((s.reward, s.terminated), (0.0, true));
        assert_eq!(env.step(0), Err(ToyError::EpisodeOver));
    }

    #[test]
    fn misses_mark_cells() {
        let mut env = ClickPixel::new(ClickPixelConfig {
            q: 3,
            linear_reward: true,
            ..Default::default()
        })
        .unwrap();
        env.reset(Some(1));
        let wrong: Vec<usize> = (0..9).filter(|&c| c != env.target()).take(2).collect();
        let a = env.step(wrong[0] as i64).unwrap();
        let b = env.step(wrong[1] as i64).unwrap();
        assert_eq!((a.reward, b.reward), (-1.0, -2.0));
        assert_eq!(b.observation[wrong[0] / 3][wrong[0] % 3], 0.5);
        // re-clicking is allowed and penalized
        let c = env.step(wrong[0] as i64).unwrap();
        assert_eq!(c.reward, -3.0);
    }

    #[test]
    fn one_move_and_limits() {
        let mut env = ClickPixel::new(ClickPixelConfig {
            q: 2,
            one_move: true,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(env.step(0), Err(ToyError::NotReset));
        env.reset(Some(0));
        let wrong = (env.target() + 1) % 4;
        let s = env.step(wrong as i64).unwrap();
        assert_eq!((s.reward, s.terminated), (-1.0, true));
        env.reset(Some(0));
        assert_eq!(env.step(4), Err(ToyError::ActionRange { got: 4, n: 4 }));
        assert_eq!(env.step(-1), Err(ToyError::ActionRange { got: -1, n: 4 }));
        assert!(ClickPixel::new(ClickPixelConfig { q: 1, ..Default::default() }).is_err());
    }

    #[test]
    fn truncates() {
        let mut env = ClickPixel::new(ClickPixelConfig {
            q: 2,
            max_steps: 2,
            ..Default::default()
        })
        .unwrap();
        env.reset(Some(9));
        let wrong = ((env.target() + 1) % 4) as i64;
        assert!(!env.step(wrong).unwrap().truncated);
        let s = env.step(wrong).unwrap();
        assert!(s.truncated && !s.terminated);
    }
}
