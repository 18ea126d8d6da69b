//! Baseline policies and seeded batch evaluation.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::ann::ClueSearch;
use crate::env::{CodenamesEnv, EnvConfig, EnvError, AGENT_TEAM};
use crate::game::{GameState, Hint};
use crate::scoring::{self, ScoringError};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Random,
    Greedy,
}

impl Policy {
    pub fn name(self) -> &'static str {
        match self {
            Policy::Random => "random",
            Policy::Greedy => "greedy",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Policy::Random),
            "greedy" => Ok(Policy::Greedy),
            _ => Err(format!("unknown policy {s:?} (random, greedy)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("at least one episode is required")]
    NoEpisodes,
    #[error("the greedy spymaster found no legal clue for any remaining word")]
    Barren,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Uniform `[0, 1]` action vector.
pub fn random_policy<R: Rng + ?Sized>(action_len: usize, rng: &mut R) -> Vec<f64> {
    (0..action_len).map(|_| rng.random::<f64>()).collect()
}

/// One-word hint: the best top-ranked `g_mean` clue over every remaining
/// agent word, ties by board position.
pub fn greedy_policy(state: &GameState, search: &ClueSearch) -> Result<Hint, EvalError> {
    let (_, cand) = scoring::best_single_target_hint(state, AGENT_TEAM, search)?.ok_or(EvalError::Barren)?;
    Ok(Hint {
        clue: cand.clue,
        count: 1,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub seed: u64,
    #[serde(rename = "return")]
    pub total_return: f64,
    pub steps: u32,
    pub won: bool,
    pub assassin: bool,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub policy: String,
    pub episodes: usize,
    pub returns: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; 0 when `episodes == 1`.
    pub std: f64,
    pub std_undefined: bool,
    pub seed: u64,
    pub config_digest: String,
    pub records: Vec<EpisodeRecord>,
}

impl EvalReport {
    pub fn from_records(policy: &str, seed: u64, config_digest: String, records: Vec<EpisodeRecord>) -> Self {
        let returns: Vec<f64> = records.iter().map(|r| r.total_return).collect();
        let (mean, std) = mean_std(&returns);
        Self {
            policy: policy.to_string(),
            episodes: returns.len(),
            std_undefined: returns.len() < 2,
            returns,
            mean,
            std,
            seed,
            config_digest,
            records,
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        f.write_all(b"\n")?;
        Ok(f.flush()?)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.records {
            w.serialize(r)?;
        }
        Ok(w.flush()?)
    }
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
}

/// Welch's unequal-variance t-test of `mean(a) - mean(b)`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> WelchTest {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sa * sa / na, sb * sb / nb);
    let se = (va + vb).sqrt();
    if se == 0.0 {
        let p = if ma == mb { 1.0 } else { 0.0 };
        return WelchTest {
            t: if ma == mb { 0.0 } else { f64::INFINITY.copysign(ma - mb) },
            df: f64::NAN,
            p,
        };
    }
    let t = (ma - mb) / se;
    let df = (va + vb).powi(2) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    WelchTest {
        t,
        df,
        p: 2.0 * dist.cdf(-t.abs()),
    }
}

pub fn config_digest(config: &EnvConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&json))
}

/// Plays one full episode with a fresh env on `seed`.
pub fn run_episode(
    policy: Policy,
    config: &EnvConfig,
    search: &ClueSearch,
    deck: &[String],
    episode: usize,
    episode_seed: u64,
) -> Result<EpisodeRecord, EvalError> {
    let mut env = CodenamesEnv::new(config.clone(), search.clone(), deck.to_vec())?;
    env.reset(Some(episode_seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(episode_seed, 0x0005_eed0_fa11));
    let action_len = config.action_len();
    let mut total = 0.0;
    loop {
        let r = match policy {
            Policy::Random => env.step(&random_policy(action_len, &mut rng))?,
            Policy::Greedy => {
                let hint = greedy_policy(env.state().expect("reset"), search)?;
                env.step_hint(hint)?
            }
        };
        total += r.reward;
        if r.terminated || r.truncated {
            let state = env.state().expect("reset");
            return Ok(EpisodeRecord {
                episode,
                seed: episode_seed,
                total_return: total,
                steps: env.steps(),
                won: state.winner() == Some(AGENT_TEAM),
                assassin: state.assassin_revealed_by() == Some(AGENT_TEAM),
                truncated: r.truncated,
            });
        }
    }
}

/// Runs `episodes` episodes; episode `i` uses seed `seed::derive(master, i)`.
/// Episodes run in parallel; the result does not depend on scheduling.
pub fn evaluate(
    policy: Policy,
    config: &EnvConfig,
    search: &ClueSearch,
    deck: &[String],
    episodes: usize,
    master_seed: u64,
) -> Result<EvalReport, EvalError> {
    if episodes == 0 {
        return Err(EvalError::NoEpisodes);
    }
    let records = (0..episodes)
        .into_par_iter()
        .map(|i| run_episode(policy, config, search, deck, i, seed::derive(master_seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    log::info!("{} policy: {} episodes done", policy.name(), episodes);
    Ok(EvalReport::from_records(policy.name(), master_seed, config_digest(config), records))
}
