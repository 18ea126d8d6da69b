//! Clue scoring functions and top-κ clue candidate generation.
//!
//! Scores maximize (`Mean`, `Minimax`, `JaraWeighted`) or minimize
//! (`KimEnergy`, an energy over cosine distances `d = 1 - s`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ann::{AnnError, ClueSearch};
use crate::embedding::{cosine, cosine32, to_f64, weighted_mean, EmbeddingError, EmbeddingStore};
use crate::game::{GameState, NormalizedLabel, Team, MAX_HINT_COUNT};

/// How many raw neighbors are fetched per requested candidate before the
/// legality filter.
pub const OVERFETCH: usize = 4;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Ann(#[from] AnnError),
    #[error("target set must hold 1..=9 words, got {0}")]
    TargetCount(usize),
    #[error("board position {0} is not an unrevealed word of the acting team")]
    NotATarget(usize),
    #[error("no legal clue candidate for the target set")]
    BarrenTargetSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Mean,
    Minimax,
    JaraWeighted,
    KimEnergy,
}

impl Strategy {
    /// Whether lower scores are better.
    pub fn minimizes(self) -> bool {
        matches!(self, Strategy::KimEnergy)
    }
}

/// Re-weighting `k(u)` of unintended words.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadWordWeights {
    pub bystander: f64,
    pub opposing: f64,
    pub assassin: f64,
}

impl Default for BadWordWeights {
    fn default() -> Self {
        Self {
            bystander: -1.0,
            opposing: -2.0,
            assassin: -3.0,
        }
    }
}

impl BadWordWeights {
    pub fn weight(&self, label: NormalizedLabel) -> f64 {
        match label {
            NormalizedLabel::Bystander => self.bystander,
            NormalizedLabel::Opposing => self.opposing,
            NormalizedLabel::Assassin => self.assassin,
            NormalizedLabel::Mine => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringParams {
    pub strategy: Strategy,
    /// Similarity threshold for `Minimax`, distance threshold for `KimEnergy`.
    pub lambda_t: f64,
    #[serde(default)]
    pub weights: BadWordWeights,
    pub kappa: usize,
}

impl ScoringParams {
    pub fn new(strategy: Strategy, kappa: usize) -> Self {
        Self {
            strategy,
            lambda_t: 0.3,
            weights: BadWordWeights::default(),
            kappa,
        }
    }
}

/// `I_n`: unrevealed board positions of the acting team that a clue targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSet(Vec<usize>);

impl TargetSet {
    pub fn new(state: &GameState, mut positions: Vec<usize>) -> Result<Self, ScoringError> {
        positions.sort_unstable();
        positions.dedup();
        if positions.is_empty() || positions.len() > MAX_HINT_COUNT as usize {
            return Err(ScoringError::TargetCount(positions.len()));
        }
        let team = state.acting_team();
        if let Some(&p) = positions.iter().find(|&&p| {
            p >= state.words().len()
                || state.is_revealed(p)
                || state.normalized_label(p, team) != NormalizedLabel::Mine
        }) {
            return Err(ScoringError::NotATarget(p));
        }
        Ok(Self(positions))
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn words<'a>(&self, state: &'a GameState) -> Vec<&'a str> {
        self.0.iter().map(|&p| state.words()[p].as_str()).collect()
    }
}

// --- vector-level scoring -------------------------------------------------

/// `g_mean`: cosine between the clue and the unweighted target mean.
pub fn mean_score(clue: &[f32], targets: &[&[f32]]) -> f64 {
    let mean = weighted_mean(targets, &vec![1.0; targets.len()]);
    cosine(&to_f64(clue), &mean)
}

/// `g_minimax`: the weakest clue-target similarity if it clears `lambda_t`, else 0.
pub fn minimax_from_similarities(similarities: &[f64], lambda_t: f64) -> f64 {
    let weakest = similarities.iter().copied().fold(f64::INFINITY, f64::min);
    if weakest > lambda_t {
        weakest
    } else {
        0.0
    }
}

/// `g_Jara`: cosine between the clue and `(sum targets + sum k(u) u) / (|I| + |U|)`.
pub fn jara_score(clue: &[f32], targets: &[&[f32]], bad: &[(&[f32], f64)]) -> f64 {
    let mut rows: Vec<&[f32]> = targets.to_vec();
    let mut weights = vec![1.0; targets.len()];
    for (v, k) in bad {
        rows.push(v);
        weights.push(*k);
    }
    cosine(&to_f64(clue), &weighted_mean(&rows, &weights))
}

/// `f_Kim`: the farthest target distance when it is below both the nearest
/// bad-word distance and `lambda_t`, otherwise `+inf`.
pub fn kim_from_distances(target_distances: &[f64], bad_distances: &[f64], lambda_t: f64) -> f64 {
    let farthest = target_distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let nearest_bad = bad_distances.iter().copied().fold(f64::INFINITY, f64::min);
    if farthest < nearest_bad && farthest < lambda_t {
        farthest
    } else {
        f64::INFINITY
    }
}

// --- word-level scoring ---------------------------------------------------

fn vectors<'a>(store: &'a EmbeddingStore, words: &[&str]) -> Result<Vec<&'a [f32]>, EmbeddingError> {
    words.iter().map(|w| store.vector(w)).collect()
}

pub fn score_mean(store: &EmbeddingStore, clue: &str, targets: &[&str]) -> Result<f64, ScoringError> {
    Ok(mean_score(store.vector(clue)?, &vectors(store, targets)?))
}

pub fn score_minimax(
    store: &EmbeddingStore,
    clue: &str,
    targets: &[&str],
    lambda_t: f64,
) -> Result<f64, ScoringError> {
    let sims = targets
        .iter()
        .map(|t| store.cosine_similarity(clue, t))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(minimax_from_similarities(&sims, lambda_t))
}

pub fn score_jara(
    store: &EmbeddingStore,
    clue: &str,
    targets: &[&str],
    bad: &[(&str, NormalizedLabel)],
    weights: &BadWordWeights,
) -> Result<f64, ScoringError> {
    let bad_rows = bad
        .iter()
        .map(|(w, l)| Ok((store.vector(w)?, weights.weight(*l))))
        .collect::<Result<Vec<_>, EmbeddingError>>()?;
    Ok(jara_score(store.vector(clue)?, &vectors(store, targets)?, &bad_rows))
}

pub fn energy_kim(
    store: &EmbeddingStore,
    clue: &str,
    targets: &[&str],
    bad: &[&str],
    lambda_t: f64,
) -> Result<f64, ScoringError> {
    let dist = |w: &&str| store.cosine_similarity(clue, w).map(|s| 1.0 - s);
    let td = targets.iter().map(dist).collect::<Result<Vec<_>, _>>()?;
    let bd = bad.iter().map(dist).collect::<Result<Vec<_>, _>>()?;
    Ok(kim_from_distances(&td, &bd, lambda_t))
}

/// Precomputed target/bad-word context for scoring many clue rows.
pub struct ClueScorer<'a> {
    store: &'a EmbeddingStore,
    params: &'a ScoringParams,
    targets: Vec<&'a [f32]>,
    target_mean: Vec<f64>,
    bad: Vec<(&'a [f32], f64)>,
    jara_mean: Vec<f64>,
}

impl<'a> ClueScorer<'a> {
    pub fn new(
        store: &'a EmbeddingStore,
        state: &GameState,
        targets: &TargetSet,
        params: &'a ScoringParams,
    ) -> Result<Self, ScoringError> {
        let team = state.acting_team();
        let targets = vectors(store, &targets.words(state))?;
        let target_mean = weighted_mean(&targets, &vec![1.0; targets.len()]);
        let bad = state
            .unrevealed_bad_for(team)
            .into_iter()
            .map(|(p, l)| Ok((store.vector(&state.words()[p])?, params.weights.weight(l))))
            .collect::<Result<Vec<_>, EmbeddingError>>()?;
        let jara_mean = if params.strategy == Strategy::JaraWeighted {
            let mut rows = targets.clone();
            let mut w = vec![1.0; rows.len()];
            for (v, k) in &bad {
                rows.push(v);
                w.push(*k);
            }
            weighted_mean(&rows, &w)
        } else {
            Vec::new()
        };
        Ok(Self {
            store,
            params,
            targets,
            target_mean,
            bad,
            jara_mean,
        })
    }

    pub fn target_mean(&self) -> &[f64] {
        &self.target_mean
    }

    pub fn score_row(&self, row: usize) -> f64 {
        let clue = self.store.row(row);
        match self.params.strategy {
            Strategy::Mean => cosine(&to_f64(clue), &self.target_mean),
            Strategy::JaraWeighted => cosine(&to_f64(clue), &self.jara_mean),
            Strategy::Minimax => {
                let sims: Vec<f64> = self.targets.iter().map(|t| cosine32(clue, t)).collect();
                minimax_from_similarities(&sims, self.params.lambda_t)
            }
            Strategy::KimEnergy => {
                let td: Vec<f64> = self.targets.iter().map(|t| 1.0 - cosine32(clue, t)).collect();
                let bd: Vec<f64> = self.bad.iter().map(|(u, _)| 1.0 - cosine32(clue, u)).collect();
                kim_from_distances(&td, &bd, self.params.lambda_t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub clue: String,
    pub row: usize,
    pub score: f64,
}

fn f32_query(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

/// Up to κ legal clues for `targets`, best first.
///
/// The search is seeded with the unweighted target mean for every strategy;
/// the strategy only re-ranks. Raw neighbors are over-fetched `4κ`; if fewer
/// than κ survive the legality filter the query is repeated exhaustively,
/// doubling its width until κ survive or the vocabulary is exhausted.
/// `KimEnergy` candidates with infinite energy are dropped.
pub fn generate_candidates(
    targets: &TargetSet,
    state: &GameState,
    params: &ScoringParams,
    search: &ClueSearch,
) -> Result<Vec<Candidate>, ScoringError> {
    let store = search.store();
    let scorer = ClueScorer::new(store, state, targets, params)?;
    let query = f32_query(scorer.target_mean());
    let rows = search.rows();
    let kappa = params.kappa.max(1);
    let mut width = (OVERFETCH * kappa).min(rows);
    let mut exhaustive = false;
    let mut survivors = loop {
        let hits = search.search(&query, width, exhaustive)?;
        let survivors: Vec<Candidate> = hits
            .into_iter()
            .filter(|n| state.legal_hint(store.word(n.row)))
            .map(|n| Candidate {
                clue: store.word(n.row).to_string(),
                row: n.row,
                score: scorer.score_row(n.row),
            })
            .filter(|c| c.score.is_finite())
            .collect();
        if survivors.len() >= kappa || (exhaustive && width >= rows) {
            break survivors;
        }
        if exhaustive {
            width = (width * 2).min(rows);
        }
        exhaustive = true;
    };
    let minimize = params.strategy.minimizes();
    survivors.sort_by(|a, b| {
        let ord = if minimize {
            a.score.total_cmp(&b.score)
        } else {
            b.score.total_cmp(&a.score)
        };
        ord.then(a.row.cmp(&b.row))
    });
    survivors.truncate(kappa);
    if survivors.is_empty() {
        return Err(ScoringError::BarrenTargetSet);
    }
    Ok(survivors)
}

/// Exhaustive nearest legal clue to the mean of `targets`.
pub fn nearest_legal_clue(
    targets: &[usize],
    state: &GameState,
    search: &ClueSearch,
) -> Result<Candidate, ScoringError> {
    let store = search.store();
    let words: Vec<&str> = targets.iter().map(|&p| state.words()[p].as_str()).collect();
    let mean = store.mean_vector(&words, None)?;
    let query = f32_query(&mean);
    let rows = search.rows();
    let mut width = 16.min(rows);
    loop {
        let hits = search.search(&query, width, true)?;
        if let Some(n) = hits.into_iter().find(|n| state.legal_hint(store.word(n.row))) {
            return Ok(Candidate {
                clue: store.word(n.row).to_string(),
                row: n.row,
                score: cosine(&to_f64(store.row(n.row)), &mean),
            });
        }
        if width >= rows {
            return Err(ScoringError::BarrenTargetSet);
        }
        width = (width * 4).min(rows);
    }
}

/// Team-agnostic helper used by the scripted spymasters: best single-target
/// `g_mean` clue over every unrevealed word of `team`, ties by board position.
pub fn best_single_target_hint(
    state: &GameState,
    team: Team,
    search: &ClueSearch,
) -> Result<Option<(usize, Candidate)>, ScoringError> {
    let params = ScoringParams::new(Strategy::Mean, 1);
    let mut view = state.clone();
    if view.acting_team() != team {
        view.end_turn();
    }
    let mut best: Option<(usize, Candidate)> = None;
    for p in view.unrevealed_of(team) {
        let targets = TargetSet::new(&view, vec![p])?;
        let top = match generate_candidates(&targets, &view, &params, search) {
            Ok(mut c) => c.remove(0),
            Err(ScoringError::BarrenTargetSet) => match nearest_legal_clue(&[p], &view, search) {
                Ok(c) => c,
                Err(ScoringError::BarrenTargetSet) => continue,
                Err(e) => return Err(e),
            },
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(_, b)| top.score > b.score) {
            best = Some((p, top));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Label;
    use std::sync::Arc;

    fn unit(v: &[f32]) -> Vec<f32> {
        let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn mean_examples() {
        let x = [1.0f32, 0.0];
        let y = [0.0f32, 1.0];
        assert!((mean_score(&x, &[&x]) - 1.0).abs() < 1e-12);
        assert!((mean_score(&x, &[&x, &y]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
        let z = [0.0f32, 0.0, 1.0];
        assert_eq!(mean_score(&z, &[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]), 0.0);
    }

    #[test]
    fn minimax_examples() {
        assert_eq!(minimax_from_similarities(&[0.8, 0.75], 0.7), 0.75);
        assert_eq!(minimax_from_similarities(&[0.6, 0.8], 0.7), 0.0);
        assert_eq!(minimax_from_similarities(&[0.99, 0.999], 1.0), 0.0);
    }

    #[test]
    fn jara_examples() {
        let x = [1.0f32, 0.0];
        let y = [0.0f32, 1.0];
        assert!((jara_score(&x, &[&x], &[]) - mean_score(&x, &[&x])).abs() < 1e-15);
        assert!((jara_score(&x, &[&x], &[(&y, -3.0)]) - 0.31623).abs() < 1e-5);
        let with = jara_score(&y, &[&x], &[(&y, -3.0)]);
        let without = jara_score(&y, &[&x], &[]);
        assert!(with < without);
    }

    #[test]
    fn kim_examples() {
        assert_eq!(kim_from_distances(&[0.2, 0.4], &[0.5], 0.7), 0.4);
        assert_eq!(kim_from_distances(&[0.2, 0.4], &[0.3], 0.7), f64::INFINITY);
        assert_eq!(kim_from_distances(&[0.2, 0.4], &[0.5], 0.3), f64::INFINITY);
        assert_eq!(kim_from_distances(&[0.2], &[], 0.7), 0.2);
    }

    #[test]
    fn word_level_wrappers() {
        let store = EmbeddingStore::from_rows([
            ("a", vec![1.0, 0.0]),
            ("b", vec![0.0, 1.0]),
            ("c", unit(&[1.0, 1.0])),
        ])
        .unwrap();
        assert!((score_mean(&store, "c", &["a"]).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
        assert!((score_minimax(&store, "c", &["a", "b"], 0.5).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
        let j = score_jara(&store, "a", &["a"], &[("b", NormalizedLabel::Assassin)], &BadWordWeights::default())
            .unwrap();
        assert!((j - 0.31623).abs() < 1e-5);
        let k = energy_kim(&store, "c", &["a"], &["b"], 0.7).unwrap();
        assert_eq!(k, f64::INFINITY);
        assert!(matches!(score_mean(&store, "zzz", &["a"]), Err(ScoringError::Embedding(_))));
    }

    fn board_store() -> (Arc<EmbeddingStore>, GameState) {
        // Board words sit on axes 0..25; clue words lean toward them.
        let dim = 32;
        let mut rows = Vec::new();
        let words: Vec<String> = (0..25).map(|i| format!("board{i:02}")).collect();
        for (i, w) in words.iter().enumerate() {
            let mut v = vec![0.0f32; dim];
            v[i] = 1.0;
            rows.push((w.clone(), v));
        }
        for i in 0..25 {
            for j in 0..3 {
                let mut v = vec![0.0f32; dim];
                v[i] = 1.0;
                v[25 + j] = 0.3 * (j + 1) as f32;
                rows.push((format!("clue{i:02}x{j}"), v));
            }
        }
        // An illegal clue that is very close to board00.
        let mut v = vec![0.0f32; dim];
        v[0] = 1.0;
        v[31] = 0.01;
        rows.push(("board00s".to_string(), v));
        let store = Arc::new(EmbeddingStore::from_rows(rows).unwrap());
        let mut labels = vec![Label::Red; 9];
        labels.extend([Label::Blue; 8]);
        labels.extend([Label::Bystander; 7]);
        labels.push(Label::Assassin);
        (store, GameState::from_parts(words, labels, Team::Red, Team::Red))
    }

    #[test]
    fn candidates_are_legal_and_ranked() {
        let (store, state) = board_store();
        let search = ClueSearch::exact(store.clone(), None);
        let targets = TargetSet::new(&state, vec![0]).unwrap();
        let params = ScoringParams::new(Strategy::Mean, 3);
        let c = generate_candidates(&targets, &state, &params, &search).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c[0].clue, "clue00x0");
        assert!(c.windows(2).all(|w| w[0].score >= w[1].score));
        for cand in &c {
            assert!(state.legal_hint(&cand.clue));
        }
        let one = generate_candidates(&targets, &state, &ScoringParams::new(Strategy::Mean, 1), &search).unwrap();
        assert_eq!(one[0].clue, "clue00x0");
    }

    #[test]
    fn ivf_full_probe_agrees_with_exact() {
        let (store, state) = board_store();
        let exact = ClueSearch::exact(store.clone(), None);
        let index = crate::ann::IvfIndex::build(store.clone(), 8, 3).unwrap();
        let ivf = ClueSearch::Ivf {
            index: Arc::new(index),
            probes: 8,
        };
        for strategy in [Strategy::Mean, Strategy::Minimax, Strategy::JaraWeighted] {
            let params = ScoringParams::new(strategy, 5);
            let targets = TargetSet::new(&state, vec![1, 2]).unwrap();
            assert_eq!(
                generate_candidates(&targets, &state, &params, &exact).unwrap(),
                generate_candidates(&targets, &state, &params, &ivf).unwrap()
            );
        }
    }

    #[test]
    fn kim_barren_when_bad_words_closer() {
        let (store, state) = board_store();
        let search = ClueSearch::exact(store.clone(), None);
        // Two orthogonal targets: every clue is at distance >= ~0.3 from one of them.
        let targets = TargetSet::new(&state, vec![0, 1]).unwrap();
        let mut params = ScoringParams::new(Strategy::KimEnergy, 3);
        params.lambda_t = 0.05;
        assert!(matches!(
            generate_candidates(&targets, &state, &params, &search),
            Err(ScoringError::BarrenTargetSet)
        ));
        let single = TargetSet::new(&state, vec![0]).unwrap();
        params.lambda_t = 0.7;
        let c = generate_candidates(&single, &state, &params, &search).unwrap();
        assert!(c.windows(2).all(|w| w[0].score <= w[1].score));
        assert!(c.iter().all(|c| c.score.is_finite()));
    }

    #[test]
    fn target_set_validation() {
        let (_, state) = board_store();
        assert!(matches!(TargetSet::new(&state, vec![]), Err(ScoringError::TargetCount(0))));
        assert!(matches!(TargetSet::new(&state, vec![9]), Err(ScoringError::NotATarget(9))));
        let mut s = state.clone();
        s.reveal(Team::Red, 3).unwrap();
        assert!(matches!(TargetSet::new(&s, vec![3]), Err(ScoringError::NotATarget(3))));
        assert_eq!(TargetSet::new(&state, vec![2, 1, 2]).unwrap().positions(), &[1, 2]);
    }

    #[test]
    fn greedy_single_target() {
        let (store, state) = board_store();
        let search = ClueSearch::exact(store, None);
        let (p, c) = best_single_target_hint(&state, Team::Red, &search).unwrap().unwrap();
        assert_eq!(p, 0);
        assert_eq!(c.clue, "clue00x0");
        let (p, _) = best_single_target_hint(&state, Team::Blue, &search).unwrap().unwrap();
        assert_eq!(p, 9);
    }

    mod props {
        use super::super::{cosine, jara_score, kim_from_distances, mean_score, to_f64, weighted_mean};
        use proptest::prelude::*;

        fn vecs(n: std::ops::Range<usize>) -> impl proptest::strategy::Strategy<Value = Vec<Vec<f32>>> {
            prop::collection::vec(prop::collection::vec(-1.0f32..1.0, 5), n)
        }

        proptest! {
            #[test]
            fn mean_is_permutation_invariant(clue in prop::collection::vec(-1.0f32..1.0, 5), t in vecs(1..6)) {
                let fwd: Vec<&[f32]> = t.iter().map(|v| v.as_slice()).collect();
                let rev: Vec<&[f32]> = t.iter().rev().map(|v| v.as_slice()).collect();
                prop_assert!((mean_score(&clue, &fwd) - mean_score(&clue, &rev)).abs() < 1e-12);
            }

            #[test]
            fn jara_scale_invariant(clue in prop::collection::vec(-1.0f32..1.0, 5), t in vecs(1..4), b in vecs(0..4), scale in 0.1f64..10.0) {
                let targets: Vec<&[f32]> = t.iter().map(|v| v.as_slice()).collect();
                let bad: Vec<(&[f32], f64)> = b.iter().enumerate().map(|(i, v)| (v.as_slice(), -1.0 - i as f64)).collect();
                let base = jara_score(&clue, &targets, &bad);
                // Scaling every weight (targets included) scales the mean vector only.
                let rows: Vec<&[f32]> = targets.iter().copied().chain(bad.iter().map(|(v, _)| *v)).collect();
                let w: Vec<f64> = std::iter::repeat_n(scale, targets.len()).chain(bad.iter().map(|(_, k)| k * scale)).collect();
                let scaled = cosine(&to_f64(&clue), &weighted_mean(&rows, &w));
                prop_assert!((base - scaled).abs() < 1e-9);
            }

            #[test]
            fn kim_infinite_when_bad_closer(td in prop::collection::vec(0.0f64..2.0, 1..5), bd in prop::collection::vec(0.0f64..2.0, 1..5)) {
                let far = td.iter().copied().fold(f64::MIN, f64::max);
                let near = bd.iter().copied().fold(f64::MAX, f64::min);
                let e = kim_from_distances(&td, &bd, 2.0);
                if near < far {
                    prop_assert_eq!(e, f64::INFINITY);
                }
            }
        }
    }
}
