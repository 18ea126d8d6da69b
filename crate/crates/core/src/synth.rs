//! Synthetic topic-clustered embeddings with a matching board deck.
//!
//! A word vector is the sum of a direction shared by the whole vocabulary, a
//! super-topic center, its topic center and isotropic Gaussian noise. The
//! default weights put the expected cosine near 0.15 for unrelated words,
//! 0.35 within a super-topic and 0.6 within a topic. The deck takes one word per topic, so a clue
//! drawn from a board word's topic points at that word and little else.
//! Words are fixed-width (`t0042w07`) so no word contains another, which keeps
//! the substring legality rule from interfering.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::embedding::EmbeddingStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub topics: usize,
    pub words_per_topic: usize,
    /// Topic `t` belongs to super-topic `t % supertopics`.
    pub supertopics: usize,
    pub dim: usize,
    /// Weight of the vocabulary-wide direction.
    pub shared: f32,
    /// Weight of the super-topic center.
    pub super_weight: f32,
    /// Noise norm relative to the unit topic center.
    pub spread: f32,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            topics: 400,
            words_per_topic: 20,
            supertopics: 20,
            dim: 64,
            shared: 0.775,
            super_weight: 0.894,
            spread: 1.265,
            seed: 2023,
        }
    }
}

pub struct SyntheticVocab {
    pub store: EmbeddingStore,
    /// First word of every topic, in topic order.
    pub deck: Vec<String>,
}

pub fn word_name(topic: usize, member: usize) -> String {
    format!("t{topic:04}w{member:02}")
}

/// Raw (unnormalized) rows, interleaved member-major so that a frequency
/// cutoff keeps every topic represented.
pub fn synthetic_rows(cfg: &SynthConfig) -> Vec<(String, Vec<f32>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let gauss = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f32> {
        (0..n).map(|_| StandardNormal.sample(rng)).collect::<Vec<f32>>()
    };
    let unit = |rng: &mut ChaCha8Rng| -> Vec<f32> {
        let v = gauss(rng, cfg.dim);
        let n = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    };
    let shared = unit(&mut rng);
    let supers: Vec<Vec<f32>> = (0..cfg.supertopics.max(1)).map(|_| unit(&mut rng)).collect();
    let centers: Vec<Vec<f32>> = (0..cfg.topics)
        .map(|t| {
            let own = unit(&mut rng);
            let sup = &supers[t % supers.len()];
            (0..cfg.dim)
                .map(|i| own[i] + cfg.super_weight * sup[i] + cfg.shared * shared[i])
                .collect()
        })
        .collect();
    let noise_scale = cfg.spread / (cfg.dim as f32).sqrt();
    let mut rows = Vec::with_capacity(cfg.topics * cfg.words_per_topic);
    for member in 0..cfg.words_per_topic {
        for (topic, center) in centers.iter().enumerate() {
            let noise = gauss(&mut rng, cfg.dim);
            let v = center
                .iter()
                .zip(noise)
                .map(|(c, e)| c + noise_scale * e)
                .collect();
            rows.push((word_name(topic, member), v));
        }
    }
    rows
}

pub fn synthetic_vocab(cfg: &SynthConfig) -> SyntheticVocab {
    let store = EmbeddingStore::from_rows(synthetic_rows(cfg)).expect("synthetic rows are non-empty");
    let deck = (0..cfg.topics).map(|t| word_name(t, 0)).collect();
    SyntheticVocab { store, deck }
}

/// Writes the rows in the plain-text embedding format and the deck as a word list.
pub fn write_files(cfg: &SynthConfig, embeddings: &Path, wordlist: &Path) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(embeddings)?);
    for (word, v) in synthetic_rows(cfg) {
        write!(out, "{word}")?;
        for x in v {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    let mut deck = std::io::BufWriter::new(std::fs::File::create(wordlist)?);
    writeln!(deck, "# synthetic deck, seed {}", cfg.seed)?;
    for t in 0..cfg.topics {
        writeln!(deck, "{}", word_name(t, 0))?;
    }
    deck.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topics_cluster() {
        let cfg = SynthConfig {
            topics: 30,
            words_per_topic: 5,
            dim: 32,
            ..Default::default()
        };
        let v = synthetic_vocab(&cfg);
        assert_eq!(v.store.len(), 150);
        assert_eq!(v.deck.len(), 30);
        let same = v.store.cosine_similarity(&word_name(3, 0), &word_name(3, 1)).unwrap();
        let cross = v.store.cosine_similarity(&word_name(3, 0), &word_name(4, 1)).unwrap();
        assert!(same > 0.3, "{same}");
        assert!(same > cross);
    }

    #[test]
    fn written_files_load() {
        let cfg = SynthConfig {
            topics: 25,
            words_per_topic: 3,
            dim: 8,
            ..Default::default()
        };
        let dir = tempfile::tempdir().unwrap();
        let (e, w) = (dir.path().join("e.txt"), dir.path().join("w.txt"));
        write_files(&cfg, &e, &w).unwrap();
        let store = EmbeddingStore::load(&e, None).unwrap();
        let mem = synthetic_vocab(&cfg).store;
        assert_eq!(store.words(), mem.words());
        assert_eq!(crate::embedding::load_wordlist(&w).unwrap().len(), 25);
    }
}
