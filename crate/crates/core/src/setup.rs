//! Loading the embedding store, board deck and clue search backend.

use std::path::PathBuf;
use std::sync::Arc;

use crate::ann::{AnnError, ClueSearch, IvfIndex};
use crate::embedding::{self, EmbeddingError, EmbeddingStore};
use crate::synth::{synthetic_vocab, SynthConfig};

/// The bundled 400-word board deck.
pub const DEFAULT_WORDLIST: &str = include_str!("../data/wordlist.txt");

/// Default clue vocabulary: the most frequent 50k words of the store.
pub const DEFAULT_CLUE_LIMIT: usize = 50_000;

#[derive(Debug, thiserror::Error)]
pub enum SetupError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Ann(#[from] AnnError),
    #[error("no embeddings given: pass an embedding file or use the synthetic vocabulary")]
    NoEmbeddings,
    #[error("deck word {0:?} is not in the embedding vocabulary")]
    DeckWord(String),
}

#[derive(Debug, Clone, Default)]
pub struct ResourceOptions {
    pub embeddings: Option<PathBuf>,
    /// Board deck; the bundled list when absent (ignored for synthetic data).
    pub wordlist: Option<PathBuf>,
    pub synthetic: bool,
    /// Maximum rows read from the embedding file.
    pub limit: Option<usize>,
    /// Clue vocabulary size (first rows of the store); `DEFAULT_CLUE_LIMIT` when absent.
    pub clue_limit: Option<usize>,
    /// IVF cache built over the clue vocabulary; exact search when absent.
    pub index: Option<PathBuf>,
    pub probes: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Resources {
    pub store: Arc<EmbeddingStore>,
    pub deck: Vec<String>,
    pub search: ClueSearch,
}

pub fn default_deck() -> Vec<String> {
    embedding::parse_wordlist(DEFAULT_WORDLIST)
}

pub fn load_resources(opts: &ResourceOptions) -> Result<Resources, SetupError> {
    let (store, deck) = if opts.synthetic {
        let v = synthetic_vocab(&SynthConfig::default());
        (Arc::new(v.store), v.deck)
    } else {
        let path = opts.embeddings.as_ref().ok_or(SetupError::NoEmbeddings)?;
        let store = Arc::new(EmbeddingStore::load(path, opts.limit)?);
        let deck = match &opts.wordlist {
            Some(p) => embedding::load_wordlist(p)?,
            None => default_deck(),
        };
        (store, deck)
    };
    if let Some(w) = deck.iter().find(|w| !store.contains(w)) {
        return Err(SetupError::DeckWord(w.clone()));
    }
    let clue_rows = opts.clue_limit.unwrap_or(DEFAULT_CLUE_LIMIT);
    let search = match &opts.index {
        Some(path) => {
            let index = IvfIndex::load(path, store.clone())?;
            let probes = opts.probes.unwrap_or_else(|| IvfIndex::default_probes(index.partitions()));
            ClueSearch::Ivf {
                index: Arc::new(index),
                probes,
            }
        }
        None => ClueSearch::exact(store.clone(), Some(clue_rows)),
    };
    Ok(Resources { store, deck, search })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_deck_has_400_distinct_words() {
        let deck = default_deck();
        assert_eq!(deck.len(), 400);
        let set: std::collections::HashSet<_> = deck.iter().collect();
        assert_eq!(set.len(), 400);
        assert!(deck.iter().all(|w| w.chars().all(|c| c.is_ascii_lowercase())));
    }

    #[test]
    fn synthetic_resources() {
        let r = load_resources(&ResourceOptions {
            synthetic: true,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(r.deck.len(), 400);
        assert_eq!(r.search.rows(), r.store.len().min(DEFAULT_CLUE_LIMIT));
        assert!(matches!(
            load_resources(&ResourceOptions::default()),
            Err(SetupError::NoEmbeddings)
        ));
    }
}
