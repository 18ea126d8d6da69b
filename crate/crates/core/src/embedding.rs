//! Word embeddings: plain-text loader, unit normalization and exact cosine
//! similarity.
//!
//! Every vector is normalized when it enters the store, so cosine similarity
//! between stored words is a plain dot product. The ANN index relies on this.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("embedding file contains no usable vectors")]
    Empty,
    #[error("unknown word {0:?}")]
    UnknownWord(String),
    #[error("word list is empty")]
    EmptyWordList,
    #[error("expected {expected} weights, got {found}")]
    WeightCount { expected: usize, found: usize },
    #[error("vector dimension {found} does not match store dimension {expected}")]
    QueryDimension { expected: usize, found: usize },
}

/// Immutable vocabulary of lowercase words with unit-norm vectors.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    words: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    index_of: HashMap<String, usize>,
}

impl EmbeddingStore {
    /// Builds a store from in-memory rows.
    ///
    /// Applies the same ingest rules as [`EmbeddingStore::load`]: words are
    /// lowercased, later duplicates are dropped, zero vectors are skipped.
    pub fn from_rows<S, I>(rows: I) -> Result<Self, EmbeddingError>
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, Vec<f32>)>,
    {
        let mut builder = Builder::default();
        for (i, (word, vector)) in rows.into_iter().enumerate() {
            builder.push(i + 1, word.as_ref(), vector)?;
        }
        builder.finish()
    }

    /// Loads a whitespace-separated text file (`word v1 v2 ... vD` per line).
    ///
    /// `limit` caps the number of admitted words; files ordered by frequency
    /// (GloVe is) therefore keep their most common words. A word2vec-style
    /// `count dim` header line is skipped.
    pub fn load(path: impl AsRef<Path>, limit: Option<usize>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let io_err = |source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        };
        let file = File::open(path).map_err(io_err)?;
        let reader = BufReader::with_capacity(1 << 20, file);
        let mut builder = Builder::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(io_err)?;
            let line_no = i + 1;
            if limit.is_some_and(|l| builder.words.len() >= l) {
                break;
            }
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let mut fields = trimmed.split_whitespace();
            let token = fields.next().unwrap_or_default();
            let values: Result<Vec<f32>, _> = fields.map(str::parse::<f32>).collect();
            let values = values.map_err(|e| EmbeddingError::Malformed {
                line: line_no,
                reason: format!("unparseable component: {e}"),
            })?;
            if line_no == 1 && values.len() == 1 && token.parse::<usize>().is_ok() {
                continue;
            }
            if values.is_empty() {
                return Err(EmbeddingError::Malformed {
                    line: line_no,
                    reason: "row has a token but no vector components".into(),
                });
            }
            builder.push(line_no, token, values)?;
        }
        builder.finish()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, row: usize) -> &str {
        &self.words[row]
    }

    pub fn row_of(&self, word: &str) -> Option<usize> {
        self.index_of.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index_of.contains_key(word)
    }

    /// The unit vector stored at `row`.
    pub fn row(&self, row: usize) -> &[f32] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Contiguous row-major storage of all vectors.
    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    pub fn vector(&self, word: &str) -> Result<&[f32], EmbeddingError> {
        self.row_of(word)
            .map(|r| self.row(r))
            .ok_or_else(|| EmbeddingError::UnknownWord(word.to_string()))
    }

    /// Cosine similarity of two stored words, in `[-1, 1]`.
    pub fn cosine_similarity(&self, a: &str, b: &str) -> Result<f64, EmbeddingError> {
        let ra = self.row_of(a).ok_or_else(|| EmbeddingError::UnknownWord(a.to_string()))?;
        let rb = self.row_of(b).ok_or_else(|| EmbeddingError::UnknownWord(b.to_string()))?;
        Ok(self.row_similarity(ra, rb))
    }

    /// Exact f64 cosine of the stored rows; self-similarity is pinned to one.
    pub fn row_similarity(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 1.0;
        }
        cosine32(self.row(a), self.row(b))
    }

    /// Component-wise (weighted) mean of stored vectors. Not re-normalized.
    pub fn mean_vector(
        &self,
        words: &[&str],
        weights: Option<&[f64]>,
    ) -> Result<Vec<f64>, EmbeddingError> {
        if words.is_empty() {
            return Err(EmbeddingError::EmptyWordList);
        }
        if let Some(w) = weights {
            if w.len() != words.len() {
                return Err(EmbeddingError::WeightCount {
                    expected: words.len(),
                    found: w.len(),
                });
            }
        }
        let rows = words
            .iter()
            .map(|w| self.vector(w))
            .collect::<Result<Vec<_>, _>>()?;
        let weights = weights.map(<[f64]>::to_vec).unwrap_or_else(|| vec![1.0; rows.len()]);
        Ok(weighted_mean(&rows, &weights))
    }
}

/// Dot product accumulated in f64.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

/// `csm(v, x) = v.x / (|v| |x|)`; zero when either side has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    ab / (aa.sqrt() * bb.sqrt())
}

/// Cosine of two f32 vectors accumulated in f64, clamped to `[-1, 1]`.
///
/// Stored rows are unit length only to f32 precision, so similarities divide
/// by the actual norms rather than trusting the raw dot product.
pub fn cosine32(a: &[f32], b: &[f32]) -> f64 {
    let mut ab = 0.0;
    let mut aa = 0.0;
    let mut bb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    (ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0)
}

/// `sum_i weights[i] * rows[i] / rows.len()`, accumulated as a running mean
/// so identical inputs reproduce themselves bit for bit.
pub fn weighted_mean(rows: &[&[f32]], weights: &[f64]) -> Vec<f64> {
    let dim = rows.first().map_or(0, |r| r.len());
    let mut mean = vec![0.0f64; dim];
    for (k, (row, &w)) in rows.iter().zip(weights).enumerate() {
        let k = (k + 1) as f64;
        for (m, &x) in mean.iter_mut().zip(row.iter()) {
            *m += (w * x as f64 - *m) / k;
        }
    }
    mean
}

pub fn to_f64(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

#[derive(Default)]
struct Builder {
    words: Vec<String>,
    data: Vec<f32>,
    dim: Option<usize>,
    index_of: HashMap<String, usize>,
}

impl Builder {
    fn push(&mut self, line: usize, token: &str, mut values: Vec<f32>) -> Result<(), EmbeddingError> {
        let dim = *self.dim.get_or_insert(values.len());
        if values.len() != dim {
            return Err(EmbeddingError::DimensionMismatch {
                line,
                expected: dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::Malformed {
                line,
                reason: "non-finite component".into(),
            });
        }
        let word = token.to_lowercase();
        if word.is_empty() || self.index_of.contains_key(&word) {
            return Ok(());
        }
        let norm = values.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt();
        if norm == 0.0 {
            log::debug!("line {line}: skipping zero vector for {word:?}");
            return Ok(());
        }
        values.iter_mut().for_each(|x| *x = (*x as f64 / norm) as f32);
        self.index_of.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(&values);
        Ok(())
    }

    fn finish(self) -> Result<EmbeddingStore, EmbeddingError> {
        if self.words.is_empty() {
            return Err(EmbeddingError::Empty);
        }
        Ok(EmbeddingStore {
            words: self.words,
            dim: self.dim.unwrap_or(0),
            data: self.data,
            index_of: self.index_of,
        })
    }
}

/// Reads a word list: one word per line, `#` starts a comment, blank lines
/// ignored, words lowercased, duplicates dropped.
pub fn load_wordlist(path: impl AsRef<Path>) -> Result<Vec<String>, EmbeddingError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(parse_wordlist(&text))
}

pub fn parse_wordlist(text: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|w| !w.is_empty())
        .filter(|w| seen.insert(w.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_normalizes_axis_vectors() {
        let f = write_tmp("cat 1 0\ndog 0 2\n");
        let store = EmbeddingStore::load(f.path(), None).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.dim(), 2);
        assert_eq!(store.vector("cat").unwrap(), &[1.0, 0.0]);
        assert_eq!(store.vector("dog").unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn lowercase_duplicate_keeps_first() {
        let f = write_tmp("cat 1 0\nCAT 0 1\n");
        let store = EmbeddingStore::load(f.path(), None).unwrap();
        assert_eq!(store.len(), 1);
        assert_eq!(store.vector("cat").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn malformed_row_reports_line() {
        let f = write_tmp("cat 1 0\ndog 0 x\n");
        match EmbeddingStore::load(f.path(), None) {
            Err(EmbeddingError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_dimension_rejected() {
        let f = write_tmp("cat 1 0\ndog 0 1 3\n");
        assert!(matches!(
            EmbeddingStore::load(f.path(), None),
            Err(EmbeddingError::DimensionMismatch { line: 2, expected: 2, found: 3 })
        ));
    }

    #[test]
    fn empty_file_and_zero_rows() {
        let f = write_tmp("");
        assert!(matches!(EmbeddingStore::load(f.path(), None), Err(EmbeddingError::Empty)));
        let f = write_tmp("zero 0 0\n");
        assert!(matches!(EmbeddingStore::load(f.path(), None), Err(EmbeddingError::Empty)));
        let f = write_tmp("zero 0 0\none 3 4\n");
        let store = EmbeddingStore::load(f.path(), None).unwrap();
        assert_eq!(store.words(), &["one".to_string()]);
    }

    #[test]
    fn limit_and_header() {
        let f = write_tmp("3 2\na 1 0\nb 0 1\nc 1 1\n");
        let store = EmbeddingStore::load(f.path(), Some(2)).unwrap();
        assert_eq!(store.words(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn cosine_examples() {
        let s = 0.5f32.sqrt();
        let store =
            EmbeddingStore::from_rows([("x", vec![1.0, 0.0]), ("y", vec![0.0, 1.0]), ("d", vec![s, s])])
                .unwrap();
        assert_eq!(store.cosine_similarity("x", "x").unwrap(), 1.0);
        assert_eq!(store.cosine_similarity("x", "y").unwrap(), 0.0);
        assert!((store.cosine_similarity("x", "d").unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-5);
        assert!(matches!(
            store.cosine_similarity("x", "nope"),
            Err(EmbeddingError::UnknownWord(_))
        ));
    }

    #[test]
    fn mean_vector_examples() {
        let store = EmbeddingStore::from_rows([("x", vec![1.0, 0.0]), ("y", vec![0.0, 1.0])]).unwrap();
        assert_eq!(store.mean_vector(&["x"], None).unwrap(), vec![1.0, 0.0]);
        assert_eq!(store.mean_vector(&["x", "y"], None).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            store.mean_vector(&["x", "y"], Some(&[1.0, -3.0])).unwrap(),
            vec![0.5, -1.5]
        );
        assert!(matches!(store.mean_vector(&[], None), Err(EmbeddingError::EmptyWordList)));
        assert!(matches!(
            store.mean_vector(&["x"], Some(&[1.0, 2.0])),
            Err(EmbeddingError::WeightCount { .. })
        ));
    }

    #[test]
    fn wordlist_parsing() {
        let words = parse_wordlist("# deck\nIron\n\nham # meat\niron\n");
        assert_eq!(words, vec!["iron".to_string(), "ham".to_string()]);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn rows() -> impl Strategy<Value = Vec<Vec<f32>>> {
            prop::collection::vec(prop::collection::vec(-10.0f32..10.0, 8), 2..20)
        }

        proptest! {
            #[test]
            fn stored_vectors_are_unit_and_cosine_symmetric(rows in rows()) {
                let named: Vec<_> = rows
                    .into_iter()
                    .enumerate()
                    .filter(|(_, r)| r.iter().any(|&x| x.abs() > 1e-3))
                    .map(|(i, r)| (format!("w{i:03}"), r))
                    .collect();
                prop_assume!(named.len() >= 2);
                let store = EmbeddingStore::from_rows(named).unwrap();
                for r in 0..store.len() {
                    let n = dot(store.row(r), store.row(r)).sqrt();
                    prop_assert!((n - 1.0).abs() < 1e-6);
                }
                for a in store.words() {
                    for b in store.words() {
                        let ab = store.cosine_similarity(a, b).unwrap();
                        prop_assert_eq!(ab, store.cosine_similarity(b, a).unwrap());
                        prop_assert!(ab.abs() <= 1.0 + 1e-9);
                    }
                }
            }

            #[test]
            fn mean_of_identical_rows_is_that_row(v in prop::collection::vec(-1.0f32..1.0, 4), n in 1usize..6) {
                let rows: Vec<&[f32]> = std::iter::repeat_n(v.as_slice(), n).collect();
                let m = weighted_mean(&rows, &vec![1.0; n]);
                for (a, &b) in m.iter().zip(&v) {
                    prop_assert_eq!(*a, b as f64);
                }
            }
        }
    }
}
