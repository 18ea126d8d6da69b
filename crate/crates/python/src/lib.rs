//! Python bindings. Structured results cross the boundary as JSON and are
//! handed back as plain dicts and lists.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use codenames_core::ann::ClueSearch;
use codenames_core::embedding;
use codenames_core::env::{self as cenv, EnvConfig};
use codenames_core::eval::{self, Policy};
use codenames_core::game::Hint;
use codenames_core::setup;
use codenames_core::synth::{synthetic_vocab, SynthConfig};
use codenames_core::toy;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let s = serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (s,))?.unbind())
}

fn parse_config<T: serde::de::DeserializeOwned + Default>(config: Option<&str>) -> PyResult<T> {
    match config {
        Some(s) => serde_json::from_str(s).map_err(value_err),
        None => Ok(T::default()),
    }
}

/// Word vectors, unit-normalized on load.
#[pyclass(frozen, name = "EmbeddingStore")]
struct PyEmbeddingStore {
    inner: Arc<embedding::EmbeddingStore>,
    /// Board deck that came with the store (synthetic vocabularies only).
    deck: Option<Vec<String>>,
}

#[pymethods]
impl PyEmbeddingStore {
    #[new]
    fn new(words: Vec<String>, vectors: Vec<Vec<f32>>) -> PyResult<Self> {
        if words.len() != vectors.len() {
            return Err(PyValueError::new_err("words and vectors differ in length"));
        }
        let inner = embedding::EmbeddingStore::from_rows(words.into_iter().zip(vectors)).map_err(value_err)?;
        Ok(Self {
            inner: Arc::new(inner),
            deck: None,
        })
    }

    /// Loads a `word v1 ... vD` text file.
    #[staticmethod]
    #[pyo3(signature = (path, limit=None))]
    fn load(path: &str, limit: Option<usize>) -> PyResult<Self> {
        let inner = embedding::EmbeddingStore::load(path, limit).map_err(value_err)?;
        Ok(Self {
            inner: Arc::new(inner),
            deck: None,
        })
    }

    /// The built-in synthetic topic vocabulary and its 400-word deck.
    #[staticmethod]
    fn synthetic() -> Self {
        let v = synthetic_vocab(&SynthConfig::default());
        Self {
            inner: Arc::new(v.store),
            deck: Some(v.deck),
        }
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// The deck bundled with this store, else the standard 400-word list.
    fn deck(&self) -> Vec<String> {
        self.deck.clone().unwrap_or_else(setup::default_deck)
    }

    fn __contains__(&self, word: &str) -> bool {
        self.inner.contains(word)
    }

    fn vector(&self, word: &str) -> PyResult<Vec<f32>> {
        self.inner.vector(word).map(<[f32]>::to_vec).map_err(value_err)
    }

    fn cosine_similarity(&self, a: &str, b: &str) -> PyResult<f64> {
        self.inner.cosine_similarity(a, b).map_err(value_err)
    }
}

fn search_for(store: &PyEmbeddingStore, clue_limit: Option<usize>) -> ClueSearch {
    ClueSearch::exact(
        store.inner.clone(),
        Some(clue_limit.unwrap_or(setup::DEFAULT_CLUE_LIMIT)),
    )
}

/// The spymaster environment. `config` is a JSON object of env settings.
#[pyclass(name = "CodenamesEnv")]
struct PyCodenamesEnv {
    inner: cenv::CodenamesEnv,
}

#[pymethods]
impl PyCodenamesEnv {
    #[new]
    #[pyo3(signature = (store, config=None, deck=None, clue_limit=None))]
    fn new(
        store: &PyEmbeddingStore,
        config: Option<&str>,
        deck: Option<Vec<String>>,
        clue_limit: Option<usize>,
    ) -> PyResult<Self> {
        let config: EnvConfig = parse_config(config)?;
        let deck = deck.unwrap_or_else(|| store.deck());
        let inner = cenv::CodenamesEnv::new(config, search_for(store, clue_limit), deck).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn action_len(&self) -> usize {
        self.inner.config().action_len()
    }

    fn spaces(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.inner.spaces())
    }

    fn config(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, self.inner.config())
    }

    /// Returns `{observation, goal, seed}`.
    #[pyo3(signature = (seed=None))]
    fn reset(&mut self, py: Python<'_>, seed: Option<u64>) -> PyResult<Py<PyAny>> {
        let r = self.inner.reset(seed).map_err(value_err)?;
        to_py(py, &r)
    }

    /// Returns `{observation, reward, terminated, truncated, goal, info}`.
    fn step(&mut self, py: Python<'_>, action: Vec<f64>) -> PyResult<Py<PyAny>> {
        let r = self.inner.step(&action).map_err(value_err)?;
        to_py(py, &r)
    }

    /// Plays an explicit hint instead of a decoded action.
    fn step_hint(&mut self, py: Python<'_>, clue: &str, count: u8) -> PyResult<Py<PyAny>> {
        let hint = Hint::new(clue, count).map_err(value_err)?;
        let r = self.inner.step_hint(hint).map_err(value_err)?;
        to_py(py, &r)
    }

    /// Full board state (labels included), or None before the first reset.
    fn state(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        match self.inner.state() {
            Some(s) => to_py(py, s),
            None => Ok(py.None()),
        }
    }

    /// The greedy baseline's hint for the current board.
    fn greedy_hint(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let state = self.inner.state().ok_or_else(|| value_err("call reset first"))?;
        let h = eval::greedy_policy(state, self.inner.search()).map_err(value_err)?;
        to_py(py, &h)
    }
}

#[pyclass(name = "ClickPixel")]
struct PyClickPixel {
    inner: toy::ClickPixel,
}

#[pymethods]
impl PyClickPixel {
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(config: Option<&str>) -> PyResult<Self> {
        let inner = toy::ClickPixel::new(parse_config(config)?).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn cells(&self) -> usize {
        self.inner.cells()
    }

    #[pyo3(signature = (seed=None))]
    fn reset(&mut self, seed: Option<u64>) -> Vec<Vec<f64>> {
        self.inner.reset(seed)
    }

    fn step(&mut self, py: Python<'_>, action: i64) -> PyResult<Py<PyAny>> {
        let r = self.inner.step(action).map_err(value_err)?;
        to_py(py, &r)
    }
}

#[pyclass(name = "WhackAMole")]
struct PyWhack {
    inner: toy::Whack,
}

#[pymethods]
impl PyWhack {
    #[new]
    #[pyo3(signature = (config=None))]
    fn new(config: Option<&str>) -> PyResult<Self> {
        let inner = toy::Whack::new(parse_config(config)?).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn cells(&self) -> usize {
        self.inner.cells()
    }

    #[pyo3(signature = (seed=None))]
    fn reset(&mut self, seed: Option<u64>) -> Vec<Vec<f64>> {
        self.inner.reset(seed)
    }

    fn step(&mut self, py: Python<'_>, action: Vec<f64>) -> PyResult<Py<PyAny>> {
        let r = self.inner.step(&action).map_err(value_err)?;
        to_py(py, &r)
    }
}

/// Runs `episodes` episodes of `policy` ("greedy" or "random") and returns the report.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (store, policy, episodes, seed=0, config=None, deck=None, clue_limit=None))]
fn evaluate(
    py: Python<'_>,
    store: &PyEmbeddingStore,
    policy: &str,
    episodes: usize,
    seed: u64,
    config: Option<&str>,
    deck: Option<Vec<String>>,
    clue_limit: Option<usize>,
) -> PyResult<Py<PyAny>> {
    let policy: Policy = policy.parse().map_err(value_err)?;
    let config: EnvConfig = parse_config(config)?;
    let deck = deck.unwrap_or_else(|| store.deck());
    let search = search_for(store, clue_limit);
    let report = py
        .detach(|| eval::evaluate(policy, &config, &search, &deck, episodes, seed))
        .map_err(value_err)?;
    to_py(py, &report)
}

#[pymodule]
fn pycodenames(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEmbeddingStore>()?;
    m.add_class::<PyCodenamesEnv>()?;
    m.add_class::<PyClickPixel>()?;
    m.add_class::<PyWhack>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
