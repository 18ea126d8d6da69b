#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use codenames_core::ann::{brute_force_search, recall_at_k, tune_probes, IvfIndex, Neighbor, SearchParams};
use codenames_core::embedding::EmbeddingStore;
use codenames_core::env::EnvConfig;
use codenames_core::protocol::ServerContext;
use codenames_core::setup::{load_resources, ResourceOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Location of GloVe 6B 300d: `$CODENAMES_GLOVE`, else `data/glove.6B.300d.txt`
/// at the workspace root. `None` when neither exists.
pub fn glove_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("CODENAMES_GLOVE") {
        let p = PathBuf::from(p);
        return p.is_file().then_some(p);
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/glove.6B.300d.txt");
    p.is_file().then_some(p)
}

/// Server context over the bundled synthetic vocabulary with exact search.
pub fn synthetic_context() -> Arc<ServerContext> {
    let r = load_resources(&ResourceOptions {
        synthetic: true,
        ..Default::default()
    })
    .expect("synthetic resources");
    Arc::new(ServerContext {
        search: r.search,
        deck: r.deck,
        config: EnvConfig::default(),
    })
}

/// Outcome of one checked condition.
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

/// Unit-normalized mean of two random rows among the first `pool` rows.
pub fn pair_queries(store: &EmbeddingStore, pool: usize, n: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = pool.min(store.len());
    (0..n)
        .map(|_| {
            let a = store.row(rng.random_range(0..pool));
            let b = store.row(rng.random_range(0..pool));
            let v: Vec<f32> = a.iter().zip(b).map(|(x, y)| (x + y) / 2.0).collect();
            let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt().max(f32::MIN_POSITIVE);
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect()
}

fn exact_lists(store: &EmbeddingStore, queries: &[Vec<f32>], k: usize) -> Vec<Vec<Neighbor>> {
    queries
        .iter()
        .map(|q| brute_force_search(store, q, k).expect("brute force"))
        .collect()
}

fn same_lists(a: &[Neighbor], b: &[Neighbor]) -> bool {
    a.len() == b.len()
        && a
            .iter()
            .zip(b)
            .all(|(x, y)| x.row == y.row && x.score.to_bits() == y.score.to_bits())
}

/// The index contract over a whole store: tune probes on held-out queries,
/// then measure recall@10 and speed on 1000 fresh queries, and compare the
/// exhaustive setting against the oracle list by list.
pub fn ann_contract(store: Arc<EmbeddingStore>, query_pool: usize, seed: u64) -> Vec<Check> {
    const K: usize = 10;
    let partitions = IvfIndex::default_partitions(store.len());
    let t = Instant::now();
    let index = IvfIndex::build(store.clone(), partitions, seed).expect("index builds");
    eprintln!("  built {partitions} partitions over {} rows in {:.1?}", store.len(), t.elapsed());

    let tune_q = pair_queries(&store, query_pool, 200, seed ^ 1);
    let tune_exact = exact_lists(&store, &tune_q, K);
    let (probes, tuned_recall) = tune_probes(&index, &tune_q, &tune_exact, K, 0.97).expect("tuning");
    eprintln!("  tuned probes = {probes} of {partitions} (tuning recall {tuned_recall:.4})");

    let queries = pair_queries(&store, query_pool, 1000, seed ^ 2);
    let t = Instant::now();
    let exact = exact_lists(&store, &queries, K);
    let brute_time = t.elapsed();
    let t = Instant::now();
    let approx: Vec<Vec<Neighbor>> = queries
        .iter()
        .map(|q| index.search(q, SearchParams { k: K, probes }).expect("search"))
        .collect();
    let ivf_time = t.elapsed();
    let recall = recall_at_k(&approx, &exact);
    let speedup = brute_time.as_secs_f64() / ivf_time.as_secs_f64().max(1e-9);

    let full_identical = queries
        .iter()
        .zip(&exact)
        .filter(|(q, e)| {
            let got = index
                .search(q, SearchParams { k: K, probes: partitions })
                .expect("search");
            same_lists(&got, e)
        })
        .count();

    vec![
        Check::new(
            "recall@10 >= 0.95 at tuned probes",
            recall >= 0.95,
            format!("recall {recall:.4} over 1000 queries, probes {probes}/{partitions}"),
        ),
        Check::new(
            "throughput >= 5x brute force",
            speedup >= 5.0,
            format!("brute {brute_time:.2?}, index {ivf_time:.2?}, speedup {speedup:.1}x"),
        ),
        Check::new(
            "probes = P identical to oracle",
            full_identical == queries.len(),
            format!("{full_identical}/{} lists identical including order and score bits", queries.len()),
        ),
    ]
}
