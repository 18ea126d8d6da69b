//! Inverted-file (IVF-flat) inner-product search over an [`EmbeddingStore`].
//!
//! Rows are clustered with seeded spherical k-means; a query scores the
//! centroids, then scans the member rows of the `probes` closest partitions
//! exactly. With `probes == partitions` the result is identical to
//! [`brute_force_search`], tie order included.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::embedding::EmbeddingStore;

const KMEANS_ITERATIONS: usize = 10;
/// Training sample cap per partition; assignment of the full set happens after.
const TRAIN_POINTS_PER_PARTITION: usize = 64;
const CACHE_MAGIC: [u8; 4] = *b"CNIV";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AnnError {
    #[error("partition count {partitions} outside 1..={rows}")]
    Partitions { partitions: usize, rows: usize },
    #[error("cannot index an empty store")]
    EmptyStore,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("probes {probes} outside 1..={partitions}")]
    Probes { probes: usize, partitions: usize },
    #[error("query has dimension {found}, index expects {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("index cache i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("index cache invalid: {0}")]
    Cache(String),
}

/// A scored vocabulary row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub row: usize,
    pub score: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    pub k: usize,
    pub probes: usize,
}

/// f32 inner product with a fixed 8-lane accumulation order.
///
/// Both the index scan and the brute-force oracle use this kernel, which is
/// what makes exhaustive search bit-identical to the oracle.
#[inline]
pub fn inner_product(a: &[f32], b: &[f32]) -> f32 {
    let mut lanes = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            lanes[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((lanes[0] + lanes[4]) + (lanes[1] + lanes[5])) + ((lanes[2] + lanes[6]) + (lanes[3] + lanes[7])) + tail
}

/// Heap entry ordered so that the *worst* candidate is the maximum.
#[derive(Clone, Copy)]
struct Ranked {
    score: f32,
    row: u32,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .total_cmp(&self.score)
            .then(self.row.cmp(&other.row))
    }
}

/// Bounded top-k collector: descending score, ascending row on ties.
struct TopK {
    k: usize,
    heap: BinaryHeap<Ranked>,
}

impl TopK {
    fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    fn offer(&mut self, row: u32, score: f32) {
        let cand = Ranked { score, row };
        if self.heap.len() < self.k {
            self.heap.push(cand);
        } else if let Some(worst) = self.heap.peek() {
            if cand < *worst {
                self.heap.pop();
                self.heap.push(cand);
            }
        }
    }

    fn into_sorted(self) -> Vec<Neighbor> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|r| Neighbor {
                row: r.row as usize,
                score: r.score,
            })
            .collect()
    }
}

/// Exact top-`k` over the first `rows` rows of the store.
pub fn brute_force_search_rows(
    store: &EmbeddingStore,
    rows: usize,
    query: &[f32],
    k: usize,
) -> Result<Vec<Neighbor>, AnnError> {
    if k == 0 {
        return Err(AnnError::ZeroK);
    }
    check_dim(store.dim(), query)?;
    let dim = store.dim();
    let mut top = TopK::new(k);
    for (row, v) in store.as_flat()[..rows * dim].chunks_exact(dim).enumerate() {
        top.offer(row as u32, inner_product(query, v));
    }
    Ok(top.into_sorted())
}

/// Exact top-`k` over the whole store.
pub fn brute_force_search(
    store: &EmbeddingStore,
    query: &[f32],
    k: usize,
) -> Result<Vec<Neighbor>, AnnError> {
    brute_force_search_rows(store, store.len(), query, k)
}

fn check_dim(expected: usize, query: &[f32]) -> Result<(), AnnError> {
    if query.len() != expected {
        return Err(AnnError::Dimension {
            expected,
            found: query.len(),
        });
    }
    Ok(())
}

/// Partitioned index over rows `0..indexed_rows` of a store.
#[derive(Debug, Clone)]
pub struct IvfIndex {
    store: Arc<EmbeddingStore>,
    indexed_rows: usize,
    centroids: Vec<f32>,
    lists: Vec<Vec<u32>>,
    /// Member vectors copied partition by partition, in list order.
    packed: Vec<f32>,
    offsets: Vec<usize>,
}

impl IvfIndex {
    /// Default partition count: `ceil(sqrt(n))`.
    pub fn default_partitions(n: usize) -> usize {
        ((n as f64).sqrt().ceil() as usize).max(1)
    }

    /// Default probe count: `ceil(P / 10)`.
    pub fn default_probes(partitions: usize) -> usize {
        partitions.div_ceil(10).max(1)
    }

    pub fn build(store: Arc<EmbeddingStore>, partitions: usize, seed: u64) -> Result<Self, AnnError> {
        let rows = store.len();
        Self::build_rows(store, rows, partitions, seed)
    }

    /// Indexes only the first `rows` rows (the clue vocabulary of a
    /// frequency-ordered file).
    pub fn build_rows(
        store: Arc<EmbeddingStore>,
        rows: usize,
        partitions: usize,
        seed: u64,
    ) -> Result<Self, AnnError> {
        let rows = rows.min(store.len());
        if rows == 0 {
            return Err(AnnError::EmptyStore);
        }
        if partitions == 0 || partitions > rows {
            return Err(AnnError::Partitions { partitions, rows });
        }
        let dim = store.dim();
        let data = &store.as_flat()[..rows * dim];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let train_n = rows.min(partitions * TRAIN_POINTS_PER_PARTITION);
        let mut train_ids: Vec<usize> = if train_n == rows {
            (0..rows).collect()
        } else {
            sample(&mut rng, rows, train_n).into_vec()
        };
        train_ids.sort_unstable();
        let train: Vec<&[f32]> = train_ids.iter().map(|&r| &data[r * dim..(r + 1) * dim]).collect();

        let centroids = spherical_kmeans(&train, dim, partitions, &mut rng);

        let assignment: Vec<(u32, f32)> = data
            .par_chunks_exact(dim)
            .map(|v| nearest_centroid(&centroids, dim, v))
            .collect();
        let mut lists = vec![Vec::new(); partitions];
        for (row, &(c, _)) in assignment.iter().enumerate() {
            lists[c as usize].push(row as u32);
        }
        Ok(Self::assemble(store, rows, centroids, lists))
    }

    fn assemble(store: Arc<EmbeddingStore>, indexed_rows: usize, centroids: Vec<f32>, lists: Vec<Vec<u32>>) -> Self {
        let dim = store.dim();
        let mut packed = Vec::with_capacity(indexed_rows * dim);
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        for list in &lists {
            for &r in list {
                packed.extend_from_slice(store.row(r as usize));
            }
            offsets.push(packed.len() / dim.max(1));
        }
        Self {
            store,
            indexed_rows,
            centroids,
            lists,
            packed,
            offsets,
        }
    }

    pub fn store(&self) -> &Arc<EmbeddingStore> {
        &self.store
    }

    pub fn partitions(&self) -> usize {
        self.lists.len()
    }

    pub fn indexed_rows(&self) -> usize {
        self.indexed_rows
    }

    pub fn lists(&self) -> &[Vec<u32>] {
        &self.lists
    }

    pub fn centroid(&self, p: usize) -> &[f32] {
        let dim = self.store.dim();
        &self.centroids[p * dim..(p + 1) * dim]
    }

    pub fn search(&self, query: &[f32], params: SearchParams) -> Result<Vec<Neighbor>, AnnError> {
        if params.k == 0 {
            return Err(AnnError::ZeroK);
        }
        let p = self.partitions();
        if params.probes == 0 || params.probes > p {
            return Err(AnnError::Probes {
                probes: params.probes,
                partitions: p,
            });
        }
        let dim = self.store.dim();
        check_dim(dim, query)?;

        let probe_list: Vec<usize> = if params.probes == p {
            (0..p).collect()
        } else {
            let mut top = TopK::new(params.probes);
            for (c, centroid) in self.centroids.chunks_exact(dim).enumerate() {
                top.offer(c as u32, inner_product(query, centroid));
            }
            top.into_sorted().into_iter().map(|n| n.row).collect()
        };

        let mut top = TopK::new(params.k);
        for part in probe_list {
            let ids = &self.lists[part];
            let block = &self.packed[self.offsets[part] * dim..self.offsets[part + 1] * dim];
            for (&row, v) in ids.iter().zip(block.chunks_exact(dim)) {
                top.offer(row, inner_product(query, v));
            }
        }
        Ok(top.into_sorted())
    }

    /// Writes the little-endian cache: header (magic, version, D, P, N),
    /// centroid block, then per partition a `u32` length and its row ids.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AnnError> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&CACHE_MAGIC)?;
        for v in [
            CACHE_VERSION,
            self.store.dim() as u32,
            self.partitions() as u32,
            self.indexed_rows as u32,
        ] {
            w.write_all(&v.to_le_bytes())?;
        }
        for x in &self.centroids {
            w.write_all(&x.to_le_bytes())?;
        }
        for list in &self.lists {
            w.write_all(&(list.len() as u32).to_le_bytes())?;
            for r in list {
                w.write_all(&r.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a cache written by [`IvfIndex::save`], validating it against `store`.
    pub fn load(path: impl AsRef<Path>, store: Arc<EmbeddingStore>) -> Result<Self, AnnError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != CACHE_MAGIC {
            return Err(AnnError::Cache("bad magic".into()));
        }
        let read_u32 = |r: &mut BufReader<File>| -> Result<u32, AnnError> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let version = read_u32(&mut r)?;
        if version != CACHE_VERSION {
            return Err(AnnError::Cache(format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut r)? as usize;
        let partitions = read_u32(&mut r)? as usize;
        let rows = read_u32(&mut r)? as usize;
        if dim != store.dim() {
            return Err(AnnError::Cache(format!("dimension {dim} != store dimension {}", store.dim())));
        }
        if rows == 0 || rows > store.len() {
            return Err(AnnError::Cache(format!("row count {rows} exceeds store size {}", store.len())));
        }
        if partitions == 0 || partitions > rows {
            return Err(AnnError::Partitions { partitions, rows });
        }
        let mut centroids = vec![0f32; partitions * dim];
        let mut buf = [0u8; 4];
        for c in centroids.iter_mut() {
            r.read_exact(&mut buf)?;
            *c = f32::from_le_bytes(buf);
        }
        let mut seen = vec![false; rows];
        let mut lists = Vec::with_capacity(partitions);
        for _ in 0..partitions {
            let len = read_u32(&mut r)? as usize;
            if len > rows {
                return Err(AnnError::Cache("partition longer than row count".into()));
            }
            let mut list = Vec::with_capacity(len);
            for _ in 0..len {
                let id = read_u32(&mut r)?;
                let slot = seen
                    .get_mut(id as usize)
                    .ok_or_else(|| AnnError::Cache(format!("row id {id} out of range")))?;
                if *slot {
                    return Err(AnnError::Cache(format!("row id {id} in two partitions")));
                }
                *slot = true;
                list.push(id);
            }
            lists.push(list);
        }
        if seen.iter().any(|s| !s) {
            return Err(AnnError::Cache("partitions do not cover every row".into()));
        }
        Ok(Self::assemble(store, rows, centroids, lists))
    }
}

fn nearest_centroid(centroids: &[f32], dim: usize, v: &[f32]) -> (u32, f32) {
    let mut best = (0u32, f32::NEG_INFINITY);
    for (c, centroid) in centroids.chunks_exact(dim).enumerate() {
        let s = inner_product(v, centroid);
        if s > best.1 {
            best = (c as u32, s);
        }
    }
    best
}

/// Lloyd iterations with inner-product assignment and unit-normalized means.
/// Empty (or zero-mean) clusters are re-seeded from the points farthest from
/// their current centroid.
fn spherical_kmeans(points: &[&[f32]], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    let mut centroids = Vec::with_capacity(k * dim);
    for i in sample(rng, points.len(), k).into_iter() {
        centroids.extend_from_slice(points[i]);
    }
    for _ in 0..KMEANS_ITERATIONS {
        let assignment: Vec<(u32, f32)> = points
            .par_iter()
            .map(|v| nearest_centroid(&centroids, dim, v))
            .collect();
        let mut sums = vec![0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (v, &(c, _)) in points.iter().zip(&assignment) {
            let c = c as usize;
            counts[c] += 1;
            for (s, &x) in sums[c * dim..(c + 1) * dim].iter_mut().zip(v.iter()) {
                *s += x as f64;
            }
        }
        // Farthest points first, for re-seeding.
        let mut far: Vec<usize> = (0..points.len()).collect();
        far.sort_by(|&a, &b| assignment[a].1.total_cmp(&assignment[b].1).then(a.cmp(&b)));
        let mut far = far.into_iter();

        for c in 0..k {
            let sum = &sums[c * dim..(c + 1) * dim];
            let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
            let target = &mut centroids[c * dim..(c + 1) * dim];
            if counts[c] == 0 || norm == 0.0 {
                if let Some(p) = far.next() {
                    target.copy_from_slice(points[p]);
                }
            } else {
                for (t, s) in target.iter_mut().zip(sum) {
                    *t = (s / norm) as f32;
                }
            }
        }
    }
    centroids
}

/// Mean fraction of each oracle top-k list recovered by the matching approximate list.
pub fn recall_at_k(approx: &[Vec<Neighbor>], exact: &[Vec<Neighbor>]) -> f64 {
    if exact.is_empty() {
        return 1.0;
    }
    let total: f64 = approx
        .iter()
        .zip(exact)
        .map(|(a, e)| {
            if e.is_empty() {
                return 1.0;
            }
            let hits = e.iter().filter(|n| a.iter().any(|m| m.row == n.row)).count();
            hits as f64 / e.len() as f64
        })
        .sum();
    total / exact.len() as f64
}

/// Smallest probe count reaching `target` recall@k against the exact lists.
/// Returns `(probes, recall)`; falls back to all partitions.
pub fn tune_probes(
    index: &IvfIndex,
    queries: &[Vec<f32>],
    exact: &[Vec<Neighbor>],
    k: usize,
    target: f64,
) -> Result<(usize, f64), AnnError> {
    let p = index.partitions();
    let recall_for = |probes: usize| -> Result<f64, AnnError> {
        let approx = queries
            .iter()
            .map(|q| index.search(q, SearchParams { k, probes }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(recall_at_k(&approx, exact))
    };
    // Binary search on the monotone recall curve.
    let (mut lo, mut hi) = (1usize, p);
    let mut best = (p, recall_for(p)?);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let r = recall_for(mid)?;
        if r >= target {
            best = (mid, r);
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if lo != best.0 {
        best = (lo, recall_for(lo)?);
    }
    Ok(best)
}

/// Where clue candidates come from: an exact scan or an IVF index.
#[derive(Debug, Clone)]
pub enum ClueSearch {
    Exact { store: Arc<EmbeddingStore>, rows: usize },
    Ivf { index: Arc<IvfIndex>, probes: usize },
}

impl ClueSearch {
    pub fn exact(store: Arc<EmbeddingStore>, clue_rows: Option<usize>) -> Self {
        let rows = clue_rows.unwrap_or(store.len()).min(store.len());
        ClueSearch::Exact { store, rows }
    }

    pub fn store(&self) -> &Arc<EmbeddingStore> {
        match self {
            ClueSearch::Exact { store, .. } => store,
            ClueSearch::Ivf { index, .. } => index.store(),
        }
    }

    /// Number of candidate clue rows.
    pub fn rows(&self) -> usize {
        match self {
            ClueSearch::Exact { rows, .. } => *rows,
            ClueSearch::Ivf { index, .. } => index.indexed_rows(),
        }
    }

    /// Top-`k`; `exhaustive` forces a full scan regardless of backend.
    pub fn search(&self, query: &[f32], k: usize, exhaustive: bool) -> Result<Vec<Neighbor>, AnnError> {
        match self {
            ClueSearch::Exact { store, rows } => brute_force_search_rows(store, *rows, query, k),
            ClueSearch::Ivf { index, probes } => {
                let probes = if exhaustive { index.partitions() } else { *probes };
                index.search(query, SearchParams { k, probes })
            }
        }
    }
}
