//! Deterministic in-memory map/shuffle/reduce executor.
//!
//! The engine runs a mapper over every row of a [`SparseRowMatrix`], groups
//! the emitted key/value pairs by exact key equality, applies a reducer per
//! distinct key and reports the two complexity measures of interest: the
//! shuffle size (total emissions) and the reduce-key cardinalities.
//!
//! Mappers are pure functions of `(row, row_index, per-row rng stream)`, so
//! the emission multiset is independent of scheduling. Grouping happens in
//! row order in both execution modes, which makes sequential and parallel
//! runs produce identical grouped inputs; only the map and reduce work is
//! distributed.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::matrix::{RowEntry, SparseRowMatrix};
use crate::rng::{derive_row_rng, RngStream};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How map and reduce tasks are scheduled.
///
/// `Parallel` distributes rows and keys over the rayon pool; without the
/// `parallel` feature it degrades to sequential execution. Outputs agree
/// between the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    #[default]
    Parallel,
}

/// An unordered column pair, canonicalized so `lo <= hi`.
///
/// The Gram matrix is symmetric, so pair keys are shuffled in canonical
/// order; the diagonal key `(j, j)` is permitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnPair {
    lo: usize,
    hi: usize,
}

impl ColumnPair {
    pub fn new(j: usize, k: usize) -> Self {
        if j <= k {
            ColumnPair { lo: j, hi: k }
        } else {
            ColumnPair { lo: k, hi: j }
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn is_diagonal(&self) -> bool {
        self.lo == self.hi
    }
}

/// One keyed emission from a map task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emission<K> {
    pub key: K,
    pub value: f64,
}

impl<K> Emission<K> {
    pub fn new(key: K, value: f64) -> Self {
        Emission { key, value }
    }
}

/// Emission keyed by an unordered column pair, as produced by the
/// similarity mappers.
pub type PairEmission = Emission<ColumnPair>;

/// Complexity instrumentation for one job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    /// Total number of emissions in the map phase.
    pub shuffle_size: u64,
    /// Largest number of values grouped under a single key.
    pub reduce_key_max: u64,
    /// Mean group cardinality over distinct keys (0 when no keys).
    pub reduce_key_mean: f64,
    /// Number of distinct keys seen by the reduce phase.
    pub distinct_keys: u64,
    /// Number of map invocations (one per row).
    pub map_tasks: u64,
    /// How the job's key space is canonicalized, so measured counts are
    /// interpreted consistently.
    pub key_canonicalization: String,
}

impl RunStats {
    pub fn with_key_note(mut self, note: &str) -> Self {
        self.key_canonicalization = note.to_string();
        self
    }
}

/// Run one map/shuffle/reduce job over the rows of `matrix`.
///
/// Each row's mapper receives a stream derived from `(master_seed, row)`,
/// so results are a pure function of the inputs regardless of `mode`.
/// Reducers may return `None` to drop a key; dropped keys still count in
/// the grouping statistics. Output pairs are sorted by key.
pub fn run_job<K, M, R>(
    matrix: &SparseRowMatrix,
    master_seed: u64,
    mode: ExecMode,
    mapper: M,
    reducer: R,
) -> (Vec<(K, f64)>, RunStats)
where
    K: Copy + Eq + Hash + Ord + Send + Sync,
    M: Fn(&[RowEntry], usize, &mut RngStream) -> Vec<Emission<K>> + Sync,
    R: Fn(K, &[f64]) -> Option<f64> + Sync,
{
    let per_row = map_phase(matrix, master_seed, mode, &mapper);

    // Shuffle: group by exact key equality, visiting emissions in row
    // order so both execution modes feed reducers identical groups.
    let mut groups: HashMap<K, Vec<f64>> = HashMap::new();
    let mut shuffle_size = 0u64;
    for emissions in &per_row {
        shuffle_size += emissions.len() as u64;
        for e in emissions {
            groups.entry(e.key).or_default().push(e.value);
        }
    }

    let mut grouped: Vec<(K, Vec<f64>)> = groups.into_iter().collect();
    grouped.sort_unstable_by_key(|&(key, _)| key);

    let distinct_keys = grouped.len() as u64;
    let reduce_key_max = grouped.iter().map(|(_, v)| v.len() as u64).max().unwrap_or(0);
    let reduce_key_mean = if distinct_keys == 0 {
        0.0
    } else {
        shuffle_size as f64 / distinct_keys as f64
    };

    let reduced = reduce_phase(&grouped, mode, &reducer);

    let stats = RunStats {
        shuffle_size,
        reduce_key_max,
        reduce_key_mean,
        distinct_keys,
        map_tasks: matrix.n_rows() as u64,
        key_canonicalization: "exact key equality".to_string(),
    };
    (reduced, stats)
}

fn map_phase<K, M>(
    matrix: &SparseRowMatrix,
    master_seed: u64,
    mode: ExecMode,
    mapper: &M,
) -> Vec<Vec<Emission<K>>>
where
    K: Send,
    M: Fn(&[RowEntry], usize, &mut RngStream) -> Vec<Emission<K>> + Sync,
{
    let run_one = |(idx, row): (usize, &Vec<RowEntry>)| {
        let mut rng = derive_row_rng(master_seed, idx);
        mapper(row, idx, &mut rng)
    };
    match mode {
        ExecMode::Sequential => matrix.rows().iter().enumerate().map(run_one).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                matrix.rows().par_iter().enumerate().map(run_one).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                matrix.rows().iter().enumerate().map(run_one).collect()
            }
        }
    }
}

fn reduce_phase<K, R>(grouped: &[(K, Vec<f64>)], mode: ExecMode, reducer: &R) -> Vec<(K, f64)>
where
    K: Copy + Send + Sync,
    R: Fn(K, &[f64]) -> Option<f64> + Sync,
{
    let run_one = |(key, values): &(K, Vec<f64>)| reducer(*key, values).map(|out| (*key, out));
    match mode {
        ExecMode::Sequential => grouped.iter().filter_map(run_one).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                grouped.par_iter().filter_map(run_one).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                grouped.iter().filter_map(run_one).collect()
            }
        }
    }
}
