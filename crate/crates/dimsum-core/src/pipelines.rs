//! The three similarity pipelines: exact all-pairs, sampled cosine
//! estimation, and the lean single-coin-per-column variant.

use serde::{Deserialize, Serialize};

use crate::engine::{self, ColumnPair, Emission, ExecMode, PairEmission, RunStats};
use crate::error::{Error, Result};
use crate::matrix::{ColumnStats, RowEntry, SparseRowMatrix};
use crate::rng::RngStream;
use crate::spectral::DenseSymmetric;

/// Default multiplier for [`gamma_for_epsilon`], frozen by a calibration
/// sweep over c in {1, 2, 4, 8, 16} at n = 40, epsilon = 0.5.
pub const DEFAULT_CALIBRATION_C: f64 = 4.0;

/// Oversampling parameter for a target relative error:
/// `gamma = c * n / epsilon^2`.
pub fn gamma_for_epsilon(n_cols: usize, epsilon: f64, c: f64) -> f64 {
    c * n_cols as f64 / (epsilon * epsilon)
}

/// Whether a similarity matrix holds raw dot products or cosine
/// estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Gram,
    Cosine,
}

/// Which mapper/reducer pair to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Naive,
    Dimsum,
    Lean,
}

/// Sampling parameters for the randomized pipelines.
///
/// `gamma` must be finite and non-negative; 0 is the degenerate
/// nothing-emitted configuration used by a few diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingConfig {
    gamma: f64,
    mode: SamplingMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    Dimsum,
    Lean,
}

impl SamplingConfig {
    pub fn new(gamma: f64, mode: SamplingMode) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::Parameter(format!(
                "oversampling parameter must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(SamplingConfig { gamma, mode })
    }

    pub fn dimsum(gamma: f64) -> Result<Self> {
        Self::new(gamma, SamplingMode::Dimsum)
    }

    pub fn lean(gamma: f64) -> Result<Self> {
        Self::new(gamma, SamplingMode::Lean)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }
}

/// Symmetric n x n similarity output of a reduce pass.
///
/// Sampled cosine estimates are not clamped to [-1, 1]; clamping would
/// bias the estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    kind: MatrixKind,
    values: DenseSymmetric,
}

impl SimilarityMatrix {
    pub fn new(n: usize, kind: MatrixKind) -> Self {
        SimilarityMatrix {
            kind,
            values: DenseSymmetric::zeros(n),
        }
    }

    fn from_reduced(n: usize, kind: MatrixKind, reduced: Vec<(ColumnPair, f64)>) -> Self {
        let mut out = Self::new(n, kind);
        for (key, value) in reduced {
            out.values.set(key.lo(), key.hi(), value);
        }
        out
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values.set(i, j, value);
    }

    pub fn as_dense(&self) -> &DenseSymmetric {
        &self.values
    }

    /// Overwrite the diagonal with the exact self-cosine: 1 wherever the
    /// column is nonzero. Only meaningful for cosine-kind matrices.
    pub fn set_exact_diagonal(&mut self, stats: &ColumnStats) {
        debug_assert_eq!(self.kind, MatrixKind::Cosine);
        for j in 0..self.n() {
            if stats.norms[j] > 0.0 {
                self.values.set(j, j, 1.0);
            }
        }
    }
}

/// All-pairs mapper: a row with t nonzeros emits every unordered pair
/// (diagonal included), t (t + 1) / 2 emissions.
pub fn naive_map(row: &[RowEntry], _row_index: usize) -> Vec<PairEmission> {
    let mut out = Vec::with_capacity(row.len() * (row.len() + 1) / 2);
    for (a, &(j, vj)) in row.iter().enumerate() {
        for &(k, vk) in &row[a..] {
            out.push(Emission::new(ColumnPair::new(j, k), vj * vk));
        }
    }
    out
}

/// Summation reducer: the grouped values sum to the exact dot product.
pub fn naive_reduce(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// Sampled all-pairs mapper: each pair (j, k) is emitted with probability
/// `min(1, gamma / (||c_j|| ||c_k||))`.
///
/// One draw is consumed per pair even when the probability is 1, so the
/// draw sequence stays aligned across gamma values.
pub fn dimsum_map(
    row: &[RowEntry],
    _row_index: usize,
    cfg: &SamplingConfig,
    stats: &ColumnStats,
    rng: &mut RngStream,
) -> Vec<PairEmission> {
    let mut out = Vec::new();
    for (a, &(j, vj)) in row.iter().enumerate() {
        for &(k, vk) in &row[a..] {
            let p = (cfg.gamma / (stats.norms[j] * stats.norms[k])).min(1.0);
            let u = rng.next_f64();
            if u < p {
                out.push(Emission::new(ColumnPair::new(j, k), vj * vk));
            }
        }
    }
    out
}

/// Scaling reducer for the sampled mapper.
///
/// Pairs whose emission probability saturated at 1 were emitted
/// deterministically, so their sum is the exact dot product and dividing
/// by the norms yields the true cosine; otherwise dividing the sum by
/// gamma gives the unbiased estimate.
pub fn dimsum_reduce(
    key: ColumnPair,
    values: &[f64],
    cfg: &SamplingConfig,
    stats: &ColumnStats,
) -> f64 {
    let norm_product = stats.norms[key.lo()] * stats.norms[key.hi()];
    let sum: f64 = values.iter().sum();
    if cfg.gamma / norm_product > 1.0 {
        sum / norm_product
    } else {
        sum / cfg.gamma
    }
}

/// Lean sampled mapper: one survival coin per nonzero column of the row
/// (probability `min(1, sqrt(gamma) / ||c_j||)`), then every pair of
/// surviving columns is emitted pre-scaled by
/// `1 / (min(sqrt(gamma), ||c_j||) min(sqrt(gamma), ||c_k||))`.
/// The matching reducer is plain summation.
pub fn lean_dimsum_map(
    row: &[RowEntry],
    _row_index: usize,
    cfg: &SamplingConfig,
    stats: &ColumnStats,
    rng: &mut RngStream,
) -> Vec<PairEmission> {
    let sqrt_gamma = cfg.gamma.sqrt();
    // One coin per distinct column per row, shared across all the pairs
    // it participates in; a draw is consumed even at probability 1.
    let survivors: Vec<(usize, f64, f64)> = row
        .iter()
        .filter_map(|&(j, vj)| {
            let p = (sqrt_gamma / stats.norms[j]).min(1.0);
            let u = rng.next_f64();
            if u < p {
                Some((j, vj, sqrt_gamma.min(stats.norms[j])))
            } else {
                None
            }
        })
        .collect();
    let mut out = Vec::new();
    for (a, &(j, vj, wj)) in survivors.iter().enumerate() {
        for &(k, vk, wk) in &survivors[a..] {
            out.push(Emission::new(ColumnPair::new(j, k), vj * vk / (wj * wk)));
        }
    }
    out
}

/// Options for a full pipeline run.
#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions {
    pub exec: ExecMode,
    /// Overwrite the cosine diagonal with exact ones after reducing.
    /// Disable to measure the pure sampled estimator.
    pub exact_diagonal: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            exec: ExecMode::default(),
            exact_diagonal: true,
        }
    }
}

const PAIR_KEY_NOTE: &str = "unordered column pairs (j <= k), diagonal included";

/// Exact Gram pipeline: all-pairs map, summation reduce.
pub fn run_naive(matrix: &SparseRowMatrix, exec: ExecMode) -> (SimilarityMatrix, RunStats) {
    let (reduced, stats) = engine::run_job(
        matrix,
        0,
        exec,
        |row, idx, _rng| naive_map(row, idx),
        |_key, values| Some(naive_reduce(values)),
    );
    (
        SimilarityMatrix::from_reduced(matrix.n_cols(), MatrixKind::Gram, reduced),
        stats.with_key_note(PAIR_KEY_NOTE),
    )
}

/// Sampled cosine pipeline (standard or lean) with the given seed.
pub fn run_sampled(
    matrix: &SparseRowMatrix,
    col_stats: &ColumnStats,
    cfg: &SamplingConfig,
    seed: u64,
    options: &PipelineOptions,
) -> (SimilarityMatrix, RunStats) {
    let (reduced, run_stats) = match cfg.mode {
        SamplingMode::Dimsum => engine::run_job(
            matrix,
            seed,
            options.exec,
            |row, idx, rng| dimsum_map(row, idx, cfg, col_stats, rng),
            |key, values| Some(dimsum_reduce(key, values, cfg, col_stats)),
        ),
        SamplingMode::Lean => engine::run_job(
            matrix,
            seed,
            options.exec,
            |row, idx, rng| lean_dimsum_map(row, idx, cfg, col_stats, rng),
            |_key, values| Some(naive_reduce(values)),
        ),
    };
    let mut similarity =
        SimilarityMatrix::from_reduced(matrix.n_cols(), MatrixKind::Cosine, reduced);
    if options.exact_diagonal {
        similarity.set_exact_diagonal(col_stats);
    }
    (similarity, run_stats.with_key_note(PAIR_KEY_NOTE))
}
