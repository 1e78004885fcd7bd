//! Deterministic test-data generators.

use crate::error::{Error, Result};
use crate::matrix::SparseRowMatrix;
use crate::rng::{derive_row_rng, derive_seed, RngStream};

/// Distribution of the generated nonzero values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueDist {
    /// Every stored value is 1.
    Binary,
    /// Values drawn uniformly from (0, 1).
    Uniform01,
}

/// Marker mixed into the master seed so generator draws never collide
/// with pipeline draws made from the same seed.
const GENERATOR_SALT: u64 = 0x6765_6e65_7261_7465;

/// Random sparse matrix with exactly `row_nnz` nonzeros per row at
/// distinct uniformly chosen columns. Deterministic given `seed`.
pub fn generate_random_sparse(
    n_rows: usize,
    n_cols: usize,
    row_nnz: usize,
    dist: ValueDist,
    seed: u64,
) -> Result<SparseRowMatrix> {
    if row_nnz > n_cols {
        return Err(Error::Parameter(format!(
            "row sparsity {row_nnz} exceeds column count {n_cols}"
        )));
    }
    let gen_seed = derive_seed(seed, GENERATOR_SALT);
    let mut scratch: Vec<usize> = (0..n_cols).collect();
    let mut rows = Vec::with_capacity(n_rows);
    for i in 0..n_rows {
        let mut rng = derive_row_rng(gen_seed, i);
        rows.push(random_row(&mut scratch, row_nnz, dist, &mut rng));
    }
    SparseRowMatrix::from_rows(n_cols, rows)
}

fn random_row(
    scratch: &mut [usize],
    row_nnz: usize,
    dist: ValueDist,
    rng: &mut RngStream,
) -> Vec<(usize, f64)> {
    let n_cols = scratch.len();
    for (i, slot) in scratch.iter_mut().enumerate() {
        *slot = i;
    }
    // Partial Fisher-Yates: the first row_nnz slots become a uniform
    // sample of distinct columns.
    for pick in 0..row_nnz {
        let other = pick + rng.next_below((n_cols - pick) as u64) as usize;
        scratch.swap(pick, other);
    }
    let mut cols: Vec<usize> = scratch[..row_nnz].to_vec();
    cols.sort_unstable();
    cols.into_iter()
        .map(|c| {
            let v = match dist {
                ValueDist::Binary => 1.0,
                ValueDist::Uniform01 => loop {
                    let u = rng.next_f64();
                    if u != 0.0 {
                        break u;
                    }
                },
            };
            (c, v)
        })
        .collect()
}

/// Worst-case dataset for similarity output size: columns are split into
/// `n / group_size` groups, the indicator row of each group is repeated
/// `group_size` times, and every within-group column pair has cosine
/// similarity exactly 1.
pub fn generate_lowerbound_dataset(n_cols: usize, group_size: usize) -> Result<SparseRowMatrix> {
    if group_size == 0 || !n_cols.is_multiple_of(group_size) {
        return Err(Error::Parameter(format!(
            "group size {group_size} must divide column count {n_cols}"
        )));
    }
    let groups = n_cols / group_size;
    let mut rows = Vec::with_capacity(n_cols);
    for g in 0..groups {
        let row: Vec<(usize, f64)> = (0..group_size)
            .map(|t| (g * group_size + t, 1.0))
            .collect();
        for _ in 0..group_size {
            rows.push(row.clone());
        }
    }
    SparseRowMatrix::from_rows(n_cols, rows)
}
