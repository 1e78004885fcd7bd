//! Sparse row-major matrix storage, entry scaling and column statistics.

use crate::engine::{self, Emission, ExecMode, RunStats};
use crate::error::{Error, Result};

/// One stored nonzero: `(column index, value)`.
pub type RowEntry = (usize, f64);

/// A sparse m x n matrix stored as rows of `(col, value)` pairs.
///
/// Invariants, enforced at construction:
/// - column indices are strictly increasing within a row and below `n_cols`;
/// - no stored value is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRowMatrix {
    n_rows: usize,
    n_cols: usize,
    rows: Vec<Vec<RowEntry>>,
}

impl SparseRowMatrix {
    /// Build from per-row entry lists, validating all invariants.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<RowEntry>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            let mut prev: Option<usize> = None;
            for &(col, value) in row {
                if col >= n_cols {
                    return Err(Error::IndexOutOfBounds {
                        row: i,
                        col,
                        n_rows: rows.len(),
                        n_cols,
                    });
                }
                if value == 0.0 {
                    return Err(Error::Parameter(format!(
                        "explicit zero stored at ({i}, {col})"
                    )));
                }
                if let Some(p) = prev {
                    if col == p {
                        return Err(Error::DuplicateEntry { row: i, col });
                    }
                    if col < p {
                        return Err(Error::Parameter(format!(
                            "row {i} column indices not strictly increasing"
                        )));
                    }
                }
                prev = Some(col);
            }
        }
        Ok(SparseRowMatrix {
            n_rows: rows.len(),
            n_cols,
            rows,
        })
    }

    /// Build from unordered `(row, col, value)` triples.
    ///
    /// Duplicate coordinates are an error, not summed. Explicit zeros are
    /// dropped; the count of dropped zeros is returned alongside.
    pub fn from_triples(
        n_rows: usize,
        n_cols: usize,
        triples: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<(Self, usize)> {
        let mut rows: Vec<Vec<RowEntry>> = vec![Vec::new(); n_rows];
        let mut dropped_zeros = 0usize;
        for (r, c, v) in triples {
            if r >= n_rows || c >= n_cols {
                return Err(Error::IndexOutOfBounds {
                    row: r,
                    col: c,
                    n_rows,
                    n_cols,
                });
            }
            if v == 0.0 {
                dropped_zeros += 1;
                continue;
            }
            rows[r].push((c, v));
        }
        for (r, row) in rows.iter_mut().enumerate() {
            row.sort_unstable_by_key(|&(c, _)| c);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::DuplicateEntry { row: r, col: w[0].0 });
                }
            }
        }
        Ok((
            SparseRowMatrix {
                n_rows,
                n_cols,
                rows,
            },
            dropped_zeros,
        ))
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn rows(&self) -> &[Vec<RowEntry>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[RowEntry] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Largest nonzero count over all rows (the row-sparsity bound L).
    pub fn max_row_nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Iterate all stored entries as `(row, col, value)` in row-major order.
    pub fn iter_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    /// True when no stored value is negative.
    pub fn is_non_negative(&self) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().all(|&(_, v)| v >= 0.0))
    }

    /// Largest entry magnitude; 0 for an all-zero matrix.
    pub fn max_abs(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|row| row.iter().map(|&(_, v)| v.abs()))
            .fold(0.0, f64::max)
    }
}

/// Per-column Euclidean magnitudes plus the smallest nonzero entry
/// magnitude H, both taken after scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    /// `norms[j]` is the Euclidean magnitude of column j.
    pub norms: Vec<f64>,
    /// Smallest nonzero |a_ij|. Equals 1 for a {0,1}-valued matrix.
    pub h_min: f64,
}

/// Divide every entry by the largest magnitude so all values land in
/// [-1, 1]; returns the scaled matrix and the divisor.
///
/// The extremal entries of the result are exactly +/-1.
pub fn scale_entries(matrix: &SparseRowMatrix) -> Result<(SparseRowMatrix, f64)> {
    let scale = matrix.max_abs();
    if scale == 0.0 {
        return Err(Error::DegenerateInput(
            "cannot scale a matrix with no nonzero entries".into(),
        ));
    }
    let rows = matrix
        .rows
        .iter()
        .map(|row| row.iter().map(|&(c, v)| (c, v / scale)).collect())
        .collect();
    Ok((
        SparseRowMatrix {
            n_rows: matrix.n_rows,
            n_cols: matrix.n_cols,
            rows,
        },
        scale,
    ))
}

/// Column magnitudes and H, computed as a map/reduce pass so the shuffle
/// size of the statistics job is observable. The squared norms are summed
/// per column key; H is folded directly over the stored entries.
pub fn column_stats_with_run(
    matrix: &SparseRowMatrix,
    mode: ExecMode,
) -> Result<(ColumnStats, RunStats)> {
    if matrix.nnz() == 0 {
        return Err(Error::DegenerateInput(
            "column statistics of an all-zero matrix".into(),
        ));
    }
    let (reduced, run) = engine::run_job(
        matrix,
        0,
        mode,
        |row, _idx, _rng| {
            row.iter()
                .map(|&(c, v)| Emission::new(c, v * v))
                .collect::<Vec<_>>()
        },
        |_key, values| Some(values.iter().sum()),
    );
    let mut norms = vec![0.0; matrix.n_cols()];
    for (col, sq) in reduced {
        norms[col] = sq.sqrt();
    }
    let h_min = matrix
        .iter_entries()
        .map(|(_, _, v)| v.abs())
        .fold(f64::INFINITY, f64::min);
    Ok((ColumnStats { norms, h_min }, run))
}

/// [`column_stats_with_run`] without the instrumentation.
pub fn column_stats(matrix: &SparseRowMatrix) -> Result<ColumnStats> {
    column_stats_with_run(matrix, ExecMode::Sequential).map(|(stats, _)| stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn identity(n: usize) -> SparseRowMatrix {
        let rows = (0..n).map(|i| vec![(i, 1.0)]).collect();
        SparseRowMatrix::from_rows(n, rows).unwrap()
    }

    #[test]
    fn from_rows_rejects_out_of_bounds() {
        let err = SparseRowMatrix::from_rows(2, vec![vec![(2, 1.0)]]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfBounds { .. }));
    }

    #[test]
    fn from_rows_rejects_unsorted_and_duplicate() {
        let err = SparseRowMatrix::from_rows(3, vec![vec![(1, 1.0), (0, 1.0)]]).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
        let err = SparseRowMatrix::from_rows(3, vec![vec![(1, 1.0), (1, 2.0)]]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEntry { .. }));
    }

    #[test]
    fn from_triples_drops_explicit_zeros() {
        let (m, dropped) =
            SparseRowMatrix::from_triples(2, 2, vec![(0, 0, 1.0), (1, 1, 0.0)]).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn from_triples_rejects_duplicates() {
        let err = SparseRowMatrix::from_triples(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEntry { row: 0, col: 1 }));
    }

    #[test]
    fn scale_divides_by_max_magnitude() {
        let (m, _) = SparseRowMatrix::from_triples(
            1,
            3,
            vec![(0, 0, 2.0), (0, 1, -4.0), (0, 2, 1.0)],
        )
        .unwrap();
        let (scaled, factor) = scale_entries(&m).unwrap();
        assert_eq!(factor, 4.0);
        let values: Vec<f64> = scaled.iter_entries().map(|(_, _, v)| v).collect();
        assert_eq!(values, vec![0.5, -1.0, 0.25]);
    }

    #[test]
    fn scale_is_identity_on_binary_matrix() {
        let m = identity(3);
        let (scaled, factor) = scale_entries(&m).unwrap();
        assert_eq!(factor, 1.0);
        assert_eq!(scaled, m);
    }

    #[test]
    fn scale_is_idempotent() {
        let (m, _) = SparseRowMatrix::from_triples(
            2,
            2,
            vec![(0, 0, 3.0), (0, 1, -7.0), (1, 0, 0.5)],
        )
        .unwrap();
        let (once, _) = scale_entries(&m).unwrap();
        let (twice, second_factor) = scale_entries(&once).unwrap();
        assert_eq!(second_factor, 1.0);
        assert_eq!(once, twice);
    }

    #[test]
    fn scale_rejects_all_zero() {
        let m = SparseRowMatrix::from_rows(2, vec![vec![], vec![]]).unwrap();
        assert!(matches!(
            scale_entries(&m),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn column_stats_identity() {
        let stats = column_stats(&identity(3)).unwrap();
        assert_eq!(stats.norms, vec![1.0, 1.0, 1.0]);
        assert_eq!(stats.h_min, 1.0);
    }

    #[test]
    fn column_stats_single_column() {
        let (m, _) =
            SparseRowMatrix::from_triples(2, 1, vec![(0, 0, 0.5), (1, 0, 0.5)]).unwrap();
        let stats = column_stats(&m).unwrap();
        assert!((stats.norms[0] - 0.5f64.sqrt()).abs() < 1e-10);
        assert_eq!(stats.h_min, 0.5);
    }

    #[test]
    fn column_stats_rejects_empty() {
        let m = SparseRowMatrix::from_rows(3, vec![vec![]; 2]).unwrap();
        assert!(matches!(column_stats(&m), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn column_stats_shuffle_equals_nnz() {
        let m = identity(4);
        let (_, run) = column_stats_with_run(&m, ExecMode::Sequential).unwrap();
        assert_eq!(run.shuffle_size, 4);
        assert_eq!(run.distinct_keys, 4);
    }
}
