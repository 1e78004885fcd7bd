//! Test-side oracles, independent of the library's computation paths.
#![allow(dead_code)] // each test binary uses a different subset

use dimsum_core::matrix::SparseRowMatrix;

/// Densify a sparse matrix into row-major nested vectors.
pub fn to_dense(matrix: &SparseRowMatrix) -> Vec<Vec<f64>> {
    let mut dense = vec![vec![0.0; matrix.n_cols()]; matrix.n_rows()];
    for (r, c, v) in matrix.iter_entries() {
        dense[r][c] = v;
    }
    dense
}

/// Brute-force Gram matrix over the dense copy: a full n x n array built
/// by the definition, with no sparsity shortcuts.
pub fn dense_gram(matrix: &SparseRowMatrix) -> Vec<Vec<f64>> {
    let dense = to_dense(matrix);
    let n = matrix.n_cols();
    let mut gram = vec![vec![0.0; n]; n];
    for row in &dense {
        for j in 0..n {
            for k in 0..n {
                gram[j][k] += row[j] * row[k];
            }
        }
    }
    gram
}

/// Column Euclidean norms straight from the dense copy.
pub fn dense_column_norms(matrix: &SparseRowMatrix) -> Vec<f64> {
    let gram = dense_gram(matrix);
    (0..matrix.n_cols()).map(|j| gram[j][j].sqrt()).collect()
}

/// Cosine similarity of two columns from the dense Gram; 0 for empty
/// columns.
pub fn dense_cosine(gram: &[Vec<f64>], i: usize, j: usize) -> f64 {
    let denom = (gram[i][i] * gram[j][j]).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        gram[i][j] / denom
    }
}

/// Eigenvalues of a symmetric matrix by classical Jacobi (largest
/// off-diagonal pivot each rotation), an implementation deliberately
/// different from the library's cyclic sweep. Returns them descending.
pub fn classical_jacobi_eigenvalues(input: &[Vec<f64>]) -> Vec<f64> {
    let n = input.len();
    let mut a: Vec<Vec<f64>> = input.to_vec();
    let scale = a
        .iter()
        .flat_map(|row| row.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return vec![0.0; n];
    }
    let tol = 1e-14 * scale;
    for _rotation in 0..(40 * n * n) {
        // Find the largest off-diagonal element.
        let (mut p, mut q, mut biggest) = (0, 1, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                if a[i][j].abs() > biggest {
                    biggest = a[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if biggest <= tol {
            break;
        }
        let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        let t = if theta >= 0.0 {
            1.0 / (theta + (1.0 + theta * theta).sqrt())
        } else {
            -1.0 / (-theta + (1.0 + theta * theta).sqrt())
        };
        let c = 1.0 / (1.0 + t * t).sqrt();
        let s = t * c;
        for i in 0..n {
            let aip = a[i][p];
            let aiq = a[i][q];
            a[i][p] = c * aip - s * aiq;
            a[i][q] = s * aip + c * aiq;
        }
        for j in 0..n {
            let apj = a[p][j];
            let aqj = a[q][j];
            a[p][j] = c * apj - s * aqj;
            a[q][j] = s * apj + c * aqj;
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    values
}

/// Mean and population variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}
