//! Dense symmetric linear algebra: the exact Gram oracle, spectral norm,
//! eigendecomposition and singular-value recovery.

use crate::error::{Error, Result};
use crate::matrix::{ColumnStats, SparseRowMatrix};
use crate::pipelines::{MatrixKind, SimilarityMatrix};

/// Largest column count accepted for dense n x n work.
pub const DENSE_GUARD: usize = 10_000;

/// Relative convergence threshold on successive Rayleigh quotients.
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 100_000;
const JACOBI_MAX_SWEEPS: usize = 100;

/// A symmetric n x n matrix stored as its upper triangle and mirrored on
/// read, so the two halves can never disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    // Row-major upper triangle including the diagonal.
    packed: Vec<f64>,
}

impl DenseSymmetric {
    pub fn zeros(n: usize) -> Self {
        DenseSymmetric {
            n,
            packed: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        i * self.n - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.packed[self.index(a, b)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let idx = self.index(a, b);
        self.packed[idx] = value;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, delta: f64) {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        let idx = self.index(a, b);
        self.packed[idx] += delta;
    }

    /// Entrywise difference `self - other`.
    pub fn sub(&self, other: &DenseSymmetric) -> Result<DenseSymmetric> {
        if self.n != other.n {
            return Err(Error::Contract(format!(
                "dimension mismatch: {} vs {}",
                self.n, other.n
            )));
        }
        let packed = self
            .packed
            .iter()
            .zip(&other.packed)
            .map(|(a, b)| a - b)
            .collect();
        Ok(DenseSymmetric { n: self.n, packed })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.packed.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                sum += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        sum.sqrt()
    }

    /// y = M x without unpacking the full matrix.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        y.fill(0.0);
        let mut idx = 0;
        for i in 0..self.n {
            // Diagonal term.
            y[i] += self.packed[idx] * x[i];
            idx += 1;
            for j in (i + 1)..self.n {
                let v = self.packed[idx];
                y[i] += v * x[j];
                y[j] += v * x[i];
                idx += 1;
            }
        }
    }

    /// Upper-triangle entries as `(i, j, value)`, diagonal included.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j, self.get(i, j))))
    }
}

/// Eigendecomposition of a symmetric matrix.
///
/// Eigenvalues are sorted descending; `vectors[k]` is the unit eigenvector
/// for `values[k]` and the set is orthonormal.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl EigenResult {
    /// max_k ||M v_k - lambda_k v_k||_2, for residual checks.
    pub fn max_residual(&self, matrix: &DenseSymmetric) -> f64 {
        let n = matrix.n();
        let mut worst = 0.0f64;
        let mut y = vec![0.0; n];
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            matrix.matvec(v, &mut y);
            let res: f64 = y
                .iter()
                .zip(v)
                .map(|(yi, vi)| (yi - lambda * vi).powi(2))
                .sum();
            worst = worst.max(res.sqrt());
        }
        worst
    }

    /// max |(V^T V - I)_{ij}|, for orthonormality checks.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (a, va) in self.vectors.iter().enumerate() {
            for (b, vb) in self.vectors.iter().enumerate() {
                let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Singular values recovered from a (possibly noisy) Gram estimate.
#[derive(Debug, Clone)]
pub struct SingularRecovery {
    /// sqrt of the clamped eigenvalues, descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors, matching `sigma` order.
    pub vectors: Vec<Vec<f64>>,
    /// How many eigenvalues were negative (sampling noise) and clamped.
    pub clamped_negative: usize,
}

fn check_guard(n: usize) -> Result<()> {
    if n > DENSE_GUARD {
        return Err(Error::Capacity { n, guard: DENSE_GUARD });
    }
    Ok(())
}

/// Brute-force Gram matrix: `[G]_{jk} = sum_i a_ij a_ik`, accumulated
/// row by row in 64-bit. Independent of the map/reduce path.
pub fn exact_gram(matrix: &SparseRowMatrix) -> Result<DenseSymmetric> {
    check_guard(matrix.n_cols())?;
    let mut gram = DenseSymmetric::zeros(matrix.n_cols());
    for row in matrix.rows() {
        for (a, &(j, vj)) in row.iter().enumerate() {
            for &(k, vk) in &row[a..] {
                gram.add_to(j, k, vj * vk);
            }
        }
    }
    Ok(gram)
}

/// Brute-force cosine matrix derived entirely from [`exact_gram`]:
/// `cos(i, j) = G_ij / sqrt(G_ii G_jj)`, with empty columns giving 0.
pub fn exact_cosine(matrix: &SparseRowMatrix) -> Result<DenseSymmetric> {
    let gram = exact_gram(matrix)?;
    let n = gram.n();
    let mut cos = DenseSymmetric::zeros(n);
    for i in 0..n {
        for j in i..n {
            let denom = (gram.get(i, i) * gram.get(j, j)).sqrt();
            if denom > 0.0 {
                cos.set(i, j, gram.get(i, j) / denom);
            }
        }
    }
    Ok(cos)
}

/// Undo the cosine normalization: `out_ij = ||c_i|| b_ij ||c_j||`.
pub fn unnormalize(similarity: &SimilarityMatrix, stats: &ColumnStats) -> Result<DenseSymmetric> {
    if similarity.kind() != MatrixKind::Cosine {
        return Err(Error::Contract(
            "unnormalize expects a cosine-kind similarity matrix".into(),
        ));
    }
    let n = similarity.n();
    if stats.norms.len() != n {
        return Err(Error::Contract(format!(
            "column stats cover {} columns, matrix has {n}",
            stats.norms.len()
        )));
    }
    let mut out = DenseSymmetric::zeros(n);
    for i in 0..n {
        for j in i..n {
            out.set(i, j, stats.norms[i] * similarity.get(i, j) * stats.norms[j]);
        }
    }
    Ok(out)
}

/// One power-iteration run on `M + shift I` from a fixed start vector.
/// Returns the converged Rayleigh quotient of the shifted matrix.
fn power_iterate(
    matrix: &DenseSymmetric,
    shift: f64,
    start: &[f64],
) -> std::result::Result<f64, (f64, usize)> {
    let n = matrix.n();
    let mut v = start.to_vec();
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    let mut y = vec![0.0; n];
    let mut rayleigh = f64::NAN;
    for iter in 0..POWER_MAX_ITERS {
        matrix.matvec(&v, &mut y);
        for (yi, vi) in y.iter_mut().zip(&v) {
            *yi += shift * vi;
        }
        let next: f64 = v.iter().zip(&y).map(|(a, b)| a * b).sum();
        let y_norm: f64 = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        if y_norm < 1e-300 {
            // The shifted matrix annihilates the iterate: eigenvalue 0.
            return Ok(0.0);
        }
        if iter > 0 {
            let rel = (next - rayleigh).abs() / next.abs().max(1e-300);
            if rel < POWER_TOL {
                return Ok(next);
            }
        }
        rayleigh = next;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi / y_norm;
        }
    }
    Err((rayleigh, POWER_MAX_ITERS))
}

fn power_extreme(matrix: &DenseSymmetric, shift: f64) -> Result<f64> {
    let n = matrix.n();
    let ones = vec![1.0; n];
    match power_iterate(matrix, shift, &ones) {
        Ok(r) => Ok(r),
        Err(_) => {
            // Deterministic perturbation retry for starts that are nearly
            // orthogonal to the dominant eigenvector.
            let ramp: Vec<f64> = (0..n).map(|i| 1.0 + 0.25 * ((i % 7) as f64 + 1.0)).collect();
            power_iterate(matrix, shift, &ramp).map_err(|(last, iters)| Error::NonConvergence {
                what: format!("power iteration (last Rayleigh quotient {last})"),
                iterations: iters,
            })
        }
    }
}

/// Spectral norm of a symmetric matrix: max |eigenvalue|.
///
/// Two shifted power-iteration runs bracket the spectrum: on `M + sI` the
/// dominant eigenvalue is `lambda_max + s`, on `M - sI` it is
/// `lambda_min - s`, with `s` a row-sum bound on the spectral radius so
/// both shifted spectra are single-signed.
pub fn spectral_norm(matrix: &DenseSymmetric) -> Result<f64> {
    let n = matrix.n();
    if n == 0 {
        return Ok(0.0);
    }
    // Gershgorin-style bound: max row sum of absolute values.
    let mut row_sums = vec![0.0f64; n];
    for (i, j, v) in matrix.iter_upper() {
        row_sums[i] += v.abs();
        if i != j {
            row_sums[j] += v.abs();
        }
    }
    let shift = row_sums.iter().fold(0.0f64, |a, &b| a.max(b));
    if shift == 0.0 {
        return Ok(0.0);
    }
    let lambda_max = power_extreme(matrix, shift)? - shift;
    let lambda_min = power_extreme(matrix, -shift)? + shift;
    Ok(lambda_max.abs().max(lambda_min.abs()))
}

/// Eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps rotate every off-diagonal pair until the off-diagonal Frobenius
/// mass drops below `1e-12 ||M||_F`.
pub fn symmetric_eig(matrix: &DenseSymmetric) -> Result<EigenResult> {
    let n = matrix.n();
    check_guard(n)?;
    if n == 0 {
        return Ok(EigenResult {
            values: vec![],
            vectors: vec![],
        });
    }

    // Full working copy; a[i*n + j].
    let mut a = vec![0.0; n * n];
    for (i, j, v) in matrix.iter_upper() {
        a[i * n + j] = v;
        a[j * n + i] = v;
    }
    // Eigenvector accumulator; vec[r*n + c] = component r of vector c.
    let mut vecs = vec![0.0; n * n];
    for i in 0..n {
        vecs[i * n + i] = 1.0;
    }

    let frob = matrix.frobenius_norm();
    let target = 1e-12 * frob;

    let off_mass = |a: &[f64]| -> f64 {
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        sum.sqrt()
    };

    let mut converged = frob == 0.0 || off_mass(&a) <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NonConvergence {
                what: "Jacobi eigendecomposition".into(),
                iterations: sweeps,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j];
                    let aqj = a[q * n + j];
                    a[p * n + j] = c * apj - s * aqj;
                    a[q * n + j] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = vecs[i * n + p];
                    let viq = vecs[i * n + q];
                    vecs[i * n + p] = c * vip - s * viq;
                    vecs[i * n + q] = s * vip + c * viq;
                }
            }
        }
        sweeps += 1;
        converged = off_mass(&a) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].partial_cmp(&a[x * n + x]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| a[k * n + k]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&k| (0..n).map(|r| vecs[r * n + k]).collect())
        .collect();
    Ok(EigenResult { values, vectors })
}

/// Singular values and right singular vectors from a Gram estimate:
/// `sigma_i = sqrt(max(lambda_i, 0))`. Negative eigenvalues are sampling
/// noise; they clamp to zero and are counted.
pub fn recover_singular_values(gram: &DenseSymmetric) -> Result<SingularRecovery> {
    let eig = symmetric_eig(gram)?;
    let clamped_negative = eig.values.iter().filter(|&&l| l < 0.0).count();
    let sigma = eig
        .values
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    Ok(SingularRecovery {
        sigma,
        vectors: eig.vectors,
        clamped_negative,
    })
}

/// `||estimate - truth||_2 / ||truth||_2`.
pub fn relative_spectral_error(
    estimate: &DenseSymmetric,
    truth: &DenseSymmetric,
) -> Result<f64> {
    let diff = estimate.sub(truth)?;
    let denom = spectral_norm(truth)?;
    if denom == 0.0 {
        return Err(Error::DegenerateInput(
            "relative error against a zero-norm truth matrix".into(),
        ));
    }
    Ok(spectral_norm(&diff)? / denom)
}
