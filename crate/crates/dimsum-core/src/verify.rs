//! Seeded statistical suites checking the sampled estimator's quantitative
//! behavior: spectral-error success rate, per-entry moment bounds, tail
//! bounds for highly similar pairs, shuffle-size and reduce-key load, and
//! the worst-case output-size construction.
//!
//! Every suite is deterministic given its configuration and seed, and its
//! report states the measured value, the bound and the slack numerically.
//! Suites that rely on non-negative entries refuse matrices outside that
//! regime.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::ExecMode;
use crate::error::{Error, Result};
use crate::generate::{generate_lowerbound_dataset, generate_random_sparse, ValueDist};
use crate::matrix::{column_stats, ColumnStats, SparseRowMatrix};
use crate::pipelines::{
    gamma_for_epsilon, run_naive, run_sampled, PipelineOptions, SamplingConfig,
};
use crate::rng::derive_seed;
use crate::spectral::{exact_cosine, exact_gram, spectral_norm, unnormalize, DenseSymmetric};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Outcome of one suite run.
///
/// `statistic_mean` / `statistic_var` summarize the suite's headline
/// measurement and `bound_value` the threshold it was compared against;
/// `details` spells out every number entering the pass rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub suite: String,
    pub trials: u64,
    pub successes: u64,
    pub statistic_mean: f64,
    pub statistic_var: f64,
    pub bound_value: f64,
    pub pass: bool,
    /// Degenerate configurations (e.g. gamma = 0 sweeps) skip with notice
    /// instead of failing.
    pub skipped: bool,
    pub seeds: Vec<u64>,
    pub details: BTreeMap<String, f64>,
}

impl TrialReport {
    fn new(suite: &str, trials: u64) -> Self {
        TrialReport {
            suite: suite.to_string(),
            trials,
            successes: 0,
            statistic_mean: 0.0,
            statistic_var: 0.0,
            bound_value: 0.0,
            pass: false,
            skipped: false,
            seeds: Vec::new(),
            details: BTreeMap::new(),
        }
    }
}

/// Outcome of the tail-bound suite for one column pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    pub col_i: usize,
    pub col_j: usize,
    pub alpha: f64,
    pub delta: f64,
    pub gamma: f64,
    /// Whether the lean pipeline produced the estimates.
    pub lean: bool,
    pub trials: u64,
    pub oracle_cosine: f64,
    pub empirical_upper_tail: f64,
    pub empirical_lower_tail: f64,
    pub chernoff_upper: f64,
    pub chernoff_lower: f64,
    pub pass: bool,
    pub seeds: Vec<u64>,
}

fn sampling_options() -> PipelineOptions {
    // Suites measure the pure estimator: trials parallelize, each inner
    // pipeline runs sequentially, and the diagonal is left as sampled.
    PipelineOptions {
        exec: ExecMode::Sequential,
        exact_diagonal: false,
    }
}

/// Run `f` once per trial with a derived seed, in trial order.
fn map_trials<T, F>(trials: u64, master_seed: u64, exec: ExecMode, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync,
{
    let call = |t: u64| f(t, derive_seed(master_seed, t));
    match exec {
        ExecMode::Sequential => (0..trials).map(call).collect(),
        ExecMode::Parallel => {
            #[cfg(feature = "parallel")]
            {
                (0..trials).into_par_iter().map(call).collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                (0..trials).map(call).collect()
            }
        }
    }
}

fn trial_seeds(trials: u64, master_seed: u64) -> Vec<u64> {
    (0..trials).map(|t| derive_seed(master_seed, t)).collect()
}

fn require_scaled(matrix: &SparseRowMatrix) -> Result<()> {
    if matrix.max_abs() > 1.0 {
        return Err(Error::Regime(
            "matrix must be scaled so every |value| <= 1".into(),
        ));
    }
    Ok(())
}

fn require_non_negative(matrix: &SparseRowMatrix) -> Result<()> {
    if !matrix.is_non_negative() {
        return Err(Error::Regime(
            "this suite requires entries in [0, 1]; negative entries are out of regime".into(),
        ));
    }
    Ok(())
}

fn mean_and_var(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

/// Success-probability check for the relative spectral-error guarantee.
///
/// Runs the sampled pipeline `trials` times at `gamma = c n / epsilon^2`;
/// a trial succeeds when `||DBD - G||_2 / ||G||_2 <= epsilon` against the
/// exact Gram oracle. The claimed success probability is 1/2, tested with
/// a one-sided three-sigma binomial slack.
pub fn check_success_probability(
    matrix: &SparseRowMatrix,
    epsilon: f64,
    c: f64,
    trials: u64,
    seed: u64,
    exec: ExecMode,
) -> Result<TrialReport> {
    require_scaled(matrix)?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let gamma = gamma_for_epsilon(matrix.n_cols(), epsilon, c);
    if gamma < 1.0 {
        return Err(Error::Parameter(format!(
            "gamma = c n / epsilon^2 = {gamma} must be >= 1"
        )));
    }
    let cfg = SamplingConfig::dimsum(gamma)?;
    let stats = column_stats(matrix)?;
    let truth = exact_gram(matrix)?;
    let truth_norm = spectral_norm(&truth)?;
    if truth_norm == 0.0 {
        return Err(Error::DegenerateInput("zero Gram matrix".into()));
    }

    let errors: Vec<f64> = map_trials(trials, seed, exec, |_t, trial_seed| {
        let (sim, _) = run_sampled(matrix, &stats, &cfg, trial_seed, &sampling_options());
        let estimate = unnormalize(&sim, &stats).expect("cosine output");
        let diff = estimate.sub(&truth).expect("same dimension");
        spectral_norm(&diff).expect("power iteration") / truth_norm
    });

    let successes = errors.iter().filter(|&&e| e <= epsilon).count() as u64;
    let required_rate = 0.5 - 3.0 * (0.25 / trials as f64).sqrt();
    let rate = successes as f64 / trials as f64;
    let (mean, var) = mean_and_var(&errors);

    let mut report = TrialReport::new("success", trials);
    report.successes = successes;
    report.statistic_mean = mean;
    report.statistic_var = var;
    report.bound_value = required_rate;
    report.pass = rate >= required_rate;
    report.seeds = trial_seeds(trials, seed);
    report.details.insert("epsilon".into(), epsilon);
    report.details.insert("c".into(), c);
    report.details.insert("gamma".into(), gamma);
    report.details.insert("success_rate".into(), rate);
    report.details.insert("required_rate".into(), required_rate);
    report.details.insert("truth_spectral_norm".into(), truth_norm);
    Ok(report)
}

/// Per-entry central-moment check: empirical `Var[b_ij] <= slack / gamma`
/// and fourth central moment `<= 2 slack / gamma^2`, with
/// `slack = 1 + 6 / sqrt(trials)`. Requires entries in [0, 1] and
/// `gamma >= 1`.
///
/// Measures the pipeline's default output, i.e. with the exact unit
/// diagonal. The sampled diagonal estimator can exceed the stated
/// fourth-moment bound (its coin count equals `gamma * cos = gamma`, the
/// worst case), and the produced matrix never ships it anyway.
pub fn check_moment_bounds(
    matrix: &SparseRowMatrix,
    gamma: f64,
    trials: u64,
    seed: u64,
    exec: ExecMode,
) -> Result<TrialReport> {
    require_scaled(matrix)?;
    require_non_negative(matrix)?;
    if gamma < 1.0 {
        return Err(Error::Parameter(format!("gamma {gamma} must be >= 1")));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let cfg = SamplingConfig::dimsum(gamma)?;
    let stats = column_stats(matrix)?;
    let n = matrix.n_cols();
    let entries = n * (n + 1) / 2;

    let options = PipelineOptions {
        exec: ExecMode::Sequential,
        exact_diagonal: true,
    };
    let per_trial: Vec<Vec<f64>> = map_trials(trials, seed, exec, |_t, trial_seed| {
        let (sim, _) = run_sampled(matrix, &stats, &cfg, trial_seed, &options);
        sim.as_dense().iter_upper().map(|(_, _, v)| v).collect()
    });

    let tf = trials as f64;
    let slack = 1.0 + 6.0 / tf.sqrt();
    let var_bound = slack / gamma;
    let fourth_bound = 2.0 * slack / (gamma * gamma);

    let mut worst_var = 0.0f64;
    let mut worst_fourth = 0.0f64;
    let mut violations = 0u64;
    for e in 0..entries {
        let mean = per_trial.iter().map(|row| row[e]).sum::<f64>() / tf;
        let mut m2 = 0.0;
        let mut m4 = 0.0;
        for row in &per_trial {
            let d = row[e] - mean;
            let d2 = d * d;
            m2 += d2;
            m4 += d2 * d2;
        }
        m2 /= tf;
        m4 /= tf;
        worst_var = worst_var.max(m2);
        worst_fourth = worst_fourth.max(m4);
        if m2 > var_bound || m4 > fourth_bound {
            violations += 1;
        }
    }

    let mut report = TrialReport::new("moments", trials);
    report.successes = entries as u64 - violations;
    report.statistic_mean = worst_var;
    report.statistic_var = worst_fourth;
    report.bound_value = var_bound;
    report.pass = violations == 0;
    report.seeds = trial_seeds(trials, seed);
    report.details.insert("gamma".into(), gamma);
    report.details.insert("slack".into(), slack);
    report.details.insert("entry_count".into(), entries as f64);
    report.details.insert("variance_bound".into(), var_bound);
    report.details.insert("fourth_moment_bound".into(), fourth_bound);
    report.details.insert("worst_variance".into(), worst_var);
    report.details.insert("worst_fourth_moment".into(), worst_fourth);
    report.details.insert("violating_entries".into(), violations as f64);
    Ok(report)
}

/// Multiplicative tail check for one highly similar column pair.
///
/// With `epsilon` defaulting to the pair's oracle cosine, runs the
/// sampled pipeline at `gamma = alpha / epsilon` and compares the
/// frequency of `||c_i|| ||c_j|| b_ij` leaving the `(1 +/- delta)` band
/// around the exact dot product with the two multiplicative Chernoff
/// bounds (plus three binomial standard errors). The tail claim does not
/// need pairwise-independent entries, so it can also be checked against
/// the lean variant via `lean`.
#[allow(clippy::too_many_arguments)]
pub fn check_chernoff_tails(
    matrix: &SparseRowMatrix,
    col_i: usize,
    col_j: usize,
    alpha: f64,
    delta: f64,
    epsilon: Option<f64>,
    lean: bool,
    trials: u64,
    seed: u64,
    exec: ExecMode,
) -> Result<TailCheck> {
    require_scaled(matrix)?;
    require_non_negative(matrix)?;
    if col_i >= matrix.n_cols() || col_j >= matrix.n_cols() {
        return Err(Error::Parameter("column pair out of range".into()));
    }
    if alpha <= 0.0 || delta < 0.0 {
        return Err(Error::Parameter("alpha must be > 0 and delta >= 0".into()));
    }
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }

    let cosine = exact_cosine(matrix)?.get(col_i, col_j);
    let epsilon = epsilon.unwrap_or(cosine);
    if epsilon <= 0.0 || cosine < epsilon {
        return Err(Error::Parameter(format!(
            "pair ({col_i}, {col_j}) has oracle cosine {cosine}, below the required threshold {epsilon}"
        )));
    }

    let gamma = alpha / epsilon;
    let cfg = if lean {
        SamplingConfig::lean(gamma)?
    } else {
        SamplingConfig::dimsum(gamma)?
    };
    let stats = column_stats(matrix)?;
    let truth = exact_gram(matrix)?.get(col_i, col_j);
    let norm_product = stats.norms[col_i] * stats.norms[col_j];

    let hits: Vec<(bool, bool)> = map_trials(trials, seed, exec, |_t, trial_seed| {
        let (sim, _) = run_sampled(matrix, &stats, &cfg, trial_seed, &sampling_options());
        let estimate = norm_product * sim.get(col_i, col_j);
        (
            estimate > (1.0 + delta) * truth,
            estimate < (1.0 - delta) * truth,
        )
    });

    let tf = trials as f64;
    let upper_tail = hits.iter().filter(|h| h.0).count() as f64 / tf;
    let lower_tail = hits.iter().filter(|h| h.1).count() as f64 / tf;

    let chernoff_upper =
        ((delta.exp()) / (1.0 + delta).powf(1.0 + delta)).powf(alpha).min(1.0);
    let chernoff_lower = (-alpha * delta * delta / 2.0).exp().min(1.0);
    let se = |p: f64| (p * (1.0 - p) / tf).sqrt();
    let pass = upper_tail <= chernoff_upper + 3.0 * se(chernoff_upper)
        && lower_tail <= chernoff_lower + 3.0 * se(chernoff_lower);

    Ok(TailCheck {
        col_i,
        col_j,
        alpha,
        delta,
        gamma,
        lean,
        trials,
        oracle_cosine: cosine,
        empirical_upper_tail: upper_tail,
        empirical_lower_tail: lower_tail,
        chernoff_upper,
        chernoff_lower,
        pass,
        seeds: trial_seeds(trials, seed),
    })
}

/// Exact expected shuffle size of the sampled mapper:
/// `sum_{j <= k} #(j, k) min(1, gamma / (||c_j|| ||c_k||))`, computed by a
/// deterministic pass, plus its exact variance (sum of independent
/// Bernoulli variances).
pub fn expected_shuffle_size(
    matrix: &SparseRowMatrix,
    stats: &ColumnStats,
    gamma: f64,
) -> Result<(f64, f64)> {
    let cooccur = pair_cooccurrence(matrix)?;
    let mut expectation = 0.0;
    let mut variance = 0.0;
    for (j, k, count) in cooccur.iter_upper() {
        if count == 0.0 {
            continue;
        }
        let p = (gamma / (stats.norms[j] * stats.norms[k])).min(1.0);
        expectation += count * p;
        variance += count * p * (1.0 - p);
    }
    Ok((expectation, variance))
}

/// `#(j, k)`: in how many rows columns j and k are both nonzero.
fn pair_cooccurrence(matrix: &SparseRowMatrix) -> Result<DenseSymmetric> {
    let mut counts = DenseSymmetric::zeros(matrix.n_cols());
    if matrix.n_cols() > crate::spectral::DENSE_GUARD {
        return Err(Error::Capacity {
            n: matrix.n_cols(),
            guard: crate::spectral::DENSE_GUARD,
        });
    }
    for row in matrix.rows() {
        for (a, &(j, _)) in row.iter().enumerate() {
            for &(k, _) in &row[a..] {
                counts.add_to(j, k, 1.0);
            }
        }
    }
    Ok(counts)
}

/// Shuffle-size check: the measured mean over trials must sit within four
/// standard deviations (of the mean) of the exact expectation, and the
/// expectation itself must respect `n L gamma / H^2`.
pub fn check_shuffle_size(
    matrix: &SparseRowMatrix,
    gamma: f64,
    trials: u64,
    seed: u64,
    exec: ExecMode,
) -> Result<TrialReport> {
    require_scaled(matrix)?;
    require_non_negative(matrix)?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let cfg = SamplingConfig::dimsum(gamma)?;
    let stats = column_stats(matrix)?;
    let (expectation, variance) = expected_shuffle_size(matrix, &stats, gamma)?;
    let h = stats.h_min;
    let upper_bound =
        matrix.n_cols() as f64 * matrix.max_row_nnz() as f64 * gamma / (h * h);

    let measured: Vec<f64> = map_trials(trials, seed, exec, |_t, trial_seed| {
        let (_, run) = run_sampled(matrix, &stats, &cfg, trial_seed, &sampling_options());
        run.shuffle_size as f64
    });
    let (mean, var) = mean_and_var(&measured);
    let tolerance = 4.0 * (variance / trials as f64).sqrt();
    let within = (mean - expectation).abs() <= tolerance;
    let bounded = expectation <= upper_bound;

    let mut report = TrialReport::new("shuffle", trials);
    report.successes = if within { trials } else { 0 };
    report.statistic_mean = mean;
    report.statistic_var = var;
    report.bound_value = upper_bound;
    report.pass = within && bounded;
    report.seeds = trial_seeds(trials, seed);
    report.details.insert("gamma".into(), gamma);
    report.details.insert("exact_expectation".into(), expectation);
    report.details.insert("exact_variance".into(), variance);
    report.details.insert("mean_tolerance_4sd".into(), tolerance);
    report.details.insert("h_min".into(), h);
    report.details.insert("row_sparsity".into(), matrix.max_row_nnz() as f64);
    report.details.insert("upper_bound_nLgamma_h2".into(), upper_bound);
    report.details.insert("mean_within_4sd".into(), within as u64 as f64);
    report.details.insert("expectation_bounded".into(), bounded as u64 as f64);
    Ok(report)
}

/// Dimension-independence sweep: shuffle size of the sampled mapper must
/// not scale with the row count, while the exhaustive mapper's does.
///
/// Fits `log(shuffle)` against `log(m)`: pass when the sampled slope is
/// within 0.1 of 0 and the exhaustive slope within 0.1 of 1.
#[allow(clippy::too_many_arguments)]
pub fn check_dimension_independence(
    n_cols: usize,
    row_nnz: usize,
    gamma: f64,
    m_values: &[usize],
    trials_per_m: u64,
    seed: u64,
    exec: ExecMode,
) -> Result<TrialReport> {
    if m_values.len() < 2 || m_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Parameter(
            "need at least two strictly increasing row counts".into(),
        ));
    }
    if trials_per_m == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let mut report = TrialReport::new("dimfree", trials_per_m * m_values.len() as u64);
    if gamma == 0.0 {
        // Zero oversampling shuffles nothing at every m; the slope is
        // undefined, so the sweep is skipped rather than judged.
        report.pass = true;
        report.skipped = true;
        report.details.insert("gamma".into(), gamma);
        return Ok(report);
    }
    let cfg = SamplingConfig::dimsum(gamma)?;

    let mut sampled_means = Vec::with_capacity(m_values.len());
    let mut exhaustive_counts = Vec::with_capacity(m_values.len());
    let mut seeds = Vec::new();
    for (idx, &m) in m_values.iter().enumerate() {
        let dataset_seed = derive_seed(seed, 0xDA7A_0000 + idx as u64);
        let matrix = generate_random_sparse(m, n_cols, row_nnz, ValueDist::Binary, dataset_seed)?;
        let stats = column_stats(&matrix)?;
        let sweep_seed = derive_seed(seed, 0x5EED_0000 + idx as u64);
        let measured: Vec<f64> = map_trials(trials_per_m, sweep_seed, exec, |_t, trial_seed| {
            let (_, run) = run_sampled(&matrix, &stats, &cfg, trial_seed, &sampling_options());
            run.shuffle_size as f64
        });
        seeds.extend(trial_seeds(trials_per_m, sweep_seed));
        let (mean, _) = mean_and_var(&measured);
        sampled_means.push(mean);
        let (_, naive_run) = run_naive(&matrix, ExecMode::Sequential);
        exhaustive_counts.push(naive_run.shuffle_size as f64);
    }

    if sampled_means.contains(&0.0) {
        report.pass = true;
        report.skipped = true;
        report.details.insert("gamma".into(), gamma);
        report
            .details
            .insert("zero_shuffle_observed".into(), 1.0);
        return Ok(report);
    }

    let log_m: Vec<f64> = m_values.iter().map(|&m| (m as f64).ln()).collect();
    let sampled_slope = regression_slope(&log_m, &sampled_means);
    let exhaustive_slope = regression_slope(&log_m, &exhaustive_counts);
    let spread = relative_spread(&sampled_means);

    let pass = sampled_slope.abs() <= 0.1 && (exhaustive_slope - 1.0).abs() <= 0.1;

    report.successes = if pass { report.trials } else { 0 };
    report.statistic_mean = sampled_slope;
    report.statistic_var = exhaustive_slope;
    report.bound_value = 0.1;
    report.pass = pass;
    report.seeds = seeds;
    report.details.insert("gamma".into(), gamma);
    report.details.insert("sampled_slope".into(), sampled_slope);
    report.details.insert("exhaustive_slope".into(), exhaustive_slope);
    report.details.insert("sampled_relative_spread".into(), spread);
    for (i, &m) in m_values.iter().enumerate() {
        report
            .details
            .insert(format!("sampled_mean_shuffle_m{m}"), sampled_means[i]);
        report
            .details
            .insert(format!("exhaustive_shuffle_m{m}"), exhaustive_counts[i]);
    }
    Ok(report)
}

fn regression_slope(xs: &[f64], raw_ys: &[f64]) -> f64 {
    let ys: Vec<f64> = raw_ys.iter().map(|&y| y.ln()).collect();
    let n = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let var: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    cov / var
}

fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().fold(f64::MIN, |a, &b| a.max(b));
    let min = values.iter().fold(f64::MAX, |a, &b| a.min(b));
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        0.0
    } else {
        (max - min) / mean
    }
}

/// Reduce-key load check: the mean group cardinality (averaged over keys,
/// then over trials) must not exceed `gamma / H^2`.
pub fn check_reduce_key(
    matrix: &SparseRowMatrix,
    gamma: f64,
    trials: u64,
    seed: u64,
    exec: ExecMode,
) -> Result<TrialReport> {
    require_scaled(matrix)?;
    require_non_negative(matrix)?;
    if trials == 0 {
        return Err(Error::Parameter("trials must be positive".into()));
    }
    let cfg = SamplingConfig::dimsum(gamma)?;
    let stats = column_stats(matrix)?;
    let h = stats.h_min;
    let bound = gamma / (h * h);

    let measured: Vec<(f64, u64)> = map_trials(trials, seed, exec, |_t, trial_seed| {
        let (_, run) = run_sampled(matrix, &stats, &cfg, trial_seed, &sampling_options());
        (run.reduce_key_mean, run.reduce_key_max)
    });
    let means: Vec<f64> = measured.iter().map(|m| m.0).collect();
    let (mean_cardinality, var) = mean_and_var(&means);
    let max_cardinality = measured.iter().map(|m| m.1).max().unwrap_or(0);
    let pass = mean_cardinality <= bound;

    let mut report = TrialReport::new("reducekey", trials);
    report.successes = measured.iter().filter(|m| m.0 <= bound).count() as u64;
    report.statistic_mean = mean_cardinality;
    report.statistic_var = var;
    report.bound_value = bound;
    report.pass = pass;
    report.seeds = trial_seeds(trials, seed);
    report.details.insert("gamma".into(), gamma);
    report.details.insert("h_min".into(), h);
    report.details.insert("bound_gamma_h2".into(), bound);
    report
        .details
        .insert("max_reduce_key_over_trials".into(), max_cardinality as f64);
    Ok(report)
}

/// Output-size lower bound: the duplicated-group dataset must contain
/// exactly `(n / L) * C(L, 2)` off-diagonal unit-cosine pairs, and a
/// saturated sampled run must output at least that many near-unit keys.
pub fn check_lowerbound_output(n_cols: usize, group_size: usize) -> Result<TrialReport> {
    let matrix = generate_lowerbound_dataset(n_cols, group_size)?;
    let cosine = exact_cosine(&matrix)?;
    let mut unit_pairs = 0u64;
    for (i, j, v) in cosine.iter_upper() {
        if i != j && (v - 1.0).abs() <= 1e-12 {
            unit_pairs += 1;
        }
    }
    let groups = (n_cols / group_size) as u64;
    let expected = groups * (group_size as u64 * (group_size as u64 - 1) / 2);

    // A saturated run must at least output every unit pair.
    let stats = column_stats(&matrix)?;
    let max_norm_sq = stats.norms.iter().fold(0.0f64, |a, &b| a.max(b)).powi(2);
    let cfg = SamplingConfig::dimsum(max_norm_sq + 1.0)?;
    let (sim, _) = run_sampled(&matrix, &stats, &cfg, 0, &sampling_options());
    let mut output_unit_pairs = 0u64;
    for (i, j, v) in sim.as_dense().iter_upper() {
        if i != j && v >= 1.0 - 1e-9 {
            output_unit_pairs += 1;
        }
    }

    let pass = unit_pairs == expected && output_unit_pairs >= expected;
    let mut report = TrialReport::new("lowerbound", 1);
    report.successes = pass as u64;
    report.statistic_mean = unit_pairs as f64;
    report.statistic_var = output_unit_pairs as f64;
    report.bound_value = expected as f64;
    report.pass = pass;
    report.details.insert("n".into(), n_cols as f64);
    report.details.insert("group_size".into(), group_size as f64);
    report.details.insert("expected_unit_pairs".into(), expected as f64);
    report.details.insert("oracle_unit_pairs".into(), unit_pairs as f64);
    report
        .details
        .insert("saturated_output_unit_pairs".into(), output_unit_pairs as f64);
    Ok(report)
}

/// Per-entry `(mean, standard error)` pairs in upper-triangle order,
/// alongside the matching oracle cosines.
pub type EntryMeans = (Vec<(f64, f64)>, Vec<f64>);

/// Monte Carlo mean of every entry of the sampled estimate, for
/// unbiasedness checks.
pub fn entry_means(
    matrix: &SparseRowMatrix,
    gamma: f64,
    trials: u64,
    seed: u64,
    exec: ExecMode,
    lean: bool,
) -> Result<EntryMeans> {
    require_scaled(matrix)?;
    let cfg = if lean {
        SamplingConfig::lean(gamma)?
    } else {
        SamplingConfig::dimsum(gamma)?
    };
    let stats = column_stats(matrix)?;
    let per_trial: Vec<Vec<f64>> = map_trials(trials, seed, exec, |_t, trial_seed| {
        let (sim, _) = run_sampled(matrix, &stats, &cfg, trial_seed, &sampling_options());
        sim.as_dense().iter_upper().map(|(_, _, v)| v).collect()
    });
    let oracle = exact_cosine(matrix)?;
    let oracle_entries: Vec<f64> = oracle.iter_upper().map(|(_, _, v)| v).collect();
    let tf = trials as f64;
    let entries = oracle_entries.len();
    let mut means = Vec::with_capacity(entries);
    for e in 0..entries {
        let mean = per_trial.iter().map(|row| row[e]).sum::<f64>() / tf;
        let var = per_trial
            .iter()
            .map(|row| (row[e] - mean).powi(2))
            .sum::<f64>()
            / tf;
        means.push((mean, (var / tf).sqrt()));
    }
    Ok((means, oracle_entries))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary(m: usize, n: usize, l: usize, seed: u64) -> SparseRowMatrix {
        generate_random_sparse(m, n, l, ValueDist::Binary, seed).unwrap()
    }

    #[test]
    fn success_suite_saturated_gamma_always_succeeds() {
        let m = binary(100, 10, 4, 1);
        // c huge: every probability caps, the estimate is exact.
        let report =
            check_success_probability(&m, 0.5, 1e6, 10, 3, ExecMode::Sequential).unwrap();
        assert_eq!(report.successes, report.trials);
        assert!(report.pass);
    }

    #[test]
    fn success_suite_rejects_tiny_gamma() {
        let m = binary(50, 10, 4, 1);
        let err = check_success_probability(&m, 10.0, 0.1, 5, 0, ExecMode::Sequential);
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn moments_suite_saturated_gamma_has_zero_moments() {
        let m = binary(60, 8, 3, 5);
        let report = check_moment_bounds(&m, 1e6, 20, 7, ExecMode::Sequential).unwrap();
        assert!(report.pass);
        // Identical outputs across trials: moments vanish up to the dust
        // from averaging equal doubles.
        assert!(report.statistic_mean <= 1e-30);
        assert!(report.statistic_var <= 1e-60);
    }

    #[test]
    fn moments_suite_single_column() {
        let m = binary(30, 1, 1, 2);
        let report = check_moment_bounds(&m, 2.0, 200, 9, ExecMode::Sequential).unwrap();
        assert!(report.pass, "single-entry moments out of bounds: {report:?}");
    }

    #[test]
    fn moments_suite_rejects_negative_entries() {
        let (m, _) = SparseRowMatrix::from_triples(1, 2, vec![(0, 0, -0.5), (0, 1, 1.0)]).unwrap();
        assert!(matches!(
            check_moment_bounds(&m, 2.0, 10, 0, ExecMode::Sequential),
            Err(Error::Regime(_))
        ));
    }

    #[test]
    fn chernoff_delta_zero_upper_bound_is_one() {
        let m = generate_lowerbound_dataset(6, 3).unwrap();
        let check =
            check_chernoff_tails(&m, 0, 1, 5.0, 0.0, None, false, 50, 1, ExecMode::Sequential).unwrap();
        assert_eq!(check.chernoff_upper, 1.0);
        assert_eq!(check.chernoff_lower, 1.0);
        assert!(check.pass);
    }

    #[test]
    fn chernoff_saturated_tails_are_zero() {
        // gamma = alpha / cos = 20 over norm product 3: saturated.
        let m = generate_lowerbound_dataset(6, 3).unwrap();
        let check =
            check_chernoff_tails(&m, 0, 1, 20.0, 0.5, None, false, 100, 3, ExecMode::Sequential).unwrap();
        assert_eq!(check.empirical_upper_tail, 0.0);
        assert_eq!(check.empirical_lower_tail, 0.0);
        assert!(check.pass);
    }

    #[test]
    fn chernoff_rejects_dissimilar_pair() {
        let m = generate_lowerbound_dataset(6, 3).unwrap();
        // Columns 0 and 3 live in different groups: cosine 0.
        let err = check_chernoff_tails(&m, 0, 3, 20.0, 0.5, None, false, 10, 0, ExecMode::Sequential);
        assert!(matches!(err, Err(Error::Parameter(_))));
    }

    #[test]
    fn shuffle_suite_gamma_zero_is_exactly_zero() {
        let m = binary(80, 10, 4, 4);
        let report = check_shuffle_size(&m, 0.0, 5, 0, ExecMode::Sequential).unwrap();
        assert!(report.pass);
        assert_eq!(report.statistic_mean, 0.0);
        assert_eq!(report.details["exact_expectation"], 0.0);
    }

    #[test]
    fn shuffle_suite_saturated_equals_exhaustive_count() {
        let m = binary(80, 10, 4, 4);
        let report = check_shuffle_size(&m, 1e9, 3, 0, ExecMode::Sequential).unwrap();
        // Every probability is 1: shuffle is the all-pairs count.
        let expected: f64 = m
            .rows()
            .iter()
            .map(|r| (r.len() * (r.len() + 1)) as f64 / 2.0)
            .sum();
        assert_eq!(report.statistic_mean, expected);
        assert_eq!(report.details["exact_expectation"], expected);
        assert!(report.details["mean_within_4sd"] == 1.0);
    }

    #[test]
    fn dimfree_suite_skips_on_zero_gamma() {
        let report = check_dimension_independence(
            10,
            3,
            0.0,
            &[100, 200],
            2,
            0,
            ExecMode::Sequential,
        )
        .unwrap();
        assert!(report.skipped);
        assert!(report.pass);
    }

    #[test]
    fn reduce_key_saturated_lowerbound_groups() {
        // Saturated run on the duplicated-group dataset: each within-group
        // key receives exactly `group_size` values.
        let m = generate_lowerbound_dataset(6, 3).unwrap();
        let stats = column_stats(&m).unwrap();
        let cfg = SamplingConfig::dimsum(10.0).unwrap();
        let (_, run) = run_sampled(&m, &stats, &cfg, 0, &sampling_options());
        assert_eq!(run.reduce_key_max, 3);
        assert_eq!(run.reduce_key_mean, 3.0);
        let report = check_reduce_key(&m, 10.0, 4, 0, ExecMode::Sequential).unwrap();
        assert!(report.pass);
        assert_eq!(report.statistic_mean, 3.0);
    }

    #[test]
    fn reduce_key_gamma_zero_vacuous_pass() {
        let m = binary(50, 8, 3, 6);
        let report = check_reduce_key(&m, 0.0, 3, 1, ExecMode::Sequential).unwrap();
        assert!(report.pass);
        assert_eq!(report.statistic_mean, 0.0);
    }

    #[test]
    fn lowerbound_counts_match_formula() {
        for (n, l, want) in [(6usize, 3usize, 6u64), (8, 2, 4), (4, 1, 0), (5, 1, 0)] {
            let report = check_lowerbound_output(n, l).unwrap();
            assert!(report.pass, "({n}, {l}): {report:?}");
            assert_eq!(report.statistic_mean as u64, want, "({n}, {l})");
        }
    }

    #[test]
    fn lowerbound_block_structure() {
        // (n=4, L=2): cosine matrix is block diagonal with 2x2 all-ones
        // blocks.
        let m = generate_lowerbound_dataset(4, 2).unwrap();
        let cos = exact_cosine(&m).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let same_group = i / 2 == j / 2;
                let expect = if same_group { 1.0 } else { 0.0 };
                assert!((cos.get(i, j) - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let m = binary(60, 8, 3, 5);
        let a = check_moment_bounds(&m, 5.0, 30, 11, ExecMode::Sequential).unwrap();
        let b = check_moment_bounds(&m, 5.0, 30, 11, ExecMode::Sequential).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
