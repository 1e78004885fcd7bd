//! Monte Carlo checks of the sampled estimators: per-pair acceptance
//! frequency, unbiasedness against the exact cosine oracle, agreement
//! between the two sampled variants, and the success-rate trend in the
//! calibration constant.

mod common;

use dimsum_core::engine::ExecMode;
use dimsum_core::generate::{generate_lowerbound_dataset, generate_random_sparse, ValueDist};
use dimsum_core::matrix::{column_stats, SparseRowMatrix};
use dimsum_core::pipelines::dimsum_map;
use dimsum_core::pipelines::SamplingConfig;
use dimsum_core::rng::{derive_row_rng, derive_seed};
use dimsum_core::verify::{check_chernoff_tails, check_success_probability, entry_means};

#[test]
fn per_pair_acceptance_frequency_matches_probability() {
    // One row with two nonzeros; the (0, 1) pair has acceptance
    // probability gamma / (||c_0|| ||c_1||) = 0.36 / 0.72 = 0.5.
    let (matrix, _) =
        SparseRowMatrix::from_triples(1, 2, vec![(0, 0, 0.8), (0, 1, 0.9)]).unwrap();
    let stats = column_stats(&matrix).unwrap();
    let cfg = SamplingConfig::dimsum(0.36).unwrap();
    let p = 0.5;

    let trials = 100_000u64;
    let mut accepted = 0u64;
    for t in 0..trials {
        let mut rng = derive_row_rng(derive_seed(2024, t), 0);
        let emissions = dimsum_map(matrix.row(0), 0, &cfg, &stats, &mut rng);
        if emissions
            .iter()
            .any(|e| e.key.lo() == 0 && e.key.hi() == 1)
        {
            accepted += 1;
        }
    }
    let freq = accepted as f64 / trials as f64;
    let sd = (p * (1.0 - p) / trials as f64).sqrt();
    assert!(
        (freq - p).abs() <= 3.0 * sd,
        "acceptance frequency {freq} vs {p} (3 sd = {})",
        3.0 * sd
    );
}

fn unbiasedness_instance() -> SparseRowMatrix {
    generate_random_sparse(200, 12, 4, ValueDist::Binary, 77).unwrap()
}

#[test]
fn sampled_estimates_are_unbiased_for_cosine() {
    let matrix = unbiasedness_instance();
    let trials = 10_000;
    let (means, oracle) =
        entry_means(&matrix, 20.0, trials, 42, ExecMode::Parallel, false).unwrap();
    let mut within = 0usize;
    for ((mean, se), cos) in means.iter().zip(&oracle) {
        if (mean - cos).abs() <= 4.0 * se || (*se == 0.0 && mean == cos) {
            within += 1;
        }
    }
    let frac = within as f64 / means.len() as f64;
    assert!(
        frac >= 0.99,
        "only {within}/{} entries within 4 standard errors",
        means.len()
    );
}

#[test]
fn lean_estimates_are_unbiased_off_diagonal() {
    let matrix = unbiasedness_instance();
    let n = matrix.n_cols();
    let trials = 10_000;
    let (means, oracle) =
        entry_means(&matrix, 20.0, trials, 43, ExecMode::Parallel, true).unwrap();
    // Walk the upper triangle, skipping the diagonal: the lean variant's
    // single per-column coin biases only the self-pairs.
    let mut idx = 0usize;
    let mut total = 0usize;
    let mut within = 0usize;
    for i in 0..n {
        for j in i..n {
            if i != j {
                total += 1;
                let (mean, se) = means[idx];
                let cos = oracle[idx];
                if (mean - cos).abs() <= 4.0 * se || (se == 0.0 && mean == cos) {
                    within += 1;
                }
            }
            idx += 1;
        }
    }
    let frac = within as f64 / total as f64;
    assert!(frac >= 0.99, "only {within}/{total} entries within 4 standard errors");
}

#[test]
fn lean_and_standard_means_agree_off_diagonal() {
    let matrix = unbiasedness_instance();
    let n = matrix.n_cols();
    let trials = 10_000;
    let (standard, _) =
        entry_means(&matrix, 20.0, trials, 42, ExecMode::Parallel, false).unwrap();
    let (lean, _) = entry_means(&matrix, 20.0, trials, 43, ExecMode::Parallel, true).unwrap();
    let mut idx = 0usize;
    let mut total = 0usize;
    let mut within = 0usize;
    for i in 0..n {
        for j in i..n {
            if i != j {
                total += 1;
                let (m1, se1) = standard[idx];
                let (m2, se2) = lean[idx];
                let se = (se1 * se1 + se2 * se2).sqrt();
                if (m1 - m2).abs() <= 4.0 * se || (se == 0.0 && m1 == m2) {
                    within += 1;
                }
            }
            idx += 1;
        }
    }
    let frac = within as f64 / total as f64;
    assert!(frac >= 0.99, "only {within}/{total} entry means agree");
}

#[test]
fn lean_variant_also_respects_tail_bounds() {
    // The tail claim needs no pairwise independence between entries, so
    // the lean pipeline is held to the same bounds on a unit-cosine pair
    // in its stochastic regime (per-column coin probability ~0.707).
    let matrix = generate_lowerbound_dataset(40, 40).unwrap();
    let check = check_chernoff_tails(
        &matrix,
        0,
        1,
        20.0,
        0.5,
        None,
        true,
        4000,
        91,
        ExecMode::Parallel,
    )
    .unwrap();
    assert!(check.lean);
    assert!(check.pass, "lean tails exceed bounds: {check:?}");
}

#[test]
fn success_rate_is_monotone_in_calibration_constant() {
    // Sweep the calibration constant across the transition region and
    // require a non-decreasing success rate up to binomial noise.
    let matrix = generate_random_sparse(5000, 40, 8, ValueDist::Binary, 7).unwrap();
    let trials = 60u64;
    let c_values = [0.00625, 0.0125, 0.025, 0.1, 0.5];
    let mut rates = Vec::new();
    for (i, &c) in c_values.iter().enumerate() {
        let report = check_success_probability(
            &matrix,
            0.5,
            c,
            trials,
            1000 + i as u64,
            ExecMode::Parallel,
        )
        .unwrap();
        rates.push(report.successes as f64 / trials as f64);
    }
    let slack = 2.5 * (0.25f64 / trials as f64).sqrt();
    for pair in rates.windows(2) {
        assert!(
            pair[1] >= pair[0] - slack,
            "success rates not monotone within tolerance: {rates:?}"
        );
    }
    // The sweep must actually span the transition, not sit flat.
    assert!(rates[0] < 0.5, "lowest c unexpectedly passing: {rates:?}");
    assert!(
        rates[rates.len() - 1] > 0.9,
        "highest c unexpectedly failing: {rates:?}"
    );
}
