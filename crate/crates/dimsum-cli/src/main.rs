//! Command-line front end: dataset generation, pipeline runs, singular
//! value recovery and the statistical verification suites.
//!
//! Exit codes: 0 success/pass, 1 usage, 2 regime/parameter, 3 numeric
//! failure, 4 suite failure.

mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dimsum_core::engine::ExecMode;
use dimsum_core::error::Error;
use dimsum_core::generate::{generate_lowerbound_dataset, generate_random_sparse, ValueDist};
use dimsum_core::io::{
    load_matrix, write_dense_tsv, write_matrix, write_similarity_market, MatrixFormat,
};
use dimsum_core::matrix::{column_stats, SparseRowMatrix};
use dimsum_core::pipelines::{
    gamma_for_epsilon, run_naive, run_sampled, Algorithm, MatrixKind, PipelineOptions,
    SamplingConfig, SimilarityMatrix, DEFAULT_CALIBRATION_C,
};
use dimsum_core::spectral::{
    exact_gram, recover_singular_values, relative_spectral_error, unnormalize, DenseSymmetric,
};

const EXIT_USAGE: u8 = 1;
const EXIT_PARAMETER: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_SUITE: u8 = 4;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
    /// At least one verification suite failed its pass rule.
    SuiteFailed(usize),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::SuiteFailed(_) => EXIT_SUITE,
            CliError::Core(Error::NonConvergence { .. }) => EXIT_NUMERIC,
            CliError::Core(_) => EXIT_PARAMETER,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

#[derive(Parser, Debug)]
#[command(
    name = "dimsum",
    version,
    about = "Sampled column-similarity and singular-value estimation over an instrumented map/reduce simulator"
)]
struct Cli {
    /// Cap the worker thread count (overrides DIMSUM_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run everything sequentially; outputs are bit-exact for a fixed seed.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated dataset to disk.
    Generate(GenerateArgs),
    /// Run a similarity pipeline over a matrix file.
    Run(RunArgs),
    /// Recover singular values and right singular vectors.
    Svd(SvdArgs),
    /// Run the statistical verification suites.
    Verify(suites::VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Market,
    Tsv,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Market => MatrixFormat::MatrixMarket,
            FormatArg::Tsv => MatrixFormat::TsvTriples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Naive,
    Dimsum,
    Lean,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Naive => Algorithm::Naive,
            AlgorithmArg::Dimsum => Algorithm::Dimsum,
            AlgorithmArg::Lean => Algorithm::Lean,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Row count (random dataset).
    #[arg(long)]
    m: Option<usize>,
    /// Column count.
    #[arg(long)]
    n: usize,
    /// Nonzeros per row (random dataset) or group size (worst-case dataset).
    #[arg(long = "L")]
    l: usize,
    /// All stored values are 1.
    #[arg(long, conflicts_with = "uniform")]
    binary: bool,
    /// Values drawn uniformly from (0, 1).
    #[arg(long)]
    uniform: bool,
    /// Emit the duplicated-group worst-case dataset instead of a random one.
    #[arg(long, conflicts_with_all = ["m", "binary", "uniform", "seed"])]
    lowerbound: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Market)]
    format: FormatArg,
    /// Output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SamplingArgs {
    /// Oversampling parameter; mutually exclusive with --epsilon/--c.
    #[arg(long)]
    gamma: Option<f64>,
    /// Target relative spectral error; resolves gamma = c n / epsilon^2.
    #[arg(long, conflicts_with = "gamma")]
    epsilon: Option<f64>,
    /// Calibration constant used with --epsilon.
    #[arg(long, requires = "epsilon", conflicts_with = "gamma")]
    c: Option<f64>,
}

impl SamplingArgs {
    /// Resolve the effective gamma for a sampled algorithm.
    fn resolve(&self, n_cols: usize) -> CliResult<f64> {
        match (self.gamma, self.epsilon) {
            (Some(g), None) => Ok(g),
            (None, Some(eps)) => {
                if eps <= 0.0 {
                    return Err(usage("--epsilon must be positive"));
                }
                Ok(gamma_for_epsilon(
                    n_cols,
                    eps,
                    self.c.unwrap_or(DEFAULT_CALIBRATION_C),
                ))
            }
            (None, None) => Err(usage(
                "sampled algorithms need either --gamma or --epsilon (with optional --c)",
            )),
            (Some(_), Some(_)) => Err(usage("--gamma and --epsilon are mutually exclusive")),
        }
    }

    fn is_empty(&self) -> bool {
        self.gamma.is_none() && self.epsilon.is_none() && self.c.is_none()
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Input matrix file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Market)]
    input_format: FormatArg,
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Similarity matrix output path (MatrixMarket symmetric).
    #[arg(long)]
    output: PathBuf,
    /// Also write the un-normalized Gram estimate D B D as dense TSV.
    #[arg(long)]
    unnormalized: Option<PathBuf>,
    /// Where to write the run statistics JSON (stdout when omitted).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Where to write the metadata JSON (stdout when omitted).
    #[arg(long)]
    meta: Option<PathBuf>,
    /// Keep the sampled diagonal instead of overwriting it with exact 1.
    #[arg(long)]
    raw_diagonal: bool,
}

#[derive(Args, Debug)]
struct SvdArgs {
    /// Input matrix file; mutually exclusive with --estimate.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Market)]
    input_format: FormatArg,
    /// Precomputed dense symmetric Gram estimate (TSV grid).
    #[arg(long, conflicts_with = "input")]
    estimate: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Naive)]
    algorithm: AlgorithmArg,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Compare the Gram estimate against the exact oracle and report the
    /// relative spectral error.
    #[arg(long)]
    with_oracle: bool,
    /// Singular values output path, JSON array (stdout when omitted).
    #[arg(long)]
    sigma_out: Option<PathBuf>,
    /// Right singular vectors output path (dense TSV, one vector per column).
    #[arg(long)]
    vectors_out: Option<PathBuf>,
    #[arg(long)]
    raw_diagonal: bool,
}

/// Metadata describing a similarity output.
#[derive(Debug, Serialize)]
struct RunMeta {
    algorithm: Algorithm,
    kind: MatrixKind,
    gamma: Option<f64>,
    seed: Option<u64>,
    diagonal_exact: bool,
    n_cols: usize,
    key_canonicalization: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version land here too and must exit 0.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(EXIT_USAGE);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };

    configure_threads(cli.threads);
    let exec = if cli.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };

    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args, exec),
        Command::Svd(args) => cmd_svd(args, exec),
        Command::Verify(args) => suites::cmd_verify(args, exec),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("usage error: {msg}"),
                CliError::Core(err) => eprintln!("error: {err}"),
                CliError::SuiteFailed(count) => eprintln!("{count} suite(s) failed"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: Option<usize>) {
    let from_env = std::env::var("DIMSUM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok());
    if let Some(n) = threads.or(from_env) {
        // Ignore failure: the global pool can only be installed once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_threads: Option<usize>) {}

fn echo_config(command: &str, value: serde_json::Value) {
    println!("effective-config: {}", serde_json::json!({ command: value }));
}

fn cmd_generate(args: GenerateArgs) -> CliResult<()> {
    let matrix = if args.lowerbound {
        echo_config(
            "generate",
            serde_json::json!({
                "lowerbound": true,
                "n": args.n,
                "L": args.l,
                "format": format_name(args.format),
                "out": args.out,
            }),
        );
        generate_lowerbound_dataset(args.n, args.l)?
    } else {
        let m = args
            .m
            .ok_or_else(|| usage("--m is required unless --lowerbound is given"))?;
        let dist = if args.uniform {
            ValueDist::Uniform01
        } else {
            ValueDist::Binary
        };
        echo_config(
            "generate",
            serde_json::json!({
                "m": m,
                "n": args.n,
                "L": args.l,
                "dist": if args.uniform { "uniform01" } else { "binary" },
                "seed": args.seed,
                "format": format_name(args.format),
                "out": args.out,
            }),
        );
        generate_random_sparse(m, args.n, args.l, dist, args.seed)?
    };
    write_matrix(&matrix, &args.out, args.format.into())?;
    let h_min = matrix
        .iter_entries()
        .map(|(_, _, v)| v.abs())
        .fold(f64::INFINITY, f64::min);
    println!(
        "m = {}, n = {}, L = {}, nnz = {}, H = {}",
        matrix.n_rows(),
        matrix.n_cols(),
        matrix.max_row_nnz(),
        matrix.nnz(),
        if matrix.nnz() == 0 { 0.0 } else { h_min }
    );
    Ok(())
}

fn format_name(f: FormatArg) -> &'static str {
    match f {
        FormatArg::Market => "market",
        FormatArg::Tsv => "tsv",
    }
}

fn load_input(path: &PathBuf, format: FormatArg) -> CliResult<SparseRowMatrix> {
    let loaded = load_matrix(path, format.into())?;
    if loaded.dropped_zeros > 0 {
        eprintln!(
            "warning: dropped {} explicit zero entr{} from {}",
            loaded.dropped_zeros,
            if loaded.dropped_zeros == 1 { "y" } else { "ies" },
            path.display()
        );
    }
    Ok(loaded.matrix)
}

/// Shared pipeline dispatch for `run` and `svd`.
fn execute_pipeline(
    matrix: &SparseRowMatrix,
    algorithm: Algorithm,
    sampling: &SamplingArgs,
    seed: u64,
    exec: ExecMode,
    raw_diagonal: bool,
) -> CliResult<(SimilarityMatrix, dimsum_core::engine::RunStats, Option<f64>)> {
    match algorithm {
        Algorithm::Naive => {
            if !sampling.is_empty() {
                return Err(usage("the exhaustive algorithm takes no sampling parameters"));
            }
            let (sim, stats) = run_naive(matrix, exec);
            Ok((sim, stats, None))
        }
        Algorithm::Dimsum | Algorithm::Lean => {
            let gamma = sampling.resolve(matrix.n_cols())?;
            let cfg = if algorithm == Algorithm::Lean {
                SamplingConfig::lean(gamma)?
            } else {
                SamplingConfig::dimsum(gamma)?
            };
            let col_stats = column_stats(matrix)?;
            let options = PipelineOptions {
                exec,
                exact_diagonal: !raw_diagonal,
            };
            let (sim, stats) = run_sampled(matrix, &col_stats, &cfg, seed, &options);
            Ok((sim, stats, Some(gamma)))
        }
    }
}

fn write_json(path: &Option<PathBuf>, label: &str, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(Error::from)?;
        }
        None => println!("{label}: {text}"),
    }
    Ok(())
}

fn cmd_run(args: RunArgs, exec: ExecMode) -> CliResult<()> {
    let matrix = load_input(&args.input, args.input_format)?;
    let algorithm: Algorithm = args.algorithm.into();
    echo_config(
        "run",
        serde_json::json!({
            "input": args.input,
            "input_format": format_name(args.input_format),
            "algorithm": algorithm,
            "gamma": args.sampling.gamma,
            "epsilon": args.sampling.epsilon,
            "c": args.sampling.c,
            "seed": args.seed,
            "raw_diagonal": args.raw_diagonal,
            "sequential": exec == ExecMode::Sequential,
            "output": args.output,
        }),
    );
    let (similarity, run_stats, gamma) = execute_pipeline(
        &matrix,
        algorithm,
        &args.sampling,
        args.seed,
        exec,
        args.raw_diagonal,
    )?;
    write_similarity_market(&similarity, &args.output)?;
    if let Some(dbd_path) = &args.unnormalized {
        if similarity.kind() != MatrixKind::Cosine {
            return Err(usage(
                "--unnormalized applies to cosine outputs (sampled algorithms) only",
            ));
        }
        let stats = column_stats(&matrix)?;
        let dbd = unnormalize(&similarity, &stats)?;
        write_dense_tsv(&dbd, dbd_path)?;
    }
    let meta = RunMeta {
        algorithm,
        kind: similarity.kind(),
        gamma,
        seed: (algorithm != Algorithm::Naive).then_some(args.seed),
        diagonal_exact: algorithm != Algorithm::Naive && !args.raw_diagonal,
        n_cols: similarity.n(),
        key_canonicalization: run_stats.key_canonicalization.clone(),
    };
    write_json(&args.stats, "run-stats", &run_stats)?;
    write_json(&args.meta, "metadata", &meta)?;
    Ok(())
}

fn load_dense_estimate(path: &PathBuf) -> CliResult<DenseSymmetric> {
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::Parse {
                            line: i + 1,
                            message: format!("cannot parse value `{tok}`"),
                        }
                        .into()
                    })
                })
                .collect::<CliResult<Vec<f64>>>()
        })
        .collect::<CliResult<Vec<Vec<f64>>>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Core(Error::Contract(
            "estimate grid is not square".into(),
        )));
    }
    let mut dense = DenseSymmetric::zeros(n);
    for i in 0..n {
        for j in i..n {
            if rows[i][j] != rows[j][i] {
                return Err(CliError::Core(Error::Contract(format!(
                    "estimate is not symmetric at ({i}, {j})"
                ))));
            }
            dense.set(i, j, rows[i][j]);
        }
    }
    Ok(dense)
}

fn cmd_svd(args: SvdArgs, exec: ExecMode) -> CliResult<()> {
    let algorithm: Algorithm = args.algorithm.into();
    echo_config(
        "svd",
        serde_json::json!({
            "input": args.input,
            "estimate": args.estimate,
            "algorithm": algorithm,
            "gamma": args.sampling.gamma,
            "epsilon": args.sampling.epsilon,
            "c": args.sampling.c,
            "seed": args.seed,
            "with_oracle": args.with_oracle,
            "sequential": exec == ExecMode::Sequential,
        }),
    );

    let (gram_estimate, oracle_input) = match (&args.input, &args.estimate) {
        (Some(path), None) => {
            let matrix = load_input(path, args.input_format)?;
            let (similarity, _, _) = execute_pipeline(
                &matrix,
                algorithm,
                &args.sampling,
                args.seed,
                exec,
                args.raw_diagonal,
            )?;
            let gram = match similarity.kind() {
                MatrixKind::Gram => similarity.as_dense().clone(),
                MatrixKind::Cosine => {
                    let stats = column_stats(&matrix)?;
                    unnormalize(&similarity, &stats)?
                }
            };
            (gram, Some(matrix))
        }
        (None, Some(path)) => {
            if !args.sampling.is_empty() {
                return Err(usage("sampling parameters do not apply to --estimate inputs"));
            }
            (load_dense_estimate(path)?, None)
        }
        _ => return Err(usage("exactly one of --input or --estimate is required")),
    };

    let recovery = recover_singular_values(&gram_estimate)?;

    let oracle_error = if args.with_oracle {
        match &oracle_input {
            Some(matrix) => {
                let oracle = exact_gram(matrix)?;
                Some(relative_spectral_error(&gram_estimate, &oracle)?)
            }
            None => return Err(usage("--with-oracle needs --input, not --estimate")),
        }
    } else {
        None
    };

    write_json(&args.sigma_out, "sigma", &recovery.sigma)?;
    if let Some(path) = &args.vectors_out {
        let n = recovery.sigma.len();
        let mut grid = String::new();
        for r in 0..n {
            let row: Vec<String> = recovery
                .vectors
                .iter()
                .map(|v| format!("{}", v[r]))
                .collect();
            grid.push_str(&row.join("\t"));
            grid.push('\n');
        }
        std::fs::write(path, grid).map_err(Error::from)?;
    }
    let mut summary = serde_json::json!({
        "n": recovery.sigma.len(),
        "clamped_negative_eigenvalues": recovery.clamped_negative,
    });
    if let Some(err) = oracle_error {
        summary["relative_spectral_error_vs_oracle"] = serde_json::json!(err);
    }
    println!("svd-summary: {summary}");
    Ok(())
}
