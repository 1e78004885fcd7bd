//! The `verify` subcommand: suite configuration, defaults and report
//! emission.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Deserialize;

use dimsum_core::engine::ExecMode;
use dimsum_core::error::Error;
use dimsum_core::generate::{generate_lowerbound_dataset, generate_random_sparse, ValueDist};
use dimsum_core::matrix::SparseRowMatrix;
use dimsum_core::rng::derive_seed;
use dimsum_core::verify::{
    check_chernoff_tails, check_dimension_independence, check_lowerbound_output,
    check_moment_bounds, check_reduce_key, check_shuffle_size, check_success_probability,
};

use crate::{usage, CliError, CliResult, FormatArg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Moments,
    Success,
    Chernoff,
    Shuffle,
    Dimfree,
    Reducekey,
    Lowerbound,
    All,
}

const ALL_SUITES: [SuiteArg; 7] = [
    SuiteArg::Moments,
    SuiteArg::Success,
    SuiteArg::Chernoff,
    SuiteArg::Shuffle,
    SuiteArg::Dimfree,
    SuiteArg::Reducekey,
    SuiteArg::Lowerbound,
];

fn suite_name(suite: SuiteArg) -> &'static str {
    match suite {
        SuiteArg::Moments => "moments",
        SuiteArg::Success => "success",
        SuiteArg::Chernoff => "chernoff",
        SuiteArg::Shuffle => "shuffle",
        SuiteArg::Dimfree => "dimfree",
        SuiteArg::Reducekey => "reducekey",
        SuiteArg::Lowerbound => "lowerbound",
        SuiteArg::All => "all",
    }
}

fn suite_salt(suite: SuiteArg) -> u64 {
    match suite {
        SuiteArg::Moments => 1,
        SuiteArg::Success => 2,
        SuiteArg::Chernoff => 3,
        SuiteArg::Shuffle => 4,
        SuiteArg::Dimfree => 5,
        SuiteArg::Reducekey => 6,
        SuiteArg::Lowerbound => 7,
        SuiteArg::All => unreachable!("expanded before dispatch"),
    }
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Which suite to run.
    #[arg(long, value_enum)]
    suite: SuiteArg,
    /// JSON file with suite parameters; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; sub-seeds are derived per suite and per trial.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Matrix rows (generated instances).
    #[arg(long)]
    m: Option<usize>,
    /// Matrix columns.
    #[arg(long)]
    n: Option<usize>,
    /// Nonzeros per row / group size.
    #[arg(long = "L")]
    l: Option<usize>,
    /// Column pair for the tail suite.
    #[arg(long)]
    col_i: Option<usize>,
    #[arg(long)]
    col_j: Option<usize>,
    /// Check the tail suite against the lean variant instead.
    #[arg(long)]
    lean: bool,
    /// Matrix file to use instead of a generated instance.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Market)]
    input_format: FormatArg,
    /// Directory for the report JSONs (printed to stdout when omitted).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

/// Suite parameters accepted from a JSON config file. Every field is
/// optional; suite defaults fill the gaps and command-line flags win.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteConfig {
    path: Option<PathBuf>,
    format: Option<String>,
    m: Option<usize>,
    n: Option<usize>,
    #[serde(rename = "L", alias = "l")]
    l: Option<usize>,
    dist: Option<String>,
    gamma: Option<f64>,
    epsilon: Option<f64>,
    c: Option<f64>,
    alpha: Option<f64>,
    delta: Option<f64>,
    col_i: Option<usize>,
    col_j: Option<usize>,
    lean: Option<bool>,
    trials: Option<u64>,
    trials_per_m: Option<u64>,
    m_values: Option<Vec<usize>>,
    seed: Option<u64>,
}

impl SuiteConfig {
    fn overlay_flags(mut self, args: &VerifyArgs) -> Self {
        self.path = args.input.clone().or(self.path);
        self.m = args.m.or(self.m);
        self.n = args.n.or(self.n);
        self.l = args.l.or(self.l);
        self.gamma = args.gamma.or(self.gamma);
        self.epsilon = args.epsilon.or(self.epsilon);
        self.c = args.c.or(self.c);
        self.alpha = args.alpha.or(self.alpha);
        self.delta = args.delta.or(self.delta);
        self.col_i = args.col_i.or(self.col_i);
        self.col_j = args.col_j.or(self.col_j);
        if args.lean {
            self.lean = Some(true);
        }
        self.trials = args.trials.or(self.trials);
        self.seed = args.seed.or(self.seed);
        self
    }
}

struct SuiteOutcome {
    name: &'static str,
    pass: bool,
    skipped: bool,
    report: serde_json::Value,
}

/// Resolve the suite's matrix: explicit file, otherwise the generated
/// default instance.
fn resolve_matrix(
    cfg: &SuiteConfig,
    args: &VerifyArgs,
    default_m: usize,
    default_n: usize,
    default_l: usize,
    seed: u64,
) -> CliResult<SparseRowMatrix> {
    if let Some(path) = &cfg.path {
        let format = match cfg.format.as_deref() {
            None => args.input_format.into(),
            Some("market") => FormatArg::Market.into(),
            Some("tsv") => FormatArg::Tsv.into(),
            Some(other) => return Err(usage(format!("unknown matrix format `{other}`"))),
        };
        return Ok(dimsum_core::io::load_matrix(path, format)?.matrix);
    }
    let dist = match cfg.dist.as_deref() {
        None | Some("binary") => ValueDist::Binary,
        Some("uniform01") => ValueDist::Uniform01,
        Some(other) => return Err(usage(format!("unknown value distribution `{other}`"))),
    };
    Ok(generate_random_sparse(
        cfg.m.unwrap_or(default_m),
        cfg.n.unwrap_or(default_n),
        cfg.l.unwrap_or(default_l),
        dist,
        derive_seed(seed, 0xDA7A),
    )?)
}

fn run_one(suite: SuiteArg, args: &VerifyArgs, base: &SuiteConfig, exec: ExecMode) -> CliResult<SuiteOutcome> {
    let cfg = base.clone().overlay_flags(args);
    let master_seed = cfg.seed.unwrap_or(0);
    let suite_seed = derive_seed(master_seed, suite_salt(suite));
    let name = suite_name(suite);

    let (pass, skipped, report) = match suite {
        SuiteArg::Moments => {
            let matrix = resolve_matrix(&cfg, args, 2000, 30, 6, suite_seed)?;
            let report = check_moment_bounds(
                &matrix,
                cfg.gamma.unwrap_or(50.0),
                cfg.trials.unwrap_or(2000),
                derive_seed(suite_seed, 1),
                exec,
            )?;
            (report.pass, report.skipped, serde_json::to_value(&report).unwrap())
        }
        SuiteArg::Success => {
            let matrix = resolve_matrix(&cfg, args, 5000, 40, 8, suite_seed)?;
            let report = check_success_probability(
                &matrix,
                cfg.epsilon.unwrap_or(0.5),
                cfg.c.unwrap_or(dimsum_core::pipelines::DEFAULT_CALIBRATION_C),
                cfg.trials.unwrap_or(100),
                derive_seed(suite_seed, 1),
                exec,
            )?;
            (report.pass, report.skipped, serde_json::to_value(&report).unwrap())
        }
        SuiteArg::Chernoff => {
            let n = cfg.n.unwrap_or(40);
            let l = cfg.l.unwrap_or(40);
            let matrix = match &cfg.path {
                Some(_) => resolve_matrix(&cfg, args, 0, 0, 0, suite_seed)?,
                None => generate_lowerbound_dataset(n, l)?,
            };
            let report = check_chernoff_tails(
                &matrix,
                cfg.col_i.unwrap_or(0),
                cfg.col_j.unwrap_or(1),
                cfg.alpha.unwrap_or(20.0),
                cfg.delta.unwrap_or(0.5),
                cfg.epsilon,
                cfg.lean.unwrap_or(false),
                cfg.trials.unwrap_or(10_000),
                derive_seed(suite_seed, 1),
                exec,
            )?;
            (report.pass, false, serde_json::to_value(&report).unwrap())
        }
        SuiteArg::Shuffle => {
            let matrix = resolve_matrix(&cfg, args, 5000, 50, 10, suite_seed)?;
            let gamma = cfg.gamma.unwrap_or(100.0);
            if gamma == 0.0 {
                println!("note: gamma = 0 is degenerate; nothing is emitted");
            }
            let report = check_shuffle_size(
                &matrix,
                gamma,
                cfg.trials.unwrap_or(50),
                derive_seed(suite_seed, 1),
                exec,
            )?;
            (report.pass, report.skipped, serde_json::to_value(&report).unwrap())
        }
        SuiteArg::Dimfree => {
            let report = check_dimension_independence(
                cfg.n.unwrap_or(50),
                cfg.l.unwrap_or(10),
                cfg.gamma.unwrap_or(100.0),
                &cfg.m_values
                    .clone()
                    .unwrap_or_else(|| vec![1_000, 10_000, 100_000]),
                cfg.trials_per_m.unwrap_or(5),
                derive_seed(suite_seed, 1),
                exec,
            )?;
            if report.skipped {
                println!("note: dimension sweep skipped (degenerate configuration)");
            }
            (report.pass, report.skipped, serde_json::to_value(&report).unwrap())
        }
        SuiteArg::Reducekey => {
            let matrix = resolve_matrix(&cfg, args, 2000, 30, 6, suite_seed)?;
            let report = check_reduce_key(
                &matrix,
                cfg.gamma.unwrap_or(30.0),
                cfg.trials.unwrap_or(50),
                derive_seed(suite_seed, 1),
                exec,
            )?;
            (report.pass, report.skipped, serde_json::to_value(&report).unwrap())
        }
        SuiteArg::Lowerbound => {
            let report = check_lowerbound_output(cfg.n.unwrap_or(6), cfg.l.unwrap_or(3))?;
            (report.pass, report.skipped, serde_json::to_value(&report).unwrap())
        }
        SuiteArg::All => unreachable!("expanded before dispatch"),
    };

    Ok(SuiteOutcome {
        name,
        pass,
        skipped,
        report,
    })
}

pub fn cmd_verify(args: VerifyArgs, exec: ExecMode) -> CliResult<()> {
    let base: SuiteConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(Error::from)?;
            serde_json::from_str(&text)
                .map_err(|e| usage(format!("cannot parse suite config: {e}")))?
        }
        None => SuiteConfig::default(),
    };

    crate::echo_config(
        "verify",
        serde_json::json!({
            "suite": suite_name(args.suite),
            "config": args.config,
            "seed": args.seed.or(base.seed).unwrap_or(0),
            "out_dir": args.out_dir,
            "sequential": exec == ExecMode::Sequential,
        }),
    );

    let suites: Vec<SuiteArg> = match args.suite {
        SuiteArg::All => ALL_SUITES.to_vec(),
        one => vec![one],
    };

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
    }

    let mut failures = 0usize;
    for suite in suites {
        let outcome = run_one(suite, &args, &base, exec)?;
        let verdict = if outcome.skipped {
            "SKIP"
        } else if outcome.pass {
            "PASS"
        } else {
            "FAIL"
        };
        println!("[{verdict}] suite {}", outcome.name);
        let text = serde_json::to_string_pretty(&outcome.report).expect("serializable");
        match &args.out_dir {
            Some(dir) => {
                std::fs::write(dir.join(format!("{}.json", outcome.name)), text)
                    .map_err(Error::from)?;
            }
            None => println!("{text}"),
        }
        if !outcome.pass {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(CliError::SuiteFailed(failures));
    }
    Ok(())
}
