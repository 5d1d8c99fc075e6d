//! Command-line front end.
//!
//! Exit codes: `0` success (whatever the verdict), `1` internal error, `2`
//! malformed input or invalid parameters/weights, `3` enumeration limit
//! exceeded, `4` market not viable, `5` perturbation retry limit reached.

mod report;

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{
    augmented_rank, characterize_with, completeness_of, generator_prices, plan_completion,
    price_bounds_from, uniform_weights,
};
use crate::error::Error;
use crate::exactmath::{
    format_rational, parse_list, parse_rational, Rational, RationalMatrix, RationalVector,
};
use crate::geometry::{enumerate_generators, EnumerationOptions, DEFAULT_MAX_OUTCOMES};
use crate::market::{build_system, OnePeriodMarket};
use crate::models::{
    kkl_backward_induction, kkl_build, kkl_completion_check, kkl_perturb_terminal, kkl_viability,
    put_payoff, KklParams,
};
use crate::multiperiod::{analyze_tree_with, apply_completion, complete_tree_with, TreeMarket};

pub use report::*;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;
pub const EXIT_NOT_VIABLE: i32 = 4;
pub const EXIT_RETRY: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "martpoly",
    version,
    about = "Exact martingale-measure analysis of finite markets"
)]
struct Cli {
    /// Emit canonical JSON (sorted keys) instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Largest outcome count accepted by face enumeration.
    #[arg(long, global = true, env = "MARTPOLY_MAX_OUTCOMES", default_value_t = DEFAULT_MAX_OUTCOMES)]
    max_outcomes: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Viability, completeness, generators and equivalent-measure conditions.
    Analyze { market: PathBuf },
    /// Generators of the martingale-measure polytope.
    Generators {
        market: PathBuf,
        /// Enumerate every face, without the dimension-based early stop.
        #[arg(long)]
        no_pruning: bool,
    },
    /// Arbitrage-free price interval of a payoff.
    Bounds {
        market: PathBuf,
        /// Comma-separated payoff, one entry per outcome.
        #[arg(long, value_parser = rational_list, allow_hyphen_values = true)]
        payoff: RationalVector,
    },
    /// Add assets until the market is complete.
    Complete {
        market: PathBuf,
        /// Comma-separated generator weights (default: uniform).
        #[arg(long, value_parser = rational_list, allow_hyphen_values = true)]
        weights: Option<RationalVector>,
        /// Candidate payoff row tried before unit payoffs; repeatable.
        #[arg(long = "row", value_parser = rational_list, allow_hyphen_values = true)]
        rows: Vec<RationalVector>,
        /// Write the extended market document here.
        #[arg(long)]
        apply: Option<PathBuf>,
    },
    /// Multi-period event-tree markets.
    #[command(subcommand)]
    Tree(TreeCommand),
    /// Birth-death lattice: put pricing, completion check, perturbation.
    Kkl(Box<KklArgs>),
}

#[derive(Debug, Subcommand)]
enum TreeCommand {
    /// Per-component and overall verdicts.
    Analyze { tree: PathBuf },
    /// Completion plans for every incomplete component.
    Complete {
        tree: PathBuf,
        /// Write the completed tree document here.
        #[arg(long)]
        apply: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct KklArgs {
    #[arg(long)]
    s0: u64,
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    lambda: Rational,
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    eta: Rational,
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    rate: Rational,
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    horizon: Rational,
    #[arg(long)]
    steps: usize,
    /// Mixing parameter of the node martingale measures, in (0, 1).
    #[arg(long, value_parser = rational, default_value = "1/2")]
    emm_p: Rational,
    /// Perturb the put terminal values by less than this to complete the market.
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    epsilon: Option<Rational>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV file for the put surface (`t,k,value`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV file for the perturbed surface.
    #[arg(long)]
    perturbed_out: Option<PathBuf>,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn rational_list(s: &str) -> Result<RationalVector, String> {
    parse_list(s).map_err(|e| e.to_string())
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ParseRational { .. }
            | Error::DimensionMismatch { .. }
            | Error::InvalidMarket(_)
            | Error::InvalidTree(_)
            | Error::InvalidParams(_)
            | Error::InvalidWeights(_) => EXIT_INPUT,
            Error::LimitExceeded { .. } => EXIT_LIMIT,
            Error::NotViable => EXIT_NOT_VIABLE,
            Error::RetryLimit { .. } => EXIT_RETRY,
            Error::ContractViolation(_) => EXIT_INTERNAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn write_output(path: &Path, contents: &str) -> Result<String, Failure> {
    std::fs::write(path, contents).map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: format!("cannot write {}: {e}", path.display()),
    })?;
    Ok(path.display().to_string())
}

fn load_market(path: &Path) -> Result<OnePeriodMarket, Failure> {
    Ok(OnePeriodMarket::from_json(&read_input(path)?)?)
}

fn load_tree(path: &Path) -> Result<TreeMarket, Failure> {
    Ok(TreeMarket::from_json(&read_input(path)?)?)
}

/// Rendered report: text form and canonical JSON.
struct Output {
    text: String,
    json: serde_json::Value,
}

fn output<R: Serialize + Display>(report: &R) -> Output {
    Output {
        text: report.to_string(),
        // serde_json's default map is ordered, so keys come out sorted
        json: serde_json::to_value(report).expect("reports serialize"),
    }
}

/// Parses `args` (including the program name) and runs the command, writing
/// the report to `out` and diagnostics to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let opts = EnumerationOptions::with_max_outcomes(cli.max_outcomes);
    match dispatch(cli.command, &opts) {
        Ok(o) => {
            let written = if cli.json {
                writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&o.json).expect("json values serialize")
                )
            } else {
                write!(out, "{}", o.text)
            };
            if written.is_err() {
                return EXIT_INTERNAL;
            }
            EXIT_OK
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, opts: &EnumerationOptions) -> Result<Output, Failure> {
    match command {
        Command::Analyze { market } => analyze(&load_market(&market)?, opts),
        Command::Generators { market, no_pruning } => {
            let mkt = load_market(&market)?;
            let opts = EnumerationOptions {
                dimension_pruning: !no_pruning,
                ..*opts
            };
            let set = enumerate_generators(&build_system(&mkt), &opts)?;
            Ok(output(&GeneratorsReport::new(&set, mkt.outcomes())))
        }
        Command::Bounds { market, payoff } => {
            let mkt = load_market(&market)?;
            let emm = characterize_with(&mkt, opts)?;
            let bounds = price_bounds_from(&mkt, &emm, &payoff)?;
            let prices = generator_prices(&mkt, &emm.generators, &payoff)?;
            Ok(output(&BoundsReport::new(&payoff, &bounds, &prices)))
        }
        Command::Complete {
            market,
            weights,
            rows,
            apply,
        } => complete(
            &load_market(&market)?,
            weights,
            rows,
            apply.as_deref(),
            opts,
        ),
        Command::Tree(TreeCommand::Analyze { tree }) => {
            let report = analyze_tree_with(&load_tree(&tree)?, opts)?;
            Ok(output(&TreeAnalyzeReport::new(&report)))
        }
        Command::Tree(TreeCommand::Complete { tree, apply }) => {
            let tm = load_tree(&tree)?;
            let plans = complete_tree_with(&tm, opts)?;
            let written = match apply {
                Some(path) => Some(write_output(
                    &path,
                    &apply_completion(&tm, &plans)?.to_json(),
                )?),
                None => None,
            };
            Ok(output(&TreeCompleteReport::new(
                plans.is_empty(),
                &plans,
                written,
            )))
        }
        Command::Kkl(args) => kkl(*args),
    }
}

fn analyze(mkt: &OnePeriodMarket, opts: &EnumerationOptions) -> Result<Output, Failure> {
    let emm = characterize_with(mkt, opts)?;
    let complete = completeness_of(mkt, &emm);
    Ok(output(&AnalyzeReport::new(
        &emm,
        mkt.assets(),
        complete,
        augmented_rank(mkt),
    )))
}

fn complete(
    mkt: &OnePeriodMarket,
    weights: Option<RationalVector>,
    rows: Vec<RationalVector>,
    apply: Option<&Path>,
    opts: &EnumerationOptions,
) -> Result<Output, Failure> {
    let candidates = if rows.is_empty() {
        None
    } else {
        Some(RationalMatrix::from_rows(mkt.outcomes(), rows)?)
    };
    let emm = characterize_with(mkt, opts)?;
    let weights = weights.unwrap_or_else(|| uniform_weights(emm.generators.len()));
    let plan = plan_completion(mkt, &emm, Some(&weights), candidates.as_ref())?;
    let extended = plan.extend(mkt, None)?;
    let emm = characterize_with(&extended, opts)?;
    let written = match apply {
        Some(path) => Some(write_output(path, &extended.to_json())?),
        None => None,
    };
    Ok(output(&CompleteReport {
        plan: PlanReport::new(&plan),
        extended_complete: completeness_of(&extended, &emm),
        extended_generators: GeneratorsReport::new(&emm.generators, extended.outcomes()).generators,
        written,
    }))
}

fn kkl(args: KklArgs) -> Result<Output, Failure> {
    let params = KklParams {
        s0: args.s0,
        lambda: args.lambda,
        eta: args.eta,
        rate: args.rate,
        horizon: args.horizon,
        steps: args.steps,
    };
    let lattice = kkl_build(&params)?;
    let viable = kkl_viability(&params);
    let mut report = KklReport {
        s0: params.s0,
        steps: params.steps,
        dt: format_rational(&params.dt()),
        viable,
        nodes: lattice.market.tree().len(),
        emm_p: format_rational(&args.emm_p),
        put_price: None,
        violations: Vec::new(),
        perturbation: None,
        written: None,
        warnings: Vec::new(),
    };
    if !viable {
        report.warnings.push(
            "T|r|(s0 + n - 1) < n fails: no equivalent martingale measure, nothing priced".into(),
        );
        return Ok(output(&report));
    }

    let put = put_payoff(&lattice);
    let surface = kkl_backward_induction(&lattice, &put, &args.emm_p)?;
    report.put_price = surface.get(0, params.s0).map(format_rational);
    report.violations = kkl_completion_check(&surface);
    if let Some(path) = &args.out {
        report.written = Some(write_output(path, &surface.to_csv())?);
    }

    if let Some(epsilon) = &args.epsilon {
        let p = kkl_perturb_terminal(&lattice, &args.emm_p, epsilon, args.seed)?;
        let written = match &args.perturbed_out {
            Some(path) => Some(write_output(path, &p.surface.to_csv())?),
            None => None,
        };
        report.perturbation = Some(PerturbationReport {
            epsilon: format_rational(epsilon),
            seed: args.seed,
            attempts: p.attempts,
            max_deviation: format_rational(&p.deviation_from(&put)),
            price: p
                .surface
                .get(0, params.s0)
                .map(format_rational)
                .unwrap_or_default(),
            terminal: p
                .terminal
                .iter()
                .map(|(k, v)| (*k, format_rational(v)))
                .collect(),
            violations: kkl_completion_check(&p.surface),
            written,
        });
    } else if args.perturbed_out.is_some() {
        report
            .warnings
            .push("--perturbed-out ignored without --epsilon".into());
    }
    Ok(output(&report))
}
