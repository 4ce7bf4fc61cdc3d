use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use distinct_core::estimator::{select_params, Estimator, ParamOverrides};
use distinct_core::fingerprint::{fingerprint_of, parse_fingerprint, Fingerprint};
use distinct_core::harness::{
    correlation_experiment, correlation_rows_to_csv, run_experiment, ExperimentConfig,
};
use distinct_core::rng::RngStream;
use distinct_core::sampling::{draw, draw_bernoulli, parse_samples, serialize_samples, ModelTag};
use distinct_core::urn::{make_hard_pair, make_uniform_support, parse_urn, serialize_urn, UrnSpec};
use distinct_core::verify::{
    estimator_suite, orthopoly_csv, orthopoly_grid, orthopoly_suite, spectral_csv,
    spectral_suite, stirling_bound_csv, stirling_suite, SuiteReport,
};
use distinct_core::stirling::stirling_bound_table;

/// Estimate the number of distinct colors in an urn from random samples.
#[derive(Parser)]
#[command(name = "distinct", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample from an urn file.
    Simulate(SimulateArgs),
    /// Estimate the number of colors from samples or a fingerprint.
    Estimate(EstimateArgs),
    /// Run an experiment config and write CSV/JSON tables.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the identity suites; exits nonzero if any check fails.
    Verify(VerifyArgs),
    /// Write a generated urn.
    Urn(UrnArgs),
    /// Correlation of the unseen count with each Φ_j under Poisson sampling.
    Correlation(CorrelationArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Multi,
    Hyper,
    Bern,
    Poi,
    SimWith,
}

impl From<ModelArg> for ModelTag {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Multi => ModelTag::Multinomial,
            ModelArg::Hyper => ModelTag::Hypergeometric,
            ModelArg::Bern => ModelTag::Bernoulli,
            ModelArg::Poi => ModelTag::Poissonized,
            ModelArg::SimWith => ModelTag::SimulatedWithReplacement,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    urn: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Sample size; for `bern`, the expected size `k·p`.
    #[arg(long, conflicts_with = "p", required_unless_present = "p")]
    n: Option<u64>,
    /// Inclusion probability, `bern` only.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["samples", "fingerprint"]))]
struct EstimateArgs {
    #[arg(long)]
    k: u64,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long)]
    fingerprint: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    orthopoly: bool,
    #[arg(long)]
    stirling: bool,
    #[arg(long)]
    spectral: bool,
    #[arg(long)]
    estimator: bool,
    /// Directory for the CSV reports of the selected suites.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UrnArgs {
    #[command(subcommand)]
    kind: UrnKind,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Null,
    Alt,
}

#[derive(Subcommand)]
enum UrnKind {
    /// `C` colors sharing `k` balls as evenly as possible.
    Uniform {
        #[arg(long)]
        k: u64,
        #[arg(long = "colors", short = 'c')]
        colors: u64,
    },
    /// One urn of the least-favorable pair.
    HardPair {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        delta: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "alt")]
        side: Side,
    },
}

#[derive(Args)]
struct CorrelationArgs {
    #[arg(long)]
    urn: PathBuf,
    #[arg(long)]
    n: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 10)]
    j_max: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn load_urn(path: &Path) -> Result<UrnSpec> {
    parse_urn(&read(path)?).with_context(|| format!("parsing urn {}", path.display()))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let urn = load_urn(&args.urn)?;
    let model = ModelTag::from(args.model);
    let stream = RngStream::new(args.seed, 0);
    let batch = match (args.n, args.p) {
        (_, Some(p)) => {
            if model != ModelTag::Bernoulli {
                bail!("--p applies only to --model bern");
            }
            draw_bernoulli(&urn, p, stream)?
        }
        (Some(n), None) => draw(&urn, model, n, stream)?,
        (None, None) => unreachable!("clap requires --n or --p"),
    };
    emit(args.out.as_deref(), &serialize_samples(&batch.draws))
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let fp: Fingerprint = match (&args.samples, &args.fingerprint) {
        (Some(path), _) => fingerprint_of(
            &parse_samples(&read(path)?).with_context(|| format!("parsing {}", path.display()))?,
        ),
        (None, Some(path)) => {
            parse_fingerprint(&read(path)?).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, None) => unreachable!("clap requires an input"),
    };
    let overrides = ParamOverrides {
        alpha: args.alpha,
        beta: args.beta,
        eta: args.eta,
    };
    let params = select_params(args.k, args.n, &overrides)?;
    let result = Estimator::new(params)?.estimate(&fp)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&result)?);
    } else {
        println!("c_hat\t{}", result.c_hat);
        println!("c_tilde\t{}", result.c_tilde);
        println!("c_seen\t{}", result.c_seen);
        println!("regime\t{}", result.regime);
        println!("L\t{}", result.degree);
        println!("M\t{}", result.nodes);
        println!("coeffs_digest\t{}", result.coeffs_digest);
    }
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let all = !(args.orthopoly || args.stirling || args.spectral || args.estimator);
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let write = |name: &str, body: String| -> Result<()> {
        match &args.out {
            Some(dir) => emit(Some(&dir.join(name)), &body),
            None => Ok(()),
        }
    };
    let mut reports: Vec<SuiteReport> = Vec::new();
    if all || args.orthopoly {
        reports.push(orthopoly_suite()?);
        write("orthopoly.csv", orthopoly_csv(&orthopoly_grid(64, 16)?))?;
    }
    if all || args.stirling {
        reports.push(stirling_suite()?);
        write("stirling.csv", stirling_bound_csv(&stirling_bound_table(60)?))?;
    }
    if all || args.spectral {
        let (report, rows) = spectral_suite()?;
        reports.push(report);
        write("spectral.csv", spectral_csv(&rows))?;
    }
    if all || args.estimator {
        reports.push(estimator_suite()?);
    }
    for r in &reports {
        print!("{r}");
    }
    let passed = reports.iter().all(SuiteReport::passed);
    println!("verify: {}", if passed { "all checks passed" } else { "FAILED" });
    Ok(passed)
}

fn urn(args: UrnArgs) -> Result<()> {
    let urn = match args.kind {
        UrnKind::Uniform { k, colors } => make_uniform_support(k, colors)?,
        UrnKind::HardPair { k, delta, seed, side } => {
            let pair = make_hard_pair(k, delta, seed)?;
            match side {
                Side::Null => pair.null_urn,
                Side::Alt => pair.alt_urn,
            }
        }
    };
    let mut text = serialize_urn(&urn);
    text.push('\n');
    emit(args.out.as_deref(), &text)
}

fn correlation(args: CorrelationArgs) -> Result<()> {
    let urn = load_urn(&args.urn)?;
    let rows = correlation_experiment(&urn, args.n, args.trials, args.j_max, args.seed)?;
    emit(args.out.as_deref(), &correlation_rows_to_csv(&rows))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(a) => simulate(a)?,
        Command::Estimate(a) => estimate(a)?,
        Command::Experiment { config, out } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            for path in run_experiment(&cfg, &out)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Verify(a) => return verify(a),
        Command::Urn(a) => urn(a)?,
        Command::Correlation(a) => correlation(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
