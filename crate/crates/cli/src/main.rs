//! `corr`: streaming nonparametric correlation over CSV and tick data.
//!
//! Subcommands: `stream` (run an estimator over an x,y stream), `basis`
//! (precompute and export the integral table), `simulate` (seeded Monte
//! Carlo studies), `resample` (previous-tick alignment of two quote files),
//! and `bench` (constant-time update check). Exit status 0 on success, 1 on
//! runtime errors, 2 on usage errors.

mod io;
mod stream;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use corr_core::baselines::{EwPearson, MovingWindowSpearman};
use corr_core::basis::BasisCache;
use corr_core::bench::measure_update_latency;
use corr_core::simulation::{
    run_mae_study, Contamination, ErrorScale, EstimatorKind, ModelKind, MonotoneMap,
    SimulationConfig,
};
use corr_core::state::CoefficientState;
use corr_core::ticks::previous_tick_resample;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use stream::{StreamEstimator, StreamRunner};

#[derive(Parser)]
#[command(
    name = "corr",
    version,
    about = "Streaming nonparametric correlation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a streaming estimator over an x,y CSV stream and emit JSON lines.
    Stream(StreamArgs),
    /// Precompute the Hermite integral table and write it as JSON.
    Basis(BasisArgs),
    /// Run a seeded Monte Carlo study and write a CSV report.
    Simulate(SimulateArgs),
    /// Align two tick files on an interval grid of previous-tick mid-prices
    /// and write basis-point log returns.
    Resample(ResampleArgs),
    /// Measure per-update latency early and late in a long stream.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum StreamEstimatorName {
    /// Stationary Hermite rank-correlation estimator.
    Hermite,
    /// Exponentially weighted Hermite rank-correlation estimator.
    HermiteEw,
    /// Exponentially weighted Pearson baseline.
    EwPearson,
    /// Moving-window exact Spearman baseline.
    Window,
}

#[derive(Args)]
struct StreamArgs {
    /// Estimator to run.
    #[arg(long, value_enum)]
    estimator: StreamEstimatorName,
    /// Truncation order for the Hermite estimators.
    #[arg(long, default_value_t = 10)]
    order: usize,
    /// Exponential weight for hermite-ew and ew-pearson.
    #[arg(long)]
    lambda: Option<f64>,
    /// Window size for the window estimator.
    #[arg(long)]
    window: Option<usize>,
    /// Standardize each margin online before the estimator sees it.
    #[arg(long)]
    standardize: bool,
    /// Input CSV path (`x,y`, optional header); standard input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Emit a JSON line every K observations (the final one is always
    /// emitted).
    #[arg(long, default_value_t = 1)]
    emit_every: u64,
    /// Write the final coefficient state snapshot to this path (Hermite
    /// estimators only).
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct BasisArgs {
    /// Truncation order (1..=50).
    #[arg(long)]
    order: usize,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    /// I.i.d. bivariate normal.
    Normal,
    /// Correlation ramping linearly from -1 to +1.
    #[value(name = "1")]
    Model1,
    /// Correlation following one sine cycle.
    #[value(name = "2")]
    Model2,
    /// Bivariate normal pushed through exp on both margins.
    Lognormal,
}

#[derive(Clone, Copy, ValueEnum)]
enum SimEstimatorName {
    Hermite,
    HermiteEw,
    EwPearson,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleName {
    Spearman,
    Pearson,
}

#[derive(Args)]
struct SimulateArgs {
    /// Data-generating model.
    #[arg(long, value_enum)]
    model: ModelName,
    /// Stream length per replication.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    /// Number of replications.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Correlation parameter (normal and lognormal models).
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Means and standard deviations of the normal model.
    #[arg(long, default_value_t = 0.0)]
    mu1: f64,
    #[arg(long, default_value_t = 0.0)]
    mu2: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma1: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Truncation order of the Hermite estimators.
    #[arg(long, default_value_t = 20)]
    order: usize,
    /// Exponential weight (required by hermite-ew and ew-pearson).
    #[arg(long)]
    lambda: Option<f64>,
    /// Fraction of observations replaced by gross errors (models 1 and 2).
    #[arg(long, default_value_t = 0.0)]
    contamination: f64,
    /// Variance of the gross-error distribution.
    #[arg(long, default_value_t = 1e4)]
    gross_variance: f64,
    /// Estimator; defaults to hermite for stationary models and hermite-ew
    /// for models 1 and 2.
    #[arg(long, value_enum)]
    estimator: Option<SimEstimatorName>,
    /// Error scale for the non-stationary models.
    #[arg(long, value_enum, default_value_t = ScaleName::Spearman)]
    scale: ScaleName,
    /// Standardize margins online inside the Hermite estimators.
    #[arg(long)]
    standardize: bool,
    /// Master seed; replications use substreams of it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary CSV path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-step MAE curve CSV path (non-stationary models).
    #[arg(long)]
    curve_out: Option<PathBuf>,
}

#[derive(Args)]
struct ResampleArgs {
    /// Sampling interval, e.g. 60s, 1m, 500ms.
    #[arg(long, default_value = "60s")]
    interval: String,
    /// Tick CSV (`timestamp_ms,bid,ask`) of the first instrument.
    #[arg(long)]
    left: PathBuf,
    /// Tick CSV of the second instrument.
    #[arg(long)]
    right: PathBuf,
    /// Output CSV of aligned basis-point log returns.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Truncation order to benchmark.
    #[arg(long, default_value_t = 20)]
    order: usize,
    /// Probes per position.
    #[arg(long, default_value_t = 1001)]
    probes: usize,
    /// Seed for the synthetic stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stream(args) => run_stream(args),
        Command::Basis(args) => run_basis(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Resample(args) => run_resample(args),
        Command::Bench(args) => run_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn open_input(path: &Option<PathBuf>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )),
        None => Box::new(BufReader::new(std::io::stdin())),
    })
}

fn write_output(path: &Option<PathBuf>, contents: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn run_stream(args: StreamArgs) -> Result<()> {
    let estimator = match args.estimator {
        StreamEstimatorName::Hermite => StreamEstimator::Hermite {
            state: CoefficientState::stationary(args.order)?,
            cache: BasisCache::build(args.order)?,
        },
        StreamEstimatorName::HermiteEw => {
            let lambda = args
                .lambda
                .ok_or_else(|| anyhow!("--lambda is required for hermite-ew"))?;
            StreamEstimator::Hermite {
                state: CoefficientState::exp_weighted(args.order, lambda)?,
                cache: BasisCache::build(args.order)?,
            }
        }
        StreamEstimatorName::EwPearson => {
            let lambda = args
                .lambda
                .ok_or_else(|| anyhow!("--lambda is required for ew-pearson"))?;
            StreamEstimator::EwPearson(EwPearson::new(lambda)?)
        }
        StreamEstimatorName::Window => {
            let w = args
                .window
                .ok_or_else(|| anyhow!("--window is required for the window estimator"))?;
            StreamEstimator::Window(MovingWindowSpearman::new(w)?)
        }
    };
    if args.snapshot.is_some() && !matches!(estimator, StreamEstimator::Hermite { .. }) {
        return Err(anyhow!("--snapshot is only available for Hermite estimators"));
    }

    let reader = open_input(&args.input)?;
    let stdout = std::io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let mut runner = StreamRunner::new(estimator, args.standardize, args.emit_every);
    let skipped = io::for_each_pair(reader, |x, y| runner.push(x, y, &mut out))?;
    let snapshot = runner.finish(&mut out)?;
    out.flush()?;
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} malformed row(s)");
    }
    if let (Some(path), Some(snapshot)) = (&args.snapshot, snapshot) {
        write_file(path, &snapshot)?;
    }
    Ok(())
}

fn run_basis(args: BasisArgs) -> Result<()> {
    let cache = BasisCache::build(args.order)?;
    let mut text = cache.to_json();
    text.push('\n');
    write_output(&args.out, &text)
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let model = match args.model {
        ModelName::Normal => ModelKind::StationaryNormal {
            mu1: args.mu1,
            mu2: args.mu2,
            sigma1: args.sigma1,
            sigma2: args.sigma2,
            rho: args.rho,
        },
        ModelName::Lognormal => ModelKind::TransformedNormal {
            rho: args.rho,
            map: MonotoneMap::Exp,
        },
        ModelName::Model1 => ModelKind::Model1,
        ModelName::Model2 => ModelKind::Model2,
    };
    let estimator_name = args.estimator.unwrap_or(match args.model {
        ModelName::Normal | ModelName::Lognormal => SimEstimatorName::Hermite,
        ModelName::Model1 | ModelName::Model2 => SimEstimatorName::HermiteEw,
    });
    let need_lambda = || {
        args.lambda
            .ok_or_else(|| anyhow!("--lambda is required for this estimator"))
    };
    let estimator = match estimator_name {
        SimEstimatorName::Hermite => EstimatorKind::HermiteStationary { order: args.order },
        SimEstimatorName::HermiteEw => EstimatorKind::HermiteEw {
            order: args.order,
            lambda: need_lambda()?,
        },
        SimEstimatorName::EwPearson => EstimatorKind::EwPearson {
            lambda: need_lambda()?,
        },
        SimEstimatorName::Exact => EstimatorKind::ExactSpearman,
    };
    let config = SimulationConfig {
        model,
        n: args.n,
        reps: args.reps,
        contamination: (args.contamination > 0.0).then_some(Contamination {
            fraction: args.contamination,
            gross_variance: args.gross_variance,
        }),
        estimator,
        standardize: args.standardize,
        scale: match args.scale {
            ScaleName::Spearman => ErrorScale::Spearman,
            ScaleName::Pearson => ErrorScale::Pearson,
        },
        seed: args.seed,
    };
    let report = run_mae_study(&config)?;
    write_output(&args.out, &report.summary_csv(&config))?;
    if let Some(path) = &args.curve_out {
        let curve = report
            .curve_csv()
            .ok_or_else(|| anyhow!("this configuration produces no per-step curve"))?;
        write_file(path, &curve)?;
    }
    Ok(())
}

fn run_resample(args: ResampleArgs) -> Result<()> {
    let interval = io::parse_interval(&args.interval)?;
    let left = io::parse_ticks(BufReader::new(
        File::open(&args.left).with_context(|| format!("opening {}", args.left.display()))?,
    ))?;
    let right = io::parse_ticks(BufReader::new(
        File::open(&args.right).with_context(|| format!("opening {}", args.right.display()))?,
    ))?;
    let series = previous_tick_resample(&left, &right, interval)?;
    let mut out = String::from("r1,r2\n");
    for (a, b) in series.pairs() {
        out.push_str(&corr_core::fmt::g17(a));
        out.push(',');
        out.push_str(&corr_core::fmt::g17(b));
        out.push('\n');
    }
    write_file(&args.out, &out)
}

fn run_bench(args: BenchArgs) -> Result<()> {
    let report = measure_update_latency(args.order, 1_000, 100_000, args.probes, args.seed)?;
    let state = CoefficientState::stationary(args.order)?;
    println!(
        "order {}: median update {:.0} ns at position {}, {:.0} ns at position {}, ratio {:.3}",
        args.order,
        report.early_median_ns,
        report.early_position,
        report.late_median_ns,
        report.late_position,
        report.ratio()
    );
    println!(
        "state footprint: {} f64 slots, a function of the order alone",
        state.f64_footprint()
    );
    Ok(())
}
