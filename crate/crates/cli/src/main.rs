use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use chordlab::ks::{ks_for_batch_with, write_ks_table_csv, Normalization};
use chordlab::oracle::{oracle_check, DEFAULT_MAX_POINTS};
use chordlab::simulation::run_batch_with;
use chordlab::stein::write_diagnostic_csv;
use chordlab::{
    histogram, ks_table, moment_set, region_moments, scaling_diagnostic, DistSpec, DistanceDistribution, KsReport,
    KsRow, MomentSet, RegionMoments, SimulationConfig, VERSION,
};

const THREADS_ENV: &str = "CHORDLAB_THREADS";

#[derive(Parser)]
#[command(name = "chordlab", version, about = "Regions cut by random chords of the unit circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate repetitions and count regions.
    Simulate(SimulateArgs),
    /// Crossing moments and, with --n, the region-count mean and sigma.
    Moments(MomentsArgs),
    /// Normal-approximation error bounds for a list of n.
    Bounds(BoundsArgs),
    /// Kolmogorov-Smirnov test of normalized region counts.
    Kstest(KstestArgs),
    /// Check the Euler count against the sign-vector oracle.
    OracleCheck(OracleArgs),
}

#[derive(Args)]
struct DistArg {
    /// sine, uniform or table:<path>
    #[arg(long, default_value = "sine")]
    dist: String,
}

impl DistArg {
    fn resolve(&self) -> Result<(DistSpec, DistanceDistribution)> {
        let spec = DistSpec::parse(&self.dist)?;
        let dist = spec.resolve()?;
        Ok((spec, dist))
    }
}

#[derive(Clone, Copy)]
enum SeedArg {
    Fixed(u64),
    Random,
}

impl SeedArg {
    fn value(self) -> u64 {
        match self {
            SeedArg::Fixed(s) => s,
            SeedArg::Random => {
                let s = rand::random::<u64>();
                eprintln!("seed = {s}");
                s
            }
        }
    }
}

fn parse_seed(s: &str) -> std::result::Result<SeedArg, String> {
    if s == "random" {
        return Ok(SeedArg::Random);
    }
    s.parse().map(SeedArg::Fixed).map_err(|_| format!("expected a non-negative integer or 'random', got '{s}'"))
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 100)]
    n: u64,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[command(flatten)]
    dist: DistArg,
    /// Master seed, or 'random'.
    #[arg(long, default_value = "0", value_parser = parse_seed)]
    seed: SeedArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    dist: DistArg,
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    dist: DistArg,
    /// Comma-separated chord counts, each above 5.
    #[arg(long = "n", value_delimiter = ',', required = true)]
    ns: Vec<u64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct KstestArgs {
    #[arg(long, conflicts_with = "n_list")]
    n: Option<u64>,
    /// Table mode: one KS row per comma-separated n.
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<u64>>,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[command(flatten)]
    dist: DistArg,
    #[arg(long, default_value = "0", value_parser = parse_seed)]
    seed: SeedArg,
    /// Also write a histogram of the normalized counts with this many bins.
    #[arg(long, conflicts_with = "n_list")]
    bins: Option<usize>,
    /// Centre and scale by the analytic moments or by the batch itself.
    #[arg(long, value_enum, default_value_t = NormalizeArg::Analytic, conflicts_with = "n_list")]
    normalize: NormalizeArg,
    /// Histogram file (default: derived from --out).
    #[arg(long, requires = "bins")]
    hist_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Analytic,
    Sample,
}

impl From<NormalizeArg> for Normalization {
    fn from(a: NormalizeArg) -> Self {
        match a {
            NormalizeArg::Analytic => Normalization::Analytic,
            NormalizeArg::Sample => Normalization::Sample,
        }
    }
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1000)]
    count: u64,
    #[arg(long, default_value_t = 8)]
    n_max: u64,
    #[arg(long, default_value = "0", value_parser = parse_seed)]
    seed: SeedArg,
    /// Largest point budget per configuration.
    #[arg(long, default_value_t = DEFAULT_MAX_POINTS)]
    budget: u64,
    /// JSON report file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad input that is not a library error; maps to exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<chordlab::Error>() {
        Some(err) if err.is_validation() => 2,
        _ => 1,
    }
}

/// The error chain, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !text.contains(&c) {
            text = format!("{text}: {c}");
        }
    }
    text
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize =
        raw.trim().parse().map_err(|_| Usage(format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().context("configuring the thread pool")?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).map_err(|e| Usage(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// Writes primary output to `path`, or to stdout when absent.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            write(&mut w)?;
            w.flush().with_context(|| format!("writing {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn write_json_pretty<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let (spec, dist) = args.dist.resolve()?;
    let config = SimulationConfig::new(args.n, args.reps, args.seed.value(), spec);
    config.validate()?;
    let analytic = region_moments(args.n, &moment_set(&dist)?)?;
    let result = run_batch_with(config, &dist);
    emit(args.output.out.as_deref(), |w| {
        match args.output.format {
            Format::Csv => result.write_csv(w)?,
            Format::Json => result.write_json(w)?,
        }
        Ok(())
    })?;
    let summary = format!(
        "n = {}, reps = {}, dist = {}, seed = {}\n\
         mean F_n = {:.3} (analytic {:.3})\n\
         std F_n  = {:.3} (analytic sigma {:.3})\n\
         wall time = {:.3} s",
        result.config.n_chords,
        result.config.repetitions,
        result.config.dist,
        result.config.seed,
        result.summary.mean,
        analytic.mean_f,
        result.summary.std_dev,
        analytic.sigma,
        result.wall_time.as_secs_f64()
    );
    // keep stdout clean when it carries the data
    if args.output.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

#[derive(Serialize)]
struct MomentsReport {
    version: &'static str,
    dist: String,
    #[serde(flatten)]
    moments: MomentSet,
    covariance: f64,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    region: Option<RegionMoments>,
}

fn moments(args: MomentsArgs) -> Result<()> {
    let (spec, dist) = args.dist.resolve()?;
    let m = moment_set(&dist)?;
    let region = args.n.map(|n| region_moments(n, &m)).transpose()?;
    let report =
        MomentsReport { version: VERSION, dist: spec.to_string(), moments: m, covariance: m.covariance(), region };
    emit(None, |w| write_json_pretty(w, &report))
}

fn bounds(args: BoundsArgs) -> Result<()> {
    let (_, dist) = args.dist.resolve()?;
    let rows = scaling_diagnostic(&dist, &args.ns)?;
    emit(args.output.out.as_deref(), |w| match args.output.format {
        Format::Csv => Ok(write_diagnostic_csv(&rows, w)?),
        Format::Json => write_json_pretty(w, &rows),
    })
}

#[derive(Serialize)]
struct KsSingle {
    version: &'static str,
    dist: String,
    seed: u64,
    n: u64,
    reps: u64,
    normalization: Normalization,
    /// Analytic moments, whatever the normalization.
    mean_f: f64,
    sigma: f64,
    #[serde(flatten)]
    report: KsReport,
}

#[derive(Serialize)]
struct KsTableReport<'a> {
    version: &'static str,
    dist: String,
    seed: u64,
    rows: &'a [KsRow],
}

fn kstest(args: KstestArgs) -> Result<()> {
    let (spec, dist) = args.dist.resolve()?;
    let seed = args.seed.value();
    let out = args.output.out.as_deref();
    if let Some(ns) = &args.n_list {
        let rows = ks_table(ns, args.reps, &dist, seed)?;
        return emit(out, |w| match args.output.format {
            Format::Csv => Ok(write_ks_table_csv(&rows, w)?),
            Format::Json => {
                write_json_pretty(w, &KsTableReport { version: VERSION, dist: spec.to_string(), seed, rows: &rows })
            }
        });
    }

    let n = args.n.unwrap_or(100);
    let hist_path = match (args.bins, &args.hist_out, out) {
        (None, _, _) => None,
        (Some(_), Some(h), _) => Some(h.clone()),
        (Some(_), None, Some(o)) => Some(o.with_extension("hist.csv")),
        (Some(_), None, None) => return Err(Usage("--bins needs --out or --hist-out".into()).into()),
    };
    let normalization = Normalization::from(args.normalize);
    let (report, z) = ks_for_batch_with(&dist, n, args.reps, seed, normalization)?;
    let analytic = region_moments(n, &moment_set(&dist)?)?;
    emit(out, |w| {
        match args.output.format {
            Format::Csv => {
                writeln!(w, "n,reps,statistic,p_value")?;
                writeln!(w, "{n},{},{},{}", args.reps, report.statistic, report.p_value)?;
            }
            Format::Json => write_json_pretty(
                w,
                &KsSingle {
                    version: VERSION,
                    dist: spec.to_string(),
                    seed,
                    n,
                    reps: args.reps,
                    normalization,
                    mean_f: analytic.mean_f,
                    sigma: analytic.sigma,
                    report,
                },
            )?,
        }
        Ok(())
    })?;
    if let (Some(bins), Some(path)) = (args.bins, hist_path) {
        let h = histogram(&z, bins)?;
        emit(Some(&path), |w| Ok(h.write_csv(w)?))?;
    }
    if out.is_some() {
        println!(
            "KS statistic = {:.4}, p-value = {:.4} ({} samples)",
            report.statistic, report.p_value, report.sample_size
        );
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let seed = args.seed.value();
    let report = oracle_check(args.count, args.n_max, seed, args.budget)?;
    #[derive(Serialize)]
    struct Envelope<'a> {
        version: &'static str,
        #[serde(flatten)]
        report: &'a chordlab::oracle::OracleCheckReport,
    }
    emit(args.out.as_deref(), |w| write_json_pretty(w, &Envelope { version: VERSION, report: &report }))?;
    let mut line = format!(
        "agreement {:.2}% ({}/{}), violations {}, max budget {}",
        100.0 * report.agreement_rate,
        report.agreed,
        report.configurations,
        report.violations,
        report.max_budget_used
    );
    if let Some(w) = report.worst_case {
        line += &format!(
            "; worst case: configuration {} (stream {}, n = {}, oracle {} / formula {})",
            w.index, w.chord_stream, w.n, w.report.oracle_count, w.report.formula_count
        );
    }
    eprintln!("{line}");
    if report.violations > 0 {
        anyhow::bail!("oracle found more regions than the formula in {} configurations", report.violations);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Moments(a) => moments(a),
        Command::Bounds(a) => bounds(a),
        Command::Kstest(a) => kstest(a),
        Command::OracleCheck(a) => oracle(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
