//! `loglab` command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 data or plan error, 4 internal error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use loglab::appbench::{bench_image, read_pgm, ArithProfile};
use loglab::charlab::{
    characterize_with, reports_to_csv, reports_to_json, Precision, SamplingPlan, Unit,
};
use loglab::mitchell::{DivUnit, MulUnit};
use loglab::pipeline::{check_equivalence, make_pipeline, trace_to_csv, Datapath, PipelinePlan};
use loglab::rapidscheme::{derive_scheme, load_scheme, Scheme, SchemeName};

#[derive(Parser)]
#[command(name = "loglab", version, about = "Bit-exact logarithmic multiplier and divider lab")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derive a RAPID scheme partition and write it as JSON.
    Derive(DeriveArgs),
    /// Measure ARE, PRE and bias of one or more units.
    Characterize(CharArgs),
    /// Run operand pairs through a pipelined unit.
    Pipeline(PipeArgs),
    /// JPEG-style codec PSNR with approximate arithmetic.
    BenchJpeg(BenchArgs),
}

#[derive(Args)]
struct DeriveArgs {
    /// Scheme name, e.g. RAPID-10-mul.
    #[arg(long)]
    scheme: String,
    /// Multiplier operand width or divider dividend width.
    #[arg(long, default_value_t = 16)]
    width: u32,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum UnitArg {
    MitchellMul,
    MitchellDiv,
    ExactMul,
    ExactDiv,
    RapidMul,
    RapidDiv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CharArgs {
    /// Unit to characterize; repeat for a sweep.
    #[arg(long = "unit", required = true)]
    units: Vec<UnitArg>,
    /// Scheme name or scheme JSON file; consumed in order by rapid units.
    #[arg(long = "scheme")]
    schemes: Vec<String>,
    /// Multiplier operand width, or divider dividend width (8 means 8/4).
    #[arg(long, default_value_t = 8)]
    width: u32,
    /// Enumerate every operand pair (the default).
    #[arg(long, conflicts_with = "monte_carlo")]
    exhaustive: bool,
    /// Draw this many random operand pairs instead.
    #[arg(long, value_name = "SAMPLES")]
    monte_carlo: Option<u64>,
    /// Seed for Monte Carlo sampling.
    #[arg(long, requires = "monte_carlo")]
    seed: Option<u64>,
    /// Compare integer outputs against exact integer results.
    #[arg(long)]
    truncated: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report progress on stderr.
    #[arg(long)]
    progress: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OpArg {
    Mul,
    Div,
}

#[derive(Args)]
struct PipeArgs {
    #[arg(long, value_enum)]
    op: OpArg,
    /// Multiplier operand width, or divider dividend width.
    #[arg(long, default_value_t = 16)]
    width: u32,
    /// Canonical plan with this many stages (1 to 4).
    #[arg(long, conflicts_with = "plan")]
    stages: Option<usize>,
    /// Explicit plan such as `probe+priority|combine|shift`.
    #[arg(long)]
    plan: Option<String>,
    /// Optional scheme name or file for a RAPID datapath.
    #[arg(long)]
    scheme: Option<String>,
    /// CSV of `a,b` operand pairs; a non-numeric first line is skipped.
    #[arg(long)]
    input: PathBuf,
    /// Results CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-cycle trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Compare against the combinational unit and print `equivalent`.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProfileArg {
    Exact,
    Mitchell,
    Rapid,
}

#[derive(Args)]
struct BenchArgs {
    /// Binary PGM images.
    #[arg(required = true)]
    images: Vec<PathBuf>,
    #[arg(long, default_value_t = 50)]
    quality: u32,
    #[arg(long, value_enum, default_value_t = ProfileArg::Rapid)]
    profile: ProfileArg,
    /// JSON output (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(loglab::Error),
}

impl From<loglab::Error> for CliError {
    fn from(e: loglab::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// A scheme from a JSON file when `spec` names one, otherwise derived by name.
fn resolve_scheme(spec: &str, width: u32) -> CliResult<Arc<Scheme>> {
    let path = Path::new(spec);
    if path.is_file() {
        return Ok(Arc::new(load_scheme(path)?));
    }
    let name: SchemeName = spec.parse()?;
    Ok(Arc::new(derive_scheme(name, width)?))
}

fn div_n(width: u32) -> CliResult<u32> {
    if !width.is_multiple_of(2) {
        return Err(CliError::Usage(format!(
            "divider width {width} must be an even dividend width"
        )));
    }
    Ok(width / 2)
}

fn run_derive(a: DeriveArgs) -> CliResult<()> {
    let name: SchemeName = a.scheme.parse()?;
    let scheme = derive_scheme(name, a.width)?;
    emit(a.out.as_deref(), &scheme.to_json()?)
}

fn run_characterize(a: CharArgs) -> CliResult<()> {
    let mut schemes = a.schemes.iter();
    let mut units = Vec::new();
    for u in &a.units {
        let unit = match u {
            UnitArg::MitchellMul => Unit::mitchell_mul(a.width)?,
            UnitArg::ExactMul => Unit::exact_mul(a.width)?,
            UnitArg::MitchellDiv => Unit::mitchell_div(div_n(a.width)?)?,
            UnitArg::ExactDiv => Unit::exact_div(div_n(a.width)?)?,
            UnitArg::RapidMul | UnitArg::RapidDiv => {
                let spec = schemes
                    .next()
                    .ok_or_else(|| CliError::Usage("each rapid unit needs a --scheme".into()))?;
                let scheme = resolve_scheme(spec, a.width)?;
                if *u == UnitArg::RapidMul {
                    Unit::rapid_mul(a.width, scheme)?
                } else {
                    Unit::rapid_div(div_n(a.width)?, scheme)?
                }
            }
        };
        units.push(unit);
    }
    if schemes.next().is_some() {
        return Err(CliError::Usage("more --scheme values than rapid units".into()));
    }
    let plan = match a.monte_carlo {
        Some(samples) => SamplingPlan::MonteCarlo {
            samples,
            seed: a.seed.unwrap_or(0),
        },
        None => SamplingPlan::Exhaustive,
    };
    let precision = if a.truncated {
        Precision::Truncated
    } else {
        Precision::Full
    };
    let mut reports = Vec::new();
    for unit in &units {
        let start = Instant::now();
        let last = AtomicU64::new(0);
        let label = format!("{} {}", unit.label(), unit.width_label());
        let report_progress = |done: u64, total: u64| {
            let secs = start.elapsed().as_secs();
            if secs > last.load(Ordering::Relaxed) || done == total {
                last.store(secs, Ordering::Relaxed);
                eprintln!("{label}: {done}/{total} pairs ({secs} s)");
            }
        };
        let progress: Option<&loglab::charlab::Progress<'_>> =
            a.progress.then_some(&report_progress as _);
        reports.push(characterize_with(unit, plan, precision, progress)?);
    }
    let text = match a.format {
        Format::Csv => reports_to_csv(&reports),
        Format::Json => reports_to_json(&reports)?,
    };
    emit(a.out.as_deref(), &text)
}

fn parse_pairs(text: &str) -> CliResult<Vec<(u64, u64)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [a, b] => a.parse::<u64>().ok().zip(b.parse::<u64>().ok()),
            _ => None,
        };
        match parsed {
            Some(p) => pairs.push(p),
            None if i == 0 => {}
            None => {
                return Err(loglab::Error::Config(format!(
                    "line {}: expected `a,b`, got `{line}`",
                    i + 1
                ))
                .into())
            }
        }
    }
    Ok(pairs)
}

fn run_pipeline(a: PipeArgs) -> CliResult<()> {
    let scheme = a
        .scheme
        .as_deref()
        .map(|s| resolve_scheme(s, a.width))
        .transpose()?;
    let datapath = match (a.op, scheme) {
        (OpArg::Mul, None) => Datapath::Mul(MulUnit::mitchell(a.width)?),
        (OpArg::Mul, Some(s)) => Datapath::Mul(MulUnit::with_scheme(a.width, s)?),
        (OpArg::Div, None) => Datapath::Div(DivUnit::mitchell(div_n(a.width)?)?),
        (OpArg::Div, Some(s)) => Datapath::Div(DivUnit::with_scheme(div_n(a.width)?, s)?),
    };
    let plan = match (&a.plan, a.stages) {
        (Some(p), _) => p.parse::<PipelinePlan>()?,
        (None, s) => PipelinePlan::canonical(s.unwrap_or(4))?,
    };
    let pairs = parse_pairs(&fs::read_to_string(&a.input)?)?;
    for &(x, y) in &pairs {
        datapath.check(x, y)?;
    }
    if a.check {
        let mut pu = make_pipeline(datapath.clone(), plan);
        let mismatches = check_equivalence(&mut pu, &pairs)?;
        if mismatches != 0 {
            return Err(loglab::Error::Pipeline(format!(
                "{mismatches} of {} results differ from the combinational unit",
                pairs.len()
            ))
            .into());
        }
        println!("equivalent ({} pairs, plan {plan})", pairs.len());
    }
    let mut pu = make_pipeline(datapath, plan);
    if a.trace.is_some() {
        pu.enable_trace();
    }
    let mut outputs = Vec::with_capacity(pairs.len());
    for &p in &pairs {
        outputs.extend(pu.clock(Some(p))?);
    }
    outputs.extend(pu.flush()?);
    if let Some(t) = &a.trace {
        fs::write(t, trace_to_csv(&pu.take_trace()))?;
    }
    if a.check && a.out.is_none() {
        return Ok(());
    }
    let mut text = String::from("a,b,out\n");
    for ((x, y), r) in pairs.iter().zip(&outputs) {
        text.push_str(&format!("{x},{y},{r}\n"));
    }
    emit(a.out.as_deref(), &text)
}

fn run_bench(a: BenchArgs) -> CliResult<()> {
    let profile = match a.profile {
        ProfileArg::Exact => ArithProfile::exact(),
        ProfileArg::Mitchell => ArithProfile::mitchell()?,
        ProfileArg::Rapid => ArithProfile::rapid_default()?,
    };
    let mut reports = Vec::new();
    for path in &a.images {
        let image = read_pgm(path)?;
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_default();
        reports.push(bench_image(&name, &image, a.quality, &profile)?);
    }
    let mut text = serde_json::to_string_pretty(&reports).map_err(loglab::Error::from)?;
    text.push('\n');
    emit(a.out.as_deref(), &text)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Derive(a) => run_derive(a),
        Command::Characterize(a) => run_characterize(a),
        Command::Pipeline(a) => run_pipeline(a),
        Command::BenchJpeg(a) => run_bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(CliError::Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Ok(Err(CliError::Data(e))) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(_) => ExitCode::from(4),
    }
}
