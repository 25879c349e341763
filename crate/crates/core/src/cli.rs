//! `fogmetry` command-line interface.
//!
//! Exit codes: 0 success, 1 I/O, 2 strict validation, 3 empty pipeline,
//! 4 training failure. Usage errors exit with clap's own code (2).

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::deployment::{
    benchmark_pipeline, measure_payload, BenchmarkConfig, BenchmarkError, DeploymentPlan, DeviceProfile, LinkProfile,
    PlanKind,
};
use crate::evaluation::{cross_validate_with, CvOptions, EvalError, EvalReport};
use crate::features::{featurize_all, FeatureConfig, FeatureDataset};
use crate::ingest::{generate_synthetic, load_raw, RawReading, SyntheticConfig};
use crate::models::{train, ModelKind, ModelSpec};
use crate::windowing::segment_with_summary;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_STRICT: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;
pub const EXIT_TRAINING: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "fogmetry", version, about = "Fog/cloud activity-recognition pipeline and deployment cost benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a raw accelerometer file and print an ingest report.
    Ingest(IngestArgs),
    /// Segment raw readings and write the feature CSV.
    Featurize(FeaturizeArgs),
    /// Cross-validate classifiers on a feature CSV.
    Evaluate(EvaluateArgs),
    /// Run the whole pipeline and cost fog, cloud and hybrid deployments.
    Benchmark(BenchmarkArgs),
    /// Write a synthetic raw dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw file, or `-` for standard input.
    #[arg(long)]
    pub input: PathBuf,
    /// Exit with code 2 if any record is rejected.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long, default_value_t = 200, value_parser = parse_window_size)]
    pub window_size: usize,
    #[arg(long, default_value_t = 0.1, value_parser = parse_positive_f64)]
    pub peak_threshold: f64,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Raw file, or `-` for standard input.
    #[arg(long)]
    pub input: PathBuf,
    /// Feature CSV destination, or `-` for standard output.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Comma-separated subset of gnb, logreg, tree, mlp.
    #[arg(long, value_delimiter = ',', default_value = "gnb,logreg,tree,mlp")]
    pub models: Vec<ModelKind>,
    #[arg(long, default_value_t = 10, value_parser = parse_folds)]
    pub k_folds: usize,
    #[arg(long, env = "FOGMETRY_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Worker thread cap.
    #[arg(long, default_value_t = 1, value_parser = parse_positive_usize)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report destination, or `-` for standard output.
    #[arg(long, default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Feature CSV, or `-` for standard input.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Also train every model on the full dataset and save it as JSON here.
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthShape {
    #[arg(long, default_value_t = 4, value_parser = parse_positive_u32)]
    pub users: u32,
    #[arg(long, default_value_t = 10, value_parser = parse_positive_usize)]
    pub windows_per_activity: usize,
    #[arg(long, default_value_t = 20.0, value_parser = parse_positive_f64)]
    pub sample_rate: f64,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Raw file, or `-` for standard input. Required unless `--synthetic`.
    #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    /// Generate the raw input instead of reading it.
    #[arg(long)]
    pub synthetic: bool,
    #[command(flatten)]
    pub shape: SynthShape,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    #[arg(long, default_value_t = 1_000_000.0, value_parser = parse_positive_f64)]
    pub uplink_bps: f64,
    #[arg(long, default_value_t = 10.0, value_parser = parse_positive_f64)]
    pub fog_speed: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive_f64)]
    pub cloud_speed: f64,
    /// Fog-only plan uploads the feature table for storage.
    #[arg(long)]
    pub fog_archive: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Destination, or `-` for standard output.
    #[arg(long, default_value = "-")]
    pub output: PathBuf,
    #[command(flatten)]
    pub shape: SynthShape,
    #[arg(long, env = "FOGMETRY_SEED", default_value_t = 42)]
    pub seed: u64,
}

fn parse_positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive number")),
    }
}

fn parse_positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

fn parse_positive_u32(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("{s:?} is not a positive integer")),
    }
}

fn parse_window_size(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        _ => Err(format!("{s:?} is not a window size of at least 2")),
    }
}

fn parse_folds(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        _ => Err(format!("{s:?} is not a fold count of at least 2")),
    }
}

/// A failed command: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    fn io(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: EXIT_IO, error: error.into() }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::io(e)
    }
}

type CmdResult = Result<(), Failure>;

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn open_input(path: &Path) -> anyhow::Result<Box<dyn BufRead>> {
    if is_stdio(path) {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Ok(Box::new(BufReader::new(f)))
    }
}

fn open_output(path: &Path) -> anyhow::Result<Box<dyn Write>> {
    if is_stdio(path) {
        Ok(Box::new(BufWriter::new(io::stdout())))
    } else {
        let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn read_raw(path: &Path) -> Result<(Vec<RawReading>, crate::ingest::IngestReport), Failure> {
    let reader = open_input(path)?;
    load_raw(reader).map_err(Failure::io)
}

pub fn cmd_ingest(args: &IngestArgs) -> CmdResult {
    let (_, report) = read_raw(&args.input)?;
    print_json(&report)?;
    if args.strict && report.rejected > 0 {
        return Err(Failure {
            code: EXIT_STRICT,
            error: anyhow::anyhow!("{} record(s) rejected", report.rejected),
        });
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct FeaturizeSummary {
    readings: usize,
    rejected: usize,
    windows: usize,
    dropped_readings: usize,
    raw_bytes: u64,
    feature_bytes: u64,
}

pub fn cmd_featurize(args: &FeaturizeArgs) -> CmdResult {
    let (readings, report) = read_raw(&args.input)?;
    let seg = segment_with_summary(&readings, args.window.window_size);
    if seg.windows.is_empty() {
        return Err(Failure { code: EXIT_EMPTY, error: anyhow::anyhow!("no complete windows in input") });
    }
    let dataset = featurize_all(&seg.windows, &FeatureConfig { peak_threshold: args.window.peak_threshold });
    let mut out = open_output(&args.output)?;
    dataset.write_csv(&mut out)?;
    out.flush()?;
    let summary = FeaturizeSummary {
        readings: readings.len(),
        rejected: report.rejected,
        windows: seg.windows.len(),
        dropped_readings: seg.dropped,
        raw_bytes: measure_payload(readings.as_slice()),
        feature_bytes: measure_payload(&dataset),
    };
    if is_stdio(&args.output) {
        eprintln!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        print_json(&summary)?;
    }
    Ok(())
}

fn training_failure(e: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_TRAINING, error: e.into() }
}

fn write_eval_reports(reports: &[EvalReport], out: &OutputArgs) -> anyhow::Result<()> {
    let mut w = open_output(&out.output)?;
    match out.format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, reports)?;
            writeln!(w)?;
        }
        OutputFormat::Csv => {
            writeln!(w, "{}", EvalReport::CSV_HEADER)?;
            for r in reports {
                writeln!(w, "{}", r.csv_row())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CmdResult {
    let dataset = FeatureDataset::read_csv(open_input(&args.input)?)?;
    if dataset.is_empty() {
        return Err(Failure { code: EXIT_EMPTY, error: anyhow::anyhow!("feature file has no rows") });
    }
    let m = &args.model;
    let options = CvOptions { parallel: m.threads > 1 };
    let reports = with_threads(m.threads, || {
        m.models
            .iter()
            .map(|&kind| cross_validate_with(&dataset, &ModelSpec::new(kind, m.seed), m.k_folds, m.seed, options))
            .collect::<Result<Vec<_>, EvalError>>()
    })?
    .map_err(eval_failure)?;
    write_eval_reports(&reports, &args.out)?;

    if let Some(dir) = &args.model_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for &kind in &m.models {
            let model = train(&ModelSpec::new(kind, m.seed), &dataset).map_err(training_failure)?;
            let path = dir.join(format!("{kind}.json"));
            std::fs::write(&path, model.to_json().map_err(training_failure)?)
                .with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(())
}

fn eval_failure(e: EvalError) -> Failure {
    match e {
        EvalError::Training(_) => training_failure(e),
        EvalError::TooFewRows { .. } => Failure { code: EXIT_EMPTY, error: e.into() },
        other => training_failure(other),
    }
}

pub fn cmd_benchmark(args: &BenchmarkArgs) -> CmdResult {
    let readings = match &args.input {
        Some(path) if !args.synthetic => read_raw(path)?.0,
        _ => generate_synthetic(&SyntheticConfig {
            window_size: args.window.window_size,
            ..SyntheticConfig::new(args.shape.users, args.shape.windows_per_activity, args.shape.sample_rate, args.model.seed)
        }),
    };
    let fog = DeviceProfile::new("fog", args.fog_speed)?;
    let cloud = DeviceProfile::new("cloud", args.cloud_speed)?;
    let link = LinkProfile::new(args.uplink_bps, 1.0)?;
    let plans = PlanKind::ALL
        .iter()
        .map(|&kind| DeploymentPlan { kind, fog: fog.clone(), cloud: cloud.clone(), link, fog_archive: args.fog_archive })
        .collect();
    let config = BenchmarkConfig {
        window_size: args.window.window_size,
        features: FeatureConfig { peak_threshold: args.window.peak_threshold },
        k_folds: args.model.k_folds,
        seed: args.model.seed,
        models: args.model.models.iter().map(|&k| ModelSpec::new(k, args.model.seed)).collect(),
        plans,
        // keep wall-clock measurements single-threaded
        parallel_cv: false,
    };
    let report = with_threads(args.model.threads, || benchmark_pipeline(&readings, &config))?.map_err(|e| match e {
        BenchmarkError::NoWindows => Failure { code: EXIT_EMPTY, error: e.into() },
        BenchmarkError::Eval(inner) => eval_failure(inner),
    })?;

    let mut w = open_output(&args.out.output)?;
    match args.out.format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut w, &report)?;
            writeln!(w)?;
        }
        OutputFormat::Csv => report.write_csv(&mut w)?,
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let readings = generate_synthetic(&SyntheticConfig::new(
        args.shape.users,
        args.shape.windows_per_activity,
        args.shape.sample_rate,
        args.seed,
    ));
    let mut w = open_output(&args.output)?;
    for r in &readings {
        r.write_record(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn execute(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Featurize(a) => cmd_featurize(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("fogmetry: {:#}", f.error);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_stable() {
        let cli = Cli::try_parse_from(["fogmetry", "benchmark", "--synthetic"]).unwrap();
        let Command::Benchmark(b) = cli.command else { panic!() };
        assert_eq!(b.window.window_size, 200);
        assert_eq!(b.window.peak_threshold, 0.1);
        assert_eq!(b.model.k_folds, 10);
        assert_eq!(b.uplink_bps, 1_000_000.0);
        assert_eq!((b.fog_speed, b.cloud_speed), (10.0, 1.0));
        assert_eq!(b.model.models, ModelKind::ALL.to_vec());
        assert_eq!(b.out.format, OutputFormat::Json);
    }

    #[test]
    fn rejects_non_positive_flags() {
        for bad in [
            ["fogmetry", "benchmark", "--synthetic", "--uplink-bps", "0"],
            ["fogmetry", "benchmark", "--synthetic", "--fog-speed", "-1"],
            ["fogmetry", "benchmark", "--synthetic", "--k-folds", "1"],
            ["fogmetry", "benchmark", "--synthetic", "--window-size", "1"],
            ["fogmetry", "benchmark", "--synthetic", "--models", "svm"],
        ] {
            assert!(Cli::try_parse_from(bad).is_err(), "{bad:?}");
        }
    }
}
