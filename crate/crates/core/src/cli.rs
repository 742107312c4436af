//! The `svrand` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 selftest failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitio::{self, BitFormat, BitSequence};
use crate::combine::{
    combine, increasing_weights_fixture, CombinerRegistry, MaxCombiner, Combiner,
    WeightFamily, WeightScheme,
};
use crate::discretize::{discretize, DiscretizationMethod};
use crate::error::Error;
use crate::estimator::{default_hmax, Estimator, EstimatorConfig, EstimatorMode, DEFAULT_DENSE_LIMIT};
use crate::reference;
use crate::report::{InputInfo, Report};
use crate::svsim::{self, SourceKind, SourceSpec};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_SELFTEST: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "svrand", version, about = "Estimate the Santha-Vazirani parameter of a bit source")]
pub struct Cli {
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate ε̃_h and the combined ε of an input file.
    Estimate(EstimateArgs),
    /// Generate bits from a synthetic ε-SV source.
    Simulate(SimulateArgs),
    /// Run the built-in axiom, counting and I/O checks.
    Selftest(SelftestArgs),
    /// Convert between input formats.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One real number per line; needs a discretization.
    AsciiReals,
    /// `0`/`1` characters.
    Ascii01,
    /// Packed bytes, MSB first.
    RawBytes,
}

impl InputFormat {
    fn bit_format(self) -> Option<BitFormat> {
        match self {
            InputFormat::AsciiReals => None,
            InputFormat::Ascii01 => Some(BitFormat::Ascii01),
            InputFormat::RawBytes => Some(BitFormat::RawBytes),
        }
    }

    fn name(self) -> &'static str {
        match self {
            InputFormat::AsciiReals => "ascii-reals",
            InputFormat::Ascii01 => "ascii01",
            InputFormat::RawBytes => "raw-bytes",
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Input file.
    pub input: PathBuf,

    #[arg(long, value_enum, default_value = "ascii-reals")]
    pub format: InputFormat,

    /// Discretization method 1-5 (ascii-reals only; default 1).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub discretization: Option<u8>,

    /// Use only the first N records: values for ascii-reals, bits otherwise.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub lines: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Combiner: `exp` or `poly:K`. Repeat for several.
    #[arg(long = "combiner", value_name = "exp|poly:K", default_value = "exp")]
    pub combiners: Vec<WeightFamily>,

    /// Largest history length (default ⌊log₂ n⌋ − 1).
    #[arg(long = "history-max", value_name = "H")]
    pub history_max: Option<usize>,

    /// Normalize counts by their window totals before taking ratios.
    #[arg(long)]
    pub finite_size: bool,

    /// Counting threads.
    #[arg(long, env = "SVRAND_THREADS", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: u64,

    /// Widest substring table kept as a dense array.
    #[arg(long, default_value_t = DEFAULT_DENSE_LIMIT)]
    pub dense_limit: usize,

    /// Also report the maximum ε̃_h (diagnostic only).
    #[arg(long)]
    pub diagnostic_max: bool,

    #[arg(long, conflicts_with = "json")]
    pub csv: bool,

    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKindArg {
    Iid,
    Pattern,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: SourceKindArg,

    #[arg(long)]
    pub epsilon: f64,

    /// History order m (pattern only).
    #[arg(long, default_value_t = 1)]
    pub order: usize,

    /// Hex sign table; bit w set means history w pushes towards 1.
    #[arg(long, value_name = "HEX")]
    pub sign_table: Option<String>,

    #[arg(long)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, value_enum, default_value = "raw-bytes")]
    pub format: BitFormat,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Random profiles per axiom check.
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    /// Also check a combiner with increasing weights, which must fail A3.
    #[arg(long)]
    pub inject_adversarial: bool,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Output file.
    pub output: PathBuf,

    #[arg(long, value_enum)]
    pub to: BitFormat,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(Error::Io(e))
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(&args, &mut out),
        Command::Simulate(args) => cmd_simulate(&args, &mut out),
        Command::Convert(args) => cmd_convert(&args, &mut out),
        Command::Selftest(args) => {
            return match cmd_selftest(&args, &mut out) {
                Ok(true) => EXIT_OK,
                Ok(false) => EXIT_SELFTEST,
                Err(e) => {
                    eprintln!("svrand: {e}");
                    EXIT_DATA
                }
            }
        }
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("svrand: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(e)) => {
            eprintln!("svrand: {e}");
            EXIT_DATA
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Peak resident set size in KiB, where the platform exposes it.
fn memory_high_water_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))))
}

/// Reads and, for real-valued input, discretizes.
fn load_bits(args: &InputArgs) -> Result<(BitSequence, InputInfo), CliError> {
    let limit = args.lines.map(|l| l as usize);
    let reader = open(&args.input)?;
    let (bits, skipped, discretization) = match args.format.bit_format() {
        None => {
            let method = DiscretizationMethod::from_id(args.discretization.unwrap_or(1))?;
            let series = bitio::read_ascii_reals_limited(reader, limit)?;
            log::info!(
                "read {} values ({} lines skipped)",
                series.len(),
                series.skipped_lines()
            );
            (discretize(&series, method)?, series.skipped_lines(), method.to_string())
        }
        Some(format) => {
            if args.discretization.is_some() {
                return Err(CliError::Usage(format!(
                    "--discretization applies only to ascii-reals input, not {}",
                    args.format.name()
                )));
            }
            let mut bits = bitio::read_bits(reader, format)?;
            if let Some(l) = limit {
                bits.truncate(l);
            }
            (bits, 0, "binary".to_string())
        }
    };
    let info = InputInfo {
        path: args.input.display().to_string(),
        format: args.format.name().to_string(),
        n: bits.len(),
        skipped_lines: skipped,
        discretization,
    };
    Ok((bits, info))
}

pub fn build_report(
    bits: &BitSequence,
    input: InputInfo,
    config: EstimatorConfig,
    h_max: Option<usize>,
    families: &[WeightFamily],
    diagnostic_max: bool,
) -> crate::Result<Report> {
    let started = Instant::now();
    let h_max = match h_max {
        Some(h) => h,
        None => default_hmax(bits.len())?,
    };
    let profile = Estimator::new(config).profile(bits, h_max)?;
    let combiners = families
        .iter()
        .map(|&family| combine(&profile, &WeightScheme { family, h_max }))
        .collect::<crate::Result<Vec<_>>>()?;
    let diagnostic_max = diagnostic_max.then(|| MaxCombiner.combine(&profile.epsilons));
    Ok(Report {
        tool: "svrand".into(),
        version: crate::VERSION.into(),
        input,
        profile,
        combiners,
        diagnostic_max,
        duration_seconds: started.elapsed().as_secs_f64(),
    })
}

fn cmd_estimate(args: &EstimateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let (bits, info) = load_bits(&args.input)?;
    let config = EstimatorConfig {
        mode: if args.finite_size {
            EstimatorMode::FiniteSize
        } else {
            EstimatorMode::RawRatio
        },
        dense_limit: args.dense_limit,
        threads: args.threads as usize,
    };
    let mut report = build_report(
        &bits,
        info,
        config,
        args.history_max,
        &args.combiners,
        args.diagnostic_max,
    )?;
    report.duration_seconds = started.elapsed().as_secs_f64();
    log::info!("estimate finished in {:.3} s", report.duration_seconds);
    if let Some(kib) = memory_high_water_kib() {
        log::info!("memory high-water mark {kib} KiB");
    }
    let text = if args.json {
        report.to_json() + "\n"
    } else if args.csv {
        report.to_csv()
    } else {
        report.to_table()
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn write_output(bits: &BitSequence, format: BitFormat, path: &Path) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    bitio::write_bits(bits, format, BufWriter::new(file))?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let kind = match args.kind {
        SourceKindArg::Iid => SourceKind::IidBias,
        SourceKindArg::Pattern => {
            let hex = args
                .sign_table
                .as_deref()
                .ok_or_else(|| CliError::Usage("--sign-table is required for --kind pattern".into()))?;
            SourceKind::PatternBias {
                order: args.order,
                sign_table: svsim::parse_sign_table(hex, args.order).map_err(|e| CliError::Usage(e.to_string()))?,
            }
        }
    };
    let spec = SourceSpec {
        kind,
        epsilon: args.epsilon,
        n: args.n,
        seed: args.seed,
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let bits = svsim::generate(&spec)?;
    write_output(&bits, args.format, &args.out)?;
    let meta = serde_json::json!({
        "out": args.out.display().to_string(),
        "format": args.format,
        "bits": bits.len(),
        "bytes": match args.format {
            BitFormat::RawBytes => bits.len().div_ceil(8),
            BitFormat::Ascii01 => bits.len(),
        },
        "true_epsilon": svsim::true_epsilon(&spec),
        "spec": spec,
    });
    writeln!(out, "{meta}")?;
    Ok(())
}

fn cmd_convert(args: &ConvertArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (bits, info) = load_bits(&args.input)?;
    write_output(&bits, args.to, &args.output)?;
    let meta = serde_json::json!({
        "out": args.output.display().to_string(),
        "format": args.to,
        "bits": bits.len(),
        "bytes": match args.to {
            BitFormat::RawBytes => bits.len().div_ceil(8),
            BitFormat::Ascii01 => bits.len(),
        },
        "skipped_lines": info.skipped_lines,
        "discretization": info.discretization,
    });
    writeln!(out, "{meta}")?;
    Ok(())
}

/// Outcome of one selftest suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Runs every selftest suite. Output depends only on the arguments.
pub fn selftest_suites(args: &SelftestArgs) -> Vec<SuiteResult> {
    let mut results = Vec::new();

    for h_max in [4usize, 8, 16] {
        let mut registry = CombinerRegistry::standard(h_max);
        if args.inject_adversarial {
            registry.register(Box::new(increasing_weights_fixture(h_max)));
        }
        for report in registry.check_all(h_max, args.trials, args.seed) {
            let detail = match report.counterexamples.first() {
                None => format!("{} trials, no counterexample", report.trials),
                Some(c) => c.to_string(),
            };
            results.push(SuiteResult {
                name: format!("axioms {} h_max={}", report.combiner, h_max),
                passed: report.passed(),
                detail,
            });
        }
    }

    results.push(counting_suite(args.seed));
    results.push(profile_suite(args.seed));
    results.push(roundtrip_suite(args.seed));
    results
}

fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> BitSequence {
    let bias: f64 = rng.random_range(0.05..0.95);
    BitSequence::from_bits((0..n).map(|_| rng.random_bool(bias) as u8)).expect("n >= 1")
}

fn counting_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let estimator = Estimator::default();
    let sparse = Estimator::new(EstimatorConfig {
        dense_limit: 0,
        ..Default::default()
    });
    for case in 0..100 {
        let n = rng.random_range(1..=4096);
        let bits = random_bits(&mut rng, n);
        let width = rng.random_range(1..=n.min(10));
        let expected = reference::naive_counts(&bits, width);
        for est in [&estimator, &sparse] {
            let table = est.count_substrings(&bits, width).expect("valid width");
            let mismatch = (0..1u64 << width).find(|&k| table.get(k) != expected.get(&k).copied().unwrap_or(0));
            if let Some(k) = mismatch {
                return SuiteResult {
                    name: "counting oracle".into(),
                    passed: false,
                    detail: format!("case {case}: n={n} L={width} string {k:0width$b} differs"),
                };
            }
        }
    }
    SuiteResult {
        name: "counting oracle".into(),
        passed: true,
        detail: "100 random sequences, dense and sparse tables".into(),
    }
}

fn profile_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    for case in 0..30 {
        let n = rng.random_range(2..=600);
        let bits = random_bits(&mut rng, n);
        let h_max = rng.random_range(0..n.min(8));
        let p = crate::estimator::profile(&bits, h_max).expect("h_max < n");
        for h in 0..=h_max {
            let want = reference::naive_epsilon(&bits, h);
            if (p.epsilons[h] - want).abs() > 1e-15 {
                return SuiteResult {
                    name: "profile oracle".into(),
                    passed: false,
                    detail: format!("case {case}: n={n} h={h}: {} != {want}", p.epsilons[h]),
                };
            }
        }
    }
    SuiteResult {
        name: "profile oracle".into(),
        passed: true,
        detail: "30 random sequences against direct enumeration".into(),
    }
}

fn roundtrip_suite(seed: u64) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    for case in 0..50 {
        let n = rng.random_range(1..=10_000);
        let bits = random_bits(&mut rng, n);
        for format in [BitFormat::Ascii01, BitFormat::RawBytes] {
            let mut buf = Vec::new();
            let ok = bitio::write_bits(&bits, format, &mut buf).is_ok()
                && bitio::read_bits(buf.as_slice(), format)
                    .map(|mut back| {
                        back.truncate(bits.len());
                        back == bits
                    })
                    .unwrap_or(false);
            if !ok {
                return SuiteResult {
                    name: "i/o round trip".into(),
                    passed: false,
                    detail: format!("case {case}: n={n} format {format}"),
                };
            }
        }
    }
    SuiteResult {
        name: "i/o round trip".into(),
        passed: true,
        detail: "50 random sequences, ascii01 and raw-bytes".into(),
    }
}

fn cmd_selftest(args: &SelftestArgs, out: &mut dyn Write) -> io::Result<bool> {
    let results = selftest_suites(args);
    let passed = results.iter().filter(|r| r.passed).count();
    for r in &results {
        writeln!(
            out,
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        )?;
    }
    writeln!(out, "selftest: {passed}/{} suites passed (seed {})", results.len(), args.seed)?;
    Ok(passed == results.len())
}
