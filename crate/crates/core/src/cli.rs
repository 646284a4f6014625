//! Spec-file ingestion, command dispatch, and reporting.
//!
//! Numeric I/O is exact end to end: coefficient and range strings are parsed
//! as rationals (never through binary floating point), so `"0.1"` means
//! exactly 1/10 at parse time and only the quantizer introduces rounding.
//!
//! Exit codes: 0 verified, 1 violation, 2 unknown/timeout, 3 usage or spec
//! error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::filter_model::{FilterSpec, FilterSpecError};
use crate::fixedpoint::{FixedFormat, FormatError, OverflowMode, Rational};
use crate::smt_backend::{encode, SmtEngineConfig};
use crate::timing::{verify_timing, CycleTable, TimingSpec};
use crate::verifier::{
    verify_limit_cycle, verify_overflow, Counterexample, Engine, Property, VerificationResult,
    ViolationKind, DEFAULT_BUDGET,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as an exact decimal or p/q rational")]
pub struct ParseDecimalError(pub String);

/// Parses a decimal string (optional sign, optional fraction, optional
/// `e`-exponent) or a `p/q` rational into an exact [`Rational`].
pub fn parse_decimal(s: &str) -> Result<Rational, ParseDecimalError> {
    let err = || ParseDecimalError(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((p, q)) = t.split_once('/') {
        let num: BigInt = p.trim().parse().map_err(|_| err())?;
        let den: BigInt = q.trim().parse().map_err(|_| err())?;
        if !den.is_positive() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    let (mantissa, exp) = match t.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| err())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let combined: BigInt = format!("{int_part}{frac_part}")
        .trim_start_matches('0')
        .parse()
        .unwrap_or_else(|_| BigInt::zero());
    let mut value = Rational::new(combined, BigInt::from(10u8).pow(frac_part.len() as u32));
    let ten = BigInt::from(10u8);
    if exp >= 0 {
        value *= Rational::from_integer(ten.pow(exp as u32));
    } else {
        value /= Rational::from_integer(ten.pow(exp.unsigned_abs()));
    }
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Renders a rational exactly: a terminating decimal when the denominator is
/// of the form `2^a * 5^b`, else `p/q`. Output re-parses via
/// [`parse_decimal`] to the identical value.
pub fn rational_to_string(r: &Rational) -> String {
    let mut den = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    let two = BigInt::from(2u8);
    let five = BigInt::from(5u8);
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scaled = (r.numer() * BigInt::from(10u8).pow(digits)) / r.denom();
    let neg = scaled.is_negative();
    let mag = scaled.magnitude().to_string();
    let mag = format!("{mag:0>width$}", width = digits as usize + 1);
    let split = mag.len() - digits as usize;
    let (int_part, frac_part) = mag.split_at(split);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push_str(int_part);
    let frac = frac_part.trim_end_matches('0');
    if !frac.is_empty() {
        out.push('.');
        out.push_str(frac);
    }
    out
}

/// On-disk filter description; all numbers are exact decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Feedback coefficients `a_1..a_N`; empty for FIR filters.
    #[serde(default)]
    pub a: Vec<String>,
    /// Feedforward coefficients `b_0..b_M`.
    pub b: Vec<String>,
    pub format: FormatFile,
    /// `[lo, hi]` bounds on the input signal.
    pub input_range: [String; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormatFile {
    pub int_bits: u32,
    pub frac_bits: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum SpecFileError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed spec file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("in field {field}: {source}")]
    Decimal {
        field: String,
        source: ParseDecimalError,
    },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Filter(#[from] FilterSpecError),
}

/// A parsed spec plus the file metadata it came with.
#[derive(Debug, Clone)]
pub struct LoadedSpec {
    pub spec: FilterSpec,
    pub file: FilterSpecFile,
}

pub fn load_filter_spec(path: &Path) -> Result<LoadedSpec, SpecFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecFileError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let file: FilterSpecFile = toml::from_str(&text)?;
    let spec = spec_from_file(&file)?;
    Ok(LoadedSpec { spec, file })
}

pub fn spec_from_file(file: &FilterSpecFile) -> Result<FilterSpec, SpecFileError> {
    let parse_field = |field: String, s: &str| {
        parse_decimal(s).map_err(|source| SpecFileError::Decimal { field, source })
    };
    let a = file
        .a
        .iter()
        .enumerate()
        .map(|(i, s)| parse_field(format!("a[{}]", i + 1), s))
        .collect::<Result<Vec<_>, _>>()?;
    let b = file
        .b
        .iter()
        .enumerate()
        .map(|(i, s)| parse_field(format!("b[{i}]"), s))
        .collect::<Result<Vec<_>, _>>()?;
    let format = FixedFormat::new(file.format.int_bits, file.format.frac_bits)?;
    let lo = parse_field("input_range[0]".into(), &file.input_range[0])?;
    let hi = parse_field("input_range[1]".into(), &file.input_range[1])?;
    Ok(FilterSpec::new(a, b, format, (lo, hi), OverflowMode::Error)?)
}

/// Writes a spec back to disk; the result reparses to an identical
/// [`FilterSpec`] because every value is rendered exactly.
pub fn save_filter_spec(
    spec: &FilterSpec,
    name: Option<&str>,
    notes: Option<&str>,
    path: &Path,
) -> Result<(), SpecFileError> {
    let file = FilterSpecFile {
        name: name.map(str::to_string),
        a: spec.a().iter().map(|c| c.to_decimal_string()).collect(),
        b: spec.b().iter().map(|c| c.to_decimal_string()).collect(),
        format: FormatFile {
            int_bits: spec.format().int_bits(),
            frac_bits: spec.format().frac_bits(),
        },
        input_range: [
            rational_to_string(spec.input_range().0),
            rational_to_string(spec.input_range().1),
        ],
        notes: notes.map(str::to_string),
    };
    let text = toml::to_string_pretty(&file).expect("spec file always serializes");
    std::fs::write(path, text).map_err(|source| SpecFileError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Human-readable verification report.
#[derive(Debug)]
pub struct Report {
    pub property: Property,
    pub engine: String,
    pub bound: usize,
    pub elapsed: Duration,
    pub spec_name: Option<String>,
    pub result: VerificationResult,
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.spec_name {
            let _ = writeln!(out, "filter:   {name}");
        }
        let _ = writeln!(out, "property: {}", self.property);
        let _ = writeln!(out, "engine:   {}", self.engine);
        let _ = writeln!(out, "bound:    {}", self.bound);
        let _ = writeln!(out, "elapsed:  {:.3} s", self.elapsed.as_secs_f64());
        match &self.result {
            VerificationResult::Verified(bound) => {
                let _ = writeln!(out, "verdict:  VERIFIED (no violation within {bound} steps)");
            }
            VerificationResult::Unknown(reason) => {
                let _ = writeln!(out, "verdict:  UNKNOWN");
                let _ = writeln!(out, "reason:   {reason}");
            }
            VerificationResult::Violation(cx) => {
                let _ = writeln!(out, "verdict:  VIOLATION");
                let _ = writeln!(out, "cause:    {}", cx.violation);
                let init = &cx.initial_state;
                if !init.y_hist().is_empty() || !init.x_hist().is_empty() {
                    let mut parts = Vec::new();
                    for (i, v) in init.y_hist().iter().enumerate() {
                        parts.push(format!("y(-{}) = {}", i + 1, v.to_decimal_string()));
                    }
                    for (i, v) in init.x_hist().iter().enumerate() {
                        parts.push(format!("x(-{}) = {}", i + 1, v.to_decimal_string()));
                    }
                    let _ = writeln!(out, "initial state: {}", parts.join(", "));
                }
                out.push('\n');
                out.push_str(&render_trace_table(cx));
            }
        }
        out
    }
}

/// The per-step table: decimal input, decimal output, binary output.
fn render_trace_table(cx: &Counterexample) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>4}  {:<12}  {:<12}  {}", "n", "x(n)", "y(n)", "y(n) bits");
    for step in &cx.trace.steps {
        match step.y {
            Some(y) => {
                let _ = writeln!(
                    out,
                    "{:>4}  {:<12}  {:<12}  {}",
                    step.n,
                    step.x.to_decimal_string(),
                    y.to_decimal_string(),
                    y.to_binary_string()
                );
            }
            None => {
                let what = match &cx.violation {
                    ViolationKind::Overflow { op, .. } => format!("overflow at {op}"),
                    other => other.to_string(),
                };
                let _ = writeln!(out, "{:>4}  {:<12}  {what}", step.n, step.x.to_decimal_string());
            }
        }
    }
    out
}

/// Machine-readable trace export.
pub fn trace_csv(cx: &Counterexample) -> String {
    let mut out = String::from("n,x,y_bin,y_dec,op_violation\n");
    for step in &cx.trace.steps {
        match step.y {
            Some(y) => {
                let _ = writeln!(
                    out,
                    "{},{},{},{},",
                    step.n,
                    step.x.to_decimal_string(),
                    y.to_binary_string(),
                    y.to_decimal_string()
                );
            }
            None => {
                let op = match &cx.violation {
                    ViolationKind::Overflow { op, .. } => op.to_string(),
                    _ => String::new(),
                };
                let _ = writeln!(out, "{},{},,,{}", step.n, step.x.to_decimal_string(), op);
            }
        }
    }
    out
}

#[derive(Debug, Parser)]
#[command(
    name = "fixcheck",
    version,
    about = "Bounded verification of fixed-point Direct Form I digital filters"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search for arithmetic overflow under error-detecting quantization.
    Overflow(VerifyArgs),
    /// Search for zero-input limit cycles under wrap-around quantization.
    Limitcycle(VerifyArgs),
    /// Check the per-sample cycle budget against the sampling deadline.
    Timing(TimingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineKind {
    Exhaustive,
    Smt,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Filter spec file (TOML).
    spec: PathBuf,
    /// Number of samples to unroll.
    #[arg(long, default_value_t = 6)]
    bound: usize,
    #[arg(long, value_enum, default_value_t = EngineKind::Exhaustive)]
    engine: EngineKind,
    /// Solver command line for the SMT engine (default: the bundled solver).
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Solver timeout in seconds.
    #[arg(long, default_value_t = 3600)]
    timeout: u64,
    /// Simulation budget for the exhaustive engine.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Write the generated SMT-LIB script here for offline inspection.
    #[arg(long)]
    emit_smt: Option<PathBuf>,
    /// Write the counterexample trace here as delimited text.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TimingArgs {
    /// Filter spec file (TOML).
    spec: PathBuf,
    /// Processor clock in Hz.
    #[arg(long)]
    clock_hz: u64,
    /// Sampling rate in Hz.
    #[arg(long)]
    sample_rate_hz: u64,
    /// Bundled table name (`msp430g2231`) or a cycle-table file path.
    #[arg(long, default_value = "msp430g2231")]
    cycle_table: String,
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // --help and --version are successful exits, not usage errors
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    match cli.command {
        Command::Overflow(args) => run_verify(Property::Overflow, &args),
        Command::Limitcycle(args) => run_verify(Property::LimitCycle, &args),
        Command::Timing(args) => run_timing(&args),
    }
}

fn result_exit_code(result: &VerificationResult) -> i32 {
    match result {
        VerificationResult::Verified(_) => 0,
        VerificationResult::Violation(_) => 1,
        VerificationResult::Unknown(_) => 2,
    }
}

fn run_verify(property: Property, args: &VerifyArgs) -> i32 {
    if args.bound == 0 {
        eprintln!("error: --bound must be at least 1");
        return 3;
    }
    let loaded = match load_filter_spec(&args.spec) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    if let Some(path) = &args.emit_smt {
        let script = encode(&loaded.spec, property, args.bound);
        if let Err(e) = std::fs::write(path, &script.text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 3;
        }
    }
    let (engine, engine_name) = match args.engine {
        EngineKind::Exhaustive => (
            Engine::Exhaustive { budget: args.budget },
            "exhaustive".to_string(),
        ),
        EngineKind::Smt => {
            let mut cfg = SmtEngineConfig::default();
            if let Some(cmd) = &args.solver_cmd {
                let parts: Vec<String> = cmd.split_whitespace().map(str::to_string).collect();
                if parts.is_empty() {
                    eprintln!("error: --solver-cmd is empty");
                    return 3;
                }
                cfg.solver_cmd = parts;
            }
            cfg.timeout = Duration::from_secs(args.timeout);
            (Engine::Smt(cfg), "smt".to_string())
        }
    };
    let start = Instant::now();
    let result = match property {
        Property::Overflow => verify_overflow(&loaded.spec, args.bound, &engine),
        Property::LimitCycle => verify_limit_cycle(&loaded.spec, args.bound, &engine),
        Property::Timing => unreachable!(),
    };
    let report = Report {
        property,
        engine: engine_name,
        bound: args.bound,
        elapsed: start.elapsed(),
        spec_name: loaded.file.name.clone(),
        result,
    };
    print!("{}", report.render());
    if let Some(path) = &args.trace_out {
        if let VerificationResult::Violation(cx) = &report.result {
            if let Err(e) = std::fs::write(path, trace_csv(cx)) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 3;
            }
        }
    }
    result_exit_code(&report.result)
}

fn resolve_cycle_table(arg: &str) -> Result<CycleTable, String> {
    if arg == "msp430g2231" {
        return Ok(CycleTable::msp430g2231());
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| format!("cannot read cycle table {arg}: {e}"))?;
    toml::from_str(&text).map_err(|e| format!("malformed cycle table {arg}: {e}"))
}

fn run_timing(args: &TimingArgs) -> i32 {
    let loaded = match load_filter_spec(&args.spec) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    let timing = match TimingSpec::new(args.clock_hz, args.sample_rate_hz) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    let table = match resolve_cycle_table(&args.cycle_table) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 3;
        }
    };
    let check = verify_timing(&loaded.spec, &timing, &table);
    if let Some(name) = &loaded.file.name {
        println!("filter:   {name}");
    }
    println!("property: timing");
    println!("table:    {} ({} cycles per tap)", table.name, table.mac_cycles);
    println!(
        "cycles:   {} ({} taps)",
        check.cycles,
        loaded.spec.tap_count()
    );
    println!("elapsed:  {} s ({})", rational_to_string(&check.elapsed), approx_us(&check.elapsed));
    println!("deadline: {} s ({})", rational_to_string(&check.deadline), approx_us(&check.deadline));
    println!("slack:    {} s", rational_to_string(&check.slack));
    if check.meets_deadline {
        println!("verdict:  VERIFIED (deadline met)");
        0
    } else {
        println!("verdict:  VIOLATION (deadline missed)");
        1
    }
}

fn approx_us(seconds: &Rational) -> String {
    let us = seconds * Rational::from_integer(BigInt::from(1_000_000u32));
    let approx = us.numer().to_string().parse::<f64>().unwrap_or(f64::NAN)
        / us.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    format!("{approx:.3} us")
}
