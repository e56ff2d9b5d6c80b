//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 when a rule or comparison
//! fails, 2 for usage, input, and I/O errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::engine::{max_deviation, EngineError, EngineKind};
use crate::experiment::{
    joint_distribution, run_once, run_show, verify_correlation, verify_parity, MeasurementOrder, RunRecord,
    SeedMaterial, ShowReport,
};
use crate::localrealism::{counting_proof, enumerate_instruction_sets, search_contextual_strategies, STRATEGY_COUNT};
use crate::pentagram::{validate_config, ConfigError, LineLabel, PentagramConfig};
use crate::stabilizer::StabilizerEngine;
use crate::statevector::StateVectorEngine;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Largest exact-distribution deviation `crosscheck` accepts.
pub const CROSSCHECK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "pentagram", version, about = "Magic-pentagram Bell experiment simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the show and emit one record per run plus a summary line.
    Show(ShowArgs),
    /// Re-check parity and correlation on a record stream (file or stdin).
    Verify(VerifyArgs),
    /// Print the observable table and derived lines.
    Lines(OutArgs),
    /// Run the local-realism searches and the counting proof.
    NoGo(OutArgs),
    /// Compare the two engines' exact outcome distributions on all setting pairs.
    Crosscheck(CrosscheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Statevector,
    Stabilizer,
    Both,
}

impl EngineChoice {
    fn kinds(self) -> &'static [EngineKind] {
        match self {
            EngineChoice::Statevector => &[EngineKind::Statevector],
            EngineChoice::Stabilizer => &[EngineKind::Stabilizer],
            EngineChoice::Both => &EngineKind::ALL,
        }
    }

    fn name(self) -> &'static str {
        match self {
            EngineChoice::Statevector => "statevector",
            EngineChoice::Stabilizer => "stabilizer",
            EngineChoice::Both => "both",
        }
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Write output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ShowArgs {
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EngineChoice::Stabilizer)]
    pub engine: EngineChoice,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Record stream to check; standard input when omitted or `-`.
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `exact` or a positive run count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrosscheckRuns {
    Exact,
    Sampled(u64),
}

impl FromStr for CrosscheckRuns {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "exact" {
            return Ok(CrosscheckRuns::Exact);
        }
        match s.parse::<u64>() {
            Ok(n) if n >= 1 => Ok(CrosscheckRuns::Sampled(n)),
            _ => Err(format!("expected `exact` or a positive integer, got {s:?}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct CrosscheckArgs {
    /// `exact` compares branch distributions only; a number additionally
    /// compares that many sampled runs record by record.
    #[arg(long, default_value = "exact")]
    pub runs: CrosscheckRuns,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Summary object closing a `show` stream.
#[derive(Debug, Serialize)]
struct ShowSummary<'a> {
    runs: u64,
    parity_violations: u64,
    correlation_violations: u64,
    engine: &'a str,
    seed: u64,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, stdin, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let out_path = match &command {
        Command::Show(a) => a.out.clone(),
        Command::Verify(a) => a.out.clone(),
        Command::Lines(a) | Command::NoGo(a) => a.out.clone(),
        Command::Crosscheck(a) => a.out.clone(),
    };
    let mut file_out;
    let out: &mut dyn Write = match out_path {
        Some(path) => {
            let file = File::create(&path)
                .map_err(|e| io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display())))?;
            file_out = BufWriter::new(file);
            &mut file_out
        }
        None => stdout,
    };
    let code = match command {
        Command::Show(a) => cmd_show(&a, out)?,
        Command::Verify(a) => cmd_verify(&a, stdin, out)?,
        Command::Lines(_) => cmd_lines(out)?,
        Command::NoGo(_) => cmd_no_go(out)?,
        Command::Crosscheck(a) => cmd_crosscheck(&a, out)?,
    };
    out.flush()?;
    Ok(code)
}

fn show_for(
    kind: EngineKind,
    config: &PentagramConfig,
    runs: u64,
    seed: u64,
) -> Result<(ShowReport, Vec<RunRecord>), EngineError> {
    match kind {
        EngineKind::Statevector => run_show(&StateVectorEngine, config, runs, seed),
        EngineKind::Stabilizer => run_show(&StabilizerEngine, config, runs, seed),
    }
}

pub fn cmd_show(args: &ShowArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = PentagramConfig::canonical()?;
    let mut report = ShowReport::default();
    let mut streams = Vec::new();
    for &kind in args.engine.kinds() {
        let (r, records) = show_for(kind, &config, args.runs, args.seed)?;
        report.merge(&r);
        streams.push(records);
    }
    // With both engines, records interleave per run: statevector, then stabilizer.
    for k in 0..args.runs as usize {
        for records in &streams {
            writeln!(out, "{}", records[k].to_line())?;
        }
    }
    let summary = ShowSummary {
        runs: args.runs,
        parity_violations: report.parity_violations,
        correlation_violations: report.correlation_violations,
        engine: args.engine.name(),
        seed: args.seed,
    };
    writeln!(out, "{}", serde_json::to_string(&summary).expect("summary serializes"))?;
    Ok(if report.violations() == 0 { EXIT_OK } else { EXIT_FAILED })
}

fn is_summary(value: &serde_json::Value) -> bool {
    value.get("parity_violations").is_some() && value.get("run").is_none()
}

pub fn cmd_verify(args: &VerifyArgs, stdin: &mut dyn BufRead, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = PentagramConfig::canonical()?;
    let mut file_in;
    let input: &mut dyn BufRead = match &args.input {
        Some(path) if path.as_os_str() != "-" => {
            file_in = BufReader::new(File::open(path)?);
            &mut file_in
        }
        _ => stdin,
    };
    let (mut records, mut parity, mut correlation) = (0u64, 0u64, 0u64);
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        let number = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| CliError::Record {
            line: number,
            message: format!("parse error: {e}"),
        })?;
        if is_summary(&value) {
            continue;
        }
        let record: RunRecord = serde_json::from_value(value).map_err(|e| CliError::Record {
            line: number,
            message: format!("malformed record: {e}"),
        })?;
        if !record.covers_lines(&config) {
            return Err(CliError::Record {
                line: number,
                message: "colors do not cover exactly the nodes of the switch settings".into(),
            });
        }
        records += 1;
        if !verify_parity(&record) {
            parity += 1;
            writeln!(out, "line {number} (run {}): parity violation", record.run_index)?;
        }
        if !verify_correlation(&record, &config) {
            correlation += 1;
            writeln!(out, "line {number} (run {}): correlation violation", record.run_index)?;
        }
    }
    writeln!(
        out,
        "{}",
        serde_json::json!({
            "records": records,
            "parity_violations": parity,
            "correlation_violations": correlation,
        })
    )?;
    Ok(if parity + correlation == 0 {
        EXIT_OK
    } else {
        EXIT_FAILED
    })
}

pub fn cmd_lines(out: &mut dyn Write) -> Result<i32, CliError> {
    let config = PentagramConfig::canonical()?;
    write!(out, "{config}")?;
    let report = validate_config(&config);
    write!(out, "{report}")?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
}

pub fn cmd_no_go(out: &mut dyn Write) -> Result<i32, CliError> {
    let config = PentagramConfig::canonical()?;
    let report = enumerate_instruction_sets(&config);
    let survivors = search_contextual_strategies(&config);
    let transcript = counting_proof(&config);
    writeln!(out, "instruction sets: {report}")?;
    writeln!(
        out,
        "per-line strategies: {STRATEGY_COUNT} checked, {survivors} noncontextual survivors"
    )?;
    write!(out, "{transcript}")?;
    writeln!(
        out,
        "{} colorings, {} satisfy parity; {STRATEGY_COUNT} strategies, {survivors} survive",
        report.colorings_checked, report.parity_satisfying
    )?;
    let ok = report.parity_satisfying == 0 && survivors == 0 && transcript.contradiction;
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

/// Largest engine-vs-engine and order-vs-order deviation over all 25 pairs.
pub fn exact_crosscheck(
    config: &PentagramConfig,
    mut log: impl FnMut(LineLabel, LineLabel, f64, f64),
) -> Result<(f64, f64), EngineError> {
    let (mut engines, mut orders) = (0.0f64, 0.0f64);
    for a in LineLabel::ALL {
        for b in LineLabel::ALL {
            let dense = joint_distribution(&StateVectorEngine, config, a, b, MeasurementOrder::AliceFirst)?;
            let dense_rev = joint_distribution(&StateVectorEngine, config, a, b, MeasurementOrder::BobFirst)?;
            let stab = joint_distribution(&StabilizerEngine, config, a, b, MeasurementOrder::AliceFirst)?;
            let stab_rev = joint_distribution(&StabilizerEngine, config, a, b, MeasurementOrder::BobFirst)?;
            let engine_dev = max_deviation(&dense, &stab).max(max_deviation(&dense_rev, &stab_rev));
            let order_dev = max_deviation(&dense, &dense_rev).max(max_deviation(&stab, &stab_rev));
            log(a, b, engine_dev, order_dev);
            engines = engines.max(engine_dev);
            orders = orders.max(order_dev);
        }
    }
    Ok((engines, orders))
}

pub fn cmd_crosscheck(args: &CrosscheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let config = PentagramConfig::canonical()?;
    let mut lines = Vec::new();
    let (engine_dev, order_dev) = exact_crosscheck(&config, |a, b, e, o| {
        lines.push(format!("{a} x {b}: engine deviation {e:.3e}, order deviation {o:.3e}"));
    })?;
    for l in lines {
        writeln!(out, "{l}")?;
    }
    let mut mismatches = 0u64;
    let sampled = match args.runs {
        CrosscheckRuns::Exact => 0,
        CrosscheckRuns::Sampled(n) => n,
    };
    for run_index in 0..sampled {
        let seed = SeedMaterial {
            master_seed: args.seed,
            run_index,
        };
        let a = run_once(&StateVectorEngine, &config, seed)?;
        let b = run_once(&StabilizerEngine, &config, seed)?;
        if (a.alice_setting, a.bob_setting, &a.alice_colors, &a.bob_colors)
            != (b.alice_setting, b.bob_setting, &b.alice_colors, &b.bob_colors)
        {
            mismatches += 1;
            writeln!(out, "run {run_index}: sampled outcomes differ between engines")?;
        }
    }
    let pass = engine_dev <= CROSSCHECK_TOLERANCE && order_dev <= CROSSCHECK_TOLERANCE && mismatches == 0;
    writeln!(
        out,
        "{}",
        serde_json::json!({
            "pairs": 25,
            "max_engine_deviation": engine_dev,
            "max_order_deviation": order_dev,
            "sampled_runs": sampled,
            "sampled_mismatches": mismatches,
            "seed": args.seed,
            "pass": pass,
        })
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_FAILED })
}
