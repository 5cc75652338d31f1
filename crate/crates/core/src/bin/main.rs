use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use offload_auction::harness::{self, RunOptions};
use offload_auction::{validate_config, SystemConfig};

/// Edge task-offloading auction simulator.
#[derive(Parser)]
#[command(name = "offload-auction", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML configuration; built-in defaults when absent.
    #[arg(long, env = "OFFLOAD_AUCTION_CONFIG")]
    config: Option<PathBuf>,
    /// Seeds as `a..b` (half-open), a comma list, or a single number.
    #[arg(long, default_value = "0..1")]
    seeds: String,
    /// Draw requests from a four-column trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Record wall-clock auction time in `runtime_ms`.
    #[arg(long)]
    timings: bool,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a registered scenario once per seed.
    Run {
        #[arg(long)]
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a scenario for each value of one configuration key.
    Sweep {
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, default_value = "welfare_vs_tasks")]
        scenario: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run a property suite on random instances; exits 1 on any violation.
    Verify {
        #[arg(long, value_parser = harness::SUITES)]
        suite: String,
        #[arg(long, default_value_t = 200)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List registered scenarios.
    Scenarios,
    /// Trace utilities.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
}

#[derive(Subcommand)]
enum TraceCommand {
    /// Convert a whitespace-separated archive job log to the trace CSV.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>, String> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| format!("bad seed range start: {e}"))?;
        let b: u64 = b.trim().parse().map_err(|e| format!("bad seed range end: {e}"))?;
        if a >= b {
            return Err(format!("empty seed range `{spec}`"));
        }
        return Ok((a..b).collect());
    }
    if spec.is_empty() {
        return Err("no seeds given".into());
    }
    spec.split(',')
        .map(|s| s.trim().parse::<u64>().map_err(|e| format!("bad seed `{s}`: {e}")))
        .collect()
}

fn read_document(path: Option<&Path>) -> Result<String, String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display())),
        None => Ok(String::new()),
    }
}

fn load_config(path: Option<&Path>) -> Result<SystemConfig, String> {
    let doc = read_document(path)?;
    validate_config(&doc).map_err(|e| e.to_string())
}

/// The configuration document with `key` set to `value`. Values that do not
/// parse as TOML are taken as strings.
fn with_override(doc: &str, key: &str, value: &str) -> Result<SystemConfig, String> {
    let mut table: toml::Table = doc.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    table.insert(key.to_string(), parsed);
    let rendered = toml::to_string(&table).map_err(|e| e.to_string())?;
    validate_config(&rendered).map_err(|e| e.to_string())
}

fn write_rows(rows: &[harness::MetricsRow], out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(p) => harness::emit_csv(rows, p).map_err(|e| e.to_string()),
        None => harness::write_rows(rows, std::io::stdout().lock()).map_err(|e| e.to_string()),
    }
}

/// Writes one line; a closed pipe downstream is not an error.
fn say(out: &mut impl Write, line: std::fmt::Arguments) -> Result<(), String> {
    match writeln!(out, "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
        _ => Ok(()),
    }
}

fn options(common: &Common) -> RunOptions {
    RunOptions { trace: common.trace.clone(), record_timings: common.timings }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run { scenario, common } => {
            let cfg = load_config(common.config.as_deref())?;
            let seeds = parse_seeds(&common.seeds)?;
            let rows = harness::run_scenario(&scenario, &cfg, &seeds, &options(&common)).map_err(|e| e.to_string())?;
            write_rows(&rows, common.out.as_deref())?;
        }
        Command::Sweep { param, values, scenario, common } => {
            let doc = read_document(common.config.as_deref())?;
            let seeds = parse_seeds(&common.seeds)?;
            let mut rows = Vec::new();
            for v in &values {
                let cfg = with_override(&doc, &param, v)?;
                let out = harness::run_scenario(&scenario, &cfg, &seeds, &options(&common)).map_err(|e| e.to_string())?;
                rows.extend(out.into_iter().map(|mut r| {
                    r.scenario = format!("{}[{}={}]", r.scenario, param, v);
                    r
                }));
            }
            write_rows(&rows, common.out.as_deref())?;
        }
        Command::Verify { suite, instances, seed } => {
            let report = harness::run_suite(&suite, instances, seed)
                .ok_or_else(|| format!("unknown suite `{suite}`"))?
                .map_err(|e| e.to_string())?;
            let mut out = std::io::stdout().lock();
            for v in &report.violations {
                say(&mut out, format_args!("violation: {v}"))?;
            }
            say(
                &mut out,
                format_args!("{}: {} instances, {} violations", report.name, report.instances, report.violations.len()),
            )?;
            if !report.passed() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Scenarios => {
            let mut out = std::io::stdout().lock();
            for s in harness::scenarios() {
                say(&mut out, format_args!("{:<24}{}", s.name, s.about))?;
            }
        }
        Command::Trace { command: TraceCommand::Convert { input, output } } => {
            let n = harness::convert_archive_file(&input, &output).map_err(|e| e.to_string())?;
            eprintln!("wrote {n} jobs to {}", output.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
