//! `psim` command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime or usage error.
//! Data goes to files or stdout; diagnostics go to stderr only.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::engine::run;
use crate::metrics::{emit_log, summarize, LogFormat};
use crate::scenario::{builtin, parse_scenario, Scenario, BUILTIN_NAMES};
use crate::sweep::{sweep, Executor, ParamAxis, SweepError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "psim", version, about = "Social practice simulation runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

impl From<Format> for LogFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => LogFormat::Csv,
            Format::Jsonl => LogFormat::Jsonl,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file; prints nothing when valid.
    Validate { file: PathBuf },
    /// Run one simulation and write the log plus summary.json into DIR.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Defaults to the scenario's `ticks`.
        #[arg(long)]
        ticks: Option<u64>,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run every parameter combination for every seed; one summary row per run.
    Sweep {
        file: PathBuf,
        /// PATH=v1,v2,... (repeatable)
        #[arg(long = "param", value_name = "PATH=V1,V2,...", value_parser = ParamAxis::parse)]
        params: Vec<ParamAxis>,
        /// Inclusive range A..B
        #[arg(long, value_parser = parse_seed_range)]
        seeds: SeedRange,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        #[arg(long)]
        ticks: Option<u64>,
        #[arg(long, env = "PSIM_JOBS")]
        jobs: Option<usize>,
    },
    /// Built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenariosCommand,
    },
}

#[derive(Debug, Subcommand)]
enum ScenariosCommand {
    List,
    /// Write NAME.json into DIR.
    Export {
        name: String,
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl SeedRange {
    pub fn seeds(self) -> Vec<u64> {
        (self.first..=self.last).collect()
    }
}

pub fn parse_seed_range(s: &str) -> Result<SeedRange, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got `{s}`"))?;
    let first: u64 = a.trim().parse().map_err(|e| format!("seed `{a}`: {e}"))?;
    let last: u64 = b.trim().parse().map_err(|e| format!("seed `{b}`: {e}"))?;
    if first > last {
        return Err(format!("empty seed range {first}..{last}"));
    }
    Ok(SeedRange { first, last })
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::Runtime(format!("{}: {e}", path.display()))
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    parse_scenario(&text).map_err(|r| Failure::Invalid(format!("{}:\n{r}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Validate { file } => load(&file).map(|_| ()),
        Command::Run {
            file,
            seed,
            ticks,
            out: dir,
            format,
        } => {
            let scenario = load(&file)?;
            let ticks = ticks.unwrap_or(scenario.ticks);
            let log = run(&scenario, seed, ticks).map_err(|r| Failure::Invalid(r.to_string()))?;
            let format = LogFormat::from(format);
            fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
            write_file(
                &dir.join(format!("log.{}", format.extension())),
                &emit_log(&log, format),
            )?;
            let summary = summarize(&log, scenario.consensus.theta, scenario.consensus.window);
            write_file(&dir.join("summary.json"), &summary.to_json())
        }
        Command::Sweep {
            file,
            params,
            seeds,
            out: path,
            ticks,
            jobs,
        } => {
            let scenario = load(&file)?;
            let table = sweep(
                &scenario,
                &params,
                &seeds.seeds(),
                ticks,
                Executor::Parallel { jobs },
            )
            .map_err(|e| match e {
                SweepError::Pool(m) => Failure::Runtime(m),
                other => Failure::Invalid(other.to_string()),
            })?;
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
            }
            write_file(&path, &table.to_csv())
        }
        Command::Scenarios { action } => match action {
            ScenariosCommand::List => {
                for name in BUILTIN_NAMES {
                    writeln!(out, "{name}").map_err(|e| Failure::Runtime(e.to_string()))?;
                }
                Ok(())
            }
            ScenariosCommand::Export { name, dir } => {
                let text = builtin(&name).ok_or_else(|| {
                    Failure::Runtime(format!(
                        "unknown scenario `{name}` (available: {})",
                        BUILTIN_NAMES.join(", ")
                    ))
                })?;
                fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
                write_file(&dir.join(format!("{name}.json")), text.as_bytes())
            }
        },
    }
}

/// Runs the command line `args` (including the program name) and returns the exit code.
pub fn cmd<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_RUNTIME
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            let _ = writeln!(err, "{msg}");
            EXIT_INVALID
        }
        Err(Failure::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_RUNTIME
        }
    }
}

pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    cmd(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
