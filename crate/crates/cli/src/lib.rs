//! Command-line frontend: `transform`, `validate`, `generate` and `bench`.
//!
//! Exit codes: 0 success, 1 validation failed, 2 net not reducible,
//! 64 usage error, 65 unreadable or malformed input.

pub mod bench;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use pn2sc::validate::{validate, Level};
use pn2sc::{create_statechart, generate_sp_net, read_petri_net, read_statechart, write_statechart, GenSpec};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_IRREDUCIBLE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "pn2sc", version, about = "Transform Petri nets into hierarchical statecharts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce a Petri net and write the resulting statechart.
    Transform {
        /// Petri net JSON file.
        input: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare a statechart against an expected one.
    Validate {
        /// Statechart under test.
        actual: PathBuf,
        /// Reference statechart.
        expected: PathBuf,
        /// Only compare per-class instance counts.
        #[arg(long)]
        counts_only: bool,
    },
    /// Write a synthetic series-parallel net.
    Generate {
        /// Exact number of places in the generated net.
        #[arg(long)]
        places: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest number of branches in one fork/join.
        #[arg(long, default_value_t = 4)]
        branch_max: usize,
        /// Chance that an expansion is a fork/join rather than a sequence.
        #[arg(long, default_value_t = 0.5)]
        parallel_prob: f64,
        /// Output file or directory; defaults to `sp<places>_<seed>.json`.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Time the transformation on generated nets.
    Bench {
        /// Comma-separated net sizes, in places.
        #[arg(long, value_delimiter = ',', default_value = "5000,10000,40000")]
        sizes: Vec<usize>,
        /// Repetitions per size; the median is reported.
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))),
        None => out.write_all(bytes).map_err(|e| CliError::Data(e.to_string())),
    }
}

fn data<E: std::fmt::Display>(path: &Path) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

/// Executes one parsed command, writing reports to `out` and diagnostics to `err`.
pub fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Transform { input, output } => {
            let pn = read_petri_net(&read(&input)?).map_err(data(&input))?;
            let (sc, result) = create_statechart(&pn).map_err(data(&input))?;
            if !result.is_success() {
                let _ = writeln!(
                    err,
                    "irreducible: {} top ORs after reduction ({} places, {} transitions remain)",
                    result.top_ors, result.remaining_places, result.remaining_transitions
                );
                return Ok(EXIT_IRREDUCIBLE);
            }
            let bytes = write_statechart(&sc, &result).map_err(data(&input))?;
            write(output.as_deref(), &bytes, out)?;
            Ok(EXIT_OK)
        }
        Command::Validate {
            actual,
            expected,
            counts_only,
        } => {
            let a = read_statechart(&read(&actual)?).map_err(data(&actual))?;
            let e = read_statechart(&read(&expected)?).map_err(data(&expected))?;
            let level = if counts_only { Level::Counts } else { Level::Full };
            let report = validate(&a, &e, level);
            for d in &report.discrepancies {
                let _ = writeln!(out, "{d}");
            }
            let _ = writeln!(
                out,
                "{} ({} check, {} discrepancies)",
                if report.passed { "PASS" } else { "FAIL" },
                if counts_only { "counts" } else { "full" },
                report.discrepancies.len()
            );
            Ok(if report.passed { EXIT_OK } else { EXIT_INVALID })
        }
        Command::Generate {
            places,
            seed,
            branch_max,
            parallel_prob,
            output,
        } => {
            let spec = GenSpec {
                target_places: places,
                seed,
                branch_factor_max: branch_max,
                parallel_prob,
            };
            let doc = generate_sp_net(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
            let path = match output {
                Some(p) if p.is_dir() => p.join(spec.file_name()),
                Some(p) => p,
                None => PathBuf::from(spec.file_name()),
            };
            write(Some(&path), &doc.to_json(), out)?;
            let _ = writeln!(
                err,
                "wrote {} ({} places, {} transitions)",
                path.display(),
                doc.places.len(),
                doc.transitions.len()
            );
            Ok(EXIT_OK)
        }
        Command::Bench { sizes, reps, seed } => {
            if sizes.is_empty() || reps == 0 {
                return Err(CliError::Usage("bench needs at least one size and --reps >= 1".into()));
            }
            let rows = bench::run(&sizes, reps, seed).map_err(CliError::Data)?;
            let _ = write!(err, "{}", bench::table(&rows));
            let json = serde_json::to_string_pretty(&rows).expect("rows serialize");
            let _ = writeln!(out, "{json}");
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
