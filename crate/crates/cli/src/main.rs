//! `rever`: region recourse verification for linear classifiers.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use rever_core::audit::BaselineMethod;
use rever_core::rep::DEFAULT_RESTRICTION_CAP;
use rever_core::verifier::{ExportFormat, ExportOptions, DEFAULT_NODE_CAP};

#[derive(Parser)]
#[command(name = "rever", version, about = "Verify recourse over regions of a linear classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Mode {
    Exact,
    Relaxed,
}

#[derive(Args)]
pub struct Common {
    /// Problem file (JSON).
    pub problem: PathBuf,
    /// How restrictions are chosen when the assumptions fail.
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: Mode,
    /// Largest number of restrictions to enumerate in exact mode.
    #[arg(long, default_value_t = DEFAULT_RESTRICTION_CAP)]
    pub restriction_cap: usize,
    /// Branch-and-bound node limit.
    #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
    pub node_cap: usize,
    /// Floating-point LP tolerance; results are always re-checked exactly.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Worker threads for confinement checks.
    #[arg(long, env = "REVER_WORKERS")]
    pub workers: Option<usize>,
    /// Seed for sampling and Monte Carlo counting.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Only audit the region with this name.
    #[arg(long)]
    pub region: Option<String>,
    /// Include wall-clock timings in the report.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Baseline {
    Data,
    Region,
    Score,
    Rever,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Lp,
    Mps,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether each region is responsive, confined or neither.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Store exact Farkas certificates for each reported box.
        #[arg(long)]
        emit_certificates: bool,
        /// Re-check a saved report against the problem instead of verifying.
        #[arg(long, value_name = "FILE")]
        check_report: Option<PathBuf>,
    },
    /// List disjoint confined boxes, largest first, with a coverage curve.
    Enumerate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10)]
        max_boxes: usize,
        #[arg(long)]
        emit_certificates: bool,
    },
    /// Compare baseline auditing methods against the verified answer.
    Audit {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "all")]
        baseline: Baseline,
        /// CSV of points used by the data baseline and for region support.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// CSV of held-out points used for realized blindspots and loopholes.
        #[arg(long)]
        test: Option<PathBuf>,
        /// Points drawn by the region baseline.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Skip regions with fewer dataset points than this.
        #[arg(long, default_value_t = 0)]
        min_support: usize,
    },
    /// Write the largest-confined-box program for an external solver.
    Export {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "lp")]
        format: Format,
        /// Boxes to exclude: a JSON array of {lower, upper} or a saved report.
        #[arg(long)]
        exclusions: Option<PathBuf>,
        /// Use big-M constants that stay valid when an exclusion side is inactive.
        #[arg(long)]
        corrected_big_m: bool,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a solver solution for the exported program exactly.
    CheckSolution {
        #[command(flatten)]
        common: Common,
        /// Solution file with `name = value` lines.
        #[arg(long)]
        solution: PathBuf,
        #[arg(long)]
        exclusions: Option<PathBuf>,
    },
    /// Enumerate every point and action; only for small instances.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn print_report(r: &report::Report) -> Result<()> {
    eprint!("{}", report::summary(r));
    print_json(r)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Verify {
            common,
            emit_certificates,
            check_report,
        } => {
            let l = commands::load(&common.problem, common.region.as_deref())?;
            if let Some(path) = check_report {
                let (v, code) = commands::check_report(&l, &common, &path)?;
                print_json(&v)?;
                return Ok(code);
            }
            let (r, code) = commands::verify(&l, &common, emit_certificates)?;
            print_report(&r)?;
            Ok(code)
        }
        Command::Enumerate {
            common,
            max_boxes,
            emit_certificates,
        } => {
            let l = commands::load(&common.problem, common.region.as_deref())?;
            let (r, code) = commands::enumerate(&l, &common, max_boxes, emit_certificates)?;
            print_report(&r)?;
            Ok(code)
        }
        Command::Audit {
            common,
            baseline,
            dataset,
            test,
            samples,
            min_support,
        } => {
            let l = commands::load(&common.problem, common.region.as_deref())?;
            let methods = match baseline {
                Baseline::All => BaselineMethod::ALL.to_vec(),
                Baseline::Data => vec![BaselineMethod::Data],
                Baseline::Region => vec![BaselineMethod::Region],
                Baseline::Score => vec![BaselineMethod::Score],
                Baseline::Rever => vec![BaselineMethod::Rever],
            };
            let methods = if baseline == Baseline::All && dataset.is_none() {
                methods.into_iter().filter(|m| *m != BaselineMethod::Data).collect()
            } else {
                methods
            };
            let args = commands::AuditArgs {
                methods,
                dataset: dataset.as_deref(),
                test: test.as_deref(),
                samples,
                min_support,
            };
            let (r, code) = commands::audit(&l, &common, &args)?;
            print_report(&r)?;
            Ok(code)
        }
        Command::Export {
            common,
            format,
            exclusions,
            corrected_big_m,
            output,
        } => {
            let l = commands::load(&common.problem, common.region.as_deref())?;
            let opts = ExportOptions {
                format: match format {
                    Format::Lp => ExportFormat::Lp,
                    Format::Mps => ExportFormat::Mps,
                },
                corrected_big_m,
            };
            let text = commands::export(&l, &common, exclusions.as_deref(), &opts)?;
            match output {
                Some(path) => std::fs::write(&path, text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::CheckSolution {
            common,
            solution,
            exclusions,
        } => {
            let l = commands::load(&common.problem, common.region.as_deref())?;
            let (v, code) = commands::check_solution(&l, &common, &solution, exclusions.as_deref())?;
            print_json(&v)?;
            Ok(code)
        }
        Command::Oracle { common } => {
            let l = commands::load(&common.problem, common.region.as_deref())?;
            let (r, code) = commands::oracle(&l, &common)?;
            print_report(&r)?;
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
