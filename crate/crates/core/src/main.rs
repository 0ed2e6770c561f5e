use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use triality::document::ProblemDocument;
use triality::oracle::VerifyOptions;
use triality::report::{run_document, summary, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "triality", version, about = "Canonical dual solver with triality classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem document and print a summary table.
    Solve(SolveArgs),
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Problem document (JSON).
    problem: PathBuf,
    /// Write the machine-readable report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of multistart seeds.
    #[arg(long)]
    starts: Option<usize>,
    /// Dual search interval `lo:hi`; repeat once per dual coordinate.
    #[arg(long = "box", value_name = "LO:HI", allow_hyphen_values = true, action = clap::ArgAction::Append, value_parser = parse_interval)]
    search_box: Option<Vec<[f64; 2]>>,
    /// Newton tolerance on the dual gradient norm.
    #[arg(long)]
    tol: Option<f64>,
    /// Samples per neighbourhood probe.
    #[arg(long, default_value_t = VerifyOptions::default().probe_samples)]
    probe_samples: usize,
    /// Skip the verification oracle.
    #[arg(long)]
    no_verify: bool,
    /// Leave timings out of the report.
    #[arg(long)]
    no_timing: bool,
}

fn parse_interval(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
    Ok([lo, hi])
}

const EXIT_SCHEMA: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_DISAGREEMENT: u8 = 4;

fn solve(args: SolveArgs) -> ExitCode {
    let bytes = match std::fs::read(&args.problem) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.problem.display());
            return ExitCode::from(EXIT_SCHEMA);
        }
    };
    let doc_search = std::str::from_utf8(&bytes)
        .ok()
        .and_then(|t| ProblemDocument::from_json(t).ok())
        .and_then(|d| d.search);
    let mut search = doc_search.unwrap_or_default();
    if let Some(s) = args.starts {
        search.starts = s;
    }
    if let Some(b) = args.search_box {
        search.search_box = Some(b);
    }
    if let Some(t) = args.tol {
        search.tol_newton = t;
    }
    let opts = RunOptions {
        search: Some(search),
        verify: (!args.no_verify).then(|| VerifyOptions {
            probe_samples: args.probe_samples,
            ..VerifyOptions::default()
        }),
        timing: !args.no_timing,
    };
    let report = match run_document(&bytes, &opts) {
        Ok(r) => r,
        Err(RunError::Schema(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SCHEMA);
        }
        Err(RunError::Solver(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    };
    if let Some(path) = &args.out {
        if let Err(e) = std::fs::write(path, report.to_json() + "\n") {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_SOLVER);
        }
    }
    print!("{}", summary(&report));
    if report.pairs.is_empty() && report.unclassified_pairs.is_empty() {
        return ExitCode::from(EXIT_SOLVER);
    }
    if !report.verification_agrees() {
        return ExitCode::from(EXIT_DISAGREEMENT);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Solve(args) => solve(args),
    }
}
