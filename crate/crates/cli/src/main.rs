//! `amli`: run solver sweeps, print theory tables, run the verification suite.

mod config;

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use amli::experiment::{rows_csv, rows_markdown, run_cases};
use amli::mesh::Dimension;
use amli::theory::{b11_condition, decade_grid, emit_sequence_tables, sequence_csv};
use amli::verify::{self, VerifyConfig};
use clap::{Parser, Subcommand, ValueEnum};

use config::{Format, SolveArgs};

#[derive(Parser)]
#[command(name = "amli", version, about = "Multilevel preconditioners for curl and div problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem per combination of the given settings and print a table
    Solve(Box<SolveArgs>),
    /// Print sequence and CBS tables or difference-block condition numbers
    Theory(TheoryArgs),
    /// Run the numerical verification checks; exits 1 if any fails
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoryTable {
    /// a, b, r and the squared CBS constants per level
    Sequences,
    /// Condition numbers of the macro-element difference block
    B11,
}

#[derive(clap::Args)]
struct TheoryArgs {
    #[arg(long, value_enum, default_value = "sequences")]
    table: TheoryTable,
    /// Explicit e values; replaces the decade grid
    #[arg(long, value_delimiter = ',')]
    e: Option<Vec<f64>>,
    /// Smallest decade exponent of the e grid
    #[arg(long, default_value_t = -12, allow_negative_numbers = true)]
    m_lo: i32,
    /// Largest decade exponent of the e grid
    #[arg(long, default_value_t = 2, allow_negative_numbers = true)]
    m_hi: i32,
    #[arg(long, default_value_t = 10)]
    max_level: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckFormat {
    Text,
    Csv,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Relative perturbation of the aggregate stencil (mutation test)
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    #[arg(long, default_value_t = -12, allow_negative_numbers = true)]
    m_lo: i32,
    #[arg(long, default_value_t = 6, allow_negative_numbers = true)]
    m_hi: i32,
    #[arg(long, default_value_t = 30)]
    max_level: usize,
    /// Seed of the random vectors in the definiteness checks
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, value_enum, default_value = "text")]
    format: CheckFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn solve(args: SolveArgs) -> Result<ExitCode, String> {
    let args = args.resolve()?;
    let cases = args.cases()?;
    let mut rows = Vec::with_capacity(cases.len());
    for (case, row) in cases.iter().zip(run_cases(&cases, args.threads())) {
        let mut row = row.map_err(|e| format!("1/h = {}: {e}", case.inv_h()))?;
        if !row.report.converged {
            eprintln!(
                "warning: no convergence within {} iterations at 1/h = {}",
                case.options.max_it,
                case.inv_h()
            );
        }
        if args.no_timings {
            row.seconds = 0.0;
        }
        rows.push(row);
    }
    let title = args.describe();
    let text = match args.format() {
        Format::Csv => rows_csv(&rows, Some(&title)),
        Format::Markdown => rows_markdown(&rows, Some(&title)),
    };
    emit(args.out.as_ref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn theory(args: TheoryArgs) -> Result<ExitCode, String> {
    if args.m_lo > args.m_hi {
        return Err(format!("empty e grid: m_lo = {} > m_hi = {}", args.m_lo, args.m_hi));
    }
    let es = args.e.clone().unwrap_or_else(|| decade_grid(args.m_lo, args.m_hi));
    if let Some(bad) = es.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(format!("e must be positive and finite, got {bad}"));
    }
    let text = match args.table {
        TheoryTable::Sequences => {
            format!(
                "# recursion sequences and squared CBS constants per level\n{}",
                sequence_csv(&emit_sequence_tables(&es, args.max_level))
            )
        }
        TheoryTable::B11 => {
            let mut out = String::from(
                "# condition numbers of the macro-element difference block, raw and ILU(0)-preconditioned\n\
                 dim,e,cond_raw,cond_ilu\n",
            );
            for dim in [Dimension::Two, Dimension::Three] {
                for &e in &es {
                    let c = b11_condition(dim, e).map_err(|err| format!("e = {e}: {err}"))?;
                    out.push_str(&format!("{dim},{e:e},{:.10e},{:.10e}\n", c.raw, c.ilu));
                }
            }
            out
        }
    };
    emit(args.out.as_ref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode, String> {
    let cfg = VerifyConfig {
        m_lo: args.m_lo,
        m_hi: args.m_hi,
        max_level: args.max_level,
        perturbation: args.perturb,
        seed: args.seed,
    };
    let checks = verify::run(&cfg).map_err(|e| e.to_string())?;
    let text = match args.format {
        CheckFormat::Csv => verify::checks_csv(&checks),
        CheckFormat::Text => checks.iter().map(|c| format!("{c}\n")).collect(),
    };
    emit(args.out.as_ref(), &text)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed == 0 {
        eprintln!("all {} checks passed", checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{failed} of {} checks failed", checks.len());
        Ok(ExitCode::FAILURE)
    }
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Solve(a) => solve(*a),
        Command::Theory(a) => theory(a),
        Command::Verify(a) => run_verify(a),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
