//! `avlp`: solve and analyze absolute value linear programs stored as JSON.

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use avlp::reformulate::{Alpha, EqMode};
use clap::{Parser, Subcommand, ValueEnum};

use commands::{CheckFlags, IntegralityFlags, Outcome, ReformKind, EXIT_ERROR};
use io::CliError;

#[derive(Parser)]
#[command(
    name = "avlp",
    version,
    about = "Absolute value linear programs: max c^T x s.t. Ax - D|x| <= b"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Global optimum by orthant enumeration. Exit 0 optimal, 2 infeasible, 3 unbounded.
    Solve {
        file: PathBuf,
        /// Also report the LP relaxation bound.
        #[arg(long)]
        relax: bool,
        /// Human-readable output instead of JSON.
        #[arg(long, conflicts_with = "json")]
        text: bool,
        #[arg(long)]
        json: bool,
    },
    /// Structural checks; runs all of them when no flag is given.
    Check {
        file: PathBuf,
        #[arg(long)]
        bounded: bool,
        #[arg(long)]
        feasible_all_b: bool,
        #[arg(long)]
        connected: bool,
        #[arg(long)]
        convexity: bool,
    },
    /// Compile another model into a problem file.
    Reformulate {
        #[arg(value_enum)]
        kind: Kind,
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Encoding of equation disjunctions.
        #[arg(long, value_enum, default_value_t = Mode::Corrected)]
        mode: Mode,
    },
    /// CSV of the quadrant polygons of a two-variable problem.
    Polygon2d {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Clipping box `lo1,lo2,hi1,hi2`; default `-10,-10,10,10`.
        #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
        bbox: Option<Vec<f64>>,
    },
    /// Whether every KKT point of the penalty QP is complementary. Exit 4 when not.
    Kkt {
        file: PathBuf,
        /// Penalty weight, a positive number or `auto`.
        #[arg(long, default_value = "auto")]
        alpha: String,
        /// Write the QP to this file.
        #[arg(long)]
        export_qp: Option<PathBuf>,
        /// Also run the aggregated single-LP check.
        #[arg(long)]
        aggregate: bool,
    },
    /// Integral vertices for every integral b. Needs `"integer": true`.
    Integrality {
        file: PathBuf,
        /// Only the sign vectors with at most one nonzero (valid for rank-one D).
        #[arg(long)]
        rank_one: bool,
        /// Also check unimodularity of the matrices with 0 signs allowed.
        #[arg(long)]
        extended: bool,
        /// Cap on enumerated bases.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Basis stability of the interval LP with bounds A - D, A + D.
    Stability {
        file: PathBuf,
        /// Zero-based row indices; default is the optimal basis at the midpoint.
        #[arg(long, value_delimiter = ',')]
        basis: Option<Vec<usize>>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ilp01,
    DisjIneq,
    DisjEq,
    Union,
    OrthantConvex,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Corrected,
    #[value(name = "paper-literal")]
    MinForm,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("AVLP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("AVLP_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Solve { file, relax, text, .. } => commands::solve(&file, relax, text),
        Command::Check {
            file,
            bounded,
            feasible_all_b,
            connected,
            convexity,
        } => commands::check(
            &file,
            CheckFlags {
                bounded,
                feasible_all_b,
                connected,
                convexity,
            },
        ),
        Command::Reformulate {
            kind,
            input,
            output,
            mode,
        } => {
            let kind = match kind {
                Kind::Ilp01 => ReformKind::Ilp01,
                Kind::DisjIneq => ReformKind::DisjIneq,
                Kind::DisjEq => ReformKind::DisjEq,
                Kind::Union => ReformKind::Union,
                Kind::OrthantConvex => ReformKind::OrthantConvex,
            };
            let mode = match mode {
                Mode::Corrected => EqMode::Corrected,
                Mode::MinForm => EqMode::MinForm,
            };
            write_to(commands::reformulate(kind, &input, mode)?, output)
        }
        Command::Polygon2d { file, output, bbox } => {
            let bbox = match bbox.as_deref() {
                None => None,
                Some(&[lo1, lo2, hi1, hi2]) => Some([lo1, lo2, hi1, hi2]),
                Some(v) => {
                    return Err(CliError::Usage(format!(
                        "--box expects lo1,lo2,hi1,hi2, got {} numbers",
                        v.len()
                    )))
                }
            };
            write_to(commands::polygon2d(&file, bbox)?, output)
        }
        Command::Kkt {
            file,
            alpha,
            export_qp,
            aggregate,
        } => {
            let alpha = match alpha.as_str() {
                "auto" => Alpha::Auto,
                s => Alpha::Fixed(
                    s.parse()
                        .map_err(|_| CliError::Usage(format!("--alpha expects a number or `auto`, got {s:?}")))?,
                ),
            };
            commands::kkt(&file, alpha, export_qp.as_deref(), aggregate)
        }
        Command::Integrality {
            file,
            rank_one,
            extended,
            budget,
        } => commands::integrality(
            &file,
            IntegralityFlags {
                rank_one,
                extended,
                budget,
            },
        ),
        Command::Stability { file, basis } => commands::stability(&file, basis),
    }
}

/// Sends the payload to `output` when given; stdout then stays empty.
fn write_to(out: Outcome, output: Option<PathBuf>) -> Result<Outcome, CliError> {
    match output {
        Some(path) => {
            io::emit(Some(&path), &out.text)?;
            Ok(Outcome {
                text: String::new(),
                code: out.code,
            })
        }
        None => Ok(out),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which is taken by "infeasible".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            if !out.text.is_empty() {
                println!("{}", out.text);
            }
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
