use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tc_keldysh::cli::{run_document, Command, ExitStatus, Overrides};
use tc_keldysh::selfenergy::Dressing;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Sweep1d,
    Sweep2d,
    Stability,
    DumpGreens,
    DumpSelfenergy,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DressingArg {
    Bare,
    #[value(name = "one_shot", alias = "one-shot")]
    OneShot,
    #[value(name = "fixed_point", alias = "fixed-point")]
    FixedPoint,
}

/// Saddle-point solver for a driven spin-cavity model on the Keldysh contour.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: Cmd,
    /// Flat `section.key = value` configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Frequency grid size, overriding `grid.points`.
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long, value_enum)]
    dressing: Option<DressingArg>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Solve => Command::Solve,
        Cmd::Sweep1d => Command::Sweep1d,
        Cmd::Sweep2d => Command::Sweep2d,
        Cmd::Stability => Command::Stability,
        Cmd::DumpGreens => Command::DumpGreens,
        Cmd::DumpSelfenergy => Command::DumpSelfenergy,
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(ExitStatus::Validation.code() as u8);
        }
    }
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("cannot read {}: {e}", path.display());
                return ExitCode::from(ExitStatus::Io.code() as u8);
            }
        },
        None => String::new(),
    };
    let overrides = Overrides {
        out: args.out,
        grid_points: args.grid_points,
        dressing: args.dressing.map(|d| match d {
            DressingArg::Bare => Dressing::Bare,
            DressingArg::OneShot => Dressing::OneShot,
            DressingArg::FixedPoint => Dressing::FixedPoint,
        }),
    };
    let outcome = run_document(command, &text, &overrides);
    if outcome.status == ExitStatus::Success {
        println!("{}", outcome.summary);
    } else {
        eprintln!("{}", outcome.summary);
    }
    ExitCode::from(outcome.status.code() as u8)
}
