//! Command dispatch shared by the binary and the integration tests.
//!
//! Results go to `<dir>/<stem>_<command>.csv`; numerical diagnostics go to
//! `<dir>/<stem>.log`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::config::{parse_config, ConfigError, RunConfig};
use crate::error::Error;
use crate::greens::KeldyshGF;
use crate::saddle::{solve_saddle, Phase, SaddleProblem, SaddleSolution};
use crate::selfenergy::Dressing;
use crate::stability::Stability;
use crate::sweep::{
    num, sweep_1d, sweep_2d, transitions, write_boundary_csv, write_metadata, write_points_csv, write_solutions_csv,
    Provenance, SweepResult, Transition,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Sweep1d,
    Sweep2d,
    Stability,
    DumpGreens,
    DumpSelfenergy,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Self::Solve,
        Self::Sweep1d,
        Self::Sweep2d,
        Self::Stability,
        Self::DumpGreens,
        Self::DumpSelfenergy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Sweep1d => "sweep1d",
            Self::Sweep2d => "sweep2d",
            Self::Stability => "stability",
            Self::DumpGreens => "dump-greens",
            Self::DumpSelfenergy => "dump-selfenergy",
        }
    }

    fn file_tag(&self) -> &'static str {
        match self {
            Self::DumpGreens => "greens",
            Self::DumpSelfenergy => "selfenergy",
            other => other.as_str(),
        }
    }
}

impl std::str::FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Validation = 1,
    /// Every requested point was inaccessible, or a numerical stage failed.
    Numerical = 2,
    Io = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub grid_points: Option<usize>,
    pub dressing: Option<Dressing>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: ExitStatus,
    /// One-line summary for the terminal.
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn fail(status: ExitStatus, summary: String) -> Self {
        Self {
            status,
            summary,
            files: Vec::new(),
        }
    }
}

/// Parses `text`, applies `overrides`, and runs `command`.
pub fn run_document(command: Command, text: &str, overrides: &Overrides) -> Outcome {
    let config = match parse_config(text).and_then(|c| apply(c, overrides)) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(ExitStatus::Validation, format!("{}: {e}", command.as_str())),
    };
    run(command, &config)
}

/// Applies overrides and revalidates through the parser so the echoed document stays parseable.
pub fn apply(mut config: RunConfig, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    if let Some(out) = &overrides.out {
        config.output.dir = out.to_string_lossy().into_owned();
    }
    if let Some(n) = overrides.grid_points {
        config.grid.points = n;
    }
    if let Some(d) = overrides.dressing {
        config.solver.dressing = d;
    }
    parse_config(&config.to_lines().join("\n"))
}

fn timestamp() -> String {
    let t = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    format!("{}", t.as_secs())
}

fn status_of(e: &Error) -> ExitStatus {
    match e {
        Error::InvalidParameter { .. } | Error::InvalidGrid(_) | Error::GridMismatch { .. } => ExitStatus::Validation,
        _ => ExitStatus::Numerical,
    }
}

/// Writes `body` (after the metadata block) to `path`.
fn write_file(
    path: &Path,
    body: impl FnOnce(&mut io::BufWriter<fs::File>) -> io::Result<()>,
) -> io::Result<()> {
    let mut w = io::BufWriter::new(fs::File::create(path)?);
    body(&mut w)?;
    w.flush()
}

fn log_solution(log: &mut String, label: &str, s: &SaddleSolution) {
    let _ = writeln!(
        log,
        "{label}: phase={} mu_S={} psi_f={} residual={} refined_grid={}",
        s.phase,
        num(s.mu_s),
        num(s.psi_f),
        num(s.residual_norm),
        s.refined_grid
    );
    for o in &s.seeds {
        match (&o.report, &o.error) {
            (Some(r), _) => {
                let _ = writeln!(
                    log,
                    "  seed ({}, {}): {:?} after {} iterations, {} evaluations ({} failed), |R| = {}, x = ({}, {})",
                    o.seed[0],
                    o.seed[1],
                    r.status,
                    r.iterations,
                    r.evaluations,
                    r.failed_evaluations,
                    num(r.residual_norm),
                    num(r.x[0]),
                    num(r.x[1])
                );
            }
            (None, e) => {
                let _ = writeln!(log, "  seed ({}, {}): failed: {}", o.seed[0], o.seed[1], e.as_deref().unwrap_or("unknown"));
            }
        }
    }
}

fn phase_counts(result: &SweepResult) -> String {
    let count = |p: Phase| result.points.iter().filter(|x| x.phase() == p).count();
    format!(
        "{} normal, {} condensed, {} inaccessible",
        count(Phase::Normal),
        count(Phase::Condensed),
        count(Phase::Inaccessible)
    )
}

/// Runs `command` against a validated configuration.
pub fn run(command: Command, config: &RunConfig) -> Outcome {
    let dir = PathBuf::from(&config.output.dir);
    if let Err(e) = fs::create_dir_all(&dir) {
        return Outcome::fail(ExitStatus::Io, format!("cannot create {}: {e}", dir.display()));
    }
    let stem = &config.output.stem;
    let csv = dir.join(format!("{stem}_{}.csv", command.file_tag()));
    let log_path = dir.join(format!("{stem}.log"));
    let lines = config.to_lines();
    let provenance = Provenance {
        generated_at: Some(timestamp()),
        ..Provenance::default()
    };
    let mut log = String::new();
    let _ = writeln!(log, "command = {}", command.as_str());
    let _ = writeln!(log, "code_version = {}", provenance.code_version);
    let _ = writeln!(log, "generated_at = {}", provenance.generated_at.as_deref().unwrap_or(""));

    let result = execute(command, config, &csv, &dir, &lines, &provenance, &mut log);
    let mut outcome = match result {
        Ok(o) => o,
        Err(Failure::Engine(e)) => {
            let _ = writeln!(log, "error: {e}");
            Outcome::fail(status_of(&e), format!("{}: {e}", command.as_str()))
        }
        Err(Failure::Io(e)) => Outcome::fail(ExitStatus::Io, format!("{}: i/o error: {e}", command.as_str())),
        Err(Failure::Validation(msg)) => Outcome::fail(ExitStatus::Validation, format!("{}: {msg}", command.as_str())),
    };
    let _ = writeln!(log, "exit = {}", outcome.status.code());
    match fs::write(&log_path, log) {
        Ok(()) => outcome.files.push(log_path),
        Err(e) => {
            outcome.status = ExitStatus::Io;
            outcome.summary = format!("{}: cannot write log: {e}", command.as_str());
        }
    }
    outcome
}

enum Failure {
    Engine(Error),
    Io(io::Error),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn problem(config: &RunConfig) -> Result<SaddleProblem, Error> {
    let grid = config.frequency_grid()?;
    Ok(
        SaddleProblem::with_method(config.system, config.drive.clone(), &grid, config.solver.dressing, config.grid.method)?
            .with_fixed_point(config.solver.fixed_point)
            .with_orientation(config.solver.orientation),
    )
}

fn execute(
    command: Command,
    config: &RunConfig,
    csv: &Path,
    dir: &Path,
    lines: &[String],
    provenance: &Provenance,
    log: &mut String,
) -> Result<Outcome, Failure> {
    let mut files = vec![csv.to_path_buf()];
    let (status, summary) = match command {
        Command::Solve => {
            let pr = problem(config)?;
            let s = solve_saddle(&pr, &config.solver.seeds, &config.solver.solve);
            log_solution(log, "point", &s);
            write_file(csv, |w| write_solutions_csv(w, [(None, None, &s)], lines, provenance))?;
            let rho = s.observables.map_or(f64::NAN, |o| o.rho);
            let status = if s.phase == Phase::Inaccessible { ExitStatus::Numerical } else { ExitStatus::Success };
            let summary = format!(
                "solve: phase {}, psi_f {}, mu_S {}, rho {}",
                s.phase,
                num(s.psi_f),
                num(s.mu_s),
                num(rho)
            );
            (status, summary)
        }
        Command::Sweep1d | Command::Sweep2d => {
            let Some(mut spec) = config.sweep_spec() else {
                return Err(Failure::Validation("configuration has no sweep section".into()));
            };
            let result = if command == Command::Sweep1d {
                if spec.axis2.take().is_some() {
                    let _ = writeln!(log, "note: sweep.axis2 ignored by sweep1d");
                }
                sweep_1d(&spec)?
            } else {
                if spec.axis2.is_none() {
                    return Err(Failure::Validation("sweep2d needs `sweep.axis2`".into()));
                }
                sweep_2d(&spec)?
            };
            for p in &result.points {
                let label = match p.axis2 {
                    Some(a2) => format!("{} = {}, {} = {}", spec.axis1.param, num(p.axis1), result.spec.axis2.unwrap().param, num(a2)),
                    None => format!("{} = {}", spec.axis1.param, num(p.axis1)),
                };
                log_solution(log, &label, &p.solution);
            }
            write_file(csv, |w| write_points_csv(w, &result, lines, provenance))?;
            let mut summary = format!("{}: {} points, {}", command.as_str(), result.points.len(), phase_counts(&result));
            if command == Command::Sweep1d {
                for (x, t) in transitions(&result) {
                    let kind = if t == Transition::Onset { "onset" } else { "loss" };
                    let _ = write!(summary, ", {kind} at {} = {}", spec.axis1.param, num(x));
                }
            } else {
                let path = dir.join(format!("{}_boundary.csv", config.output.stem));
                write_file(&path, |w| write_boundary_csv(w, &result.boundary, lines, provenance))?;
                files.push(path);
                let flagged = result.boundary.iter().filter(|b| b.adjacent_inaccessible).count();
                let _ = write!(summary, ", {} boundary points ({flagged} next to inaccessible cells)", result.boundary.len());
            }
            let status = if result.all_inaccessible() { ExitStatus::Numerical } else { ExitStatus::Success };
            (status, summary)
        }
        Command::Stability => {
            let grid = config.frequency_grid()?;
            let st = Stability::new(&config.system, &config.drive, &grid, config.stability.options)?;
            let report = st.report(&config.stability.omegas())?;
            let _ = writeln!(log, "dressed = {}", report.dressed);
            let _ = writeln!(log, "mu_eff bracket = {:?}", report.root_bracket);
            write_file(csv, |w| {
                write_metadata(w, lines, provenance)?;
                writeln!(w, "## mu_eff = {}", report.mu_eff.map_or("none".into(), num))?;
                writeln!(w, "omega,re_K,im_K,spectral_weight")?;
                for ((o, k), s) in report.omega_samples.iter().zip(&report.k_r1).zip(&report.spectral_weight) {
                    writeln!(w, "{},{},{},{}", num(*o), num(k.re), num(k.im), num(*s))?;
                }
                Ok(())
            })?;
            let mu = report.mu_eff.map_or("none".into(), num);
            (ExitStatus::Success, format!("stability: mu_eff {mu}, {} samples", report.omega_samples.len()))
        }
        Command::DumpGreens | Command::DumpSelfenergy => {
            let pr = problem(config)?;
            let (mu_s, psi_f) = config.point;
            let dressed = pr.green(mu_s, psi_f)?;
            let _ = writeln!(log, "dressing iterations = {}, converged = {}", dressed.iterations, dressed.converged);
            let omegas = pr.grid().points();
            write_file(csv, |w| {
                write_metadata(w, lines, provenance)?;
                if command == Command::DumpGreens {
                    write_greens(w, omegas, &dressed.gf)
                } else {
                    let comps = dressed.sigma.components();
                    let mut header = String::from("omega");
                    for (name, _) in &comps {
                        let _ = write!(header, ",re_{name},im_{name}");
                    }
                    writeln!(w, "{header}")?;
                    for (i, o) in omegas.iter().enumerate() {
                        let mut row = num(*o);
                        for (_, v) in &comps {
                            let _ = write!(row, ",{},{}", num(v[i].re), num(v[i].im));
                        }
                        writeln!(w, "{row}")?;
                    }
                    Ok(())
                }
            })?;
            let summary = format!(
                "{}: {} frequencies at mu_S {}, psi_f {}",
                command.as_str(),
                omegas.len(),
                num(mu_s),
                num(psi_f)
            );
            (ExitStatus::Success, summary)
        }
    };
    Ok(Outcome { status, summary, files })
}

fn write_greens<W: Write>(w: &mut W, omegas: &[f64], gf: &KeldyshGF) -> io::Result<()> {
    const BLOCKS: [&str; 4] = ["bb", "ba", "ab", "aa"];
    let mut header = String::from("omega");
    for part in ["R", "K"] {
        for b in BLOCKS {
            let _ = write!(header, ",re_{part}_{b},im_{part}_{b}");
        }
    }
    writeln!(w, "{header}")?;
    for (i, o) in omegas.iter().enumerate() {
        let mut row = num(*o);
        for m in [&gf.r[i], &gf.k[i]] {
            for v in [m.bb, m.ba, m.ab, m.aa] {
                let _ = write!(row, ",{},{}", num(v.re), num(v.im));
            }
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.as_str().parse::<Command>().unwrap(), c);
        }
        assert!("sweep".parse::<Command>().is_err());
    }

    #[test]
    fn overrides_are_revalidated() {
        let c = RunConfig::default();
        let o = Overrides {
            grid_points: Some(2),
            ..Default::default()
        };
        assert!(apply(c.clone(), &o).is_err());
        let o = Overrides {
            grid_points: Some(1023),
            dressing: Some(Dressing::Bare),
            out: Some(PathBuf::from("/tmp/x")),
        };
        let c = apply(c, &o).unwrap();
        assert_eq!((c.grid.points, c.solver.dressing, c.output.dir.as_str()), (1023, Dressing::Bare, "/tmp/x"));
    }
}
