//! Flat `section.key = value` run configuration.
//!
//! Every key has a default, unknown keys are rejected, and [`RunConfig::to_lines`]
//! writes a document that parses back to an identical configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::grid::{FrequencyGrid, TailPolicy, DEFAULT_POINTS};
use crate::params::{DriveSpectrum, SystemParams, TabulatedDrive};
use crate::saddle::SolveOptions;
use crate::selfenergy::{ConvolutionMethod, Dressing, FixedPointOptions, PhotonOrientation};
use crate::stability::StabilityOptions;
use crate::sweep::{Axis, SweepParam, SweepSpec};
use crate::trust_region::TrustRegionOptions;

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse { line: usize, column: usize, message: String },
    Validation { key: String, message: String },
    UnknownKey { line: usize, key: String },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parse { line, column, message } => write!(f, "parse error at {line}:{column}: {message}"),
            Self::Validation { key, message } => write!(f, "invalid `{key}`: {message}"),
            Self::UnknownKey { line, key } => write!(f, "unknown key `{key}` on line {line}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Every accepted key.
pub const KEYS: &[&str] = &[
    "system.g",
    "system.eps0",
    "system.omega0",
    "system.kappa",
    "system.gamma",
    "system.mu_B",
    "system.T_F",
    "drive.kind",
    "drive.h",
    "drive.xi",
    "drive.Omega",
    "drive.frequencies",
    "drive.occupations",
    "grid.points",
    "grid.half_width",
    "grid.tail",
    "grid.method",
    "solver.dressing",
    "solver.initial_radius",
    "solver.max_radius",
    "solver.eta_accept",
    "solver.max_iterations",
    "solver.residual_tol",
    "solver.step_tol",
    "solver.jacobian_fd_step",
    "solver.psi_threshold",
    "solver.refine_on_failure",
    "solver.seeds",
    "solver.photon_orientation",
    "solver.fp_damping",
    "solver.fp_tolerance",
    "solver.fp_max_iterations",
    "sweep.axis1",
    "sweep.axis1_start",
    "sweep.axis1_end",
    "sweep.axis1_steps",
    "sweep.axis2",
    "sweep.axis2_start",
    "sweep.axis2_end",
    "sweep.axis2_steps",
    "sweep.continuation",
    "stability.dressing",
    "stability.mu_S",
    "stability.cavity",
    "stability.window_min",
    "stability.window_max",
    "stability.scan_points",
    "stability.root_tol",
    "stability.omega_min",
    "stability.omega_max",
    "stability.samples",
    "point.mu_S",
    "point.psi_f",
    "output.dir",
    "output.stem",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveKind {
    Lorentzian,
    Flat,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub points: usize,
    /// `None` sizes the grid from the parameters.
    pub half_width: Option<f64>,
    pub tail: TailPolicy,
    pub method: ConvolutionMethod,
}

impl GridConfig {
    pub fn build(&self, params: &SystemParams, drive: &DriveSpectrum) -> crate::error::Result<FrequencyGrid> {
        let g = match self.half_width {
            Some(w) => FrequencyGrid::symmetric(w, self.points)?,
            None => FrequencyGrid::for_problem(params, drive, self.points)?,
        };
        Ok(g.with_tail(self.tail))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub dressing: Dressing,
    pub orientation: PhotonOrientation,
    pub solve: SolveOptions,
    pub fixed_point: FixedPointOptions,
    /// Empty means the built-in seeds.
    pub seeds: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub axis1: Axis,
    pub axis2: Option<Axis>,
    pub continuation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    pub options: StabilityOptions,
    /// Frequencies written to the stability CSV.
    pub omega_min: f64,
    pub omega_max: f64,
    pub samples: usize,
}

impl StabilityConfig {
    pub fn omegas(&self) -> Vec<f64> {
        let n = self.samples;
        if n == 1 {
            return vec![self.omega_min];
        }
        (0..n)
            .map(|i| self.omega_min + (self.omega_max - self.omega_min) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    pub stem: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub drive: DriveSpectrum,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub sweep: Option<SweepConfig>,
    pub stability: StabilityConfig,
    /// Fixed `(mu_S, psi_f)` for the dump commands.
    pub point: (f64, f64),
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        parse_config("").expect("defaults are valid")
    }
}

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

/// Looks up and converts keys, recording parse failures with their position.
struct Doc {
    entries: BTreeMap<String, Entry>,
}

impl Doc {
    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse().map_err(|err: T::Err| ConfigError::Parse {
                line: e.line,
                column: e.column,
                message: format!("`{key}`: cannot read `{}`: {err}", e.value),
            }),
        }
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.entries.get(key).map(|e| e.value.parse().map_err(|err: T::Err| ConfigError::Parse {
            line: e.line,
            column: e.column,
            message: format!("`{key}`: cannot read `{}`: {err}", e.value),
        })).transpose()
    }

    fn list<T: FromStr>(&self, key: &str, sep: char) -> Result<Vec<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(e) = self.entries.get(key) else { return Ok(Vec::new()) };
        e.value
            .split(sep)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|err: T::Err| ConfigError::Parse {
                    line: e.line,
                    column: e.column,
                    message: format!("`{key}`: cannot read `{s}`: {err}"),
                })
            })
            .collect()
    }

    fn has(&self, prefix: &str) -> bool {
        self.entries.keys().any(|k| k.starts_with(prefix))
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

fn from_engine(e: crate::error::Error) -> ConfigError {
    match e {
        crate::error::Error::InvalidParameter { name, reason } => invalid(name, reason),
        other => invalid("config", other.to_string()),
    }
}

/// Wraps a parse-only string setting so `Doc::get` can convert it.
struct Text<T>(T);

impl FromStr for Text<TailPolicy> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "analytic" => Ok(Text(TailPolicy::AnalyticTail)),
            "truncate" => Ok(Text(TailPolicy::Truncate)),
            _ => Err("expected `analytic` or `truncate`".into()),
        }
    }
}

impl FromStr for Text<ConvolutionMethod> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fft" => Ok(Text(ConvolutionMethod::Fft)),
            "direct" => Ok(Text(ConvolutionMethod::Direct)),
            _ => Err("expected `fft` or `direct`".into()),
        }
    }
}

impl FromStr for Text<DriveKind> {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lorentzian" => Ok(Text(DriveKind::Lorentzian)),
            "flat" => Ok(Text(DriveKind::Flat)),
            "tabulated" => Ok(Text(DriveKind::Tabulated)),
            _ => Err("expected `lorentzian`, `flat` or `tabulated`".into()),
        }
    }
}

/// `mu:psi` seed pair.
struct Seed([f64; 2]);

impl FromStr for Seed {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once(':').ok_or("expected `mu_S:psi_f`")?;
        let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
        let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
        Ok(Seed([a, b]))
    }
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Entry>, ConfigError> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim_start();
        let indent = raw.len() - body.len();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(ConfigError::Parse {
                line,
                column: indent + body.len() + 1,
                message: "expected `section.key = value`".into(),
            });
        };
        let key = body[..eq].trim();
        let value_part = &body[eq + 1..];
        let value = value_part.trim();
        let value_col = indent + eq + 2 + (value_part.len() - value_part.trim_start().len());
        if !key.contains('.') || key.starts_with('.') || key.ends_with('.') || key.contains(char::is_whitespace) {
            return Err(ConfigError::Parse {
                line,
                column: indent + 1,
                message: format!("`{key}` is not of the form `section.key`"),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse {
                line,
                column: value_col,
                message: format!("`{key}` has no value"),
            });
        }
        let prev = entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
                column: value_col,
            },
        );
        if prev.is_some() {
            return Err(ConfigError::Parse {
                line,
                column: indent + 1,
                message: format!("`{key}` is set twice"),
            });
        }
    }
    Ok(entries)
}

/// Parses and validates a configuration document, applying defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc = Doc { entries: tokenize(text)? };
    let base = SystemParams::default();

    let eps0 = doc.get("system.eps0", base.eps0)?;
    let kappa = doc.get("system.kappa", base.kappa)?;
    let system = SystemParams {
        g: doc.get("system.g", base.g)?,
        eps0,
        omega0: doc.get("system.omega0", 2.0 * eps0)?,
        kappa,
        gamma: doc.get("system.gamma", base.gamma)?,
        mu_b: doc.get("system.mu_B", base.mu_b)?,
        t_f: doc.get("system.T_F", base.t_f)?,
    };
    system.validate().map_err(from_engine)?;

    let kind = doc.get("drive.kind", Text(DriveKind::Lorentzian))?.0;
    let h: f64 = doc.get("drive.h", 0.0)?;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(invalid("drive.h", format!("amplitude must be finite and non-negative, got {h}")));
    }
    let only_for = |keys: &[&str], what: &str| -> Result<(), ConfigError> {
        match keys.iter().find(|k| doc.entries.contains_key(**k)) {
            Some(k) => Err(invalid(k, format!("only used by a {what} drive"))),
            None => Ok(()),
        }
    };
    let drive = match kind {
        DriveKind::Lorentzian => {
            only_for(&["drive.frequencies", "drive.occupations"], "tabulated")?;
            DriveSpectrum::lorentzian(h, doc.get("drive.xi", 0.0)?, doc.get("drive.Omega", 10.0 * kappa)?)
        }
        DriveKind::Flat => {
            only_for(&["drive.xi", "drive.Omega", "drive.frequencies", "drive.occupations"], "lorentzian or tabulated")?;
            DriveSpectrum::flat(h)
        }
        DriveKind::Tabulated => {
            only_for(&["drive.h", "drive.xi", "drive.Omega"], "lorentzian or flat")?;
            let table = TabulatedDrive::new(doc.list("drive.frequencies", ',')?, doc.list("drive.occupations", ',')?)
                .map_err(|e| invalid("drive.frequencies", e.to_string()))?;
            DriveSpectrum::Tabulated(table)
        }
    };
    drive.validate().map_err(from_engine)?;

    let grid = GridConfig {
        points: doc.get("grid.points", DEFAULT_POINTS)?,
        half_width: doc.opt("grid.half_width")?,
        tail: doc.get("grid.tail", Text(TailPolicy::default()))?.0,
        method: doc.get("grid.method", Text(ConvolutionMethod::default()))?.0,
    };
    if grid.half_width.is_some_and(|w| !(w > 0.0 && w.is_finite())) {
        return Err(invalid("grid.half_width", "must be positive and finite"));
    }
    if grid.points < 3 {
        return Err(invalid("grid.points", "need at least three points"));
    }
    grid.build(&system, &drive).map_err(|e| invalid("grid.points", e.to_string()))?;

    let tr0 = TrustRegionOptions::default();
    let so0 = SolveOptions::default();
    let fp0 = FixedPointOptions::default();
    let solver = SolverConfig {
        dressing: doc.get("solver.dressing", Dressing::default())?,
        orientation: doc.get("solver.photon_orientation", PhotonOrientation::default())?,
        solve: SolveOptions {
            trust_region: TrustRegionOptions {
                initial_radius: doc.get("solver.initial_radius", tr0.initial_radius)?,
                max_radius: doc.get("solver.max_radius", tr0.max_radius)?,
                eta_accept: doc.get("solver.eta_accept", tr0.eta_accept)?,
                max_iterations: doc.get("solver.max_iterations", tr0.max_iterations)?,
                residual_tol: doc.get("solver.residual_tol", tr0.residual_tol)?,
                step_tol: doc.get("solver.step_tol", tr0.step_tol)?,
                jacobian_fd_step: doc.get("solver.jacobian_fd_step", tr0.jacobian_fd_step)?,
            },
            psi_threshold: doc.get("solver.psi_threshold", so0.psi_threshold)?,
            refine_on_failure: doc.get("solver.refine_on_failure", so0.refine_on_failure)?,
            compute_observables: true,
        },
        fixed_point: FixedPointOptions {
            damping: doc.get("solver.fp_damping", fp0.damping)?,
            tolerance: doc.get("solver.fp_tolerance", fp0.tolerance)?,
            max_iterations: doc.get("solver.fp_max_iterations", fp0.max_iterations)?,
        },
        seeds: doc.list::<Seed>("solver.seeds", ',')?.into_iter().map(|s| s.0).collect(),
    };
    solver.solve.trust_region.validate().map_err(from_engine)?;
    if !(solver.solve.psi_threshold > 0.0) {
        return Err(invalid("solver.psi_threshold", "must be positive"));
    }
    let fp = &solver.fixed_point;
    if !(fp.damping > 0.0 && fp.damping <= 1.0) {
        return Err(invalid("solver.fp_damping", "must lie in (0, 1]"));
    }
    if !(fp.tolerance > 0.0) || fp.max_iterations == 0 {
        return Err(invalid("solver.fp_tolerance", "tolerance and iteration cap must be positive"));
    }
    if solver.seeds.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("solver.seeds", "seeds must be finite"));
    }

    let sweep = if doc.has("sweep.") {
        let axis = |n: &str| -> Result<Option<Axis>, ConfigError> {
            let name = format!("sweep.axis{n}");
            let Some(param) = doc.opt::<SweepParam>(&name)? else {
                if doc.has(&format!("{name}_")) {
                    return Err(invalid(&name, "range given without a parameter"));
                }
                return Ok(None);
            };
            let req = |suffix: &str| -> Result<f64, ConfigError> {
                let k = format!("{name}_{suffix}");
                doc.opt(&k)?.ok_or_else(|| invalid(&k, "required when the axis is set"))
            };
            let steps_key = format!("{name}_steps");
            let steps = doc.opt(&steps_key)?.ok_or_else(|| invalid(&steps_key, "required when the axis is set"))?;
            let a = Axis::new(param, req("start")?, req("end")?, steps);
            a.validate().map_err(|e| invalid(&name, e.to_string()))?;
            Ok(Some(a))
        };
        let axis1 = axis("1")?;
        let axis2 = axis("2")?;
        let continuation = doc.get("sweep.continuation", true)?;
        match axis1 {
            Some(axis1) => Some(SweepConfig {
                axis1,
                axis2,
                continuation,
            }),
            None => return Err(invalid("sweep.axis1", "sweep keys given without `sweep.axis1`")),
        }
    } else {
        None
    };

    let st0 = StabilityOptions::default();
    let stability = StabilityConfig {
        options: StabilityOptions {
            dressing: doc.get("stability.dressing", st0.dressing)?,
            orientation: solver.orientation,
            mu_s: doc.get("stability.mu_S", st0.mu_s)?,
            cavity: doc.opt("stability.cavity")?,
            window: (doc.get("stability.window_min", st0.window.0)?, doc.get("stability.window_max", st0.window.1)?),
            scan_points: doc.get("stability.scan_points", st0.scan_points)?,
            root_tol: doc.get("stability.root_tol", st0.root_tol)?,
        },
        omega_min: doc.get("stability.omega_min", -5.0)?,
        omega_max: doc.get("stability.omega_max", 5.0)?,
        samples: doc.get("stability.samples", 201)?,
    };
    stability.options.validate().map_err(from_engine)?;
    if stability.samples == 0 || !(stability.omega_min.is_finite() && stability.omega_max >= stability.omega_min) {
        return Err(invalid("stability.samples", "need at least one sample on a finite, ordered range"));
    }

    let point: (f64, f64) = (doc.get("point.mu_S", 0.0)?, doc.get("point.psi_f", 0.0)?);
    if !(point.0.is_finite() && point.1.is_finite()) {
        return Err(invalid("point.mu_S", "must be finite"));
    }

    let output = OutputConfig {
        dir: doc.get("output.dir", ".".to_string())?,
        stem: doc.get("output.stem", "run".to_string())?,
    };
    if output.stem.contains(['/', '\\']) {
        return Err(invalid("output.stem", "must be a bare file-name stem"));
    }

    Ok(RunConfig {
        system,
        drive,
        grid,
        solver,
        sweep,
        stability,
        point,
        output,
    })
}

/// Shortest round-trip form; exponent notation for very small or large values.
fn fmt_value<T: fmt::Debug>(x: T) -> String {
    format!("{x:?}")
}

fn join<T: fmt::Debug>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(fmt_value).collect::<Vec<_>>().join(", ")
}

fn join_seeds(seeds: &[[f64; 2]]) -> String {
    seeds.iter().map(|s| format!("{:?}:{:?}", s[0], s[1])).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Fully resolved document, one `section.key = value` per line.
    pub fn to_lines(&self) -> Vec<String> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut kv = |k: &str, v: String| out.push((k.to_string(), v));
        let s = &self.system;
        kv("system.g", fmt_value(s.g));
        kv("system.eps0", fmt_value(s.eps0));
        kv("system.omega0", fmt_value(s.omega0));
        kv("system.kappa", fmt_value(s.kappa));
        kv("system.gamma", fmt_value(s.gamma));
        kv("system.mu_B", fmt_value(s.mu_b));
        kv("system.T_F", fmt_value(s.t_f));
        match &self.drive {
            DriveSpectrum::Lorentzian { h, xi, width } => {
                kv("drive.kind", "lorentzian".into());
                kv("drive.h", fmt_value(h));
                kv("drive.xi", fmt_value(xi));
                kv("drive.Omega", fmt_value(width));
            }
            DriveSpectrum::Flat { h } => {
                kv("drive.kind", "flat".into());
                kv("drive.h", fmt_value(h));
            }
            DriveSpectrum::Tabulated(t) => {
                kv("drive.kind", "tabulated".into());
                kv("drive.frequencies", join(t.frequencies()));
                kv("drive.occupations", join(t.occupations()));
            }
        }
        let g = &self.grid;
        kv("grid.points", fmt_value(g.points));
        if let Some(w) = g.half_width {
            kv("grid.half_width", fmt_value(w));
        }
        kv(
            "grid.tail",
            match g.tail {
                TailPolicy::AnalyticTail => "analytic",
                TailPolicy::Truncate => "truncate",
            }
            .into(),
        );
        kv(
            "grid.method",
            match g.method {
                ConvolutionMethod::Fft => "fft",
                ConvolutionMethod::Direct => "direct",
            }
            .into(),
        );
        let sv = &self.solver;
        let tr = &sv.solve.trust_region;
        kv("solver.dressing", sv.dressing.as_str().into());
        kv("solver.photon_orientation", sv.orientation.as_str().into());
        kv("solver.initial_radius", fmt_value(tr.initial_radius));
        kv("solver.max_radius", fmt_value(tr.max_radius));
        kv("solver.eta_accept", fmt_value(tr.eta_accept));
        kv("solver.max_iterations", fmt_value(tr.max_iterations));
        kv("solver.residual_tol", fmt_value(tr.residual_tol));
        kv("solver.step_tol", fmt_value(tr.step_tol));
        kv("solver.jacobian_fd_step", fmt_value(tr.jacobian_fd_step));
        kv("solver.psi_threshold", fmt_value(sv.solve.psi_threshold));
        kv("solver.refine_on_failure", fmt_value(sv.solve.refine_on_failure));
        if !sv.seeds.is_empty() {
            kv("solver.seeds", join_seeds(&sv.seeds));
        }
        kv("solver.fp_damping", fmt_value(sv.fixed_point.damping));
        kv("solver.fp_tolerance", fmt_value(sv.fixed_point.tolerance));
        kv("solver.fp_max_iterations", fmt_value(sv.fixed_point.max_iterations));
        if let Some(sw) = &self.sweep {
            for (n, axis) in [("1", Some(sw.axis1)), ("2", sw.axis2)] {
                if let Some(a) = axis {
                    kv(&format!("sweep.axis{n}"), a.param.to_string());
                    kv(&format!("sweep.axis{n}_start"), fmt_value(a.start));
                    kv(&format!("sweep.axis{n}_end"), fmt_value(a.end));
                    kv(&format!("sweep.axis{n}_steps"), fmt_value(a.steps));
                }
            }
            kv("sweep.continuation", fmt_value(sw.continuation));
        }
        let st = &self.stability;
        kv("stability.dressing", st.options.dressing.as_str().into());
        kv("stability.mu_S", fmt_value(st.options.mu_s));
        if let Some(c) = st.options.cavity {
            kv("stability.cavity", fmt_value(c));
        }
        kv("stability.window_min", fmt_value(st.options.window.0));
        kv("stability.window_max", fmt_value(st.options.window.1));
        kv("stability.scan_points", fmt_value(st.options.scan_points));
        kv("stability.root_tol", fmt_value(st.options.root_tol));
        kv("stability.omega_min", fmt_value(st.omega_min));
        kv("stability.omega_max", fmt_value(st.omega_max));
        kv("stability.samples", fmt_value(st.samples));
        kv("point.mu_S", fmt_value(self.point.0));
        kv("point.psi_f", fmt_value(self.point.1));
        kv("output.dir", self.output.dir.clone());
        kv("output.stem", self.output.stem.clone());
        out.into_iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }

    pub fn frequency_grid(&self) -> crate::error::Result<FrequencyGrid> {
        self.grid.build(&self.system, &self.drive)
    }

    /// Sweep specification, if the configuration has a `sweep` section.
    pub fn sweep_spec(&self) -> Option<SweepSpec> {
        let sw = self.sweep?;
        let mut spec = SweepSpec::new(sw.axis1, self.system, self.drive.clone());
        spec.axis2 = sw.axis2;
        spec.dressing = self.solver.dressing;
        spec.fixed_point = self.solver.fixed_point;
        spec.orientation = self.solver.orientation;
        spec.solve = self.solver.solve;
        spec.grid_points = self.grid.points;
        spec.half_width = self.grid.half_width;
        spec.tail = self.grid.tail;
        spec.method = self.grid.method;
        spec.continuation = sw.continuation;
        spec.seeds = self.solver.seeds.clone();
        Some(spec)
    }
}

/// Configuration lines from the leading `# ` block of an output file.
pub fn metadata_block(text: &str) -> String {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter(|l| !l.starts_with("##"))
        .map(|l| l.strip_prefix("# ").unwrap_or(&l[1..]))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c.system, SystemParams::default());
        assert_eq!(c.system.g, 1.0);
        assert_eq!(c.system.omega0, 0.0);
        assert_eq!(c.system.t_f, 0.1);
        assert_eq!(c.drive, DriveSpectrum::lorentzian(0.0, 0.0, 2.5));
        assert_eq!(c.grid.points, DEFAULT_POINTS);
        assert!(c.sweep.is_none());
        assert_eq!(c.solver.dressing, Dressing::OneShot);
    }

    #[test]
    fn negative_amplitude_is_a_validation_error() {
        let e = parse_config("drive.h = -1").unwrap_err();
        assert!(matches!(e, ConfigError::Validation { ref key, .. } if key == "drive.h"), "{e}");
    }

    #[test]
    fn fourth_figure_document() {
        let text = "# quench\nsystem.mu_B = -2\nsystem.kappa = 0.7\nsystem.gamma = 0.3\ndrive.xi = 0\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.system, SystemParams::resonant(0.7, 0.3, -2.0));
        assert_eq!(c.drive, DriveSpectrum::lorentzian(0.0, 0.0, 7.0));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(
            parse_config("system.kappa = 1\nsystem.kapa = 2").unwrap_err(),
            ConfigError::UnknownKey {
                line: 2,
                key: "system.kapa".into()
            }
        );
        match parse_config("\n  system.kappa = abc").unwrap_err() {
            ConfigError::Parse { line, column, .. } => assert_eq!((line, column), (2, 18)),
            e => panic!("{e}"),
        }
        match parse_config("system.kappa 1").unwrap_err() {
            ConfigError::Parse { line: 1, .. } => {}
            e => panic!("{e}"),
        }
        assert!(matches!(parse_config("kappa = 1"), Err(ConfigError::Parse { column: 1, .. })));
        assert!(matches!(parse_config("drive.h = 1\ndrive.h = 2"), Err(ConfigError::Parse { line: 2, .. })));
        assert!(matches!(parse_config("sweep.axis1 = T_F"), Err(ConfigError::Parse { .. })));
        assert!(matches!(parse_config("sweep.axis1 = h"), Err(ConfigError::Validation { .. })));
        assert!(matches!(parse_config("drive.kind = flat\ndrive.xi = 1"), Err(ConfigError::Validation { .. })));
    }

    #[test]
    fn round_trip_through_lines() {
        let text = "\
system.mu_B = -0.5
drive.kind = lorentzian
drive.h = 0.3
drive.xi = 1
grid.points = 4095
grid.half_width = 40
solver.dressing = fixed_point
solver.seeds = 0:0.3, -0.25:1e-3
sweep.axis1 = h
sweep.axis1_start = 0
sweep.axis1_end = 2
sweep.axis1_steps = 40
sweep.axis2 = xi
sweep.axis2_start = -2
sweep.axis2_end = 2
sweep.axis2_steps = 5
stability.cavity = 0.1
output.stem = fig3
";
        let c = parse_config(text).unwrap();
        assert_eq!(c.solver.seeds, vec![[0.0, 0.3], [-0.25, 1e-3]]);
        let again = parse_config(&c.to_lines().join("\n")).unwrap();
        assert_eq!(c, again);
        let tab = parse_config("drive.kind = tabulated\ndrive.frequencies = -1, 0, 1\ndrive.occupations = 0, 0.5, 0").unwrap();
        assert_eq!(parse_config(&tab.to_lines().join("\n")).unwrap(), tab);
    }

    #[test]
    fn metadata_block_strips_prefixes() {
        let text = "# system.g = 1\n# drive.h = 0\n## code_version = 0.1.0\naxis1,axis2\n# not metadata\n";
        assert_eq!(metadata_block(text), "system.g = 1\ndrive.h = 0");
    }
}
