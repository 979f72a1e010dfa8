//! One- and two-dimensional parameter sweeps with warm-start continuation,
//! threshold location, phase-boundary extraction and CSV output.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{FrequencyGrid, TailPolicy, DEFAULT_POINTS};
use crate::params::{DriveSpectrum, SystemParams};
use crate::saddle::{solve_saddle, Phase, SaddleProblem, SaddleSolution, SolveOptions, DEFAULT_SEEDS};
use crate::selfenergy::{ConvolutionMethod, Dressing, FixedPointOptions, PhotonOrientation};

/// Header of the per-point CSV.
pub const POINTS_HEADER: &str = "axis1,axis2,mu_S,psi_f,polarization,rho,phase,residual,iterations";
/// Header of the boundary CSV.
pub const BOUNDARY_HEADER: &str = "axis1,axis2,adjacent_inaccessible";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    H,
    Xi,
    Omega,
    MuB,
    Kappa,
    Gamma,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [Self::H, Self::Xi, Self::Omega, Self::MuB, Self::Kappa, Self::Gamma];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::H => "h",
            Self::Xi => "xi",
            Self::Omega => "Omega",
            Self::MuB => "mu_B",
            Self::Kappa => "kappa",
            Self::Gamma => "gamma",
        }
    }

    /// Writes `value` into the parameter this axis controls.
    pub fn apply(&self, value: f64, params: &mut SystemParams, drive: &mut DriveSpectrum) -> Result<()> {
        let unsupported = |kind: &str| Error::InvalidParameter {
            name: "sweep.axis",
            reason: format!("`{}` cannot be swept with a {kind} drive", self.as_str()),
        };
        match (self, drive) {
            (Self::MuB, _) => params.mu_b = value,
            (Self::Kappa, _) => params.kappa = value,
            (Self::Gamma, _) => params.gamma = value,
            (Self::H, DriveSpectrum::Lorentzian { h, .. }) | (Self::H, DriveSpectrum::Flat { h }) => *h = value,
            (Self::Xi, DriveSpectrum::Lorentzian { xi, .. }) => *xi = value,
            (Self::Omega, DriveSpectrum::Lorentzian { width, .. }) => *width = value,
            (_, DriveSpectrum::Flat { .. }) => return Err(unsupported("flat")),
            (_, DriveSpectrum::Tabulated(_)) => return Err(unsupported("tabulated")),
        }
        Ok(())
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown sweep parameter `{s}` (expected one of h, xi, Omega, mu_B, kappa, gamma)"))
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Inclusive, evenly spaced axis. `start > end` sweeps downwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: SweepParam,
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(param: SweepParam, start: f64, end: f64, steps: usize) -> Self {
        Self { param, start, end, steps }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidParameter {
                name: "sweep.steps",
                reason: format!("{} steps on `{}`; at least 2 are required", self.steps, self.param),
            });
        }
        if !(self.start.is_finite() && self.end.is_finite()) || self.start == self.end {
            return Err(Error::InvalidParameter {
                name: "sweep.range",
                reason: format!("[{}, {}] on `{}` must be finite with distinct ends", self.start, self.end, self.param),
            });
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.end } else { self.start + (self.end - self.start) * i as f64 / last })
            .collect()
    }

    /// Same axis traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self {
            start: self.end,
            end: self.start,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Continuation axis.
    pub axis1: Axis,
    /// Row axis of a 2D sweep.
    pub axis2: Option<Axis>,
    pub params: SystemParams,
    pub drive: DriveSpectrum,
    pub dressing: Dressing,
    pub fixed_point: FixedPointOptions,
    pub orientation: PhotonOrientation,
    pub solve: SolveOptions,
    pub grid_points: usize,
    /// Fixed half-width; `None` sizes the grid for every point.
    pub half_width: Option<f64>,
    pub tail: TailPolicy,
    pub method: ConvolutionMethod,
    /// Seed each point with its predecessor's solution.
    pub continuation: bool,
    /// Multi-start seeds; empty means the defaults.
    pub seeds: Vec<[f64; 2]>,
}

impl SweepSpec {
    pub fn new(axis1: Axis, params: SystemParams, drive: DriveSpectrum) -> Self {
        Self {
            axis1,
            axis2: None,
            params,
            drive,
            dressing: Dressing::default(),
            fixed_point: FixedPointOptions::default(),
            orientation: PhotonOrientation::default(),
            solve: SolveOptions::default(),
            grid_points: DEFAULT_POINTS,
            half_width: None,
            tail: TailPolicy::default(),
            method: ConvolutionMethod::default(),
            continuation: true,
            seeds: Vec::new(),
        }
    }

    pub fn with_axis2(mut self, axis2: Axis) -> Self {
        self.axis2 = Some(axis2);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.axis1.validate()?;
        if let Some(a2) = &self.axis2 {
            a2.validate()?;
            if a2.param == self.axis1.param {
                return Err(Error::InvalidParameter {
                    name: "sweep.axis2",
                    reason: format!("both axes sweep `{}`", a2.param),
                });
            }
        }
        self.params.validate()?;
        self.drive.validate()?;
        self.solve.trust_region.validate()?;
        // Reject axes the drive cannot carry before any solve runs.
        let (mut p, mut d) = (self.params, self.drive.clone());
        self.axis1.param.apply(self.axis1.start, &mut p, &mut d)?;
        if let Some(a2) = &self.axis2 {
            a2.param.apply(a2.start, &mut p, &mut d)?;
        }
        Ok(())
    }

    fn seeds(&self) -> Vec<[f64; 2]> {
        if self.seeds.is_empty() {
            DEFAULT_SEEDS.to_vec()
        } else {
            self.seeds.clone()
        }
    }

    fn problem(&self, a1: f64, a2: Option<f64>) -> Result<SaddleProblem> {
        let (mut p, mut d) = (self.params, self.drive.clone());
        self.axis1.param.apply(a1, &mut p, &mut d)?;
        if let (Some(axis), Some(v)) = (&self.axis2, a2) {
            axis.param.apply(v, &mut p, &mut d)?;
        }
        let grid = match self.half_width {
            Some(w) => FrequencyGrid::symmetric(w, self.grid_points)?,
            None => FrequencyGrid::for_problem(&p, &d, self.grid_points)?,
        }
        .with_tail(self.tail);
        Ok(SaddleProblem::with_method(p, d, &grid, self.dressing, self.method)?.with_fixed_point(self.fixed_point).with_orientation(self.orientation))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub solution: SaddleSolution,
}

impl SweepPoint {
    pub fn phase(&self) -> Phase {
        self.solution.phase
    }
}

/// Location where the phase changes between Normal and Condensed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub axis1: f64,
    pub axis2: f64,
    /// One of the cells sharing this edge has an inaccessible corner.
    pub adjacent_inaccessible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Row-major: `axis1` varies fastest.
    pub points: Vec<SweepPoint>,
    pub boundary: Vec<BoundaryPoint>,
}

impl SweepResult {
    pub fn shape(&self) -> (usize, usize) {
        (self.spec.axis1.steps, self.spec.axis2.map_or(1, |a| a.steps))
    }

    pub fn point(&self, i1: usize, i2: usize) -> &SweepPoint {
        &self.points[i2 * self.spec.axis1.steps + i1]
    }

    pub fn all_inaccessible(&self) -> bool {
        self.points.iter().all(|p| p.phase() == Phase::Inaccessible)
    }
}

/// One continuation chain along `axis1` at a fixed `axis2` value.
fn chain(spec: &SweepSpec, a2: Option<f64>) -> Vec<SweepPoint> {
    let defaults = spec.seeds();
    let mut previous: Option<[f64; 2]> = None;
    spec.axis1
        .values()
        .into_iter()
        .map(|a1| {
            let solution = match spec.problem(a1, a2) {
                Ok(problem) => {
                    let mut seeds = Vec::with_capacity(defaults.len() + 1);
                    seeds.extend(previous);
                    seeds.extend(defaults.iter().copied());
                    solve_saddle(&problem, &seeds, &spec.solve)
                }
                Err(e) => SaddleSolution::inaccessible(vec![crate::saddle::SeedOutcome {
                    seed: [f64::NAN; 2],
                    report: None,
                    error: Some(e.to_string()),
                }]),
            };
            previous = match solution.phase {
                _ if !spec.continuation => None,
                Phase::Inaccessible => None,
                _ => Some([solution.mu_s, solution.psi_f]),
            };
            SweepPoint {
                axis1: a1,
                axis2: a2,
                solution,
            }
        })
        .collect()
}

/// Sweeps `axis1` in order; failures become inaccessible points.
pub fn sweep_1d(spec: &SweepSpec) -> Result<SweepResult> {
    let mut spec = spec.clone();
    spec.axis2 = None;
    spec.validate()?;
    let points = chain(&spec, None);
    Ok(SweepResult {
        spec,
        points,
        boundary: Vec::new(),
    })
}

/// Row-major sweep: one continuation chain per `axis2` value, rows in parallel.
pub fn sweep_2d(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let axis2 = spec.axis2.ok_or(Error::InvalidParameter {
        name: "sweep.axis2",
        reason: "a 2D sweep needs a second axis".into(),
    })?;
    let rows: Vec<Vec<SweepPoint>> = axis2.values().into_par_iter().map(|a2| chain(spec, Some(a2))).collect();
    let mut result = SweepResult {
        spec: spec.clone(),
        points: rows.into_iter().flatten().collect(),
        boundary: Vec::new(),
    };
    result.boundary = extract_boundary(&result);
    Ok(result)
}

/// Crossing on the segment from a Normal point at `x_n` to a Condensed point
/// at `x_c`, extrapolating `psi_f^2` linearly from the condensed side.
///
/// `beyond` is the next point past `x_c` in the same direction, used when
/// it is also condensed. The result is clamped into the bracket; without a
/// usable second point it is the midpoint.
fn crossing(x_n: f64, x_c: f64, psi_c: f64, beyond: Option<(f64, f64)>) -> f64 {
    let (lo, hi) = if x_n < x_c { (x_n, x_c) } else { (x_c, x_n) };
    let mid = 0.5 * (x_n + x_c);
    let Some((x2, psi2)) = beyond else { return mid };
    let (s1, s2) = (psi_c * psi_c, psi2 * psi2);
    let slope = (s2 - s1) / (x2 - x_c);
    if !(slope.is_finite() && slope != 0.0) {
        return mid;
    }
    let x = x_c - s1 / slope;
    if x.is_finite() {
        x.clamp(lo, hi)
    } else {
        mid
    }
}

/// Direction of a phase change along a 1D sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    /// Normal before, Condensed after.
    Onset,
    /// Condensed before, Normal after.
    Loss,
}

/// Every adjacent Normal/Condensed pair along a 1D result, in sweep order.
pub fn transitions(result: &SweepResult) -> Vec<(f64, Transition)> {
    let pts = &result.points;
    let cond = |i: usize| pts.get(i).filter(|p| p.phase() == Phase::Condensed).map(|p| (p.axis1, p.solution.psi_f));
    let mut out = Vec::new();
    for i in 0..pts.len().saturating_sub(1) {
        match (pts[i].phase(), pts[i + 1].phase()) {
            (Phase::Normal, Phase::Condensed) => {
                let x = crossing(pts[i].axis1, pts[i + 1].axis1, pts[i + 1].solution.psi_f, cond(i + 2));
                out.push((x, Transition::Onset));
            }
            (Phase::Condensed, Phase::Normal) => {
                let beyond = i.checked_sub(1).and_then(cond);
                let x = crossing(pts[i + 1].axis1, pts[i].axis1, pts[i].solution.psi_f, beyond);
                out.push((x, Transition::Loss));
            }
            _ => {}
        }
    }
    out
}

/// First Normal to Condensed crossing along a 1D sweep.
pub fn find_threshold(result: &SweepResult) -> Option<f64> {
    transitions(result).into_iter().find(|t| t.1 == Transition::Onset).map(|t| t.0)
}

/// Normal/Condensed crossings on every grid edge, ordered by `axis2` then `axis1`.
///
/// Normal/Inaccessible edges are not part of the boundary.
pub fn extract_boundary(result: &SweepResult) -> Vec<BoundaryPoint> {
    let (n1, n2) = result.shape();
    if result.spec.axis2.is_none() {
        return Vec::new();
    }
    let at = |i: isize, j: isize| {
        (i >= 0 && j >= 0 && (i as usize) < n1 && (j as usize) < n2).then(|| result.point(i as usize, j as usize))
    };
    let inaccessible = |i: isize, j: isize| at(i, j).is_some_and(|p| p.phase() == Phase::Inaccessible);
    // Corners of the (up to two) cells that share the edge from (i, j) along (di, dj).
    let flagged = |i: isize, j: isize, di: isize, dj: isize| {
        [-1isize, 1].iter().any(|&s| {
            let (oi, oj) = (dj * s, di * s);
            inaccessible(i + oi, j + oj) || inaccessible(i + di + oi, j + dj + oj)
        })
    };

    let mut out = Vec::new();
    for j in 0..n2 as isize {
        for i in 0..n1 as isize {
            for (di, dj) in [(1isize, 0isize), (0, 1)] {
                let (Some(a), Some(b)) = (at(i, j), at(i + di, j + dj)) else { continue };
                let (normal, cond, step) = match (a.phase(), b.phase()) {
                    (Phase::Normal, Phase::Condensed) => ((i, j), (i + di, j + dj), (di, dj)),
                    (Phase::Condensed, Phase::Normal) => ((i + di, j + dj), (i, j), (-di, -dj)),
                    _ => continue,
                };
                let pn = at(normal.0, normal.1).unwrap();
                let pc = at(cond.0, cond.1).unwrap();
                let coord = |p: &SweepPoint| if di == 1 { p.axis1 } else { p.axis2.unwrap_or(f64::NAN) };
                let beyond = at(cond.0 + step.0, cond.1 + step.1)
                    .filter(|p| p.phase() == Phase::Condensed)
                    .map(|p| (coord(p), p.solution.psi_f));
                let x = crossing(coord(pn), coord(pc), pc.solution.psi_f, beyond);
                let (axis1, axis2) = if di == 1 { (x, pn.axis2.unwrap_or(f64::NAN)) } else { (pn.axis1, x) };
                out.push(BoundaryPoint {
                    axis1,
                    axis2,
                    adjacent_inaccessible: flagged(i, j, di, dj),
                });
            }
        }
    }
    out.sort_by(|a, b| a.axis2.total_cmp(&b.axis2).then(a.axis1.total_cmp(&b.axis1)));
    out
}

/// Non-hashed provenance lines written after the configuration echo.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub code_version: String,
    pub generated_at: Option<String>,
}

impl Default for Provenance {
    fn default() -> Self {
        Self {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at: None,
        }
    }
}

/// Writes `# line` for every configuration line, then `## key = value` provenance.
pub fn write_metadata<W: Write>(out: &mut W, config: &[String], provenance: &Provenance) -> std::io::Result<()> {
    for line in config {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "## code_version = {}", provenance.code_version)?;
    if let Some(t) = &provenance.generated_at {
        writeln!(out, "## generated_at = {t}")?;
    }
    Ok(())
}

/// Shortest round-trip decimal, `nan` for missing values.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

/// Writes one CSV row per solution; axis values are left empty when absent.
pub fn write_solutions_csv<'a, W: Write>(
    out: &mut W,
    rows: impl IntoIterator<Item = (Option<f64>, Option<f64>, &'a SaddleSolution)>,
    config: &[String],
    provenance: &Provenance,
) -> std::io::Result<()> {
    write_metadata(out, config, provenance)?;
    writeln!(out, "{POINTS_HEADER}")?;
    for (a1, a2, s) in rows {
        let obs = s.observables.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            a1.map(num).unwrap_or_default(),
            a2.map(num).unwrap_or_default(),
            num(s.mu_s),
            num(s.psi_f),
            num(obs.map_or(f64::NAN, |o| o.polarization)),
            num(obs.map_or(f64::NAN, |o| o.rho)),
            s.phase,
            num(s.residual_norm),
            s.iterations
        )?;
    }
    Ok(())
}

pub fn write_points_csv<W: Write>(out: &mut W, result: &SweepResult, config: &[String], provenance: &Provenance) -> std::io::Result<()> {
    let rows = result.points.iter().map(|p| (Some(p.axis1), p.axis2, &p.solution));
    write_solutions_csv(out, rows, config, provenance)
}

pub fn write_boundary_csv<W: Write>(
    out: &mut W,
    boundary: &[BoundaryPoint],
    config: &[String],
    provenance: &Provenance,
) -> std::io::Result<()> {
    write_metadata(out, config, provenance)?;
    writeln!(out, "{BOUNDARY_HEADER}")?;
    for b in boundary {
        writeln!(out, "{},{},{}", num(b.axis1), num(b.axis2), u8::from(b.adjacent_inaccessible))?;
    }
    Ok(())
}
