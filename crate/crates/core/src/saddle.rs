//! Saddle-point equations for the condensate amplitude `psi_f` and frequency `mu_S`.

use std::sync::{Arc, Mutex};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::{bare_fermion_gf, occupation_from_k, KeldyshGF, Occupation};
use crate::grid::FrequencyGrid;
use crate::params::{DriveSpectrum, Species, SystemParams};
use crate::selfenergy::{dress, ConvolutionMethod, Correlator, Dressed, Dressing, FixedPointOptions, PhotonKernels, PhotonOrientation};
use crate::trust_region::{trust_region_solve, TrustRegionOptions, TrustRegionReport, TrustRegionStatus};

/// One parameter point: physics, drive, grid and dressing level, with a reusable correlator.
#[derive(Debug)]
pub struct SaddleProblem {
    params: SystemParams,
    drive: DriveSpectrum,
    dressing: Dressing,
    fixed_point: FixedPointOptions,
    orientation: PhotonOrientation,
    correlator: Correlator,
    /// Photon kernels of the two most recent `mu_S` values (finite-difference
    /// Jacobians revisit them).
    kernel_cache: Arc<Mutex<Vec<(f64, Arc<PhotonKernels>)>>>,
}

impl SaddleProblem {
    pub fn new(params: SystemParams, drive: DriveSpectrum, grid: &FrequencyGrid, dressing: Dressing) -> Result<Self> {
        Self::with_method(params, drive, grid, dressing, ConvolutionMethod::default())
    }

    pub fn with_method(
        params: SystemParams,
        drive: DriveSpectrum,
        grid: &FrequencyGrid,
        dressing: Dressing,
        method: ConvolutionMethod,
    ) -> Result<Self> {
        params.validate()?;
        drive.validate()?;
        Ok(Self {
            params,
            drive,
            dressing,
            fixed_point: FixedPointOptions::default(),
            orientation: PhotonOrientation::default(),
            correlator: Correlator::new(grid, method)?,
            kernel_cache: Arc::default(),
        })
    }

    pub fn with_fixed_point(mut self, opts: FixedPointOptions) -> Self {
        self.fixed_point = opts;
        self
    }

    /// Clears cached kernels built with the previous orientation.
    pub fn with_orientation(mut self, orientation: PhotonOrientation) -> Self {
        self.orientation = orientation;
        self.kernel_cache = Arc::default();
        self
    }

    pub fn orientation(&self) -> PhotonOrientation {
        self.orientation
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn drive(&self) -> &DriveSpectrum {
        &self.drive
    }

    pub fn dressing(&self) -> Dressing {
        self.dressing
    }

    pub fn grid(&self) -> &FrequencyGrid {
        self.correlator.grid()
    }

    /// Same problem on a grid with twice the sample density.
    pub fn refined(&self) -> Result<Self> {
        let grid = self.grid().refined()?;
        Ok(Self {
            correlator: Correlator::new(&grid, self.correlator.method())?,
            kernel_cache: Arc::default(),
            params: self.params,
            drive: self.drive.clone(),
            dressing: self.dressing,
            fixed_point: self.fixed_point,
            orientation: self.orientation,
        })
    }

    fn photon_kernels(&self, mu_s: f64) -> Arc<PhotonKernels> {
        let mut cache = self.kernel_cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((_, k)) = cache.iter().find(|(m, _)| m.to_bits() == mu_s.to_bits()) {
            return Arc::clone(k);
        }
        let k = Arc::new(PhotonKernels::new(&self.correlator, &self.params, &self.drive, mu_s).with_orientation(self.orientation));
        if cache.len() >= 2 {
            cache.remove(0);
        }
        cache.push((mu_s, Arc::clone(&k)));
        k
    }

    /// Fermion propagator at `(mu_S, psi_f)` at the problem's dressing level.
    pub fn green(&self, mu_s: f64, psi_f: f64) -> Result<Dressed> {
        if !(mu_s.is_finite() && psi_f.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "psi_f",
                reason: format!("(mu_S, psi_f) = ({mu_s}, {psi_f}) is not finite"),
            });
        }
        let grid = self.grid();
        let g0 = bare_fermion_gf(grid, &self.params, mu_s, Complex64::new(psi_f, 0.0));
        let photon = match self.dressing {
            Dressing::Bare => None,
            _ => Some(self.photon_kernels(mu_s)),
        };
        match photon {
            None => Ok(Dressed {
                sigma: crate::selfenergy::SelfEnergy::zeros(g0.len()),
                gf: g0,
                iterations: 0,
                converged: true,
            }),
            Some(ph) => dress(&g0, &ph, &self.params, grid, self.dressing, &self.fixed_point),
        }
    }

    /// `X = i (g/2) int d omega / 2pi G^K_ba(omega)`.
    pub fn source(&self, gf: &KeldyshGF) -> Result<Complex64> {
        let k_ba: Vec<Complex64> = gf.k.iter().map(|m| m.ba).collect();
        let integral = self.grid().integrate(&k_ba)? / (2.0 * std::f64::consts::PI);
        Ok(Complex64::new(0.0, 0.5 * self.params.g) * integral)
    }

    /// The two real saddle-point residuals, the real and imaginary parts of
    /// `(omega0 - mu_S - i kappa) psi_f - X`. With this sign the linearised
    /// equation at small `psi_f` is exactly `K^R_1(mu_S) = 0` of the stability
    /// analysis, so onset of condensation coincides with the normal state
    /// losing stability.
    pub fn residual(&self, mu_s: f64, psi_f: f64) -> Result<[f64; 2]> {
        let dressed = self.green(mu_s, psi_f)?;
        let x = self.source(&dressed.gf)?;
        let r = [
            (self.params.omega0 - mu_s) * psi_f - x.re,
            -self.params.kappa * psi_f - x.im,
        ];
        if !(r[0].is_finite() && r[1].is_finite()) {
            return Err(Error::QuadratureFailure(format!(
                "non-finite saddle residual at mu_S = {mu_s}, psi_f = {psi_f}"
            )));
        }
        Ok(r)
    }
}

impl Clone for SaddleProblem {
    fn clone(&self) -> Self {
        Self {
            params: self.params,
            drive: self.drive.clone(),
            dressing: self.dressing,
            fixed_point: self.fixed_point,
            orientation: self.orientation,
            correlator: self.correlator.clone(),
            kernel_cache: Arc::default(),
        }
    }
}

/// Free-function form of [`SaddleProblem::residual`].
pub fn saddle_residual(
    mu_s: f64,
    psi_f: f64,
    params: &SystemParams,
    drive: &DriveSpectrum,
    grid: &FrequencyGrid,
    dressing: Dressing,
) -> Result<[f64; 2]> {
    SaddleProblem::new(*params, drive.clone(), grid, dressing)?.residual(mu_s, psi_f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Normal,
    Condensed,
    Inaccessible,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Normal => "normal",
            Phase::Condensed => "condensed",
            Phase::Inaccessible => "inaccessible",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "normal" => Ok(Phase::Normal),
            "condensed" => Ok(Phase::Condensed),
            "inaccessible" => Ok(Phase::Inaccessible),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub psi_abs: f64,
    /// `|<a^dag b>| = sqrt((omega0 - mu_S)^2 + kappa^2) |psi_f|`.
    pub polarization: f64,
    /// Spin-up fraction `(1 + n_b - n_a) / 2`.
    pub rho: f64,
    pub n_b: Occupation,
    pub n_a: Occupation,
}

/// How one seed ended.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: [f64; 2],
    /// `None` when the residual could not be evaluated at the seed.
    pub report: Option<TrustRegionReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaddleSolution {
    pub mu_s: f64,
    pub psi_f: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub phase: Phase,
    pub observables: Option<Observables>,
    pub seeds: Vec<SeedOutcome>,
    /// Whether the solution came from the refined-grid retry.
    pub refined_grid: bool,
}

impl SaddleSolution {
    pub fn inaccessible(seeds: Vec<SeedOutcome>) -> Self {
        Self {
            mu_s: f64::NAN,
            psi_f: f64::NAN,
            residual_norm: f64::NAN,
            iterations: 0,
            converged: false,
            phase: Phase::Inaccessible,
            observables: None,
            seeds,
            refined_grid: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub trust_region: TrustRegionOptions,
    /// `psi_f` above this is condensed.
    pub psi_threshold: f64,
    /// Retry on a 2x grid before declaring a point inaccessible.
    pub refine_on_failure: bool,
    pub compute_observables: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            trust_region: TrustRegionOptions::default(),
            psi_threshold: 1e-4,
            refine_on_failure: true,
            compute_observables: true,
        }
    }
}

/// Multi-start seeds used when the caller has no better guess.
pub const DEFAULT_SEEDS: [[f64; 2]; 4] = [[0.0, 0.3], [0.5, 0.3], [-0.5, 0.3], [0.0, 1.0]];

fn run_seeds(problem: &SaddleProblem, seeds: &[[f64; 2]], opts: &SolveOptions) -> Vec<SeedOutcome> {
    seeds
        .iter()
        .map(|&seed| {
            let res = trust_region_solve(
                |x| problem.residual(x[0], x[1]),
                seed,
                &opts.trust_region,
                |x| [x[0], x[1].abs()],
            );
            match res {
                Ok(r) => SeedOutcome {
                    seed,
                    report: Some(r),
                    error: None,
                },
                Err(e) => SeedOutcome {
                    seed,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

fn classify(outcomes: &[SeedOutcome], threshold: f64) -> Option<(Phase, &TrustRegionReport)> {
    let best = |condensed: bool| {
        outcomes
            .iter()
            .filter_map(|o| o.report.as_ref())
            .filter(|r| r.status == TrustRegionStatus::Converged && (r.x[1] > threshold) == condensed)
            .min_by(|a, b| a.residual_norm.total_cmp(&b.residual_norm))
    };
    best(true)
        .map(|r| (Phase::Condensed, r))
        .or_else(|| best(false).map(|r| (Phase::Normal, r)))
}

/// Multi-start solve and phase classification.
///
/// Never fails: parameter errors and numerical failures from every seed at both
/// grid densities make the point [`Phase::Inaccessible`].
pub fn solve_saddle(problem: &SaddleProblem, seeds: &[[f64; 2]], opts: &SolveOptions) -> SaddleSolution {
    let seeds: Vec<[f64; 2]> = if seeds.is_empty() { DEFAULT_SEEDS.to_vec() } else { seeds.to_vec() };
    let mut outcomes = run_seeds(problem, &seeds, opts);
    let mut active = problem.clone();
    let mut refined_grid = false;
    if outcomes.iter().all(|o| o.report.is_none()) && opts.refine_on_failure {
        match problem.refined() {
            Ok(fine) => {
                let retry = run_seeds(&fine, &seeds, opts);
                outcomes.extend(retry);
                active = fine;
                refined_grid = true;
            }
            Err(_) => return SaddleSolution::inaccessible(outcomes),
        }
    }
    if outcomes.iter().all(|o| o.report.is_none()) {
        return SaddleSolution::inaccessible(outcomes);
    }

    let (phase, mu_s, psi_f, residual_norm, iterations) = match classify(&outcomes, opts.psi_threshold) {
        Some((Phase::Condensed, r)) => (Phase::Condensed, r.x[0], r.x[1], r.residual_norm, r.iterations),
        // The frame frequency is arbitrary without a condensate; report the lab frame.
        Some((_, r)) => (Phase::Normal, 0.0, 0.0, 0.0, r.iterations),
        None => {
            // No seed converged: the normal state is still an exact solution.
            let it = outcomes.iter().filter_map(|o| o.report.as_ref()).map(|r| r.iterations).max();
            (Phase::Normal, 0.0, 0.0, 0.0, it.unwrap_or(0))
        }
    };
    let observables = if opts.compute_observables {
        observables(&active, mu_s, psi_f).ok()
    } else {
        None
    };
    SaddleSolution {
        mu_s,
        psi_f,
        residual_norm,
        iterations,
        converged: true,
        phase,
        observables,
        seeds: outcomes,
        refined_grid,
    }
}

/// Observables at `(mu_S, psi_f)` from the dressed propagator.
pub fn observables(problem: &SaddleProblem, mu_s: f64, psi_f: f64) -> Result<Observables> {
    let dressed = problem.green(mu_s, psi_f)?;
    let grid = problem.grid();
    let n_b = occupation_from_k(&dressed.gf, Species::B, grid)?;
    let n_a = occupation_from_k(&dressed.gf, Species::A, grid)?;
    let p = &problem.params;
    Ok(Observables {
        psi_abs: psi_f.abs(),
        polarization: ((p.omega0 - mu_s).powi(2) + p.kappa * p.kappa).sqrt() * psi_f.abs(),
        rho: (0.5 * (1.0 + n_b.value - n_a.value)).clamp(0.0, 1.0),
        n_b,
        n_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(h: f64, dressing: Dressing) -> SaddleProblem {
        let p = SystemParams::resonant(0.25, 0.75, -0.5);
        let d = DriveSpectrum::lorentzian(h, 0.0, 2.5);
        let grid = FrequencyGrid::for_problem(&p, &d, 2047).unwrap();
        SaddleProblem::new(p, d, &grid, dressing).unwrap()
    }

    #[test]
    fn normal_state_is_an_exact_root() {
        for dressing in [Dressing::Bare, Dressing::OneShot] {
            let pr = problem(0.4, dressing);
            for mu in [-1.0, 0.0, 0.7] {
                assert_eq!(pr.residual(mu, 0.0).unwrap(), [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn zero_coupling_leaves_only_the_linear_terms() {
        let base = problem(0.4, Dressing::OneShot);
        let p = base.params().with_coupling(0.0);
        let pr = SaddleProblem::new(p, base.drive().clone(), base.grid(), Dressing::OneShot).unwrap();
        let r = pr.residual(0.3, 0.5).unwrap();
        assert!((r[0] - (p.omega0 - 0.3) * 0.5).abs() < 1e-15);
        assert!((r[1] + p.kappa * 0.5).abs() < 1e-15);
    }

    #[test]
    fn residual_is_odd_in_psi() {
        let pr = problem(0.4, Dressing::OneShot);
        let a = pr.residual(0.2, 0.6).unwrap();
        let b = pr.residual(0.2, -0.6).unwrap();
        assert!((a[0] + b[0]).abs() < 1e-12 && (a[1] + b[1]).abs() < 1e-12);
    }

    #[test]
    fn undriven_system_is_normal() {
        let pr = problem(0.0, Dressing::OneShot);
        let s = solve_saddle(&pr, &[], &SolveOptions::default());
        assert_eq!(s.phase, Phase::Normal);
        assert_eq!(s.psi_f, 0.0);
        let o = s.observables.unwrap();
        assert_eq!(o.polarization, 0.0);
        assert!(o.rho >= 0.0 && o.rho < 0.5);
    }

    #[test]
    fn phase_names_round_trip() {
        for p in [Phase::Normal, Phase::Condensed, Phase::Inaccessible] {
            assert_eq!(p.as_str().parse::<Phase>().unwrap(), p);
        }
    }
}
