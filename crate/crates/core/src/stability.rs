//! Normal-state photon fluctuations: the retarded kernel `K^R_1`, its spectral
//! weight, and the effective chemical potential where `Im K^R_1` changes sign.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::greens::{bare_fermion_at, bare_fermion_gf, fermi_distribution, KeldyshGF};
use crate::grid::FrequencyGrid;
use crate::params::{DriveSpectrum, Species, SystemParams};
use crate::selfenergy::{dress, ConvolutionMethod, Correlator, Dressing, FixedPointOptions, PhotonKernels, PhotonOrientation, SelfEnergy};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityOptions {
    /// Fermion propagators entering the kernel: bare, or dressed by the drive.
    pub dressing: Dressing,
    pub orientation: PhotonOrientation,
    /// Frame frequency of the normal state.
    pub mu_s: f64,
    /// Cavity frequency in the kernel; `None` uses `omega0`.
    pub cavity: Option<f64>,
    pub window: (f64, f64),
    pub scan_points: usize,
    pub root_tol: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        Self {
            dressing: Dressing::OneShot,
            orientation: PhotonOrientation::default(),
            mu_s: 0.0,
            cavity: None,
            window: (-10.0, 10.0),
            scan_points: 2000,
            root_tol: 1e-10,
        }
    }
}

impl StabilityOptions {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidParameter {
                name: "stability.window",
                reason: format!("[{lo}, {hi}] must be finite and non-empty"),
            });
        }
        if self.scan_points < 2 {
            return Err(Error::InvalidParameter {
                name: "stability.scan_points",
                reason: "needs at least two points".into(),
            });
        }
        if !(self.root_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "stability.root_tol",
                reason: "must be positive".into(),
            });
        }
        if !(self.mu_s.is_finite() && self.cavity.map_or(true, f64::is_finite)) {
            return Err(Error::InvalidParameter {
                name: "stability.mu_s",
                reason: "frame and cavity frequencies must be finite".into(),
            });
        }
        Ok(())
    }
}

/// A located zero of `Im K^R_1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub omega: f64,
    /// Final bisection bracket; `Im K^R_1` has opposite signs at its ends.
    pub bracket: (f64, f64),
    pub im_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub omega_samples: Vec<f64>,
    pub k_r1: Vec<Complex64>,
    pub spectral_weight: Vec<f64>,
    pub mu_eff: Option<f64>,
    pub root_bracket: Option<(f64, f64)>,
    pub dressed: bool,
}

/// Normal-state propagators prepared for repeated kernel evaluations.
#[derive(Debug, Clone)]
pub struct Stability {
    params: SystemParams,
    grid: FrequencyGrid,
    opts: StabilityOptions,
    r_bb: Vec<Complex64>,
    k_bb: Vec<Complex64>,
    /// Self-energy of species `a` on the grid (zero when bare).
    sigma_aa: Option<(Vec<Complex64>, Vec<Complex64>)>,
}

impl Stability {
    pub fn new(params: &SystemParams, drive: &DriveSpectrum, grid: &FrequencyGrid, opts: StabilityOptions) -> Result<Self> {
        params.validate()?;
        drive.validate()?;
        opts.validate()?;
        let zero = Complex64::new(0.0, 0.0);
        let g0 = bare_fermion_gf(grid, params, opts.mu_s, zero);
        let (gf, sigma_aa) = match opts.dressing {
            Dressing::Bare => (g0, None),
            level => {
                let corr = Correlator::new(grid, ConvolutionMethod::default())?;
                let photon = PhotonKernels::new(&corr, params, drive, opts.mu_s).with_orientation(opts.orientation);
                let d = dress(&g0, &photon, params, grid, level, &FixedPointOptions::default())?;
                let SelfEnergy { r_aa, k_aa, .. } = d.sigma;
                (d.gf, Some((r_aa, k_aa)))
            }
        };
        Ok(Self {
            params: *params,
            grid: grid.clone(),
            opts,
            r_bb: KeldyshGF::diagonal(&gf.r, Species::B),
            k_bb: KeldyshGF::diagonal(&gf.k, Species::B),
            sigma_aa,
        })
    }

    pub fn options(&self) -> &StabilityOptions {
        &self.opts
    }

    pub fn dressed(&self) -> bool {
        self.sigma_aa.is_some()
    }

    fn cavity(&self) -> f64 {
        self.opts.cavity.unwrap_or(self.params.omega0)
    }

    /// Retarded and Keldysh `aa` propagators at an arbitrary frequency.
    fn g_aa(&self, x: f64) -> (Complex64, Complex64) {
        let p = &self.params;
        match &self.sigma_aa {
            None => {
                let g = bare_fermion_at(x, p, self.opts.mu_s, Complex64::new(0.0, 0.0));
                (g.r.aa, g.k.aa)
            }
            Some((s_r, s_k)) => {
                let (sr, sk) = (interpolate(&self.grid, s_r, x), interpolate(&self.grid, s_k, x));
                let eps = p.epsilon(self.opts.mu_s);
                let r = 1.0 / (Complex64::new(x + eps, p.gamma) - sr);
                let f_a = fermi_distribution(x, Species::A, p, self.opts.mu_s);
                let k = -r * r.conj() * (2.0 * I * p.gamma * f_a - sk);
                (r, k)
            }
        }
    }

    /// `K^R_1(omega)`.
    pub fn k_r1(&self, omega: f64) -> Result<Complex64> {
        let p = &self.params;
        let photon = 0.5 * Complex64::new(omega - self.cavity(), p.kappa);
        if p.g == 0.0 {
            return Ok(photon);
        }
        let w = self.grid.points();
        let integrand: Vec<Complex64> = (0..w.len())
            .map(|i| {
                let (r_aa, k_aa) = self.g_aa(w[i] - omega);
                self.r_bb[i] * k_aa + self.k_bb[i] * r_aa.conj()
            })
            .collect();
        let integral = self.grid.integrate(&integrand)? / (2.0 * PI);
        Ok(photon + I * (p.g * p.g / 4.0) * integral)
    }

    /// `W = Im K / (2 pi |K|^2)`.
    pub fn spectral_weight(&self, omega: f64) -> Result<f64> {
        weight(omega, self.k_r1(omega)?)
    }

    /// Every sign change of `Im K^R_1` on the scan window, refined by bisection.
    pub fn roots(&self) -> Result<Vec<Root>> {
        let (lo, hi) = self.opts.window;
        let n = self.opts.scan_points;
        let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        let mut ims = Vec::with_capacity(n);
        for &x in &xs {
            ims.push(self.k_r1(x)?.im);
        }
        let mut roots = Vec::new();
        for i in 0..n - 1 {
            if ims[i] == 0.0 {
                roots.push(Root {
                    omega: xs[i],
                    bracket: (xs[i], xs[i]),
                    im_k: 0.0,
                });
            } else if ims[i] * ims[i + 1] < 0.0 {
                roots.push(self.bisect(xs[i], ims[i], xs[i + 1])?);
            }
        }
        Ok(roots)
    }

    fn bisect(&self, mut a: f64, mut fa: f64, mut b: f64) -> Result<Root> {
        loop {
            let m = 0.5 * (a + b);
            let fm = self.k_r1(m)?.im;
            if fm.abs() < self.opts.root_tol || m <= a || m >= b {
                return Ok(Root {
                    omega: m,
                    bracket: (a, b),
                    im_k: fm,
                });
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
    }

    /// Lowest zero of `Im K^R_1` in the window, if any.
    pub fn mu_eff(&self) -> Result<Option<Root>> {
        Ok(self.roots()?.into_iter().next())
    }

    /// Kernel and spectral weight sampled at `omegas`, plus the effective chemical potential.
    pub fn report(&self, omegas: &[f64]) -> Result<StabilityReport> {
        let mut k_r1 = Vec::with_capacity(omegas.len());
        let mut spectral_weight = Vec::with_capacity(omegas.len());
        for &w in omegas {
            let k = self.k_r1(w)?;
            spectral_weight.push(weight(w, k)?);
            k_r1.push(k);
        }
        let root = self.mu_eff()?;
        Ok(StabilityReport {
            omega_samples: omegas.to_vec(),
            k_r1,
            spectral_weight,
            mu_eff: root.map(|r| r.omega),
            root_bracket: root.map(|r| r.bracket),
            dressed: self.dressed(),
        })
    }
}

fn weight(omega: f64, k: Complex64) -> Result<f64> {
    let d = k.norm_sqr();
    if k.norm() < 1e-14 {
        return Err(Error::DegenerateDenominator { omega });
    }
    if k.im == 0.0 {
        return Ok(0.0);
    }
    Ok(k.im / (2.0 * PI * d))
}

/// Linear interpolation on the grid, zero outside it.
fn interpolate(grid: &FrequencyGrid, v: &[Complex64], x: f64) -> Complex64 {
    let w = grid.points();
    let n = w.len();
    if !(x >= w[0] && x <= w[n - 1]) {
        return Complex64::new(0.0, 0.0);
    }
    let hi = match grid.spacing() {
        Some(h) => (((x - w[0]) / h).floor() as usize + 1).clamp(1, n - 1),
        None => w.partition_point(|&p| p < x).clamp(1, n - 1),
    };
    let lo = hi - 1;
    let t = (x - w[lo]) / (w[hi] - w[lo]);
    v[lo] + (v[hi] - v[lo]) * t
}

/// `K^R_1(omega)` for a single frequency.
pub fn k_r1(omega: f64, params: &SystemParams, drive: &DriveSpectrum, grid: &FrequencyGrid, dressing: Dressing) -> Result<Complex64> {
    let opts = StabilityOptions {
        dressing,
        ..Default::default()
    };
    Stability::new(params, drive, grid, opts)?.k_r1(omega)
}

pub fn spectral_weight(omega: f64, params: &SystemParams, drive: &DriveSpectrum, grid: &FrequencyGrid, dressing: Dressing) -> Result<f64> {
    weight(omega, k_r1(omega, params, drive, grid, dressing)?)
}

/// Lowest zero of `Im K^R_1` in `window`, or `None` when it never changes sign there.
pub fn mu_eff(
    params: &SystemParams,
    drive: &DriveSpectrum,
    grid: &FrequencyGrid,
    dressing: Dressing,
    window: (f64, f64),
) -> Result<Option<f64>> {
    let opts = StabilityOptions {
        dressing,
        window,
        ..Default::default()
    };
    Ok(Stability::new(params, drive, grid, opts)?.mu_eff()?.map(|r| r.omega))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FrequencyGrid {
        FrequencyGrid::symmetric(60.0, 4095).unwrap()
    }

    #[test]
    fn zero_coupling_is_a_bare_cavity() {
        let p = SystemParams::resonant(0.25, 0.75, -0.5).with_coupling(0.0);
        let s = Stability::new(&p, &DriveSpectrum::off(), &grid(), StabilityOptions::default()).unwrap();
        for w in [-2.0, 0.0, 1.5] {
            let k = s.k_r1(w).unwrap();
            assert!((k - 0.5 * Complex64::new(w, 0.25)).norm() < 1e-15);
            let expect = 0.125 / (2.0 * PI * ((w / 2.0).powi(2) + 0.125f64.powi(2)));
            assert!((s.spectral_weight(w).unwrap() - expect).abs() < 1e-12);
        }
        assert!(s.mu_eff().unwrap().is_none());
    }

    #[test]
    fn root_brackets_a_sign_change() {
        let p = SystemParams::resonant(0.25, 0.75, 0.5);
        let opts = StabilityOptions {
            scan_points: 200,
            ..Default::default()
        };
        let s = Stability::new(&p, &DriveSpectrum::off(), &grid(), opts).unwrap();
        let r = s.mu_eff().unwrap().expect("root");
        assert!(r.im_k.abs() < 1e-10);
        let (a, b) = r.bracket;
        assert!(s.k_r1(a).unwrap().im * s.k_r1(b).unwrap().im <= 0.0);
        assert!(s.spectral_weight(r.omega).unwrap().abs() < 1e-8);
    }

    #[test]
    fn interpolation_is_zero_outside_grid() {
        let g = FrequencyGrid::symmetric(1.0, 3).unwrap();
        let v = vec![Complex64::new(1.0, 0.0), Complex64::new(3.0, 0.0), Complex64::new(5.0, 0.0)];
        assert_eq!(interpolate(&g, &v, 0.5).re, 4.0);
        assert_eq!(interpolate(&g, &v, 1.0).re, 5.0);
        assert_eq!(interpolate(&g, &v, 1.5).re, 0.0);
    }
}
