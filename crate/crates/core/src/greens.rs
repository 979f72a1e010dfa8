//! Bath distributions, photon propagators and bare fermion propagators.
//!
//! All functions work in the frame rotating at the condensate frequency `mu_S`:
//! the spin splitting becomes `eps = eps0 - mu_S/2`, the cavity sits at
//! `omega0 - mu_S`, and the bath distributions are shifted by `+-mu_S/2`.

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::FrequencyGrid;
use crate::nambu::Nambu;
use crate::params::{DriveSpectrum, Species, SystemParams};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `tanh` with an explicit saturating branch, exact to double precision for `|x| > 30`.
pub(crate) fn saturating_tanh(x: f64) -> f64 {
    if x > 30.0 {
        1.0
    } else if x < -30.0 {
        -1.0
    } else {
        x.tanh()
    }
}

/// Fermion distribution `F_s = 1 - 2 n_F` of the dephasing bath seen by species `s`.
pub fn fermi_distribution(omega: f64, species: Species, params: &SystemParams, mu_s: f64) -> f64 {
    let x = match species {
        Species::B => omega + 0.5 * mu_s - params.mu_b,
        Species::A => omega - 0.5 * mu_s + params.mu_b,
    };
    saturating_tanh(0.5 * params.beta() * x)
}

/// Drive-bath photon occupation `n_B(omega)`; the Lorentzian centre moves to `xi - mu_S`.
pub fn drive_occupation(omega: f64, drive: &DriveSpectrum, mu_s: f64) -> f64 {
    match drive {
        DriveSpectrum::Lorentzian { h, xi, width } => {
            let d = omega - (xi - mu_s);
            h * 2.0 * width / (d * d + width * width)
        }
        DriveSpectrum::Flat { h } => *h,
        DriveSpectrum::Tabulated(t) => t.interpolate(omega),
    }
}

/// Retarded, advanced and Keldysh photon propagators at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonPoint {
    pub r: Complex64,
    pub a: Complex64,
    pub k: Complex64,
}

pub fn photon_at(omega: f64, params: &SystemParams, drive: &DriveSpectrum, mu_s: f64) -> PhotonPoint {
    let d = omega - params.shifted_cavity(mu_s);
    let kappa = params.kappa;
    let r = 1.0 / Complex64::new(d, kappa);
    let f_psi = 1.0 + 2.0 * drive_occupation(omega, drive, mu_s);
    PhotonPoint {
        r,
        a: r.conj(),
        k: Complex64::new(0.0, -2.0 * kappa * f_psi / (d * d + kappa * kappa)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonGF {
    pub r: Vec<Complex64>,
    pub a: Vec<Complex64>,
    pub k: Vec<Complex64>,
}

impl PhotonGF {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

pub fn photon_gf(grid: &FrequencyGrid, params: &SystemParams, drive: &DriveSpectrum, mu_s: f64) -> PhotonGF {
    let n = grid.len();
    let mut out = PhotonGF {
        r: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        k: Vec::with_capacity(n),
    };
    for &w in grid.points() {
        let p = photon_at(w, params, drive, mu_s);
        out.r.push(p.r);
        out.a.push(p.a);
        out.k.push(p.k);
    }
    out
}

/// Retarded, advanced and Keldysh Nambu blocks at one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeldyshPoint {
    pub r: Nambu,
    pub a: Nambu,
    pub k: Nambu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeldyshGF {
    pub r: Vec<Nambu>,
    pub a: Vec<Nambu>,
    pub k: Vec<Nambu>,
}

impl KeldyshGF {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            r: Vec::with_capacity(n),
            a: Vec::with_capacity(n),
            k: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, p: KeldyshPoint) {
        self.r.push(p.r);
        self.a.push(p.a);
        self.k.push(p.k);
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn point(&self, i: usize) -> KeldyshPoint {
        KeldyshPoint {
            r: self.r[i],
            a: self.a[i],
            k: self.k[i],
        }
    }

    /// Diagonal entry `(s, s)` of one Keldysh component.
    pub fn diagonal(blocks: &[Nambu], species: Species) -> Vec<Complex64> {
        blocks
            .iter()
            .map(|m| match species {
                Species::B => m.bb,
                Species::A => m.aa,
            })
            .collect()
    }

    /// Largest entrywise deviation between two sampled functions.
    pub fn max_difference(&self, other: &KeldyshGF) -> f64 {
        let d = |x: &[Nambu], y: &[Nambu]| {
            x.iter()
                .zip(y)
                .map(|(p, q)| (*p - *q).max_abs())
                .fold(0.0, f64::max)
        };
        d(&self.r, &other.r).max(d(&self.a, &other.a)).max(d(&self.k, &other.k))
    }
}

/// Bare fermion propagators at one frequency for condensate amplitude `psi`.
pub fn bare_fermion_at(omega: f64, params: &SystemParams, mu_s: f64, psi: Complex64) -> KeldyshPoint {
    let eps = params.epsilon(mu_s);
    let gamma = params.gamma;
    let g = params.g;
    let coupling2 = g * g * psi.norm_sqr();
    let e2 = eps * eps + coupling2;
    let e = e2.sqrt();
    let z = Complex64::new(omega, gamma);
    let den = z * z - e2;
    let gp = g * psi;
    let r = Nambu::new((z + eps) / den, gp / den, gp.conj() / den, (z - eps) / den);

    let f_b = fermi_distribution(omega, Species::B, params, mu_s);
    let f_a = fermi_distribution(omega, Species::A, params, mu_s);
    let g2 = gamma * gamma;
    let big_d = ((omega - e).powi(2) + g2) * ((omega + e).powi(2) + g2);
    let pref = Complex64::new(0.0, -2.0 * gamma) / big_d;
    let k_bb = pref * (((omega + eps).powi(2) + g2) * f_b + coupling2 * f_a);
    let k_aa = pref * (((omega - eps).powi(2) + g2) * f_a + coupling2 * f_b);
    let k_ba = pref * gp * ((Complex64::new(omega + eps, gamma)) * f_b + Complex64::new(omega - eps, -gamma) * f_a);
    let k = Nambu::new(k_bb, k_ba, -k_ba.conj(), k_aa);
    KeldyshPoint { r, a: r.adjoint(), k }
}

pub fn bare_fermion_gf(grid: &FrequencyGrid, params: &SystemParams, mu_s: f64, psi: Complex64) -> KeldyshGF {
    let mut out = KeldyshGF::with_capacity(grid.len());
    for &w in grid.points() {
        out.push(bare_fermion_at(w, params, mu_s, psi));
    }
    out
}

/// Bare inverse retarded block `(omega + i gamma) - eps sigma_3 - g (psi sigma_+ + conj(psi) sigma_-)`.
pub fn inverse_bare_retarded(omega: f64, params: &SystemParams, mu_s: f64, psi: Complex64) -> Nambu {
    let eps = params.epsilon(mu_s);
    let z = Complex64::new(omega, params.gamma);
    let gp = params.g * psi;
    Nambu::new(z - eps, -gp, -gp.conj(), z + eps)
}

/// Keldysh block `2 i gamma diag(F_b, F_a)` of the bare inverse propagator.
pub fn inverse_bare_keldysh(omega: f64, params: &SystemParams, mu_s: f64) -> Nambu {
    let f_b = fermi_distribution(omega, Species::B, params, mu_s);
    let f_a = fermi_distribution(omega, Species::A, params, mu_s);
    Nambu::diag(2.0 * I * params.gamma * f_b, 2.0 * I * params.gamma * f_a)
}

/// Equal-time occupation extracted from the Keldysh component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Occupation {
    /// Occupation clamped into `[0, 1]`.
    pub value: f64,
    /// Unclamped `(1 - i int K_ss d omega / 2 pi) / 2`.
    pub raw: Complex64,
    /// Raw value left `[0, 1]` by more than `1e-6`.
    pub clamped: bool,
}

/// `n_s = (1 - i int d omega/2pi K_ss(omega)) / 2`.
pub fn occupation_from_k(gf: &KeldyshGF, species: Species, grid: &FrequencyGrid) -> Result<Occupation> {
    grid.check_len(gf.len())?;
    let k = KeldyshGF::diagonal(&gf.k, species);
    let integral = grid.integrate(&k)? / (2.0 * std::f64::consts::PI);
    let raw = 0.5 * (1.0 - I * integral);
    let clamped = raw.re < -1e-6 || raw.re > 1.0 + 1e-6;
    Ok(Occupation {
        value: raw.re.clamp(0.0, 1.0),
        raw,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> SystemParams {
        SystemParams::resonant(0.25, 0.75, -0.5).with_splitting(0.3)
    }

    #[test]
    fn fermi_is_zero_at_bath_potential_and_saturates() {
        let p = params();
        assert_eq!(fermi_distribution(p.mu_b, Species::B, &p, 0.0), 0.0);
        assert_eq!(fermi_distribution(1e6, Species::B, &p, 0.0), 1.0);
        assert_eq!(fermi_distribution(-1e6, Species::B, &p, 0.0), -1.0);
        assert_relative_eq!(
            fermi_distribution(0.0, Species::B, &p, 0.0),
            2.5_f64.tanh(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn lorentzian_drive_peaks_at_shifted_centre() {
        let d = DriveSpectrum::lorentzian(0.3, 1.0, 2.5);
        let mu_s = 0.4;
        assert_relative_eq!(drive_occupation(1.0 - mu_s, &d, mu_s), 2.0 * 0.3 / 2.5, max_relative = 1e-15);
        assert_eq!(drive_occupation(0.6 + 0.7, &d, mu_s), drive_occupation(0.6 - 0.7, &d, mu_s));
        assert_eq!(drive_occupation(3.0, &DriveSpectrum::off(), 0.0), 0.0);
    }

    #[test]
    fn photon_propagator_on_resonance() {
        let p = params();
        let mu_s = 0.2;
        let ph = photon_at(p.omega0 - mu_s, &p, &DriveSpectrum::off(), mu_s);
        assert_relative_eq!(ph.r.im, -1.0 / p.kappa, max_relative = 1e-15);
        assert_eq!(ph.r.re, 0.0);
        assert_relative_eq!(ph.k.im, -2.0 / p.kappa, max_relative = 1e-15);
        let w = 1.3;
        let ph = photon_at(w, &p, &DriveSpectrum::off(), mu_s);
        let check = ph.a * Complex64::new(w - (p.omega0 - mu_s), -p.kappa);
        assert!((check - 1.0).norm() < 1e-15);
    }

    #[test]
    fn bare_propagator_without_condensate_is_diagonal() {
        let p = params();
        let mu_s = 0.1;
        let eps = p.epsilon(mu_s);
        for w in [-3.0, -0.2, 0.0, 0.7, 5.0] {
            let g = bare_fermion_at(w, &p, mu_s, Complex64::new(0.0, 0.0));
            assert_eq!(g.r.ba, Complex64::new(0.0, 0.0));
            assert_eq!(g.k.ab, Complex64::new(0.0, 0.0));
            let expect = 1.0 / Complex64::new(w - eps, p.gamma);
            assert!((g.r.bb - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn closed_form_keldysh_matches_matrix_product() {
        let p = params();
        let psi = Complex64::new(0.4, 0.0);
        let mu_s = -0.3;
        for w in [-2.0, -0.5, 0.1, 0.9] {
            let g = bare_fermion_at(w, &p, mu_s, psi);
            let r = inverse_bare_retarded(w, &p, mu_s, psi).inverse(1e-14).unwrap();
            assert!((r - g.r).max_abs() < 1e-13);
            let k = -(r * inverse_bare_keldysh(w, &p, mu_s) * r.adjoint());
            assert!((k - g.k).max_abs() < 1e-13, "{w}: {:?} vs {:?}", k, g.k);
        }
    }

    #[test]
    fn occupation_matches_thermal_value_for_narrow_line() {
        // gamma -> 0: n_b -> (1 - F_b(eps)) / 2
        let p = SystemParams::resonant(0.25, 0.01, 0.2).with_temperature(0.5);
        let grid = FrequencyGrid::symmetric(50.0, 200_001).unwrap();
        let gf = bare_fermion_gf(&grid, &p, 0.0, Complex64::new(0.0, 0.0));
        let n = occupation_from_k(&gf, Species::B, &grid).unwrap();
        let expect = 0.5 * (1.0 - fermi_distribution(p.epsilon(0.0), Species::B, &p, 0.0));
        assert!((n.value - expect).abs() < 5e-3, "{} vs {expect}", n.value);
        assert!(n.raw.im.abs() < 1e-12);
    }
}
