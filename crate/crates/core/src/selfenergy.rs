//! Drive-induced self-energy and the Keldysh Dyson step.
//!
//! The self-energy is Nambu-diagonal. Each component is a sum of correlations
//! `(f o k)(w) = int dv/2pi f(v) k(v - w)` of a fermion propagator with a photon
//! propagator. One species sees the photon propagator at negated argument,
//! `x -> G_psi(-x)`, applied after the rotating-frame shift of the cavity
//! frequency; [`PhotonOrientation`] selects which.

use std::f64::consts::PI;

use num_complex::Complex64;

pub use crate::convolution::{convolve, ConvolutionMethod, Correlator, LagKernel, Spectrum, Term};
use crate::error::{Error, Result};
use crate::greens::{photon_at, KeldyshGF, KeldyshPoint, PhotonGF};
use crate::grid::FrequencyGrid;
use crate::nambu::Nambu;
use crate::params::{DriveSpectrum, Species, SystemParams};

/// Self-energy prefactor per unit `g^2`: `Sigma = SIGMA_PREFACTOR * g^2 * (...)`.
///
/// The correlations already carry their own `1/2pi`.
pub const SIGMA_PREFACTOR: Complex64 = Complex64::new(0.0, 1.0 / (4.0 * PI));

/// Determinant magnitude below which a Nambu block counts as singular.
pub const SINGULAR_DET: f64 = 1e-14;

/// Level at which the fermion propagator entering the saddle equation is dressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dressing {
    /// Bare propagator, no self-energy.
    Bare,
    /// Self-energy from the bare propagator, one Dyson step.
    #[default]
    OneShot,
    /// Damped iteration of self-energy and Dyson step to self-consistency.
    FixedPoint,
}

impl Dressing {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dressing::Bare => "bare",
            Dressing::OneShot => "one_shot",
            Dressing::FixedPoint => "fixed_point",
        }
    }
}

impl std::str::FromStr for Dressing {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bare" => Ok(Dressing::Bare),
            "one_shot" => Ok(Dressing::OneShot),
            "fixed_point" => Ok(Dressing::FixedPoint),
            other => Err(format!("unknown dressing `{other}` (bare, one_shot, fixed_point)")),
        }
    }
}

/// Which species' self-energy takes the reflected photon propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhotonOrientation {
    /// `bb` components reflected: a `b` fermion at `w` pairs with an `a` fermion
    /// at `v` and a photon at `w - v`. Retarded components are causal and the
    /// normal state is independent of the frame frequency.
    #[default]
    Covariant,
    /// `aa` components reflected, as in the frequency-domain convolution formulas
    /// taken at face value. Neither property above holds.
    Literal,
}

impl PhotonOrientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            PhotonOrientation::Covariant => "covariant",
            PhotonOrientation::Literal => "literal",
        }
    }
}

impl std::str::FromStr for PhotonOrientation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "covariant" => Ok(PhotonOrientation::Covariant),
            "literal" => Ok(PhotonOrientation::Literal),
            other => Err(format!("unknown photon orientation `{other}` (covariant, literal)")),
        }
    }
}

/// Options of the fixed-point dressing loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-8,
            max_iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfEnergy {
    pub r_bb: Vec<Complex64>,
    pub r_aa: Vec<Complex64>,
    pub a_bb: Vec<Complex64>,
    pub a_aa: Vec<Complex64>,
    pub k_bb: Vec<Complex64>,
    pub k_aa: Vec<Complex64>,
}

impl SelfEnergy {
    pub fn zeros(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Self {
            r_bb: z.clone(),
            r_aa: z.clone(),
            a_bb: z.clone(),
            a_aa: z.clone(),
            k_bb: z.clone(),
            k_aa: z,
        }
    }

    pub fn len(&self) -> usize {
        self.r_bb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_bb.is_empty()
    }

    /// Retarded, advanced and Keldysh blocks at grid index `i`.
    pub fn blocks(&self, i: usize) -> (Nambu, Nambu, Nambu) {
        (
            Nambu::diag(self.r_bb[i], self.r_aa[i]),
            Nambu::diag(self.a_bb[i], self.a_aa[i]),
            Nambu::diag(self.k_bb[i], self.k_aa[i]),
        )
    }

    /// Components in a fixed order with their column names.
    pub fn components(&self) -> [(&'static str, &[Complex64]); 6] {
        [
            ("sigma_r_bb", &self.r_bb),
            ("sigma_r_aa", &self.r_aa),
            ("sigma_a_bb", &self.a_bb),
            ("sigma_a_aa", &self.a_aa),
            ("sigma_k_bb", &self.k_bb),
            ("sigma_k_aa", &self.k_aa),
        ]
    }

    /// Largest `|Sigma^A - conj(Sigma^R)|` over both species.
    pub fn conjugation_defect(&self) -> f64 {
        let d = |a: &[Complex64], r: &[Complex64]| {
            a.iter().zip(r).map(|(x, y)| (x - y.conj()).norm()).fold(0.0, f64::max)
        };
        d(&self.a_bb, &self.r_bb).max(d(&self.a_aa, &self.r_aa))
    }

    /// Largest `|Re Sigma^K|` over both species.
    pub fn keldysh_real_part(&self) -> f64 {
        self.k_bb
            .iter()
            .chain(&self.k_aa)
            .map(|z| z.re.abs())
            .fold(0.0, f64::max)
    }
}

/// Photon propagators as correlation kernels, direct and reflected, with cached spectra.
#[derive(Debug, Clone)]
pub struct PhotonKernels {
    correlator: Correlator,
    kernels: [LagKernel; 6],
    spectra: Option<[Spectrum; 6]>,
    orientation: PhotonOrientation,
}

const K_R: usize = 0;
const K_A: usize = 1;
const K_K: usize = 2;
const K_R_REFL: usize = 3;
const K_A_REFL: usize = 4;
const K_K_REFL: usize = 5;

impl PhotonKernels {
    /// Photon propagators evaluated in closed form at every lag of the grid.
    pub fn new(correlator: &Correlator, params: &SystemParams, drive: &DriveSpectrum, mu_s: f64) -> Self {
        let r = correlator.kernel(|x| 1.0 / Complex64::new(x - params.shifted_cavity(mu_s), params.kappa));
        let k = correlator.kernel(|x| photon_at(x, params, drive, mu_s).k);
        let a = r.conj();
        Self::assemble(correlator, r, a, k)
    }

    /// Photon propagators known only on the (odd, zero-centred) grid itself.
    pub fn from_sampled(correlator: &Correlator, pgf: &PhotonGF) -> Result<Self> {
        let grid = correlator.grid();
        let r = LagKernel::from_samples(&pgf.r, grid)?;
        let a = LagKernel::from_samples(&pgf.a, grid)?;
        let k = LagKernel::from_samples(&pgf.k, grid)?;
        Ok(Self::assemble(correlator, r, a, k))
    }

    fn assemble(correlator: &Correlator, r: LagKernel, a: LagKernel, k: LagKernel) -> Self {
        let kernels = [r.clone(), a.clone(), k.clone(), r.reflected(), a.reflected(), k.reflected()];
        let spectra = (correlator.method() == ConvolutionMethod::Fft)
            .then(|| kernels.clone().map(|kk| correlator.kernel_spectrum(&kk)));
        Self {
            correlator: correlator.clone(),
            kernels,
            spectra,
            orientation: PhotonOrientation::default(),
        }
    }

    pub fn with_orientation(mut self, orientation: PhotonOrientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn orientation(&self) -> PhotonOrientation {
        self.orientation
    }

    pub fn correlator(&self) -> &Correlator {
        &self.correlator
    }

    fn term<'a>(&'a self, signal: &'a [Complex64], signal_spec: Option<&'a Spectrum>, which: usize) -> Term<'a> {
        let mut t = Term::new(signal, &self.kernels[which]);
        if let (Some(s), Some(ks)) = (signal_spec, self.spectra.as_ref()) {
            t = t.with_spectra(s, &ks[which]);
        }
        t
    }
}

/// Self-energy of the fermion propagator `gf` dressed by the photon kernels.
pub fn sigma_from(gf: &KeldyshGF, photon: &PhotonKernels, params: &SystemParams, grid: &FrequencyGrid) -> Result<SelfEnergy> {
    let corr = &photon.correlator;
    if corr.grid().points() != grid.points() {
        return Err(Error::InvalidGrid("photon kernels were built on a different grid".into()));
    }
    grid.check_len(gf.len())?;
    let n = gf.len();
    let c = SIGMA_PREFACTOR * params.g * params.g;
    if params.g == 0.0 {
        return Ok(SelfEnergy::zeros(n));
    }
    let r_bb = KeldyshGF::diagonal(&gf.r, Species::B);
    let a_bb = KeldyshGF::diagonal(&gf.a, Species::B);
    let k_bb = KeldyshGF::diagonal(&gf.k, Species::B);
    let r_aa = KeldyshGF::diagonal(&gf.r, Species::A);
    let a_aa = KeldyshGF::diagonal(&gf.a, Species::A);
    let k_aa = KeldyshGF::diagonal(&gf.k, Species::A);

    let fft = corr.method() == ConvolutionMethod::Fft;
    let spec = |s: &[Complex64]| fft.then(|| corr.signal_spectrum(s));
    let (s_r_bb, s_a_bb, s_k_bb) = (spec(&r_bb), spec(&a_bb), spec(&k_bb));
    let (s_r_aa, s_a_aa, s_k_aa) = (spec(&r_aa), spec(&a_aa), spec(&k_aa));

    fn t<'a>(photon: &'a PhotonKernels) -> impl Fn(&'a [Complex64], &'a Option<Spectrum>, usize) -> Term<'a> {
        move |s, sp, which| photon.term(s, sp.as_ref(), which)
    }
    let t = t(photon);
    let scale = |v: Vec<Complex64>| v.into_iter().map(|z| c * z).collect::<Vec<_>>();

    // Kernel indices (R, A, K) seen by each species.
    let (direct, reflected) = ([K_R, K_A, K_K], [K_R_REFL, K_A_REFL, K_K_REFL]);
    let ([b_r, b_a, b_k], [a_r, a_a, a_k]) = match photon.orientation {
        PhotonOrientation::Covariant => (reflected, direct),
        PhotonOrientation::Literal => (direct, reflected),
    };
    let sigma = SelfEnergy {
        r_bb: scale(corr.correlate_sum(&[t(&r_aa, &s_r_aa, b_k), t(&k_aa, &s_k_aa, b_r)])?),
        r_aa: scale(corr.correlate_sum(&[t(&r_bb, &s_r_bb, a_k), t(&k_bb, &s_k_bb, a_a)])?),
        a_bb: scale(corr.correlate_sum(&[t(&a_aa, &s_a_aa, b_k), t(&k_aa, &s_k_aa, b_a)])?),
        a_aa: scale(corr.correlate_sum(&[t(&a_bb, &s_a_bb, a_k), t(&k_bb, &s_k_bb, a_r)])?),
        k_bb: scale(corr.correlate_sum(&[
            t(&k_aa, &s_k_aa, b_k),
            t(&r_aa, &s_r_aa, b_r),
            t(&a_aa, &s_a_aa, b_a),
        ])?),
        k_aa: scale(corr.correlate_sum(&[
            t(&k_bb, &s_k_bb, a_k),
            t(&a_bb, &s_a_bb, a_r),
            t(&r_bb, &s_r_bb, a_a),
        ])?),
    };
    Ok(sigma)
}

/// One Dyson step at a single frequency from the bare blocks and the self-energy blocks.
pub(crate) fn dyson_point(omega: f64, g0: &KeldyshPoint, sigma: (Nambu, Nambu, Nambu)) -> Result<KeldyshPoint> {
    let singular = |m: &Nambu| Error::SingularBlock {
        omega,
        det: m.det().norm(),
    };
    let (s_r, s_a, s_k) = sigma;
    let inv0_r = g0.r.inverse(SINGULAR_DET).ok_or_else(|| singular(&g0.r))?;
    let inv0_a = g0.a.inverse(SINGULAR_DET).ok_or_else(|| singular(&g0.a))?;
    let inv0_k = -(inv0_r * g0.k * inv0_a);
    let m_r = inv0_r - s_r;
    let m_a = inv0_a - s_a;
    let r = m_r.inverse(SINGULAR_DET).ok_or_else(|| singular(&m_r))?;
    let a = m_a.inverse(SINGULAR_DET).ok_or_else(|| singular(&m_a))?;
    let k = -(r * (inv0_k - s_k) * a);
    Ok(KeldyshPoint { r, a, k })
}

/// `G = (G0^-1 - Sigma)^-1` in the Keldysh structure, frequency by frequency.
///
/// The inverse bare blocks are taken from `gf0` itself, so any propagator may be
/// dressed. The Keldysh part is `G^K = -G^R ((G0^-1)^K - Sigma^K) G^A`.
pub fn dyson(gf0: &KeldyshGF, sigma: &SelfEnergy, grid: &FrequencyGrid) -> Result<KeldyshGF> {
    grid.check_len(gf0.len())?;
    grid.check_len(sigma.len())?;
    let mut out = KeldyshGF::with_capacity(gf0.len());
    for (i, &w) in grid.points().iter().enumerate() {
        out.push(dyson_point(w, &gf0.point(i), sigma.blocks(i))?);
    }
    Ok(out)
}

/// Largest entry of `G - G0 - G0 Sigma G` over the grid, all three Keldysh blocks.
///
/// Blocks follow the triangular Keldysh product: the Keldysh block of `G0 Sigma G`
/// is `G0^R Sigma^R G^K + G0^R Sigma^K G^A + G0^K Sigma^A G^A`.
pub fn dyson_residual(g: &KeldyshGF, g0: &KeldyshGF, sigma: &SelfEnergy) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..g.len() {
        let (s_r, s_a, s_k) = sigma.blocks(i);
        let (gr, ga, gk) = (g.r[i], g.a[i], g.k[i]);
        let (r0, a0, k0) = (g0.r[i], g0.a[i], g0.k[i]);
        let res_r = gr - r0 - r0 * s_r * gr;
        let res_a = ga - a0 - a0 * s_a * ga;
        let res_k = gk - k0 - (r0 * s_r * gk + r0 * s_k * ga + k0 * s_a * ga);
        worst = worst.max(res_r.max_abs()).max(res_a.max_abs()).max(res_k.max_abs());
    }
    worst
}

/// Outcome of dressing a bare propagator.
#[derive(Debug, Clone)]
pub struct Dressed {
    pub gf: KeldyshGF,
    pub sigma: SelfEnergy,
    /// Self-energy evaluations performed.
    pub iterations: usize,
    /// Whether the fixed-point loop met its tolerance (always true for other levels).
    pub converged: bool,
}

/// Dresses `gf0` at the requested level.
pub fn dress(
    gf0: &KeldyshGF,
    photon: &PhotonKernels,
    params: &SystemParams,
    grid: &FrequencyGrid,
    dressing: Dressing,
    fixed_point: &FixedPointOptions,
) -> Result<Dressed> {
    match dressing {
        Dressing::Bare => Ok(Dressed {
            gf: gf0.clone(),
            sigma: SelfEnergy::zeros(gf0.len()),
            iterations: 0,
            converged: true,
        }),
        Dressing::OneShot => {
            let sigma = sigma_from(gf0, photon, params, grid)?;
            let gf = dyson(gf0, &sigma, grid)?;
            Ok(Dressed {
                gf,
                sigma,
                iterations: 1,
                converged: true,
            })
        }
        Dressing::FixedPoint => {
            let mut g = gf0.clone();
            let mut sigma = SelfEnergy::zeros(gf0.len());
            let lambda = fixed_point.damping;
            for it in 1..=fixed_point.max_iterations {
                sigma = sigma_from(&g, photon, params, grid)?;
                let next = dyson(gf0, &sigma, grid)?;
                let delta = next.max_difference(&g);
                if delta < fixed_point.tolerance {
                    return Ok(Dressed {
                        gf: next,
                        sigma,
                        iterations: it,
                        converged: true,
                    });
                }
                g = mix(&g, &next, lambda);
            }
            Ok(Dressed {
                gf: g,
                sigma,
                iterations: fixed_point.max_iterations,
                converged: false,
            })
        }
    }
}

/// `(1 - lambda) old + lambda new`, blockwise.
fn mix(old: &KeldyshGF, new: &KeldyshGF, lambda: f64) -> KeldyshGF {
    let l = Complex64::new(lambda, 0.0);
    let o = Complex64::new(1.0 - lambda, 0.0);
    let f = |x: &[Nambu], y: &[Nambu]| x.iter().zip(y).map(|(a, b)| a.scale(o) + b.scale(l)).collect();
    KeldyshGF {
        r: f(&old.r, &new.r),
        a: f(&old.a, &new.a),
        k: f(&old.k, &new.k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::bare_fermion_gf;

    fn setup(n: usize, method: ConvolutionMethod) -> (SystemParams, DriveSpectrum, FrequencyGrid, Correlator) {
        let p = SystemParams::resonant(0.25, 0.75, -0.5);
        let d = DriveSpectrum::lorentzian(0.5, 0.0, 2.5);
        let grid = FrequencyGrid::symmetric(60.0, n).unwrap();
        let corr = Correlator::new(&grid, method).unwrap();
        (p, d, grid, corr)
    }

    #[test]
    fn zero_coupling_gives_zero_self_energy() {
        let (p, d, grid, corr) = setup(1023, ConvolutionMethod::Fft);
        let p = p.with_coupling(0.0);
        let g0 = bare_fermion_gf(&grid, &p, 0.1, Complex64::new(0.3, 0.0));
        let ph = PhotonKernels::new(&corr, &p, &d, 0.1);
        let s = sigma_from(&g0, &ph, &p, &grid).unwrap();
        assert!(s.components().iter().all(|(_, v)| v.iter().all(|z| z.norm() == 0.0)));
    }

    #[test]
    fn fft_matches_direct_quadrature() {
        let (p, d, grid, fft) = setup(1023, ConvolutionMethod::Fft);
        let direct = Correlator::new(&grid, ConvolutionMethod::Direct).unwrap();
        let g0 = bare_fermion_gf(&grid, &p, 0.2, Complex64::new(0.4, 0.0));
        let a = sigma_from(&g0, &PhotonKernels::new(&fft, &p, &d, 0.2), &p, &grid).unwrap();
        let b = sigma_from(&g0, &PhotonKernels::new(&direct, &p, &d, 0.2), &p, &grid).unwrap();
        for ((_, x), (_, y)) in a.components().iter().zip(b.components().iter()) {
            for (u, v) in x.iter().zip(y.iter()) {
                assert!((u - v).norm() < 1e-12, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn advanced_is_conjugate_of_retarded_and_keldysh_is_imaginary() {
        let (p, d, grid, corr) = setup(2047, ConvolutionMethod::Fft);
        let g0 = bare_fermion_gf(&grid, &p, -0.3, Complex64::new(0.5, 0.0));
        let s = sigma_from(&g0, &PhotonKernels::new(&corr, &p, &d, -0.3), &p, &grid).unwrap();
        assert!(s.conjugation_defect() < 1e-12);
        assert!(s.keldysh_real_part() < 1e-12);
    }

    #[test]
    fn zero_self_energy_leaves_propagator_unchanged() {
        let (p, _, grid, _) = setup(255, ConvolutionMethod::Fft);
        let g0 = bare_fermion_gf(&grid, &p, 0.1, Complex64::new(0.3, 0.0));
        let g = dyson(&g0, &SelfEnergy::zeros(255), &grid).unwrap();
        assert!(g.max_difference(&g0) < 1e-10);
    }

    #[test]
    fn dressed_propagator_satisfies_dyson_identity() {
        let (p, d, grid, corr) = setup(2047, ConvolutionMethod::Fft);
        let g0 = bare_fermion_gf(&grid, &p, 0.1, Complex64::new(0.3, 0.0));
        let ph = PhotonKernels::new(&corr, &p, &d, 0.1);
        let out = dress(&g0, &ph, &p, &grid, Dressing::OneShot, &FixedPointOptions::default()).unwrap();
        assert!(dyson_residual(&out.gf, &g0, &out.sigma) < 1e-8);
        for i in 0..grid.len() {
            assert!((out.gf.a[i] - out.gf.r[i].adjoint()).max_abs() < 1e-12);
            assert!((out.gf.k[i] + out.gf.k[i].adjoint()).max_abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_point_converges() {
        let (p, d, grid, corr) = setup(2047, ConvolutionMethod::Fft);
        let g0 = bare_fermion_gf(&grid, &p, 0.0, Complex64::new(0.2, 0.0));
        let ph = PhotonKernels::new(&corr, &p, &d, 0.0);
        let out = dress(&g0, &ph, &p, &grid, Dressing::FixedPoint, &FixedPointOptions::default()).unwrap();
        assert!(out.converged, "{} iterations", out.iterations);
        assert!(dyson_residual(&out.gf, &g0, &out.sigma) < 1e-8);
    }

    #[test]
    fn dressing_names_round_trip() {
        for d in [Dressing::Bare, Dressing::OneShot, Dressing::FixedPoint] {
            assert_eq!(d.as_str().parse::<Dressing>().unwrap(), d);
        }
        assert!("dressed".parse::<Dressing>().is_err());
    }
}
