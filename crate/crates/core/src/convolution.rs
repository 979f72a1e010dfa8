//! Cross-correlation `(f o h)(omega) = int d nu / 2pi f(nu) h(nu - omega)` on a uniform grid.
//!
//! `f` is sampled on the grid nodes `omega_i`; `h` is sampled at the lags `m dw`,
//! `|m| <= max_lag`. Output `j` sums over the nodes `i` whose lag `i - j` is
//! available, with trapezoid end weights and a power-law tail appended at both
//! effective edges. The FFT path computes the same discrete sum as the direct
//! path (exact linear correlation, no wrap-around), so the two agree to rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Edge, Error, Result};
use crate::grid::{EdgeSamples, FrequencyGrid, TailPolicy};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Inputs whose edge exponent falls below this are rejected as non-decaying.
const MIN_INPUT_EXPONENT: f64 = 0.5;

/// Products decaying slower than this get no tail correction.
const MIN_TAIL_EXPONENT: f64 = 1.5;

/// Output spacing of exactly evaluated tails away from the window edges.
const TAIL_STRIDE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionMethod {
    Direct,
    #[default]
    Fft,
}

/// A function sampled at the lags `m dw` for `m = -max_lag ..= max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagKernel {
    values: Vec<Complex64>,
    max_lag: usize,
}

impl LagKernel {
    /// Evaluates `h` at every lag a grid of `n` points with spacing `dw` can produce.
    pub fn from_fn(n: usize, dw: f64, h: impl Fn(f64) -> Complex64) -> Self {
        let max_lag = n - 1;
        let values = (0..2 * max_lag + 1)
            .map(|k| h((k as f64 - max_lag as f64) * dw))
            .collect();
        Self { values, max_lag }
    }

    /// Uses samples on a symmetric uniform grid as lag samples; larger lags are unknown.
    pub fn from_samples(values: &[Complex64], grid: &FrequencyGrid) -> Result<Self> {
        grid.check_len(values.len())?;
        let dw = grid.require_uniform()?;
        let n = values.len();
        if n % 2 == 0 || grid.points()[n / 2].abs() > 1e-9 * dw {
            return Err(Error::InvalidGrid(
                "sampled kernels need an odd, zero-centred uniform grid".into(),
            ));
        }
        Ok(Self {
            values: values.to_vec(),
            max_lag: n / 2,
        })
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    /// Value at lag index `m` (may be negative).
    pub fn at(&self, m: isize) -> Complex64 {
        self.values[(m + self.max_lag as isize) as usize]
    }

    /// `x -> conj(h(x))`.
    pub fn conj(&self) -> Self {
        Self {
            values: self.values.iter().map(|z| z.conj()).collect(),
            max_lag: self.max_lag,
        }
    }

    /// `x -> h(-x)`.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            values,
            max_lag: self.max_lag,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Reusable correlation engine bound to one grid.
#[derive(Clone)]
pub struct Correlator {
    grid: FrequencyGrid,
    dw: f64,
    method: ConvolutionMethod,
    fft_len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Correlator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Correlator")
            .field("points", &self.grid.len())
            .field("method", &self.method)
            .field("fft_len", &self.fft_len)
            .finish()
    }
}

/// A signal or kernel already transformed for the FFT path.
#[derive(Debug, Clone)]
pub struct Spectrum(Vec<Complex64>);

impl Correlator {
    pub fn new(grid: &FrequencyGrid, method: ConvolutionMethod) -> Result<Self> {
        let dw = grid.require_uniform()?;
        let n = grid.len();
        // Output j + M of the linear convolution of f with the reversed kernel is
        // alias-free when the length covers n + M, with M = n - 1 at most.
        let fft_len = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid: grid.clone(),
            dw,
            method,
            fft_len,
            forward: planner.plan_fft_forward(fft_len),
            inverse: planner.plan_fft_inverse(fft_len),
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn method(&self) -> ConvolutionMethod {
        self.method
    }

    /// Kernel sampled at every lag of this grid.
    pub fn kernel(&self, h: impl Fn(f64) -> Complex64) -> LagKernel {
        LagKernel::from_fn(self.grid.len(), self.dw, h)
    }

    fn check_kernel(&self, k: &LagKernel) -> Result<()> {
        if k.max_lag > self.grid.len() - 1 {
            return Err(Error::GridMismatch {
                expected: 2 * self.grid.len() - 1,
                found: k.values.len(),
            });
        }
        Ok(())
    }

    pub fn signal_spectrum(&self, f: &[Complex64]) -> Spectrum {
        let mut buf = vec![ZERO; self.fft_len];
        buf[..f.len()].copy_from_slice(f);
        self.forward.process(&mut buf);
        Spectrum(buf)
    }

    pub fn kernel_spectrum(&self, k: &LagKernel) -> Spectrum {
        // Reversed kernel, aligned so lag +max_lag sits at index 0 and lag -M at 2M.
        // Padding puts it at offset n - 1 - M so every kernel shares one output window.
        let n = self.grid.len();
        let offset = n - 1 - k.max_lag;
        let mut buf = vec![ZERO; self.fft_len];
        for (t, v) in k.values.iter().rev().enumerate() {
            buf[offset + t] = *v;
        }
        self.forward.process(&mut buf);
        Spectrum(buf)
    }

    /// Raw sums `sum_i f_i h_(i-j)` over the available lags, via the FFT path.
    fn raw_fft(&self, terms: &[(&Spectrum, &Spectrum)]) -> Vec<Complex64> {
        let n = self.grid.len();
        let mut acc = vec![ZERO; self.fft_len];
        for (s, k) in terms {
            for ((a, x), y) in acc.iter_mut().zip(&s.0).zip(&k.0) {
                *a += x * y;
            }
        }
        self.inverse.process(&mut acc);
        let norm = 1.0 / self.fft_len as f64;
        acc[n - 1..2 * n - 1].iter().map(|z| z * norm).collect()
    }

    fn raw_direct(&self, f: &[Complex64], k: &LagKernel) -> Vec<Complex64> {
        let n = f.len();
        (0..n)
            .map(|j| {
                let (lo, hi) = self.effective_range(j, k.max_lag);
                let mut s = ZERO;
                for (i, fi) in f.iter().enumerate().take(hi + 1).skip(lo) {
                    s += fi * k.at(i as isize - j as isize);
                }
                s
            })
            .collect()
    }

    fn effective_range(&self, j: usize, max_lag: usize) -> (usize, usize) {
        let n = self.grid.len();
        (j.saturating_sub(max_lag), (j + max_lag).min(n - 1))
    }

    /// Trapezoid end weights for every term and tail integrals for the summed
    /// integrand of each group of terms sharing a lag range, added into `out` (unscaled).
    ///
    /// Tails vary on the scale of the distance to the window edge, so away from the
    /// edges they are evaluated every `TAIL_STRIDE` outputs and interpolated linearly.
    fn add_edge_corrections(&self, terms: &[Term<'_>], out: &mut [Complex64]) {
        let n = out.len();
        let tails = self.grid.tail_policy() == TailPolicy::AnalyticTail;
        let mut lags: Vec<usize> = terms.iter().map(|t| t.kernel.max_lag).collect();
        lags.sort_unstable();
        lags.dedup();
        for max_lag in lags {
            let group: Vec<&Term<'_>> = terms.iter().filter(|t| t.kernel.max_lag == max_lag).collect();
            let integrand = |i: usize, j: usize| {
                group
                    .iter()
                    .map(|t| t.signal[i] * t.kernel.at(i as isize - j as isize))
                    .sum::<Complex64>()
            };
            for (j, o) in out.iter_mut().enumerate() {
                let (lo, hi) = self.effective_range(j, max_lag);
                *o -= 0.5 * (integrand(lo, j) + integrand(hi, j));
            }
            if !tails {
                continue;
            }
            let exact_zone = 8 * TAIL_STRIDE;
            let mut last_anchor: Option<(usize, Complex64)> = None;
            for j in 0..n {
                let anchor = j % TAIL_STRIDE == 0 || j == n - 1 || j < exact_zone || j + exact_zone >= n;
                if !anchor {
                    continue;
                }
                let t = self.tail_at(j, max_lag, &integrand);
                out[j] += t;
                if let Some((ja, ta)) = last_anchor {
                    for (k, o) in out.iter_mut().enumerate().take(j).skip(ja + 1) {
                        let u = (k - ja) as f64 / (j - ja) as f64;
                        *o += ta + (t - ta) * u;
                    }
                }
                last_anchor = Some((j, t));
            }
        }
    }

    /// Tail integrals (in units of `dw`) beyond both effective edges of output `j`.
    fn tail_at(&self, j: usize, max_lag: usize, integrand: &impl Fn(usize, usize) -> Complex64) -> Complex64 {
        let w = self.grid.points();
        let m = self.grid.tail_offset();
        let (lo, hi) = self.effective_range(j, max_lag);
        let mut corr = ZERO;
        if hi < lo + 4 * m {
            return corr;
        }
        // Expand about the midpoint of the two factors' centres.
        let c = 0.5 * w[j];
        for idx in [[hi, hi - m, hi - 2 * m], [lo, lo + m, lo + 2 * m]] {
            let f0 = integrand(idx[0], j);
            if f0 == ZERO {
                continue;
            }
            let f1 = integrand(idx[1], j);
            if f1.norm_sqr() <= f0.norm_sqr() {
                continue;
            }
            let s = EdgeSamples {
                x: idx.map(|i| w[i] - c),
                f: [f0, f1, integrand(idx[2], j)],
            };
            if let Some(t) = s.tail_integral(MIN_TAIL_EXPONENT) {
                corr += t / self.dw;
            }
        }
        corr
    }

    fn check_inputs(&self, f: &[Complex64], k: &LagKernel) -> Result<()> {
        self.grid.check_len(f.len())?;
        self.check_kernel(k)?;
        let w = self.grid.points();
        let n = f.len();
        let m = self.grid.tail_offset().min((n - 1) / 2);
        let scale: f64 = f.iter().map(|z| z.norm()).sum::<f64>() * self.dw;
        if n >= 5 {
            let upper = EdgeSamples::new(w, f, [n - 1, n - 1 - m, n - 1 - 2 * m]);
            let lower = EdgeSamples::new(w, f, [0, m, 2 * m]);
            upper.check_decay(Edge::Upper, MIN_INPUT_EXPONENT, scale)?;
            lower.check_decay(Edge::Lower, MIN_INPUT_EXPONENT, scale)?;
        }
        let lm = k.max_lag;
        if lm >= 4 {
            let lags: Vec<f64> = (0..=2 * lm).map(|t| (t as f64 - lm as f64) * self.dw).collect();
            let km = (lm / 16).max(1);
            let kscale: f64 = k.values.iter().map(|z| z.norm()).sum::<f64>() * self.dw;
            let upper = EdgeSamples::new(&lags, &k.values, [2 * lm, 2 * lm - km, 2 * lm - 2 * km]);
            let lower = EdgeSamples::new(&lags, &k.values, [0, km, 2 * km]);
            upper.check_decay(Edge::Upper, MIN_INPUT_EXPONENT, kscale)?;
            lower.check_decay(Edge::Lower, MIN_INPUT_EXPONENT, kscale)?;
        }
        Ok(())
    }

    /// `sum_t (f_t o h_t)` for several terms sharing one output.
    ///
    /// Spectra may be supplied to reuse transforms across calls; they are computed
    /// on demand otherwise. Inputs are validated for decay at their edges.
    pub fn correlate_sum(&self, terms: &[Term<'_>]) -> Result<Vec<Complex64>> {
        let n = self.grid.len();
        for t in terms {
            self.check_inputs(t.signal, t.kernel)?;
        }
        let mut out = match self.method {
            ConvolutionMethod::Fft => {
                let owned: Vec<(Spectrum, Spectrum)>;
                let pairs: Vec<(&Spectrum, &Spectrum)> = if terms
                    .iter()
                    .all(|t| t.signal_spectrum.is_some() && t.kernel_spectrum.is_some())
                {
                    terms
                        .iter()
                        .map(|t| (t.signal_spectrum.unwrap(), t.kernel_spectrum.unwrap()))
                        .collect()
                } else {
                    owned = terms
                        .iter()
                        .map(|t| {
                            (
                                t.signal_spectrum
                                    .cloned()
                                    .unwrap_or_else(|| self.signal_spectrum(t.signal)),
                                t.kernel_spectrum
                                    .cloned()
                                    .unwrap_or_else(|| self.kernel_spectrum(t.kernel)),
                            )
                        })
                        .collect();
                    owned.iter().map(|(a, b)| (a, b)).collect()
                };
                self.raw_fft(&pairs)
            }
            ConvolutionMethod::Direct => {
                let mut acc = vec![ZERO; n];
                for t in terms {
                    for (a, r) in acc.iter_mut().zip(self.raw_direct(t.signal, t.kernel)) {
                        *a += r;
                    }
                }
                acc
            }
        };
        self.add_edge_corrections(terms, &mut out);
        let scale = self.dw / (2.0 * PI);
        for o in out.iter_mut() {
            *o *= scale;
        }
        if out.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::QuadratureFailure("non-finite convolution output".into()));
        }
        Ok(out)
    }

    pub fn correlate(&self, f: &[Complex64], k: &LagKernel) -> Result<Vec<Complex64>> {
        self.correlate_sum(&[Term::new(f, k)])
    }
}

/// One `f o h` term of a correlation sum, optionally with precomputed spectra.
#[derive(Debug, Clone, Copy)]
pub struct Term<'a> {
    pub signal: &'a [Complex64],
    pub kernel: &'a LagKernel,
    pub signal_spectrum: Option<&'a Spectrum>,
    pub kernel_spectrum: Option<&'a Spectrum>,
}

impl<'a> Term<'a> {
    pub fn new(signal: &'a [Complex64], kernel: &'a LagKernel) -> Self {
        Self {
            signal,
            kernel,
            signal_spectrum: None,
            kernel_spectrum: None,
        }
    }

    pub fn with_spectra(mut self, signal: &'a Spectrum, kernel: &'a Spectrum) -> Self {
        self.signal_spectrum = Some(signal);
        self.kernel_spectrum = Some(kernel);
        self
    }
}

/// `(f o g)(omega)` with both functions sampled on the same symmetric uniform grid.
///
/// Lags outside the grid window are treated as unknown, so outputs use the
/// overlap of the two windows.
pub fn convolve(f: &[Complex64], g: &[Complex64], grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    grid.check_len(f.len())?;
    let kernel = LagKernel::from_samples(g, grid)?;
    Correlator::new(grid, ConvolutionMethod::default())?.correlate(f, &kernel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(x: f64, c: f64, w: f64) -> Complex64 {
        Complex64::new(1.0 / ((x - c).powi(2) + w * w), 0.0)
    }

    fn pair_oracle(a: f64, al: f64, b: f64, be: f64, omega: f64) -> f64 {
        0.5 * (al + be) / (al * be) / ((a - b - omega).powi(2) + (al + be).powi(2))
    }

    #[test]
    fn fft_and_direct_agree() {
        let grid = FrequencyGrid::symmetric(30.0, 401).unwrap();
        let f: Vec<_> = grid.points().iter().map(|&w| Complex64::new(0.3, 0.1) / Complex64::new(w - 0.4, 0.7)).collect();
        let fft = Correlator::new(&grid, ConvolutionMethod::Fft).unwrap();
        let dir = Correlator::new(&grid, ConvolutionMethod::Direct).unwrap();
        let k = fft.kernel(|x| lorentz(x, 0.2, 0.5));
        let a = fft.correlate(&f, &k).unwrap();
        let b = dir.correlate(&f, &k).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-13 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn lorentzian_pair_with_full_lags() {
        let grid = FrequencyGrid::symmetric(200.0, 8001).unwrap();
        let c = Correlator::new(&grid, ConvolutionMethod::Fft).unwrap();
        let (a, al, b, be) = (0.3, 0.8, -0.6, 1.2);
        let f: Vec<_> = grid.points().iter().map(|&w| lorentz(w, a, al)).collect();
        let k = c.kernel(|x| lorentz(x, b, be));
        let out = c.correlate(&f, &k).unwrap();
        for (j, &w) in grid.points().iter().enumerate() {
            if w.abs() <= 3.0 {
                let exact = pair_oracle(a, al, b, be, w);
                assert!((out[j].re - exact).abs() < 1e-8 * exact, "{w}: {} vs {exact}", out[j].re);
            }
        }
    }

    #[test]
    fn sampled_convolve_matches_oracle_in_interior() {
        let grid = FrequencyGrid::symmetric(400.0, 16001).unwrap();
        let (a, al, b, be) = (-0.2, 0.6, 0.5, 1.1);
        let f: Vec<_> = grid.points().iter().map(|&w| lorentz(w, a, al)).collect();
        let g: Vec<_> = grid.points().iter().map(|&w| lorentz(w, b, be)).collect();
        let out = convolve(&f, &g, &grid).unwrap();
        for (j, &w) in grid.points().iter().enumerate() {
            if w.abs() <= 3.0 {
                let exact = pair_oracle(a, al, b, be, w);
                assert!((out[j].re - exact).abs() < 1e-7 * exact);
            }
        }
    }

    #[test]
    fn zero_signal_gives_zero() {
        let grid = FrequencyGrid::symmetric(10.0, 101).unwrap();
        let f = vec![ZERO; 101];
        let g: Vec<_> = grid.points().iter().map(|&w| lorentz(w, 0.0, 1.0)).collect();
        assert!(convolve(&f, &g, &grid).unwrap().iter().all(|z| *z == ZERO));
    }

    #[test]
    fn non_decaying_input_is_rejected() {
        let grid = FrequencyGrid::symmetric(10.0, 101).unwrap();
        let f = vec![Complex64::new(1.0, 0.0); 101];
        let g: Vec<_> = grid.points().iter().map(|&w| lorentz(w, 0.0, 1.0)).collect();
        assert!(matches!(convolve(&f, &g, &grid), Err(Error::TailDivergence { .. })));
        assert!(matches!(convolve(&g, &f, &grid), Err(Error::TailDivergence { .. })));
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let grid = FrequencyGrid::symmetric(10.0, 101).unwrap();
        let f = vec![ZERO; 100];
        assert!(matches!(convolve(&f, &f, &grid), Err(Error::GridMismatch { .. })));
    }
}
