//! Real-frequency grids and tail-corrected quadrature.
//!
//! Every integrand in this crate is a rational function of frequency (possibly
//! multiplied by `tanh` factors that saturate exponentially), so beyond the grid
//! window it decays like an integer power `|omega|^-p`. The analytic tail policy
//! fits the first three terms of that asymptotic series through three samples near
//! each edge and appends the exact integral of the fit to the trapezoidal sum.

use num_complex::Complex64;

use crate::error::{Edge, Error, Result};
use crate::params::{DriveSpectrum, SystemParams};

/// Default sample count: odd, so a symmetric grid contains `omega = 0` and every
/// frequency difference of two nodes is itself a node.
pub const DEFAULT_POINTS: usize = (1 << 14) - 1;

/// Below this local decay exponent an edge counts as non-decaying.
const MIN_DECAY_EXPONENT: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TailPolicy {
    #[default]
    AnalyticTail,
    Truncate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Vec<f64>,
    spacing: Option<f64>,
    tail: TailPolicy,
}

impl FrequencyGrid {
    pub fn from_points(points: Vec<f64>, tail: TailPolicy) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid("needs at least two points".into()));
        }
        if points.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidGrid("points must be finite".into()));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("points must be strictly increasing".into()));
        }
        let n = points.len();
        let h = (points[n - 1] - points[0]) / (n - 1) as f64;
        let uniform = points
            .iter()
            .enumerate()
            .all(|(i, &w)| (w - (points[0] + i as f64 * h)).abs() <= 1e-9 * h.max(w.abs()));
        Ok(Self {
            points,
            spacing: uniform.then_some(h),
            tail,
        })
    }

    pub fn uniform(omega_min: f64, omega_max: f64, n: usize) -> Result<Self> {
        if !(omega_max > omega_min) || !omega_min.is_finite() || !omega_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "window [{omega_min}, {omega_max}] is empty or not finite"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidGrid("needs at least two points".into()));
        }
        let h = (omega_max - omega_min) / (n - 1) as f64;
        let points = (0..n)
            .map(|i| if i == n - 1 { omega_max } else { omega_min + i as f64 * h })
            .collect();
        Ok(Self {
            points,
            spacing: Some(h),
            tail: TailPolicy::AnalyticTail,
        })
    }

    /// Uniform grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let mut grid = Self::uniform(-half_width, half_width, n)?;
        let h = 2.0 * half_width / (n - 1) as f64;
        for (i, w) in grid.points.iter_mut().enumerate() {
            *w = (i as f64 - (n - 1) as f64 / 2.0) * h;
        }
        Ok(grid)
    }

    /// Symmetric grid whose window covers every linewidth and feature of the problem.
    pub fn for_problem(params: &SystemParams, drive: &DriveSpectrum, n: usize) -> Result<Self> {
        Self::symmetric(default_half_width(params, drive), n)
    }

    pub fn with_tail(mut self, tail: TailPolicy) -> Self {
        self.tail = tail;
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn omega_min(&self) -> f64 {
        self.points[0]
    }

    pub fn omega_max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn tail_policy(&self) -> TailPolicy {
        self.tail
    }

    /// Node spacing, if the grid is uniform.
    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }

    pub(crate) fn require_uniform(&self) -> Result<f64> {
        self.spacing
            .ok_or_else(|| Error::InvalidGrid("operation requires a uniform grid".into()))
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        if found == self.points.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.points.len(),
                found,
            })
        }
    }

    /// Index offset used to fit the tails: far enough in to resolve the decay exponent.
    pub(crate) fn tail_offset(&self) -> usize {
        (self.points.len() / 32).max(1)
    }

    /// Same window, (roughly) twice the sample density.
    pub fn refined(&self) -> Result<Self> {
        let n = 2 * self.points.len() - 1;
        let grid = if (self.omega_min() + self.omega_max()).abs() <= 1e-12 * self.omega_max().abs() {
            Self::symmetric(self.omega_max(), n)?
        } else {
            Self::uniform(self.omega_min(), self.omega_max(), n)?
        };
        Ok(grid.with_tail(self.tail))
    }

    /// `int d omega f(omega)` over the real line (no `1/2pi`), trapezoidal with tail correction.
    pub fn integrate(&self, values: &[Complex64]) -> Result<Complex64> {
        self.check_len(values.len())?;
        let n = values.len();
        let w = &self.points;
        let mut sum = Complex64::new(0.0, 0.0);
        for i in 0..n - 1 {
            sum += 0.5 * (values[i] + values[i + 1]) * (w[i + 1] - w[i]);
        }
        if sum.re.is_nan() || sum.im.is_nan() {
            return Err(Error::QuadratureFailure("non-finite integrand".into()));
        }
        let scale = values
            .windows(2)
            .zip(w.windows(2))
            .map(|(v, x)| 0.5 * (v[0].norm() + v[1].norm()) * (x[1] - x[0]))
            .sum::<f64>();
        if n >= 5 {
            let m = self.tail_offset().min((n - 1) / 2);
            let upper = EdgeSamples::new(w, values, [n - 1, n - 1 - m, n - 1 - 2 * m]);
            let lower = EdgeSamples::new(w, values, [0, m, 2 * m]);
            for (edge, s) in [(Edge::Upper, upper), (Edge::Lower, lower)] {
                s.check_decay(edge, MIN_DECAY_EXPONENT, scale)?;
                if self.tail == TailPolicy::AnalyticTail {
                    if let Some(t) = s.tail_integral(MIN_DECAY_EXPONENT) {
                        sum += t;
                    }
                }
            }
        }
        Ok(sum)
    }
}

fn default_half_width(params: &SystemParams, drive: &DriveSpectrum) -> f64 {
    // Reference scales: condensate amplitudes up to 2 and |mu_S| up to 2.
    let e_ref = ((params.eps0.abs() + 1.0).powi(2) + 4.0 * params.g * params.g).sqrt();
    let mut w = [
        50.0 * params.g,
        20.0 * e_ref,
        20.0 * params.kappa + params.omega0.abs() + 2.0,
        20.0 * params.gamma,
        20.0 * params.t_f + params.mu_b.abs() + 2.0,
        10.0,
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    match drive {
        DriveSpectrum::Lorentzian { xi, width, .. } => {
            w = w.max(xi.abs() + 2.0 + 20.0 * width);
        }
        DriveSpectrum::Flat { .. } => {}
        DriveSpectrum::Tabulated(t) => {
            let f = t.frequencies();
            w = w.max(f[0].abs() + 2.0).max(f[f.len() - 1].abs() + 2.0);
        }
    }
    w
}

/// Three samples of an integrand at an edge (index 0) and successively further inside.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EdgeSamples {
    pub x: [f64; 3],
    pub f: [Complex64; 3],
}

impl EdgeSamples {
    pub fn new(w: &[f64], values: &[Complex64], idx: [usize; 3]) -> Self {
        Self {
            x: idx.map(|i| w[i]),
            f: idx.map(|i| values[i]),
        }
    }

    /// Local decay exponent `-d ln|f| / d ln|omega|` between the two outer samples.
    pub fn exponent(&self) -> Option<f64> {
        let (y1, y2) = (self.x[0].abs(), self.x[1].abs());
        if self.x[0] * self.x[1] <= 0.0 || !(y1 > y2) {
            return None;
        }
        let (m1, m2) = (self.f[0].norm_sqr(), self.f[1].norm_sqr());
        if m1 == 0.0 || m2 == 0.0 {
            return None;
        }
        Some(0.5 * (m2 / m1).ln() / (y1 / y2).ln())
    }

    /// Fails when the edge value is not negligible against `scale` and does not decay.
    pub fn check_decay(&self, edge: Edge, min_exponent: f64, scale: f64) -> Result<()> {
        let f1 = self.f[0].norm();
        if f1 == 0.0 || f1 * self.x[0].abs() <= 1e-6 * scale {
            return Ok(());
        }
        match self.exponent() {
            Some(p) if p >= min_exponent => Ok(()),
            p => Err(Error::TailDivergence {
                edge,
                exponent: p.unwrap_or(f64::NAN),
            }),
        }
    }

    /// Integral beyond the edge of the fit `|omega|^-p (a + b/|omega| + c/|omega|^2)`.
    ///
    /// `p` is the local exponent rounded to an integer `>= 2`. Returns `None` when the
    /// samples do not look like an integrable power-law tail.
    pub fn tail_integral(&self, min_exponent: f64) -> Option<Complex64> {
        let f1 = self.f[0];
        if f1.norm() == 0.0 {
            return Some(Complex64::new(0.0, 0.0));
        }
        let p_local = self.exponent()?;
        if !(p_local >= min_exponent) {
            return None;
        }
        let pi = (p_local.round() as i32).max(2);
        let p = pi as f64;
        let y = self.x.map(f64::abs);
        if !(y[1] > y[2]) || self.x[1] * self.x[2] <= 0.0 {
            return Some(f1 * y[0] / (p - 1.0));
        }
        // Quadratic interpolation of f y^p in u = 1/y (Newton form).
        let u = y.map(|v| 1.0 / v);
        let c = [0, 1, 2].map(|i| self.f[i] * y[i].powi(pi));
        let d01 = (c[1] - c[0]) / (u[1] - u[0]);
        let d12 = (c[2] - c[1]) / (u[2] - u[1]);
        let d012 = (d12 - d01) / (u[2] - u[0]);
        // c(u) = c0 + d01 (u - u0) + d012 (u - u0)(u - u1) = a + b u + cc u^2
        let cc = d012;
        let b = d01 - d012 * (u[0] + u[1]);
        let a = c[0] - d01 * u[0] + d012 * u[0] * u[1];
        let tail = u[0].powi(pi - 1) * (a / (p - 1.0) + b * u[0] / p + cc * u[0] * u[0] / (p + 1.0));
        let pure = f1 * y[0] / (p - 1.0);
        if tail.re.is_finite() && tail.im.is_finite() && tail.norm() <= 4.0 * f1.norm() * y[0] {
            Some(tail)
        } else {
            Some(pure)
        }
    }
}
