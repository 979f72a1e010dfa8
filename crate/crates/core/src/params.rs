//! Microscopic constants and drive spectra.
//!
//! Every energy and rate is expressed in units of the collective coupling `g`
//! (the narrow-bandwidth limit `g_alpha -> g` and the rescaling `g -> g sqrt(N)`
//! are already absorbed, so the number of spins never appears explicitly).

use crate::error::{Error, Result};

/// The two fermion species representing one spin-1/2: `B` is spin-up, `A` is spin-down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    B,
    A,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Collective spin-photon coupling.
    pub g: f64,
    /// Cavity frequency.
    pub omega0: f64,
    /// Half spin splitting.
    pub eps0: f64,
    /// Cavity-drive coupling rate.
    pub kappa: f64,
    /// Spin-dephasing bath rate.
    pub gamma: f64,
    /// Dephasing-bath chemical potential.
    pub mu_b: f64,
    /// Dephasing-bath effective temperature.
    pub t_f: f64,
}

impl SystemParams {
    /// Resonant system (`omega0 = 2 eps0`) with `g = 1`, `eps0 = 0` and `T_F = 0.1`.
    pub fn resonant(kappa: f64, gamma: f64, mu_b: f64) -> Self {
        Self {
            g: 1.0,
            omega0: 0.0,
            eps0: 0.0,
            kappa,
            gamma,
            mu_b,
            t_f: 0.1,
        }
    }

    pub fn with_coupling(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_temperature(mut self, t_f: f64) -> Self {
        self.t_f = t_f;
        self
    }

    /// Sets the spin splitting and keeps the cavity on resonance.
    pub fn with_splitting(mut self, eps0: f64) -> Self {
        self.eps0 = eps0;
        self.omega0 = 2.0 * eps0;
        self
    }

    /// Overrides the cavity frequency, detuning it from the spins.
    pub fn with_cavity_frequency(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.t_f
    }

    /// Rotating-frame half splitting `eps0 - mu_S / 2`.
    pub fn epsilon(&self, mu_s: f64) -> f64 {
        self.eps0 - 0.5 * mu_s
    }

    /// Rotating-frame cavity frequency `omega0 - mu_S`.
    pub fn shifted_cavity(&self, mu_s: f64) -> f64 {
        self.omega0 - mu_s
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("g", self.g),
            ("omega0", self.omega0),
            ("eps0", self.eps0),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("mu_b", self.mu_b),
            ("t_f", self.t_f),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        // g = 0 is allowed: it switches the light-matter coupling off entirely.
        positive("g", self.g, true)?;
        positive("kappa", self.kappa, false)?;
        positive("gamma", self.gamma, false)?;
        positive("t_f", self.t_f, false)?;
        Ok(())
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::resonant(0.25, 0.75, -0.5)
    }
}

fn positive(name: &'static str, v: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { v >= 0.0 } else { v > 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: format!(
                "must be {}, got {v}",
                if allow_zero { "non-negative" } else { "positive" }
            ),
        })
    }
}

/// A drive occupation known only at discrete frequencies.
///
/// Between samples the occupation is linearly interpolated; outside the table it is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDrive {
    frequencies: Vec<f64>,
    occupations: Vec<f64>,
}

impl TabulatedDrive {
    pub fn new(frequencies: Vec<f64>, occupations: Vec<f64>) -> Result<Self> {
        if frequencies.len() != occupations.len() {
            return Err(Error::InvalidParameter {
                name: "drive.table",
                reason: "frequency and occupation columns differ in length".into(),
            });
        }
        if frequencies.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "drive.table",
                reason: "needs at least two rows".into(),
            });
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) || frequencies.iter().any(|f| !f.is_finite())
        {
            return Err(Error::InvalidParameter {
                name: "drive.table",
                reason: "frequencies must be finite and strictly increasing".into(),
            });
        }
        if occupations.iter().any(|n| !(n.is_finite() && *n >= 0.0)) {
            return Err(Error::InvalidParameter {
                name: "drive.table",
                reason: "occupations must be finite and non-negative".into(),
            });
        }
        Ok(Self {
            frequencies,
            occupations,
        })
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn occupations(&self) -> &[f64] {
        &self.occupations
    }

    pub fn interpolate(&self, omega: f64) -> f64 {
        let f = &self.frequencies;
        if omega < f[0] || omega > f[f.len() - 1] || omega.is_nan() {
            return 0.0;
        }
        let hi = f.partition_point(|&x| x < omega).max(1);
        let lo = hi - 1;
        let t = (omega - f[lo]) / (f[hi] - f[lo]);
        self.occupations[lo] + t * (self.occupations[hi] - self.occupations[lo])
    }
}

/// Photon occupation `n_B(omega)` of the external drive bath.
#[derive(Debug, Clone, PartialEq)]
pub enum DriveSpectrum {
    /// `h * 2 width / ((omega - (xi - mu_S))^2 + width^2)`, peak value `2 h / width`.
    Lorentzian { h: f64, xi: f64, width: f64 },
    /// Frequency-independent (Markovian) occupation `h`.
    Flat { h: f64 },
    Tabulated(TabulatedDrive),
}

impl DriveSpectrum {
    pub fn lorentzian(h: f64, xi: f64, width: f64) -> Self {
        DriveSpectrum::Lorentzian { h, xi, width }
    }

    pub fn flat(h: f64) -> Self {
        DriveSpectrum::Flat { h }
    }

    pub fn off() -> Self {
        DriveSpectrum::Flat { h: 0.0 }
    }

    /// Drive amplitude, or `None` for tabulated spectra.
    pub fn amplitude(&self) -> Option<f64> {
        match self {
            DriveSpectrum::Lorentzian { h, .. } | DriveSpectrum::Flat { h } => Some(*h),
            DriveSpectrum::Tabulated(_) => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriveSpectrum::Lorentzian { h, xi, width } => {
                check_amplitude(*h)?;
                if !xi.is_finite() {
                    return Err(Error::InvalidParameter {
                        name: "xi",
                        reason: format!("must be finite, got {xi}"),
                    });
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "omega",
                        reason: format!("drive width must be positive, got {width}"),
                    });
                }
                Ok(())
            }
            DriveSpectrum::Flat { h } => check_amplitude(*h),
            DriveSpectrum::Tabulated(_) => Ok(()),
        }
    }
}

fn check_amplitude(h: f64) -> Result<()> {
    if h.is_finite() && h >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "h",
            reason: format!("amplitude must be finite and >= 0, got {h}"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonant_default_has_no_detuning() {
        let p = SystemParams::resonant(0.25, 0.75, -0.5).with_splitting(0.3);
        assert_eq!(p.omega0 - 2.0 * p.eps0, 0.0);
        assert!(p.validate().is_ok());
        let detuned = p.with_cavity_frequency(1.0);
        assert_eq!(detuned.omega0, 1.0);
    }

    #[test]
    fn rejects_non_positive_rates() {
        let mut p = SystemParams::default();
        p.kappa = 0.0;
        assert!(matches!(
            p.validate(),
            Err(Error::InvalidParameter { name: "kappa", .. })
        ));
        let mut p = SystemParams::default();
        p.t_f = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn table_interpolates_and_clamps_to_zero() {
        let t = TabulatedDrive::new(vec![-1.0, 0.0, 2.0], vec![1.0, 3.0, 1.0]).unwrap();
        assert_eq!(t.interpolate(-1.0), 1.0);
        assert_eq!(t.interpolate(-0.5), 2.0);
        assert_eq!(t.interpolate(1.0), 2.0);
        assert_eq!(t.interpolate(2.0), 1.0);
        assert_eq!(t.interpolate(2.5), 0.0);
        assert_eq!(t.interpolate(-7.0), 0.0);
    }

    #[test]
    fn table_rejects_negative_occupation() {
        assert!(TabulatedDrive::new(vec![0.0, 1.0], vec![0.0, -0.1]).is_err());
        assert!(TabulatedDrive::new(vec![0.0, 0.0], vec![0.0, 0.1]).is_err());
    }

    #[test]
    fn negative_amplitude_is_invalid() {
        assert!(DriveSpectrum::lorentzian(-1.0, 0.0, 1.0).validate().is_err());
        assert!(DriveSpectrum::lorentzian(1.0, 0.0, 0.0).validate().is_err());
        assert!(DriveSpectrum::flat(0.0).validate().is_ok());
    }
}
