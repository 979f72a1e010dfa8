//! Complex 2x2 matrices in Nambu space, ordered `(b, a)`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Nambu {
    pub bb: Complex64,
    pub ba: Complex64,
    pub ab: Complex64,
    pub aa: Complex64,
}

impl Nambu {
    pub const ZERO: Nambu = Nambu {
        bb: ZERO,
        ba: ZERO,
        ab: ZERO,
        aa: ZERO,
    };

    pub const IDENTITY: Nambu = Nambu {
        bb: ONE,
        ba: ZERO,
        ab: ZERO,
        aa: ONE,
    };

    pub fn new(bb: Complex64, ba: Complex64, ab: Complex64, aa: Complex64) -> Self {
        Self { bb, ba, ab, aa }
    }

    pub fn diag(bb: Complex64, aa: Complex64) -> Self {
        Self {
            bb,
            ba: ZERO,
            ab: ZERO,
            aa,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.bb * self.aa - self.ba * self.ab
    }

    /// Inverse, or `None` when `|det| < min_det`.
    pub fn inverse(&self, min_det: f64) -> Option<Nambu> {
        let d = self.det();
        if !(d.norm() >= min_det) {
            return None;
        }
        let inv = 1.0 / d;
        Some(Nambu {
            bb: self.aa * inv,
            ba: -self.ba * inv,
            ab: -self.ab * inv,
            aa: self.bb * inv,
        })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Nambu {
        Nambu {
            bb: self.bb.conj(),
            ba: self.ab.conj(),
            ab: self.ba.conj(),
            aa: self.aa.conj(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Nambu {
        Nambu {
            bb: self.bb * s,
            ba: self.ba * s,
            ab: self.ab * s,
            aa: self.aa * s,
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        [self.bb, self.ba, self.ab, self.aa]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Add for Nambu {
    type Output = Nambu;
    fn add(self, o: Nambu) -> Nambu {
        Nambu {
            bb: self.bb + o.bb,
            ba: self.ba + o.ba,
            ab: self.ab + o.ab,
            aa: self.aa + o.aa,
        }
    }
}

impl Sub for Nambu {
    type Output = Nambu;
    fn sub(self, o: Nambu) -> Nambu {
        Nambu {
            bb: self.bb - o.bb,
            ba: self.ba - o.ba,
            ab: self.ab - o.ab,
            aa: self.aa - o.aa,
        }
    }
}

impl Neg for Nambu {
    type Output = Nambu;
    fn neg(self) -> Nambu {
        self.scale(-ONE)
    }
}

impl Mul for Nambu {
    type Output = Nambu;
    fn mul(self, o: Nambu) -> Nambu {
        Nambu {
            bb: self.bb * o.bb + self.ba * o.ab,
            ba: self.bb * o.ba + self.ba * o.aa,
            ab: self.ab * o.bb + self.aa * o.ab,
            aa: self.ab * o.ba + self.aa * o.aa,
        }
    }
}
