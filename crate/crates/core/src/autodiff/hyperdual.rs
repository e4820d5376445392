//! Second-order forward mode: one cross term per seed pair.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// `re + d1 e1 + d2 e2 + d12 e1 e2` with `e1^2 = e2^2 = 0`.
///
/// Seeding `d1` along direction `w` and `d2` along direction `v` yields in
/// `d12` the second directional derivative `w^T H v` of the evaluated map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperDual {
    pub re: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
}

impl HyperDual {
    pub fn constant(v: f64) -> Self {
        HyperDual { re: v, d1: 0.0, d2: 0.0, d12: 0.0 }
    }

    pub fn seeded(v: f64, d1: f64, d2: f64) -> Self {
        HyperDual { re: v, d1, d2, d12: 0.0 }
    }

    /// Unary chain rule: `f(a + b e1 + c e2 + d e12)`.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        HyperDual {
            re: f,
            d1: df * self.d1,
            d2: df * self.d2,
            d12: df * self.d12 + ddf * self.d1 * self.d2,
        }
    }

    fn recip(self) -> Self {
        let inv = 1.0 / self.re;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Add for HyperDual {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        HyperDual {
            re: self.re + o.re,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d12: self.d12 + o.d12,
        }
    }
}

impl Sub for HyperDual {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        HyperDual {
            re: self.re - o.re,
            d1: self.d1 - o.d1,
            d2: self.d2 - o.d2,
            d12: self.d12 - o.d12,
        }
    }
}

impl Mul for HyperDual {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        HyperDual {
            re: self.re * o.re,
            d1: self.re * o.d1 + self.d1 * o.re,
            d2: self.re * o.d2 + self.d2 * o.re,
            d12: self.re * o.d12 + self.d12 * o.re + self.d1 * o.d2 + self.d2 * o.d1,
        }
    }
}

impl Div for HyperDual {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for HyperDual {
    type Output = Self;
    fn neg(self) -> Self {
        HyperDual { re: -self.re, d1: -self.d1, d2: -self.d2, d12: -self.d12 }
    }
}

impl Scalar for HyperDual {
    fn from_f64(v: f64) -> Self {
        HyperDual::constant(v)
    }

    fn primal(self) -> f64 {
        self.re
    }

    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * r * r))
    }

    fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(c, -s, -c)
    }

    fn atan(self) -> Self {
        let a = self.re;
        let q = 1.0 + a * a;
        self.chain(a.atan(), 1.0 / q, -2.0 * a / (q * q))
    }
}
