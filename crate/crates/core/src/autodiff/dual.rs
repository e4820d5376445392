//! First-order forward-mode dual numbers with a fixed number of seeds.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Scalar;

/// `re + sum_i eps[i] e_i` with `e_i e_j = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const N: usize> {
    pub re: f64,
    pub eps: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Dual { re: v, eps: [0.0; N] }
    }

    /// Independent variable seeded in direction `i`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut eps = [0.0; N];
        eps[i] = 1.0;
        Dual { re: v, eps }
    }

    /// Variable with an arbitrary seed vector.
    pub fn seeded(v: f64, seed: [f64; N]) -> Self {
        Dual { re: v, eps: seed }
    }

    fn chain(self, f: f64, df: f64) -> Self {
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = df * self.eps[i];
        }
        Dual { re: f, eps }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = self.eps[i] + o.eps[i];
        }
        Dual { re: self.re + o.re, eps }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = self.eps[i] - o.eps[i];
        }
        Dual { re: self.re - o.re, eps }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = self.eps[i] * o.re + self.re * o.eps[i];
        }
        Dual { re: self.re * o.re, eps }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.re;
        let re = self.re * inv;
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = (self.eps[i] - re * o.eps[i]) * inv;
        }
        Dual { re, eps }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = -self.eps[i];
        }
        Dual { re: -self.re, eps }
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }

    fn primal(self) -> f64 {
        self.re
    }

    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, 0.5 / r)
    }

    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }

    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }

    fn atan(self) -> Self {
        self.chain(self.re.atan(), 1.0 / (1.0 + self.re * self.re))
    }

    fn atan2(self, x: Self) -> Self {
        let y = self;
        let d = x.re * x.re + y.re * y.re;
        let mut eps = [0.0; N];
        for i in 0..N {
            eps[i] = (x.re * y.eps[i] - y.re * x.eps[i]) / d;
        }
        Dual { re: y.re.atan2(x.re), eps }
    }
}
