//! Forward-mode dual numbers with a fixed number of tangent directions.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dual<const K: usize> {
    pub v: f64,
    pub d: [f64; K],
}

impl<const K: usize> Dual<K> {
    #[inline]
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; K] }
    }

    /// Independent variable with unit tangent in direction `i`.
    #[inline]
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; K];
        d[i] = 1.0;
        Self { v, d }
    }

    #[inline]
    fn map(self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        for x in &mut d {
            *x *= dv;
        }
        Self { v, d }
    }

    #[inline]
    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.map(s, if s > 0.0 { 0.5 / s } else { 0.0 })
    }

    #[inline]
    pub fn scale(self, k: f64) -> Self {
        self.map(self.v * k, k)
    }
}

impl<const K: usize> Add for Dual<K> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        self.v += rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d) {
            *a += b;
        }
        self
    }
}

impl<const K: usize> Sub for Dual<K> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        self.v -= rhs.v;
        for (a, b) in self.d.iter_mut().zip(rhs.d) {
            *a -= b;
        }
        self
    }
}

impl<const K: usize> Mul for Dual<K> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut d = [0.0; K];
        for (i, x) in d.iter_mut().enumerate() {
            *x = self.d[i] * rhs.v + self.v * rhs.d[i];
        }
        Self {
            v: self.v * rhs.v,
            d,
        }
    }
}

impl<const K: usize> Div for Dual<K> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.v;
        let q = self.v * inv;
        let mut d = [0.0; K];
        for (i, x) in d.iter_mut().enumerate() {
            *x = (self.d[i] - q * rhs.d[i]) * inv;
        }
        Self { v: q, d }
    }
}

impl<const K: usize> Neg for Dual<K> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}
