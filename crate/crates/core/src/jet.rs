//! Second-order jets f(σ0 + σ) ≈ v + d1 σ + d2 σ²/2, used to get F, F′ and F″
//! from one pass over the coefficient functions.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet2 {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet2 {
    pub const fn new(v: f64, d1: f64, d2: f64) -> Self {
        Jet2 { v, d1, d2 }
    }
    pub const fn constant(v: f64) -> Self {
        Jet2 { v, d1: 0.0, d2: 0.0 }
    }
    pub fn scale(self, a: f64) -> Self {
        Jet2 { v: self.v * a, d1: self.d1 * a, d2: self.d2 * a }
    }
    pub fn exp(self) -> Self {
        let e = self.v.exp();
        Jet2 { v: e, d1: self.d1 * e, d2: (self.d2 + self.d1 * self.d1) * e }
    }
    pub fn ln(self) -> Self {
        Jet2 { v: self.v.ln(), d1: self.d1 / self.v, d2: self.d2 / self.v - (self.d1 / self.v).powi(2) }
    }
    /// self^a for self.v > 0.
    pub fn powf(self, a: f64) -> Self {
        let p = self.v.powf(a);
        let r = self.d1 / self.v;
        Jet2 { v: p, d1: a * p * r, d2: a * p * (self.d2 / self.v + (a - 1.0) * r * r) }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 { v: self.v + o.v, d1: self.d1 + o.d1, d2: self.d2 + o.d2 }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        Jet2 { v: self.v - o.v, d1: self.d1 - o.d1, d2: self.d2 - o.d2 }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 { v: self.v * o.v, d1: self.d1 * o.v + self.v * o.d1, d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2 }
    }
}

/// Complex-valued jet (Fourier coefficients of real jets).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CJet2 {
    pub re: Jet2,
    pub im: Jet2,
}

impl CJet2 {
    pub fn add_scaled(&mut self, x: Jet2, c: num_complex::Complex64) {
        self.re = self.re + x.scale(c.re);
        self.im = self.im + x.scale(c.im);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_rules() {
        // f(σ) = (2 + 3σ)^{1.5} at σ = 0
        let x = Jet2::new(2.0, 3.0, 0.0);
        let p = x.powf(1.5);
        assert!((p.d1 - 1.5 * 2f64.sqrt() * 3.0).abs() < 1e-12);
        assert!((p.d2 - 0.75 / 2f64.sqrt() * 9.0).abs() < 1e-12);
        let e = x.exp();
        assert!((e.d2 - 9.0 * 2f64.exp()).abs() < 1e-9);
        let l = (x * x).ln();
        assert!((l.d2 - (-2.0 * 9.0 / 4.0)).abs() < 1e-12);
    }
}
