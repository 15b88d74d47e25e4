use std::f64::consts::SQRT_2;
use std::ops::{Add, Mul, Sub};

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

/// Exact element `a + b√2` of ℚ(√2).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Surd2 {
    pub a: Rational64,
    pub b: Rational64,
}

impl Surd2 {
    pub fn new(a: Rational64, b: Rational64) -> Self {
        Self { a, b }
    }

    pub fn integer(a: i64) -> Self {
        Self::new(Rational64::from_integer(a), Rational64::from_integer(0))
    }

    pub fn sqrt2_times(b: Rational64) -> Self {
        Self::new(Rational64::from_integer(0), b)
    }

    pub fn div_rational(self, d: Rational64) -> Self {
        Self::new(self.a / d, self.b / d)
    }

    pub fn to_f64(self) -> f64 {
        let f = |r: Rational64| *r.numer() as f64 / *r.denom() as f64;
        f(self.a) + f(self.b) * SQRT_2
    }
}

impl std::fmt::Display for Surd2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} + {}√2", self.a, self.b)
    }
}

impl Add for Surd2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for Surd2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b)
    }
}

impl Mul for Surd2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let two = Rational64::from_integer(2);
        Self::new(self.a * o.a + two * self.b * o.b, self.a * o.b + self.b * o.a)
    }
}

/// `f(S) = (12 + (4 + 5√2)(5S − 8)) / 80` over ℚ(√2).
pub fn certified_bound_f_exact(s: Surd2) -> Surd2 {
    let coeff = Surd2::new(Rational64::from_integer(4), Rational64::from_integer(5));
    let lin = Surd2::integer(5) * s - Surd2::integer(8);
    (Surd2::integer(12) + coeff * lin).div_rational(Rational64::from_integer(80))
}

/// Unclamped `f(S)`.
pub fn certified_bound_f_raw(s: f64) -> f64 {
    (12.0 + (4.0 + 5.0 * SQRT_2) * (5.0 * s - 8.0)) / 80.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityBound {
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub value: f64,
}

/// Lower bound on the conditional Choi fidelity implied by a CHSH score.
pub fn certified_bound_f(s: f64) -> FidelityBound {
    let raw = certified_bound_f_raw(s);
    FidelityBound {
        raw,
        value: raw.clamp(0.0, 1.0),
    }
}
