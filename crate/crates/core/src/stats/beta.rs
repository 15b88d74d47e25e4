//! Regularized incomplete beta function `I_x(a, b)` and its inverse.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::{Error, Result};

const CF_MAX_ITER: usize = 10_000;
const INVERSE_MAX_ITER: usize = 200;
/// Both parameters at or above this use the Stirling form of `ln B(a, b)`.
const STIRLING_MIN: f64 = 10.0;

fn check_params(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "beta parameters must be positive and finite, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// `ln Γ(z) − ((z − ½) ln z − z + ½ ln 2π)` for `z ≥ 10`.
fn stirling_correction(z: f64) -> f64 {
    const C: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
    ];
    let zi = 1.0 / z;
    let zi2 = zi * zi;
    let mut acc = 0.0;
    for &c in C.iter().rev() {
        acc = acc * zi2 + c;
    }
    acc * zi
}

/// `ln(1 + t) − t`, accurate for small `|t|`.
fn log1pmx(t: f64) -> f64 {
    if t.abs() >= 0.25 {
        return t.ln_1p() - t;
    }
    // −t²/2 + t³/3 − t⁴/4 + ...
    let mut term = t * t;
    let mut sum = 0.0;
    for k in 2..200 {
        let contrib = term / k as f64;
        sum += if k % 2 == 0 { -contrib } else { contrib };
        if contrib.abs() <= 1e-17 * sum.abs() {
            break;
        }
        term *= t;
    }
    sum
}

/// `lnΓ(small) + lnΓ(large) − lnΓ(small + large)` for `large ≥ 10`.
fn ln_beta_mixed(small: f64, large: f64) -> f64 {
    let s = small + large;
    let diff = -(large - 0.5) * (small / large).ln_1p() - small * s.ln()
        + small
        + stirling_correction(large)
        - stirling_correction(s);
    ln_gamma(small) + diff
}

/// `ln B(a, b)` for `a, b < 10`: both arguments are shifted above the
/// Stirling threshold and the shift is undone with exact rising products.
fn ln_beta_small(a: f64, b: f64) -> f64 {
    let n = (STIRLING_MIN - a).ceil().max(0.0) as usize;
    let m = (STIRLING_MIN - b).ceil().max(0.0) as usize;
    let (p, q) = (a + n as f64, b + m as f64);
    let s = p + q;
    let large = 0.5 * (2.0 * PI / s).ln() + (p - 0.5) * (p / s).ln() + (q - 0.5) * (q / s).ln()
        + stirling_correction(p)
        + stirling_correction(q)
        - stirling_correction(s);
    // B(a, b) = B(p, q) · (a+b)_{n+m} / ((a)_n (b)_m) with rising factorials.
    let mut ratio = 1.0;
    for k in 0..n + m {
        ratio *= a + b + k as f64;
        if k < n {
            ratio /= a + k as f64;
        }
        if k < m {
            ratio /= b + k as f64;
        }
    }
    large + ratio.ln()
}

/// `ln[xᵃ (1−x)ᵇ / B(a, b)]`, with `y = 1 − x` passed separately so that
/// callers can supply it without rounding.
fn ln_front(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if a >= STIRLING_MIN && b >= STIRLING_MIN {
        let s = a + b;
        let (x0, y0) = (a / s, b / s);
        let dx = x - x0;
        a * log1pmx(dx / x0) + b * log1pmx(-dx / y0) + 0.5 * (a * b / (2.0 * PI * s)).ln()
            + stirling_correction(s)
            - stirling_correction(a)
            - stirling_correction(b)
    } else {
        let ln_b = if a >= STIRLING_MIN {
            ln_beta_mixed(b, a)
        } else if b >= STIRLING_MIN {
            ln_beta_mixed(a, b)
        } else {
            ln_beta_small(a, b)
        };
        a * x.ln() + b * y.ln() - ln_b
    }
}

/// Continued fraction for `I_x(a, b)`, modified Lentz evaluation.
fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::NonConvergence(format!(
        "incomplete beta continued fraction at x = {x}, a = {a}, b = {b}"
    )))
}

/// `ln I_x(a,b)` with `y = 1 − x`, without reflection.
fn ln_direct(x: f64, y: f64, a: f64, b: f64) -> Result<f64> {
    Ok(ln_front(x, y, a, b) + (beta_cf(x, a, b)? / a).ln())
}

/// Evaluates `I_x(a,b)` with `y = 1 − x`, without reflection.
fn direct(x: f64, y: f64, a: f64, b: f64) -> Result<f64> {
    Ok(ln_direct(x, y, a, b)?.exp())
}

/// `(ln I_x(a,b), ln(1 − I_x(a,b)))` for `0 < x < 1`, each computed from
/// the tail it describes so that neither underflows to `ln 0` early.
fn ln_cdf_pair(x: f64, y: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    if x > (a + 1.0) / (a + b + 2.0) {
        let upper = ln_direct(y, x, b, a)?;
        Ok(((-upper.exp()).ln_1p(), upper))
    } else {
        let lower = ln_direct(x, y, a, b)?;
        Ok((lower, (-lower.exp()).ln_1p()))
    }
}

fn reg_inc_beta_xy(x: f64, y: f64, a: f64, b: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if y <= 0.0 {
        return Ok(1.0);
    }
    let v = if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - direct(y, x, b, a)?
    } else {
        direct(x, y, a, b)?
    };
    Ok(v.clamp(0.0, 1.0))
}

/// Regularized incomplete beta function `I_x(a, b)`, the CDF of Beta(a, b).
pub fn reg_inc_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    check_params(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidArgument(format!("x = {x} outside [0, 1]")));
    }
    reg_inc_beta_xy(x, 1.0 - x, a, b)
}

/// Beta(a, b) density.
pub fn beta_pdf(x: f64, a: f64, b: f64) -> Result<f64> {
    check_params(a, b)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidArgument(format!("x = {x} outside (0, 1)")));
    }
    Ok((ln_front(x, 1.0 - x, a, b) - x.ln() - (-x).ln_1p()).exp())
}

/// Starting point for the quantile iteration (rational approximation of the
/// normal quantile for `a, b ≥ 1`, power-law tails otherwise).
fn initial_guess(p: f64, a: f64, b: f64) -> f64 {
    if a >= 1.0 && b >= 1.0 {
        let pp = if p < 0.5 { p } else { 1.0 - p };
        let t = (-2.0 * pp.ln()).sqrt();
        let mut z = (2.30753 + t * 0.27061) / (1.0 + t * (0.99229 + t * 0.04481)) - t;
        if p < 0.5 {
            z = -z;
        }
        let al = (z * z - 3.0) / 6.0;
        let h = 2.0 / (1.0 / (2.0 * a - 1.0) + 1.0 / (2.0 * b - 1.0));
        let w = z * (al + h).sqrt() / h - (1.0 / (2.0 * b - 1.0) - 1.0 / (2.0 * a - 1.0)) * (al + 5.0 / 6.0 - 2.0 / (3.0 * h));
        a / (a + b * (2.0 * w).exp())
    } else {
        let lna = (a / (a + b)).ln();
        let lnb = (b / (a + b)).ln();
        let t = (a * lna).exp() / a;
        let u = (b * lnb).exp() / b;
        let w = t + u;
        if p < t / w {
            (a * w * p).powf(1.0 / a)
        } else {
            1.0 - (b * w * (1.0 - p)).powf(1.0 / b)
        }
    }
}

/// Inverse of [`reg_inc_beta`] in `x`: the `p`-quantile of Beta(a, b).
///
/// Newton iteration on the logarithm of the nearer tail (`ln I` for
/// `p ≤ ½`, `ln(1 − I)` otherwise), kept inside a bracket that always
/// contains the root. Steps leaving the bracket, or a bracket that stops
/// shrinking, fall back to bisection (geometric when the bracket spans
/// orders of magnitude).
pub fn inv_reg_inc_beta(p: f64, a: f64, b: f64) -> Result<f64> {
    check_params(a, b)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("probability {p} outside (0, 1)")));
    }
    let lower_tail = p <= 0.5;
    let ln_target = if lower_tail { p.ln() } else { (-p).ln_1p() };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = initial_guess(p, a, b);
    if !(x > 0.0 && x < 1.0) || !x.is_finite() {
        x = 0.5;
    }
    let mut stalled = 0;
    for _ in 0..INVERSE_MAX_ITER {
        let y = 1.0 - x;
        let (ln_i, ln_ic) = ln_cdf_pair(x, y, a, b)?;
        // g > 0 iff I_x > p; Newton on g in the chosen tail.
        let (g, ln_tail) = if lower_tail {
            (ln_i - ln_target, ln_i)
        } else {
            (ln_target - ln_ic, ln_ic)
        };
        if g == 0.0 {
            return Ok(x);
        }
        let width_before = hi - lo;
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        // d ln I / dx = pdf / I and d ln(1 − I) / dx = −pdf / (1 − I).
        let ln_pdf = ln_front(x, y, a, b) - x.ln() - y.ln();
        let slope = (ln_pdf - ln_tail).exp();
        let mut next = x - g / slope;
        stalled = if hi - lo > 0.5 * width_before { stalled + 1 } else { 0 };
        if !next.is_finite() || next <= lo || next >= hi || stalled >= 3 {
            stalled = 0;
            next = if lo == 0.0 {
                hi * 0.125
            } else if hi == 1.0 {
                1.0 - (1.0 - lo) * 0.125
            } else if hi / lo > 8.0 {
                (lo * hi).sqrt()
            } else if (1.0 - lo) / (1.0 - hi) > 8.0 {
                1.0 - ((1.0 - lo) * (1.0 - hi)).sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
        }
        let scale = x.min(1.0 - x).max(f64::MIN_POSITIVE);
        if (next - x).abs() <= 4.0 * f64::EPSILON * scale || hi - lo <= 2.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NonConvergence(format!(
        "beta quantile p = {p}, a = {a}, b = {b} after {INVERSE_MAX_ITER} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_cdf() {
        for k in 0..=20 {
            let x = k as f64 / 20.0;
            assert!((reg_inc_beta(x, 1.0, 1.0).unwrap() - x).abs() < 1e-15);
        }
    }

    #[test]
    fn reflection_identity() {
        for &(a, b) in &[(0.5, 2.0), (3.0, 5.0), (40.0, 12.5), (1e4, 3.0)] {
            for k in 1..20 {
                let x = k as f64 / 20.0;
                let lhs = reg_inc_beta(x, a, b).unwrap();
                let rhs = 1.0 - reg_inc_beta(1.0 - x, b, a).unwrap();
                assert!((lhs - rhs).abs() < 1e-13, "a={a} b={b} x={x}");
            }
        }
    }

    #[test]
    fn closed_forms() {
        // I_x(a, 1) = xᵃ and I_x(1, b) = 1 − (1−x)ᵇ.
        for &a in &[0.5, 2.0, 17.0, 300.0] {
            for k in 1..10 {
                let x = k as f64 / 10.0;
                assert!((reg_inc_beta(x, a, 1.0).unwrap() - x.powf(a)).abs() < 1e-14);
                assert!((reg_inc_beta(x, 1.0, a).unwrap() - (1.0 - (1.0 - x).powf(a))).abs() < 1e-14);
            }
        }
        // I_{1/2}(3, 5): Σ_{j=3}^{7} C(7, j) / 2⁷ = 99/128.
        assert!((reg_inc_beta(0.5, 3.0, 5.0).unwrap() - 99.0 / 128.0).abs() < 4.0 * f64::EPSILON);
    }

    #[test]
    fn small_parameter_beta_matches_gamma_oracle() {
        for &(a, b) in &[(3.0, 5.0), (0.5, 0.5), (0.01, 9.99), (2.5, 7.0), (1.0, 1.0), (9.5, 0.2)] {
            let oracle = ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
            assert!((ln_beta_small(a, b) - oracle).abs() < 1e-13, "a={a} b={b}");
        }
        assert!((ln_beta_small(3.0, 5.0) - (1.0f64 / 105.0).ln()).abs() < 2e-15);
    }

    #[test]
    fn stirling_correction_matches_ln_gamma() {
        for &z in &[10.0, 12.5, 50.0, 1e3] {
            let direct = ln_gamma(z) - ((z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln());
            assert!((stirling_correction(z) - direct).abs() < 1e-14 * ln_gamma(z), "z = {z}");
        }
    }

    #[test]
    fn inverse_simple_cases() {
        for &p in &[0.01, 0.3, 0.99] {
            assert!((inv_reg_inc_beta(p, 1.0, 1.0).unwrap() - p).abs() < 1e-14);
            for &n in &[2.0, 10.0, 16593.0] {
                let x = inv_reg_inc_beta(p, n, 1.0).unwrap();
                assert!((x - p.powf(1.0 / n)).abs() < 1e-13, "n = {n}");
            }
        }
    }

    #[test]
    fn inverse_round_trip_grid() {
        let params = [0.5, 1.0, 17.0, 1e4];
        for &a in &params {
            for &b in &params {
                for &p in &[1e-6, 0.01, 0.25, 0.5, 0.9, 0.999] {
                    let x = inv_reg_inc_beta(p, a, b).unwrap();
                    let back = reg_inc_beta(x, a, b).unwrap();
                    // Representing x itself costs about pdf(x)·ulp(x) in p.
                    let ulp = f64::EPSILON * x.max(1e-300);
                    let slack = 4.0 * beta_pdf(x, a, b).unwrap_or(0.0) * ulp;
                    assert!((back - p).abs() < 1e-10 + slack, "a={a} b={b} p={p} x={x} back={back}");
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(reg_inc_beta(-0.1, 1.0, 1.0).is_err());
        assert!(reg_inc_beta(0.5, 0.0, 1.0).is_err());
        assert!(inv_reg_inc_beta(1.0, 2.0, 2.0).is_err());
        assert!(inv_reg_inc_beta(0.5, 2.0, f64::NAN).is_err());
    }

    #[test]
    fn monotone_in_x() {
        let mut prev = 0.0;
        for k in 0..=1000 {
            let v = reg_inc_beta(k as f64 / 1000.0, 7.5, 2.25).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }
}
