//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use num_complex::Complex64;
use qfccert::linalg::CMatrix;
use qfccert::quantum::DensityMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Ginibre-distributed state of the given rank.
pub fn random_state<R: Rng>(rng: &mut R, dim: usize, rank: usize) -> DensityMatrix {
    let g = random_matrix(rng, dim, rank);
    DensityMatrix::from_unnormalized(&(&g * &g.adjoint())).unwrap()
}

/// Tanh-sinh quadrature of `f` over `[lo, hi]`. The integrand receives the
/// abscissa together with its distances to both endpoints, so that factors
/// such as `ln(1 − t)` stay accurate next to the boundary.
pub fn tanh_sinh(lo: f64, hi: f64, f: &dyn Fn(f64, f64, f64) -> f64) -> f64 {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (hi - lo);
    if half <= 0.0 {
        return 0.0;
    }
    let eval = |s: f64| -> f64 {
        // Distances from the endpoints: half·(1 ± tanh(u)).
        let u = FRAC_PI_2 * s.sinh();
        let dl = 2.0 * half / (1.0 + (-2.0 * u).exp());
        let dr = 2.0 * half / (1.0 + (2.0 * u).exp());
        if dl <= 0.0 || dr <= 0.0 {
            return 0.0;
        }
        let w = FRAC_PI_2 * s.cosh() / (u.cosh() * u.cosh());
        let v = f(lo + dl, dl, dr);
        if v == 0.0 { 0.0 } else { half * w * v }
    };
    let t_max = 6.5;
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    while k as f64 * h <= t_max {
        let s = k as f64 * h;
        sum += eval(s) + eval(-s);
        k += 1;
    }
    let mut estimate = h * sum;
    for _ in 0..12 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= t_max {
            let s = k as f64 * h;
            sum += eval(s) + eval(-s);
            k += 2;
        }
        let next = h * sum;
        if (next - estimate).abs() <= 1e-13 * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// `I_x(a, b)` as `L / (L + R)` with `L = ∫₀ˣ`, `R = ∫ₓ¹` of the unnormalized
/// density, each split at points spaced by the standard deviation around
/// the mean so that sharply peaked integrands are resolved.
pub fn quadrature_inc_beta(x: f64, a: f64, b: f64) -> f64 {
    let s = a + b;
    let mean = a / s;
    let sd = (a * b / (s * s * (s + 1.0))).sqrt();
    let scale = (a - 1.0) * mean.ln() + (b - 1.0) * (-mean).ln_1p();
    let g = |t: f64, omt: f64| ((a - 1.0) * t.ln() + (b - 1.0) * omt.ln() - scale).exp();
    let mut cuts = vec![0.0, x, 1.0];
    for k in [-60.0, -30.0, -15.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 15.0, 30.0, 60.0] {
        let c = mean + k * sd;
        if c > 0.0 && c < 1.0 {
            cuts.push(c);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let (mut left, mut right) = (0.0, 0.0);
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let part = tanh_sinh(lo, hi, &|t, dl, dr| {
            let t = if lo == 0.0 { dl } else { t };
            let omt = if hi == 1.0 { dr } else { 1.0 - t };
            g(t, omt)
        });
        if hi <= x {
            left += part;
        } else {
            right += part;
        }
    }
    left / (left + right)
}

/// Deterministic `(x, a, b)` grid with `a, b` log-uniform in `[0.5, 1e5]` and
/// `x` spread over the bulk and tails of each distribution.
pub fn beta_grid<R: Rng>(rng: &mut R, n: usize) -> Vec<(f64, f64, f64)> {
    let (ln_lo, ln_hi) = (0.5f64.ln(), 1e5f64.ln());
    (0..n)
        .map(|i| {
            let a = rng.random_range(ln_lo..ln_hi).exp();
            let b = rng.random_range(ln_lo..ln_hi).exp();
            let s = a + b;
            let x = if i % 4 == 0 {
                rng.random_range(0.001..0.999)
            } else {
                let sd = (a * b / (s * s * (s + 1.0))).sqrt();
                (a / s + rng.random_range(-6.0..6.0) * sd).clamp(1e-6, 1.0 - 1e-6)
            };
            (x, a, b)
        })
        .collect()
}
