//! Operational check of the weak fair-sampling condition: a party's
//! no-click probability must not depend on its setting.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_binomial;

use crate::model::{CountTable, SettingCounts};
use crate::{Error, Result};

pub const DEFAULT_SIGNIFICANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    PearsonChiSquare,
    /// Used when an expected cell count is below 5.
    FisherExact,
    /// One column of the table is empty; the rates agree trivially.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartyDiagnostic {
    pub per_setting: [SettingCounts; 2],
    pub no_click_rates: [f64; 2],
    /// Pearson statistic (reported even when the exact test decides).
    pub chi_square: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairSamplingDiagnostic {
    pub significance: f64,
    pub alice: PartyDiagnostic,
    pub bob: PartyDiagnostic,
    /// `1 − min/max` of Alice's per-outcome click counts.
    pub gamma: f64,
    pub gamma_std_error: f64,
    /// Double clicks over Bob's clicks.
    pub alice_click_rate_given_bob_click: Option<f64>,
    /// Double clicks over Alice's clicks.
    pub bob_click_rate_given_alice_click: Option<f64>,
    pub passed: bool,
}

/// Two-sided Fisher exact test on `[[a, b], [c, d]]`.
fn fisher_exact(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let (r0, c0, n) = (a + b, a + c, a + b + c + d);
    let ln_p = |k: u64| ln_binomial(c0, k) + ln_binomial(n - c0, r0 - k) - ln_binomial(n, r0);
    let observed = ln_p(a);
    let lo = (r0 + c0).saturating_sub(n);
    let hi = r0.min(c0);
    let mut p = 0.0;
    for k in lo..=hi {
        let lk = ln_p(k);
        // Relative slack as in standard implementations.
        if lk <= observed + 1e-7 {
            p += lk.exp();
        }
    }
    p.min(1.0)
}

fn party(per_setting: [SettingCounts; 2], significance: f64, who: &str) -> Result<PartyDiagnostic> {
    if per_setting.iter().any(|s| s.rounds == 0) {
        return Err(Error::InsufficientData(format!(
            "fair-sampling test needs rounds with both of {who}'s settings"
        )));
    }
    let rates = per_setting.map(|s| s.no_click as f64 / s.rounds as f64);
    let (a, b) = (per_setting[0].no_click, per_setting[0].clicks());
    let (c, d) = (per_setting[1].no_click, per_setting[1].clicks());
    let n = (a + b + c + d) as f64;
    let (r0, r1) = ((a + b) as f64, (c + d) as f64);
    let (c0, c1) = ((a + c) as f64, (b + d) as f64);
    let (chi_square, p_value, method) = if c0 == 0.0 || c1 == 0.0 {
        (0.0, 1.0, TestMethod::Degenerate)
    } else {
        let diff = a as f64 * d as f64 - b as f64 * c as f64;
        let chi2 = n * (diff / (r0 * r1)) * (diff / (c0 * c1));
        let min_expected = [r0 * c0, r0 * c1, r1 * c0, r1 * c1]
            .iter()
            .map(|rc| rc / n)
            .fold(f64::INFINITY, f64::min);
        if min_expected < 5.0 {
            (chi2, fisher_exact(a, b, c, d), TestMethod::FisherExact)
        } else {
            // Upper tail of χ²₁.
            (chi2, erfc((chi2 / 2.0).sqrt()).clamp(0.0, 1.0), TestMethod::PearsonChiSquare)
        }
    };
    Ok(PartyDiagnostic {
        per_setting,
        no_click_rates: rates,
        chi_square,
        p_value,
        method,
        passed: p_value >= significance,
    })
}

pub fn fair_sampling_test(counts: &CountTable, significance: f64) -> Result<FairSamplingDiagnostic> {
    if !(significance > 0.0 && significance < 1.0) {
        return Err(Error::InvalidArgument(format!("significance {significance} outside (0, 1)")));
    }
    let alice = party(counts.alice, significance, "Alice")?;
    let bob = party(counts.bob, significance, "Bob")?;
    let [k0, k1] = counts.alice_clicks_by_outcome;
    let (lo, hi) = (k0.min(k1) as f64, k0.max(k1) as f64);
    let (gamma, gamma_std_error) = if lo > 0.0 {
        let r = lo / hi;
        (1.0 - r, r * (1.0 / lo + 1.0 / hi).sqrt())
    } else {
        (if hi > 0.0 { 1.0 } else { 0.0 }, f64::NAN)
    };
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    let passed = alice.passed && bob.passed;
    Ok(FairSamplingDiagnostic {
        significance,
        alice,
        bob,
        gamma,
        gamma_std_error,
        alice_click_rate_given_bob_click: ratio(counts.double_clicks_unwindowed, counts.bob_clicks()),
        bob_click_rate_given_alice_click: ratio(counts.double_clicks_unwindowed, counts.alice_clicks()),
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn counts(alice: [(u64, u64); 2], bob: [(u64, u64); 2]) -> CountTable {
        let conv = |v: [(u64, u64); 2]| v.map(|(rounds, no_click)| SettingCounts { rounds, no_click });
        CountTable {
            alice: conv(alice),
            bob: conv(bob),
            alice_clicks_by_outcome: [500, 500],
            ..Default::default()
        }
    }

    #[test]
    fn equal_rates_give_unit_p_value() {
        let t = counts([(1000, 400), (1000, 400)], [(1000, 10), (1000, 10)]);
        let d = fair_sampling_test(&t, 0.01).unwrap();
        assert_eq!(d.alice.chi_square, 0.0);
        assert!((d.alice.p_value - 1.0).abs() < 1e-15);
        assert!(d.passed);
    }

    #[test]
    fn very_different_rates_fail() {
        let t = counts([(10_000, 5_000), (10_000, 9_000)], [(10_000, 0), (10_000, 0)]);
        let d = fair_sampling_test(&t, 0.01).unwrap();
        assert!(d.alice.p_value < 1e-6);
        assert!(!d.passed);
        assert_eq!(d.bob.method, TestMethod::Degenerate);
    }

    #[test]
    fn p_value_matches_chi_square_cdf() {
        let t = counts([(5000, 2500), (5000, 2580)], [(5000, 100), (5000, 100)]);
        let d = fair_sampling_test(&t, 0.01).unwrap();
        // Oracle: Pearson statistic from expected counts, tail from statrs' χ²₁.
        let obs = [[2500.0, 2500.0], [2580.0, 2420.0]];
        let n: f64 = 10_000.0;
        let col = [5080.0, 4920.0];
        let mut chi2 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let e = 5000.0 * col[j] / n;
                chi2 += (obs[i][j] - e) * (obs[i][j] - e) / e;
            }
        }
        assert!((d.alice.chi_square - chi2).abs() < 1e-9);
        let p = 1.0 - ChiSquared::new(1.0).unwrap().cdf(chi2);
        assert!((d.alice.p_value - p).abs() < 1e-9);
    }

    #[test]
    fn small_counts_use_exact_test() {
        let t = counts([(6, 1), (6, 5)], [(6, 3), (6, 3)]);
        let d = fair_sampling_test(&t, 0.01).unwrap();
        assert_eq!(d.alice.method, TestMethod::FisherExact);
        // [[1, 5], [5, 1]]: two-sided p = 2·(1 + 36)/924 = 0.08008.
        assert!((d.alice.p_value - 74.0 / 924.0).abs() < 1e-12);
    }

    #[test]
    fn single_setting_is_rejected() {
        let t = counts([(10, 1), (0, 0)], [(5, 0), (5, 0)]);
        assert!(matches!(fair_sampling_test(&t, 0.01), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn gamma_from_click_counts() {
        let mut t = counts([(10, 1), (10, 1)], [(10, 0), (10, 0)]);
        t.alice_clicks_by_outcome = [998, 1000];
        let d = fair_sampling_test(&t, 0.01).unwrap();
        assert!((d.gamma - 0.002).abs() < 1e-12);
    }
}
