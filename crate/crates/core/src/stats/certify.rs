use serde::{Deserialize, Serialize};

use super::bounds::{chsh_lower_bound, psucc_lower_bound, ConfidenceLevel};
use super::fair::{fair_sampling_test, FairSamplingDiagnostic, DEFAULT_SIGNIFICANCE};
use crate::model::{tally, CountTable, Entry};
use crate::quantum::certified_bound_f;
use crate::windows::WindowSpec;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub n: u64,
    pub n_c: u64,
    pub n_wins: u64,
    pub t_bar: f64,
    /// `8 T̄ − 4`.
    pub observed_s: f64,
    pub s_hat: f64,
    /// `f(Ŝ)` clamped to `[0, 1]`.
    pub fidelity_bound: f64,
    pub fidelity_bound_raw: f64,
    pub p_succ_hat: f64,
    pub alpha: f64,
    pub fair_sampling: FairSamplingDiagnostic,
    pub window: Option<WindowSpec>,
    pub warnings: Vec<String>,
}

/// Certifies from an already tallied count table.
pub fn certify_counts(counts: &CountTable, window: Option<&WindowSpec>, alpha: ConfidenceLevel, significance: f64) -> Result<CertificationReport> {
    let fair_sampling = fair_sampling_test(counts, significance)?;
    let s_hat = chsh_lower_bound(counts, alpha)?;
    let psucc = psucc_lower_bound(counts.n, counts.n_c, alpha)?;
    let f = certified_bound_f(s_hat);
    let t_bar = counts.t_bar().unwrap_or(0.0);
    let mut warnings: Vec<String> = psucc.warning.into_iter().collect();
    if !fair_sampling.passed {
        warnings.push(format!(
            "fair-sampling diagnostic failed at significance {} (p = {:.3e} Alice, {:.3e} Bob); the fidelity bound relies on this assumption",
            significance, fair_sampling.alice.p_value, fair_sampling.bob.p_value
        ));
    }
    Ok(CertificationReport {
        n: counts.n,
        n_c: counts.n_c,
        n_wins: counts.n_wins,
        t_bar,
        observed_s: 8.0 * t_bar - 4.0,
        s_hat,
        fidelity_bound: f.value,
        fidelity_bound_raw: f.raw,
        p_succ_hat: psucc.value,
        alpha: alpha.alpha(),
        fair_sampling,
        window: window.cloned(),
        warnings,
    })
}

/// Tallies the log (post-selecting on `window`) and certifies it.
pub fn certify(entries: &[Entry], window: Option<&WindowSpec>, alpha: ConfidenceLevel) -> Result<CertificationReport> {
    certify_with_significance(entries, window, alpha, DEFAULT_SIGNIFICANCE)
}

pub fn certify_with_significance(entries: &[Entry], window: Option<&WindowSpec>, alpha: ConfidenceLevel, significance: f64) -> Result<CertificationReport> {
    let counts = tally(entries, window)?;
    certify_counts(&counts, window, alpha, significance)
}
