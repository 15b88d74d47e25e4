use serde::{Deserialize, Serialize};

use super::beta::inv_reg_inc_beta;
use crate::model::CountTable;
use crate::{Error, Result};

/// Confidence parameter `α` of a `1 − α` lower bound; must lie in `(0, 1/4)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ConfidenceLevel(f64);

impl ConfidenceLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.25) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} must lie in (0, 1/4)")));
        }
        Ok(Self(alpha))
    }

    pub fn alpha(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ConfidenceLevel {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ConfidenceLevel> for f64 {
    fn from(c: ConfidenceLevel) -> f64 {
        c.0
    }
}

/// `Ŝ = 8 I⁻¹_α(k, n − k + 1) − 4` with `n = n_c` post-selected rounds and
/// `k = n_wins` wins.
pub fn chsh_lower_bound(counts: &CountTable, alpha: ConfidenceLevel) -> Result<f64> {
    chsh_lower_bound_from(counts.n_c, counts.n_wins, alpha)
}

pub fn chsh_lower_bound_from(n_c: u64, n_wins: u64, alpha: ConfidenceLevel) -> Result<f64> {
    if n_wins > n_c {
        return Err(Error::InvalidArgument(format!("n_wins = {n_wins} exceeds n_c = {n_c}")));
    }
    if n_c < 2 || n_wins < 2 {
        return Err(Error::InsufficientData(format!(
            "CHSH bound needs n_c ≥ 2 and n_wins ≥ 2, got n_c = {n_c}, n_wins = {n_wins}"
        )));
    }
    let q = inv_reg_inc_beta(alpha.alpha(), n_wins as f64, (n_c - n_wins) as f64 + 1.0)?;
    Ok(8.0 * q - 4.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsuccBound {
    pub value: f64,
    pub warning: Option<String>,
}

/// `P̂ = ½ I⁻¹_α(n_c, n − n_c + 1)`.
pub fn psucc_lower_bound(n: u64, n_c: u64, alpha: ConfidenceLevel) -> Result<PsuccBound> {
    if n_c > n {
        return Err(Error::InvalidArgument(format!("n_c = {n_c} exceeds n = {n}")));
    }
    if n_c == 0 {
        return Ok(PsuccBound {
            value: 0.0,
            warning: Some("no double clicks; success-probability bound is 0".into()),
        });
    }
    let q = inv_reg_inc_beta(alpha.alpha(), n_c as f64, (n - n_c) as f64 + 1.0)?;
    Ok(PsuccBound {
        value: 0.5 * q,
        warning: None,
    })
}
