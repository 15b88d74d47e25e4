use std::f64::consts::FRAC_1_SQRT_2;

use super::state::{DensityMatrix, Povm};
use crate::{Error, Result};

/// `P(a, b | x, y)` indexed `[x][y][a][b]`.
pub type JointDistribution = [[[[f64; 2]; 2]; 2]; 2];

/// Binary-outcome measurements for both parties, indexed by setting.
#[derive(Debug, Clone, PartialEq)]
pub struct ChshSettings {
    pub alice: [Povm; 2],
    pub bob: [Povm; 2],
}

impl ChshSettings {
    /// Projective settings given by Bloch directions; outcome 0 is the `+1`
    /// eigenvalue.
    pub fn from_bloch(alice: [[f64; 3]; 2], bob: [[f64; 3]; 2]) -> Result<Self> {
        Ok(Self {
            alice: [Povm::projective(alice[0])?, Povm::projective(alice[1])?],
            bob: [Povm::projective(bob[0])?, Povm::projective(bob[1])?],
        })
    }

    /// Photon (Alice) measures `σx`, `σy`; ion (Bob) measures `(σx ± σy)/√2`.
    pub fn equatorial() -> Self {
        Self::from_bloch(EQUATORIAL_ALICE, EQUATORIAL_BOB).expect("valid Bloch vectors")
    }
}

pub const EQUATORIAL_ALICE: [[f64; 3]; 2] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
pub const EQUATORIAL_BOB: [[f64; 3]; 2] = [
    [FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0],
    [FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0],
];

/// Born probabilities `tr ρ (M_{a|x} ⊗ M_{b|y})` for every setting pair.
pub fn joint_distribution(rho: &DensityMatrix, alice: &[Povm; 2], bob: &[Povm; 2]) -> Result<JointDistribution> {
    for m in alice.iter().chain(bob) {
        if m.num_outcomes() != 2 {
            return Err(Error::InvalidArgument(format!(
                "CHSH needs binary measurements, got {} outcomes",
                m.num_outcomes()
            )));
        }
    }
    let (da, db) = (alice[0].dim(), bob[0].dim());
    if alice[1].dim() != da || bob[1].dim() != db || da * db != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: da * db,
        });
    }
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for x in 0..2 {
        for y in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let op = alice[x].element(a).kron(bob[y].element(b));
                    p[x][y][a][b] = rho.expectation(&op)?.re;
                }
            }
        }
    }
    Ok(p)
}

/// `S = Σ (-1)^{a+b+xy} P(a,b|x,y)`.
pub fn chsh_from_distribution(p: &JointDistribution) -> f64 {
    let mut s = 0.0;
    for (x, px) in p.iter().enumerate() {
        for (y, pxy) in px.iter().enumerate() {
            for (a, pa) in pxy.iter().enumerate() {
                for (b, &prob) in pa.iter().enumerate() {
                    let sign = if (a + b + x * y) % 2 == 0 { 1.0 } else { -1.0 };
                    s += sign * prob;
                }
            }
        }
    }
    s
}

/// Probability of `a ⊕ b = x·y` with uniformly random settings; equals
/// `1/2 + S/8` for normalized distributions.
pub fn game_win_probability(p: &JointDistribution) -> f64 {
    let mut w = 0.0;
    for (x, px) in p.iter().enumerate() {
        for (y, pxy) in px.iter().enumerate() {
            for (a, pa) in pxy.iter().enumerate() {
                for (b, &prob) in pa.iter().enumerate() {
                    if (a ^ b) == x * y {
                        w += prob;
                    }
                }
            }
        }
    }
    w / 4.0
}

pub fn chsh_score(rho: &DensityMatrix, alice: &[Povm; 2], bob: &[Povm; 2]) -> Result<f64> {
    Ok(chsh_from_distribution(&joint_distribution(rho, alice, bob)?))
}
