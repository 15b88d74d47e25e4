use serde::{Deserialize, Serialize};

use super::state::{DensityMatrix, KrausChannel};
use crate::linalg::CMatrix;
use crate::{Error, Result};

/// Which tensor factor a local map acts on. Alice is always the first factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Whole,
    Alice,
    Bob,
}

#[derive(Debug, Clone)]
pub struct ChannelOutput {
    /// `Σ K ρ K†` before renormalization.
    pub unnormalized: CMatrix,
    pub success_probability: f64,
    /// Renormalized output; `None` when the map never succeeds on this input.
    pub state: Option<DensityMatrix>,
}

/// Applies `ch` to one factor of `rho` (the other factor's dimension is
/// inferred from `rho.dim() / ch.dim_in()`).
pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix, side: Side) -> Result<ChannelOutput> {
    let unnormalized = apply_local(ch, rho.matrix(), side)?;
    let success_probability = unnormalized.trace().re.max(0.0);
    let state = if success_probability > 1e-300 {
        Some(DensityMatrix::from_unnormalized(&unnormalized)?)
    } else {
        None
    };
    Ok(ChannelOutput {
        unnormalized,
        success_probability,
        state,
    })
}

/// Same as [`apply_channel`] on an arbitrary square operator.
pub fn apply_local(ch: &KrausChannel, x: &CMatrix, side: Side) -> Result<CMatrix> {
    let dim = x.rows();
    if !x.is_square() || dim % ch.dim_in() != 0 {
        return Err(Error::DimensionMismatch {
            expected: ch.dim_in(),
            found: dim,
        });
    }
    let other = dim / ch.dim_in();
    let lifted = match side {
        Side::Whole => {
            if other != 1 {
                return Err(Error::DimensionMismatch {
                    expected: ch.dim_in(),
                    found: dim,
                });
            }
            return ch.apply_to(x);
        }
        Side::Alice => ch
            .ops()
            .iter()
            .map(|k| k.kron(&CMatrix::identity(other)))
            .collect::<Vec<_>>(),
        Side::Bob => ch
            .ops()
            .iter()
            .map(|k| CMatrix::identity(other).kron(k))
            .collect::<Vec<_>>(),
    };
    let d = lifted[0].rows();
    Ok(lifted
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, k| &acc + &(&(k * x) * &k.adjoint())))
}
