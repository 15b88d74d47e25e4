//! The ion-photon state emitted after a dark herald.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::channel::{apply_channel, Side};
use super::state::{DensityMatrix, KrausChannel};
use crate::linalg::{CMatrix, C0};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IonPhotonAmplitudes {
    /// `√(2/3)|σ+,↓⟩ + √(1/3) e^{iφ}|σ-,↑⟩`, before the population transfer.
    Raw,
    /// `(|σ+,↓⟩ + e^{iφ}|σ-,↑⟩)/√2`.
    Balanced,
}

/// State vector in the photon ⊗ ion basis at Larmor phase `phase`.
pub fn ion_photon_vector(phase: f64, amps: IonPhotonAmplitudes) -> [Complex64; 4] {
    let (down, up) = match amps {
        IonPhotonAmplitudes::Raw => ((2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt()),
        IonPhotonAmplitudes::Balanced => (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    };
    // |σ+,↓⟩ = |0,1⟩ and |σ-,↑⟩ = |1,0⟩.
    [C0, Complex64::new(down, 0.0), Complex64::from_polar(up, phase), C0]
}

pub fn ion_photon_state(phase: f64, amps: IonPhotonAmplitudes) -> DensityMatrix {
    DensityMatrix::from_pure(&ion_photon_vector(phase, amps)).expect("unit vector")
}

/// Ion-side filter of the heralded partial transfer: half of the `|↓⟩`
/// population is shelved and the round is kept on a dark result.
pub fn balancing_filter() -> KrausChannel {
    KrausChannel::filter(CMatrix::diag_real(&[1.0, std::f64::consts::FRAC_1_SQRT_2])).expect("contraction")
}

#[derive(Debug, Clone)]
pub struct PreparedState {
    pub state: DensityMatrix,
    /// Probability that the preparation herald fires (1 for the raw state).
    pub herald_probability: f64,
}

pub fn initial_state_preparation(amps: IonPhotonAmplitudes, phase: f64) -> Result<PreparedState> {
    let raw = ion_photon_state(phase, IonPhotonAmplitudes::Raw);
    match amps {
        IonPhotonAmplitudes::Raw => Ok(PreparedState {
            state: raw,
            herald_probability: 1.0,
        }),
        IonPhotonAmplitudes::Balanced => {
            let out = apply_channel(&balancing_filter(), &raw, Side::Bob)?;
            Ok(PreparedState {
                state: out.state.expect("filter succeeds with probability 2/3"),
                herald_probability: out.success_probability,
            })
        }
    }
}
