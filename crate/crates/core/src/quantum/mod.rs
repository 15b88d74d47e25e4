//! Finite-dimensional quantum objects.
//!
//! Conventions used throughout:
//!
//! - Bipartite operators are ordered Alice ⊗ Bob. Alice is the photon that
//!   passes through the converter, Bob is the ion.
//! - Photon polarization: `|σ+⟩ = |0⟩`, `|σ-⟩ = |1⟩`. Ion: `|↑⟩ = |0⟩`,
//!   `|↓⟩ = |1⟩`.
//! - For a projective measurement along Bloch direction `n`, outcome 0 is
//!   the `+1` eigenvalue of `n·σ`.

pub mod bound;
pub mod channel;
pub mod chsh;
pub mod fidelity;
pub mod schmidt;
pub mod source;
pub mod state;

pub use bound::{certified_bound_f, certified_bound_f_raw, FidelityBound, Surd2};
pub use channel::{apply_channel, apply_local, ChannelOutput, Side};
pub use chsh::{chsh_from_distribution, chsh_score, game_win_probability, joint_distribution, ChshSettings, JointDistribution};
pub use fidelity::{choi_fidelity_to_identity, choi_state, uhlmann_fidelity};
pub use schmidt::{build_injection_map, schmidt_decompose, InjectionMap, Purification, SchmidtForm};
pub use source::{balancing_filter, initial_state_preparation, ion_photon_state, ion_photon_vector, IonPhotonAmplitudes, PreparedState};
pub use state::{bloch_operator, pauli_x, pauli_y, pauli_z, rotation_unitary, ChannelSpec, DensityMatrix, KrausChannel, Povm};

use crate::linalg::{C0, C1};

/// `|Φ⁺⟩ = (|00⟩ + |11⟩)/√2`.
pub fn phi_plus_vector() -> [num_complex::Complex64; 4] {
    let h = C1 * std::f64::consts::FRAC_1_SQRT_2;
    [h, C0, C0, h]
}

pub fn phi_plus() -> DensityMatrix {
    DensityMatrix::from_pure(&phi_plus_vector()).expect("Φ⁺ is a valid state")
}
