//! Seeded Monte Carlo model of the heralded ion-photon experiment.
//!
//! Per round: settings are drawn; with the herald probability a photon is
//! emitted at an exponentially distributed time `t` while the pair is in the
//! balanced source state at Larmor phase `ω_L t + φ₀`. The ion is dephased,
//! the photon passes the converter channel (failure means no click), and the
//! photon is then detected with probability
//! `η_qfc · (1 − loss) · η_det[a] · adversarial[x]`. Detections after the
//! acquisition span are lost. The ion readout is flipped with probability
//! `1 − fidelity`. Independently, a background click with a random outcome
//! and a uniform time replaces Alice's result. Without a herald Alice sees
//! nothing and the ion readout is uniformly random.

pub mod config;
pub mod engine;

pub use crate::quantum::{initial_state_preparation, IonPhotonAmplitudes, PreparedState};
pub use config::{ExperimentConfig, MeasurementSpec, SettingMode, DEFAULT_DETECTOR_IMBALANCE};
pub use engine::{simulate, GroundTruth, PhysicsModel, SimulatedRun, Simulator, CHUNK_SIZE};
