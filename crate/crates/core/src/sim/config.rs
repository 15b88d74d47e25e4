use std::f64::consts::{FRAC_PI_2, TAU};

use serde::{Deserialize, Serialize};

use crate::quantum::chsh::{EQUATORIAL_ALICE, EQUATORIAL_BOB};
use crate::quantum::{ChannelSpec, ChshSettings, IonPhotonAmplitudes};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SettingMode {
    /// Independent uniform settings every round.
    Iid,
    /// Blocks of `run_length` rounds per setting pair, cycling
    /// `(0,0), (0,1), (1,0), (1,1)`.
    RunCycling { run_length: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    /// Bloch directions of the photon measurements, per setting `x`.
    pub alice: [[f64; 3]; 2],
    /// Bloch directions of the ion measurements, per setting `y`.
    pub bob: [[f64; 3]; 2],
}

impl Default for MeasurementSpec {
    fn default() -> Self {
        Self {
            alice: EQUATORIAL_ALICE,
            bob: EQUATORIAL_BOB,
        }
    }
}

/// Physical parameters of the simulated source, converter and detectors.
/// Times are in nanoseconds unless the name says otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Probability per round that an ion-photon pair is heralded.
    pub herald_probability: f64,
    /// Larmor frequency in rad/ns.
    pub larmor_frequency: f64,
    /// Phase at `t = 0`; the state phase is `ω_L t + phase_offset`.
    pub phase_offset: f64,
    /// Overrides the time-dependent phase with a constant.
    pub frozen_phase: Option<f64>,
    /// Mean photon arrival time after the excitation pulse.
    pub wavepacket_lifetime: f64,
    /// Detection is recorded for `t ∈ [0, acquisition_span)`.
    pub acquisition_span: f64,
    pub source: IonPhotonAmplitudes,
    pub qfc_channel: ChannelSpec,
    pub qfc_efficiency: f64,
    /// Fraction of photons lost between converter and detectors.
    pub optical_loss: f64,
    /// Detector efficiency per photon outcome `a`.
    pub detector_efficiencies: [f64; 2],
    /// Background clicks per second at the detectors.
    pub background_rate: f64,
    pub ion_readout_fidelity: f64,
    /// Phase-flip probability on the ion.
    pub ion_dephasing: f64,
    pub measurements: MeasurementSpec,
    pub setting_mode: SettingMode,
    /// Extra transmission per photon setting `x`; anything other than
    /// `[1, 1]` makes the no-click rate setting dependent.
    pub adversarial_transmission: [f64; 2],
    pub rng_seed: u64,
}

/// Default detector imbalance `γ = 1 − η₁/η₂`.
pub const DEFAULT_DETECTOR_IMBALANCE: f64 = 0.002;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            herald_probability: 0.0036,
            larmor_frequency: TAU / 100.0,
            phase_offset: -FRAC_PI_2,
            frozen_phase: None,
            wavepacket_lifetime: 200.0,
            acquisition_span: 2000.0,
            source: IonPhotonAmplitudes::Balanced,
            qfc_channel: ChannelSpec::default(),
            qfc_efficiency: 0.572,
            optical_loss: 0.6,
            detector_efficiencies: [0.135 * (1.0 - DEFAULT_DETECTOR_IMBALANCE), 0.135],
            background_rate: 24.0,
            ion_readout_fidelity: 0.995,
            ion_dephasing: 0.01,
            measurements: MeasurementSpec::default(),
            setting_mode: SettingMode::Iid,
            adversarial_transmission: [1.0, 1.0],
            rng_seed: 0,
        }
    }
}

fn probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Config(format!("{name} = {v} must lie in [0, 1]")));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Config(format!("{name} = {v} must be positive and finite")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Everything ideal: every round heralded and detected, no noise, and
    /// the phase frozen at `phase`.
    pub fn noiseless(phase: f64) -> Self {
        Self {
            herald_probability: 1.0,
            frozen_phase: Some(phase),
            qfc_efficiency: 1.0,
            optical_loss: 0.0,
            detector_efficiencies: [1.0, 1.0],
            background_rate: 0.0,
            ion_readout_fidelity: 1.0,
            ion_dephasing: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        probability("herald_probability", self.herald_probability)?;
        probability("qfc_efficiency", self.qfc_efficiency)?;
        probability("optical_loss", self.optical_loss)?;
        probability("ion_readout_fidelity", self.ion_readout_fidelity)?;
        probability("ion_dephasing", self.ion_dephasing)?;
        for (i, &e) in self.detector_efficiencies.iter().enumerate() {
            probability(&format!("detector_efficiencies[{i}]"), e)?;
        }
        for (i, &e) in self.adversarial_transmission.iter().enumerate() {
            probability(&format!("adversarial_transmission[{i}]"), e)?;
        }
        positive("larmor_frequency", self.larmor_frequency)?;
        positive("wavepacket_lifetime", self.wavepacket_lifetime)?;
        positive("acquisition_span", self.acquisition_span)?;
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(Error::Config(format!(
                "background_rate = {} must be non-negative",
                self.background_rate
            )));
        }
        if !self.phase_offset.is_finite() || self.frozen_phase.is_some_and(|p| !p.is_finite()) {
            return Err(Error::Config("phases must be finite".into()));
        }
        if let SettingMode::RunCycling { run_length: 0 } = self.setting_mode {
            return Err(Error::Config("run_length must be positive".into()));
        }
        self.qfc_channel.build().map_err(|e| Error::Config(format!("qfc_channel: {e}")))?;
        self.settings().map_err(|e| Error::Config(format!("measurements: {e}")))?;
        Ok(())
    }

    pub fn settings(&self) -> Result<ChshSettings> {
        ChshSettings::from_bloch(self.measurements.alice, self.measurements.bob)
    }

    /// Probability that a background click occurs during one round.
    pub fn background_probability(&self) -> f64 {
        -(-self.background_rate * self.acquisition_span * 1e-9).exp_m1()
    }

    /// Transmission after the converter's internal channel succeeds, for
    /// photon outcome `a` and setting `x`.
    pub fn detection_probability(&self, a: usize, x: usize) -> f64 {
        self.qfc_efficiency * (1.0 - self.optical_loss) * self.detector_efficiencies[a] * self.adversarial_transmission[x]
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
