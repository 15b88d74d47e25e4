use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::config::{ExperimentConfig, SettingMode};
use crate::linalg::CMatrix;
use crate::io::{write_entry, write_header};
use crate::model::{tally, CountTable, Entry, EventLog, Outcome, Round, Setting, PS_PER_NS};
use crate::quantum::{apply_local, choi_fidelity_to_identity, choi_state, ion_photon_vector, ChshSettings, DensityMatrix, KrausChannel, Side};
use crate::windows::WindowSpec;
use crate::{Error, Result};

/// Rounds per independently seeded chunk. Output is deterministic for a
/// fixed seed because the chunk size is fixed.
pub const CHUNK_SIZE: u64 = 65_536;

/// A real function of the Larmor phase of the form `A + Re(e^{iφ} B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Harmonic {
    a: f64,
    b: Complex64,
}

impl Harmonic {
    fn at(self, phase: f64) -> f64 {
        self.a + (Complex64::from_polar(1.0, phase) * self.b).re
    }

    /// Recovers `A` and `B` from samples at `0`, `π/2` and `π`.
    fn from_samples(f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let (p0, p1, p2) = (f(0.0)?, f(std::f64::consts::FRAC_PI_2)?, f(std::f64::consts::PI)?);
        let a = 0.5 * (p0 + p2);
        Ok(Self {
            a,
            b: Complex64::new(0.5 * (p0 - p2), a - p1),
        })
    }
}

/// Time-independent description of the quantum part of a round.
#[derive(Debug, Clone)]
pub struct PhysicsModel {
    /// Unnormalized `P(a, b, converter succeeds | x, y)` indexed `[x][y][a][b]`.
    joint: [[[[Harmonic; 2]; 2]; 2]; 2],
    /// Ion outcome probabilities without conditioning on the photon, `[y][b]`.
    ion: [[Harmonic; 2]; 2],
    qfc: KrausChannel,
    dephasing: KrausChannel,
    settings: ChshSettings,
    source: crate::quantum::IonPhotonAmplitudes,
}

impl PhysicsModel {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let qfc = cfg.qfc_channel.build()?;
        let dephasing = KrausChannel::dephasing(cfg.ion_dephasing)?;
        let settings = cfg.settings()?;
        let mut model = Self {
            joint: [[[[Harmonic { a: 0.0, b: Complex64::new(0.0, 0.0) }; 2]; 2]; 2]; 2],
            ion: [[Harmonic { a: 0.0, b: Complex64::new(0.0, 0.0) }; 2]; 2],
            qfc,
            dephasing,
            settings,
            source: cfg.source,
        };
        for y in 0..2 {
            for b in 0..2 {
                model.ion[y][b] = Harmonic::from_samples(|phi| {
                    let rho = model.ion_dephased(phi)?;
                    let op = CMatrix::identity(2).kron(model.settings.bob[y].element(b));
                    Ok(rho.trace_product(&op).re)
                })?;
                for x in 0..2 {
                    for a in 0..2 {
                        model.joint[x][y][a][b] = Harmonic::from_samples(|phi| {
                            let out = apply_local(&model.qfc, &model.ion_dephased(phi)?, Side::Alice)?;
                            let op = model.settings.alice[x].element(a).kron(model.settings.bob[y].element(b));
                            Ok(out.trace_product(&op).re)
                        })?;
                    }
                }
            }
        }
        Ok(model)
    }

    fn ion_dephased(&self, phase: f64) -> Result<CMatrix> {
        let psi = ion_photon_vector(phase, self.source);
        apply_local(&self.dephasing, &CMatrix::outer(&psi, &psi), Side::Bob)
    }

    /// Normalized photon-ion state after the converter succeeds.
    pub fn state_at_phase(&self, phase: f64) -> Result<DensityMatrix> {
        let out = apply_local(&self.qfc, &self.ion_dephased(phase)?, Side::Alice)?;
        DensityMatrix::from_unnormalized(&out)
    }

    /// Converter success probability at this phase.
    pub fn success_probability_at_phase(&self, phase: f64) -> f64 {
        self.joint[0][0].iter().flatten().map(|h| h.at(phase)).sum()
    }

    /// `P(a, b | x, y)` conditional on the converter succeeding.
    pub fn conditional_distribution(&self, phase: f64) -> crate::quantum::JointDistribution {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                let total: f64 = self.joint[x][y].iter().flatten().map(|h| h.at(phase)).sum();
                for a in 0..2 {
                    for b in 0..2 {
                        p[x][y][a][b] = self.joint[x][y][a][b].at(phase) / total;
                    }
                }
            }
        }
        p
    }

    pub fn qfc(&self) -> &KrausChannel {
        &self.qfc
    }

    pub fn settings(&self) -> &ChshSettings {
        &self.settings
    }
}

/// Reference quantities a simulated log can be checked against.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub model: PhysicsModel,
    pub larmor_frequency: f64,
    pub phase_offset: f64,
    pub frozen_phase: Option<f64>,
}

impl GroundTruth {
    pub fn phase_at(&self, t_ns: f64) -> f64 {
        self.frozen_phase.unwrap_or(self.larmor_frequency * t_ns + self.phase_offset)
    }

    pub fn state_at(&self, t_ns: f64) -> Result<DensityMatrix> {
        self.model.state_at_phase(self.phase_at(t_ns))
    }

    /// CHSH score of the post-converter state at time `t`, before readout
    /// errors and background.
    pub fn chsh_at(&self, t_ns: f64) -> f64 {
        crate::quantum::chsh_from_distribution(&self.model.conditional_distribution(self.phase_at(t_ns)))
    }

    /// Conditional Choi fidelity of the configured converter channel.
    pub fn qfc_choi_fidelity(&self) -> Result<f64> {
        choi_fidelity_to_identity(self.model.qfc())
    }

    pub fn qfc_success_probability(&self) -> Result<f64> {
        Ok(choi_state(self.model.qfc())?.success_probability)
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedRun {
    pub log: EventLog,
    pub ground_truth: GroundTruth,
}

pub struct Simulator {
    cfg: ExperimentConfig,
    model: PhysicsModel,
    lifetime: Exp<f64>,
    background: f64,
    detection: [[f64; 2]; 2],
    readout_flip: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(chunk)))
}

impl Simulator {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let model = PhysicsModel::new(cfg)?;
        let lifetime = Exp::new(1.0 / cfg.wavepacket_lifetime).map_err(|e| Error::Config(e.to_string()))?;
        let detection = [[cfg.detection_probability(0, 0), cfg.detection_probability(1, 0)], [
            cfg.detection_probability(0, 1),
            cfg.detection_probability(1, 1),
        ]];
        Ok(Self {
            cfg: cfg.clone(),
            model,
            lifetime,
            background: cfg.background_probability(),
            detection,
            readout_flip: 1.0 - cfg.ion_readout_fidelity,
        })
    }

    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            model: self.model.clone(),
            larmor_frequency: self.cfg.larmor_frequency,
            phase_offset: self.cfg.phase_offset,
            frozen_phase: self.cfg.frozen_phase,
        }
    }

    fn settings_for(&self, round_id: u64, rng: &mut ChaCha8Rng) -> (usize, usize) {
        match self.cfg.setting_mode {
            SettingMode::Iid => (rng.random_range(0..2), rng.random_range(0..2)),
            SettingMode::RunCycling { run_length } => {
                let k = ((round_id / run_length) % 4) as usize;
                (k / 2, k % 2)
            }
        }
    }

    fn round(&self, round_id: u64, rng: &mut ChaCha8Rng) -> Round {
        let (x, y) = self.settings_for(round_id, rng);
        let mut a: Option<usize> = None;
        let mut t_ns = 0.0;
        let mut b: usize;
        if rng.random::<f64>() < self.cfg.herald_probability {
            let t = self.lifetime.sample(rng);
            let phase = self.cfg.frozen_phase.unwrap_or(self.cfg.larmor_frequency * t + self.cfg.phase_offset);
            let u = rng.random::<f64>();
            let mut acc = 0.0;
            let mut picked = None;
            'outer: for (ai, row) in self.model.joint[x][y].iter().enumerate() {
                for (bi, h) in row.iter().enumerate() {
                    acc += h.at(phase).max(0.0);
                    if u < acc {
                        picked = Some((ai, bi));
                        break 'outer;
                    }
                }
            }
            b = match picked {
                Some((ai, bi)) => {
                    if t < self.cfg.acquisition_span && rng.random::<f64>() < self.detection[x][ai] {
                        a = Some(ai);
                        t_ns = t;
                    }
                    bi
                }
                None => {
                    // Converter failed: Bob's outcome given failure.
                    let fail0 = (self.model.ion[y][0].at(phase) - self.model.joint[x][y][0][0].at(phase) - self.model.joint[x][y][1][0].at(phase)).max(0.0);
                    let fail1 = (self.model.ion[y][1].at(phase) - self.model.joint[x][y][0][1].at(phase) - self.model.joint[x][y][1][1].at(phase)).max(0.0);
                    let total = fail0 + fail1;
                    if total > 0.0 {
                        usize::from(rng.random::<f64>() * total >= fail0)
                    } else {
                        rng.random_range(0..2)
                    }
                }
            };
        } else {
            b = rng.random_range(0..2);
        }
        if rng.random::<f64>() < self.readout_flip {
            b ^= 1;
        }
        if self.background > 0.0 && rng.random::<f64>() < self.background {
            a = Some(rng.random_range(0..2));
            t_ns = rng.random::<f64>() * self.cfg.acquisition_span;
        }
        let outcome_a = a.map_or(Outcome::NoClick, Outcome::from_bit);
        Round {
            round_id,
            x: Setting::from_index(x).expect("binary"),
            y: Setting::from_index(y).expect("binary"),
            a: outcome_a,
            b: Outcome::from_bit(b),
            t_detect_ps: a.map(|_| (t_ns * PS_PER_NS as f64) as u64),
        }
    }

    fn chunk(&self, index: u64, n_rounds: u64) -> Vec<Entry> {
        let start = index * CHUNK_SIZE;
        let end = (start + CHUNK_SIZE).min(n_rounds);
        let mut rng = chunk_rng(self.cfg.rng_seed, index);
        (start..end).map(|id| Entry::Round(self.round(id, &mut rng))).collect()
    }

    /// Runs `f` on every chunk of the log in parallel and returns the results
    /// in chunk order.
    pub fn map_chunks<T: Send>(&self, n_rounds: u64, f: impl Fn(Vec<Entry>) -> T + Sync) -> Vec<T> {
        let chunks = n_rounds.div_ceil(CHUNK_SIZE);
        (0..chunks).into_par_iter().map(|i| f(self.chunk(i, n_rounds))).collect()
    }

    pub fn run(&self, n_rounds: u64) -> Result<SimulatedRun> {
        let entries: Vec<Entry> = self.map_chunks(n_rounds, |c| c).into_iter().flatten().collect();
        Ok(SimulatedRun {
            log: EventLog::new(entries)?,
            ground_truth: self.ground_truth(),
        })
    }

    /// Writes the log of `n_rounds` in the event-log format, generating a
    /// bounded number of chunks at a time.
    pub fn write_log(&self, n_rounds: u64, mut w: impl Write) -> Result<()> {
        const CHUNKS_PER_BATCH: u64 = 64;
        write_header(&mut w)?;
        let chunks = n_rounds.div_ceil(CHUNK_SIZE);
        let mut first = 0;
        while first < chunks {
            let last = (first + CHUNKS_PER_BATCH).min(chunks);
            let batch: Vec<Vec<Entry>> = (first..last).into_par_iter().map(|i| self.chunk(i, n_rounds)).collect();
            for e in batch.iter().flatten() {
                write_entry(&mut w, e)?;
            }
            first = last;
        }
        w.flush()?;
        Ok(())
    }

    /// Tallies a log of `n_rounds` without keeping it in memory.
    pub fn counts(&self, n_rounds: u64, window: Option<&WindowSpec>) -> Result<CountTable> {
        self.map_chunks(n_rounds, |c| tally(&c, window))
            .into_iter()
            .try_fold(CountTable::default(), |acc, t| Ok(acc.merge(&t?)))
    }

    /// Only the rounds in which Alice clicked, plus a tally of all rounds.
    pub fn clicks(&self, n_rounds: u64) -> Result<(Vec<Entry>, CountTable)> {
        let parts = self.map_chunks(n_rounds, |c| -> Result<(Vec<Entry>, CountTable)> {
            let t = tally(&c, None)?;
            let kept = c.into_iter().filter(|e| matches!(e, Entry::Round(r) if r.a.is_click())).collect();
            Ok((kept, t))
        });
        let mut all = Vec::new();
        let mut counts = CountTable::default();
        for p in parts {
            let (kept, t) = p?;
            all.extend(kept);
            counts = counts.merge(&t);
        }
        Ok((all, counts))
    }
}

/// Generates `n_rounds` rounds with the configured seed.
pub fn simulate(cfg: &ExperimentConfig, n_rounds: u64) -> Result<SimulatedRun> {
    Simulator::new(cfg)?.run(n_rounds)
}
