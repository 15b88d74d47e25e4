use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

use qfccert::model::{histogram, tally};
use qfccert::quantum::{chsh_score, ChannelSpec};
use qfccert::sim::{ExperimentConfig, SettingMode, Simulator};
use qfccert::stats::{certify_counts, fair_sampling_test, ConfidenceLevel};
use qfccert::windows::{estimate_phase_offset, locate_peaks, peak_times, scan, WindowSpec};
use qfccert::Entry;

/// Every round heralded, with the default background rate scaled up by the
/// inverse herald probability so the signal-to-background ratio per herald
/// is unchanged.
fn bright(seed: u64) -> ExperimentConfig {
    let base = ExperimentConfig::default();
    ExperimentConfig {
        herald_probability: 1.0,
        background_rate: base.background_rate / base.herald_probability,
        rng_seed: seed,
        ..base
    }
}

#[test]
fn noiseless_frozen_phase_saturates_tsirelson() {
    let cfg = ExperimentConfig::noiseless(0.0);
    let sim = Simulator::new(&cfg).unwrap();
    let truth = sim.ground_truth();
    let settings = cfg.settings().unwrap();
    let s = chsh_score(&truth.state_at(0.0).unwrap(), &settings.alice, &settings.bob).unwrap();
    assert!((s - 2.0 * SQRT_2).abs() < 1e-12);
    let c = sim.counts(200_000, None).unwrap();
    let p = (2.0 + SQRT_2) / 4.0;
    let sigma = (p * (1.0 - p) / c.n_c as f64).sqrt();
    assert!((c.t_bar().unwrap() - p).abs() < 5.0 * sigma);
}

#[test]
fn opposite_frozen_phase_gives_opposite_extremum() {
    let sim = Simulator::new(&ExperimentConfig::noiseless(PI)).unwrap();
    let c = sim.counts(100_000, None).unwrap();
    let p = (2.0 - SQRT_2) / 4.0;
    let sigma = (p * (1.0 - p) / c.n_c as f64).sqrt();
    assert!((c.t_bar().unwrap() - p).abs() < 5.0 * sigma);
}

/// `∫ e^{−t/τ} g(t) dt` over `[lo, hi)` by composite Simpson.
fn integrate(lo: f64, hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let n = 2000;
    let h = (hi - lo) / n as f64;
    let mut acc = g(lo) + g(hi);
    for k in 1..n {
        acc += g(lo + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn windowed_score_follows_larmor_precession() {
    let cfg = ExperimentConfig {
        herald_probability: 1.0,
        background_rate: 0.0,
        ion_dephasing: 0.0,
        ion_readout_fidelity: 1.0,
        detector_efficiencies: [0.135, 0.135],
        rng_seed: 3,
        ..ExperimentConfig::default()
    };
    let sim = Simulator::new(&cfg).unwrap();
    let peaks = peak_times(cfg.larmor_frequency, cfg.phase_offset, 2, cfg.acquisition_span).unwrap();
    let window = WindowSpec::from_ns(&peaks.centers_ns, 20.0).unwrap();
    let c = sim.counts(2_000_000, Some(&window)).unwrap();
    // Expected score: 2√2 cos(ωt + φ) averaged over the detection-time
    // density inside the windows.
    let tau = cfg.wavepacket_lifetime;
    let (mut num, mut den) = (0.0, 0.0);
    for &(lo, hi) in window.intervals_ps() {
        let (lo, hi) = (lo as f64 / 1e3, hi as f64 / 1e3);
        num += integrate(lo, hi, |t| (-t / tau).exp() * (cfg.larmor_frequency * t + cfg.phase_offset).cos());
        den += integrate(lo, hi, |t| (-t / tau).exp());
    }
    let s_expected = 2.0 * SQRT_2 * num / den;
    let p = 0.5 + s_expected / 8.0;
    let sigma = (p * (1.0 - p) / c.n_c as f64).sqrt();
    assert!(c.n_c > 5000);
    assert!((c.t_bar().unwrap() - p).abs() < 5.0 * sigma, "T̄ = {:?}, expected {p}", c.t_bar());
}

#[test]
fn calibration_recovers_phase_and_peaks() {
    let cfg = bright(11);
    let (entries, _) = Simulator::new(&cfg).unwrap().clicks(2_000_000).unwrap();
    let hist = histogram(&entries, 1000).unwrap();
    let phi = estimate_phase_offset(&hist, cfg.larmor_frequency).unwrap();
    let err = (phi - cfg.phase_offset + PI).rem_euclid(TAU) - PI;
    assert!(err.abs() < 0.05, "phase {phi}");
    let peaks = locate_peaks(&hist, cfg.larmor_frequency, phi, 2).unwrap();
    assert!((peaks.centers_ns[0] - 25.0).abs() < 1.0);
    assert!((peaks.centers_ns[1] - 125.0).abs() < 1.0);
}

#[test]
fn histogram_agrees_with_windowed_tally() {
    let (entries, counts) = Simulator::new(&bright(4)).unwrap().clicks(300_000).unwrap();
    let hist = histogram(&entries, 1000).unwrap();
    let bins = hist.bin_counts();
    assert_eq!(hist.total(), counts.n_c);
    // A window aligned to bin edges: [20, 30) ns and [120, 130) ns.
    let window = WindowSpec::new(vec![25_000, 125_000], 10_000).unwrap();
    let t = tally(&entries, Some(&window)).unwrap();
    let in_window: Vec<usize> = (20..30).chain(120..130).collect();
    let n_c: u64 = in_window.iter().map(|&k| bins[k].n_c).sum();
    let n_wins: u64 = in_window.iter().map(|&k| bins[k].n_wins).sum();
    assert_eq!((t.n_c, t.n_wins), (n_c, n_wins));
}

#[test]
fn fair_sampling_default_passes_and_adversarial_fails() {
    let cfg = bright(21);
    let c = Simulator::new(&cfg).unwrap().counts(200_000, None).unwrap();
    let d = fair_sampling_test(&c, 0.01).unwrap();
    assert!(d.passed, "{d:?}");
    assert!(d.gamma < 0.05);
    let adversarial = ExperimentConfig {
        adversarial_transmission: [1.0, 0.8],
        ..cfg
    };
    let c = Simulator::new(&adversarial).unwrap().counts(200_000, None).unwrap();
    let d = fair_sampling_test(&c, 0.01).unwrap();
    assert!(!d.passed);
    assert!(!d.alice.passed && d.bob.passed);
}

#[test]
fn detector_imbalance_estimate_matches_configuration() {
    // γ = 1 − η₀/η₁ when the outcomes are otherwise balanced; background
    // clicks are outcome-symmetric and would dilute it.
    let cfg = ExperimentConfig {
        detector_efficiencies: [0.09, 0.1],
        background_rate: 0.0,
        ..bright(8)
    };
    let c = Simulator::new(&cfg).unwrap().counts(2_000_000, None).unwrap();
    let d = fair_sampling_test(&c, 0.01).unwrap();
    assert!((d.gamma - 0.1).abs() < 5.0 * d.gamma_std_error, "γ = {} ± {}", d.gamma, d.gamma_std_error);
}

#[test]
fn certified_fidelity_stays_below_channel_fidelity() {
    let base = ExperimentConfig {
        qfc_channel: ChannelSpec {
            rotation_axis: [1.0, 0.0, 0.0],
            rotation_angle: 0.15,
            dephasing: 0.03,
            ..ChannelSpec::default()
        },
        ..ExperimentConfig::noiseless(0.0)
    };
    let truth = Simulator::new(&base).unwrap().ground_truth().qfc_choi_fidelity().unwrap();
    let alpha = ConfidenceLevel::new(0.01).unwrap();
    for seed in 0..10 {
        let cfg = ExperimentConfig { rng_seed: seed, ..base.clone() };
        let c = Simulator::new(&cfg).unwrap().counts(100_000, None).unwrap();
        let r = certify_counts(&c, None, alpha, 0.01).unwrap();
        assert!(r.fidelity_bound <= truth, "seed {seed}: {} > {truth}", r.fidelity_bound);
        assert!(r.fidelity_bound > 0.5);
    }
}

#[test]
fn run_cycling_covers_all_setting_pairs() {
    let cfg = ExperimentConfig {
        setting_mode: SettingMode::RunCycling { run_length: 1000 },
        ..bright(2)
    };
    let c = Simulator::new(&cfg).unwrap().counts(40_000, None).unwrap();
    for x in 0..2 {
        assert_eq!(c.alice[x].rounds, 20_000);
        assert_eq!(c.bob[x].rounds, 20_000);
    }
}

#[test]
fn scan_with_background_has_an_interior_optimum() {
    let cfg = bright(0);
    let (entries, _) = Simulator::new(&cfg).unwrap().clicks(1_000_000).unwrap();
    let peaks = peak_times(cfg.larmor_frequency, cfg.phase_offset, 2, cfg.acquisition_span).unwrap();
    let widths: Vec<u64> = (1..=25).map(|k| k * 4000).collect();
    let res = scan(&entries, &peaks.centers_ps(), &[2], &widths, ConfidenceLevel::new(0.01).unwrap()).unwrap();
    let best = res.best.unwrap();
    assert!(best > 0 && best < widths.len() - 1, "best width index {best}");
}

#[test]
fn empty_log_scan_has_no_valid_cell() {
    let entries: Vec<Entry> = Vec::new();
    let res = scan(&entries, &[25_000, 125_000], &[1, 2], &[1000, 5000], ConfidenceLevel::new(0.01).unwrap()).unwrap();
    assert!(res.best.is_none());
    assert!(res.cells.iter().all(|c| c.s_hat.is_none()));
    assert!(res.to_csv().lines().skip(1).all(|l| l.ends_with("insufficient_data")));
}

#[test]
fn phase_offset_sign_convention() {
    // With φ = −π/2 the first maximum is a quarter period after t = 0.
    let p = peak_times(TAU / 100.0, -FRAC_PI_2, 3, 2000.0).unwrap();
    assert!((p.centers_ns[0] - 25.0).abs() < 1e-9);
    assert!((p.centers_ns[2] - 225.0).abs() < 1e-9);
}
