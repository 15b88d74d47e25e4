//! `qfccert`: simulate event logs, certify them, scan post-selection windows
//! and check the fair-sampling assumption.
//!
//! Exit statuses: 0 success, 1 usage or IO error, 2 insufficient data,
//! 3 fair-sampling diagnostic failure, 4 parse error.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qfccert::io::{parse_event_log, sha256_hex, ReportDocument};
use qfccert::model::histogram;
use qfccert::sim::{ExperimentConfig, Simulator};
use qfccert::stats::{certify_with_significance, fair_sampling_test, FairSamplingDiagnostic, PartyDiagnostic};
use qfccert::windows::{estimate_phase_offset, locate_peaks, scan, PeakLocation, WindowSpec};
use qfccert::{CertificationReport, ConfidenceLevel, EventLog};
use serde_json::json;

#[derive(Parser)]
#[command(name = "qfccert", version, about = "Certify a heralded qubit channel from Bell-test event logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an event log from the Monte Carlo model.
    Simulate(SimulateArgs),
    /// Compute the certified CHSH score, fidelity and success probability.
    Certify(CertifyArgs),
    /// Evaluate the CHSH bound over a grid of window counts and lengths.
    ScanWindows(ScanArgs),
    /// Test whether no-click rates depend on the measurement setting.
    CheckFairSampling(FairArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: u64,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    significance: f64,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Calibration log used to place the post-selection windows.
    #[arg(long, requires_all = ["peaks", "widths"])]
    calibration: Option<PathBuf>,
    /// Number of Larmor peaks to keep.
    #[arg(long, requires = "calibration")]
    peaks: Option<usize>,
    /// Window length in picoseconds.
    #[arg(long, requires = "calibration")]
    widths: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    bin_width_ps: u64,
    /// Configuration supplying the Larmor frequency.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    calibration: PathBuf,
    /// Comma-separated peak counts.
    #[arg(long, value_delimiter = ',', required = true)]
    peaks: Vec<usize>,
    /// Comma-separated window lengths in picoseconds.
    #[arg(long, value_delimiter = ',', required = true)]
    widths: Vec<u64>,
    #[arg(long, default_value_t = 1000)]
    bin_width_ps: u64,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the grid as CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FairArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    significance: f64,
}

enum Failure {
    Usage(String),
    Lib(qfccert::Error),
    Diagnostic,
}

impl From<qfccert::Error> for Failure {
    fn from(e: qfccert::Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Certify(a) => cmd_certify(a),
        Command::ScanWindows(a) => scan_windows(a),
        Command::CheckFairSampling(a) => check_fair_sampling(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostic) => ExitCode::from(3),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                qfccert::Error::InsufficientData(_) => 2,
                qfccert::Error::Parse { .. } | qfccert::Error::Config(_) => 4,
                _ => 1,
            })
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn load_log(path: &Path) -> Result<(EventLog, Vec<u8>), Failure> {
    let bytes = read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| {
        qfccert::Error::Parse {
            line: 1 + bytes[..e.valid_up_to()].iter().filter(|&&c| c == b'\n').count(),
            message: "invalid UTF-8".into(),
        }
    })?;
    let log = parse_event_log(text).map_err(|e| with_path(e, path))?;
    Ok((log, bytes))
}

fn with_path(e: qfccert::Error, path: &Path) -> qfccert::Error {
    match e {
        qfccert::Error::Parse { line, message } => qfccert::Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => {
            let text = String::from_utf8(read(p)?).map_err(|_| qfccert::Error::Config(format!("{}: invalid UTF-8", p.display())))?;
            Ok(ExperimentConfig::from_toml(&text)?)
        }
    }
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.rng_seed = seed;
    }
    let sim = Simulator::new(&cfg)?;
    let file = File::create(&a.out).map_err(|e| Failure::Usage(format!("{}: {e}", a.out.display())))?;
    sim.write_log(a.rounds, BufWriter::new(file))?;
    eprintln!("wrote {} rounds to {}", a.rounds, a.out.display());
    Ok(())
}

/// Peak positions from the calibration log alone.
fn calibrate(path: &Path, bin_width_ps: u64, larmor_frequency: f64, num_peaks: usize) -> Result<(PeakLocation, f64, Vec<u8>), Failure> {
    let (log, bytes) = load_log(path)?;
    let hist = histogram(log.entries(), bin_width_ps)?;
    let phase = estimate_phase_offset(&hist, larmor_frequency)?;
    let peaks = locate_peaks(&hist, larmor_frequency, phase, num_peaks)?;
    if peaks.truncated {
        return Err(qfccert::Error::InsufficientData(format!(
            "calibration histogram holds only {} of {num_peaks} requested peaks",
            peaks.centers_ns.len()
        ))
        .into());
    }
    Ok((peaks, phase, bytes))
}

fn warn_if_same_log(events: &Path, events_bytes: &[u8], calibration: &Path, calibration_bytes: &[u8]) {
    let same_path = matches!((fs::canonicalize(events), fs::canonicalize(calibration)), (Ok(a), Ok(b)) if a == b);
    if same_path || events_bytes == calibration_bytes {
        eprintln!("warning: the calibration log is the certification log; windows chosen on the same data bias the bound upward");
    }
}

fn cmd_certify(a: CertifyArgs) -> CmdResult {
    let alpha = ConfidenceLevel::new(a.alpha)?;
    let (log, bytes) = load_log(&a.events)?;
    let mut parameters = json!({
        "alpha": a.alpha,
        "significance": a.significance,
        "window": null,
    });
    let window = match (&a.calibration, a.peaks, a.widths) {
        (Some(cal), Some(num_peaks), Some(width)) => {
            let cfg = load_config(a.config.as_deref())?;
            let (peaks, phase, cal_bytes) = calibrate(cal, a.bin_width_ps, cfg.larmor_frequency, num_peaks)?;
            warn_if_same_log(&a.events, &bytes, cal, &cal_bytes);
            let spec = WindowSpec::new(peaks.centers_ps(), width)?;
            parameters["window"] = json!({
                "calibration_sha256": sha256_hex(&cal_bytes),
                "bin_width_ps": a.bin_width_ps,
                "larmor_frequency": cfg.larmor_frequency,
                "phase_offset": phase,
                "peaks": num_peaks,
                "length_ps": width,
            });
            Some(spec)
        }
        _ => None,
    };
    let report = certify_with_significance(log.entries(), window.as_ref(), alpha, a.significance)?;
    print_report(&report);
    if let Some(out) = &a.out {
        let doc = ReportDocument::new(report.clone(), &bytes, parameters);
        fs::write(out, doc.to_json()).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?;
    }
    if report.fair_sampling.passed {
        Ok(())
    } else {
        Err(Failure::Diagnostic)
    }
}

fn print_report(r: &CertificationReport) {
    println!("rounds n = {}, double clicks n_c = {}, wins = {}", r.n, r.n_c, r.n_wins);
    println!("observed S = {:.4}", r.observed_s);
    println!("Ŝ = {:.3}", r.s_hat);
    println!("f̂ = {:.4}", r.fidelity_bound);
    println!("P̂ = {:.1e}", r.p_succ_hat);
    if let Some(w) = &r.window {
        println!("window: {} peak(s) of {} ps", w.centers_ps().len(), w.length_ps());
    }
    print_fair_sampling(&r.fair_sampling);
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
}

fn print_party(name: &str, p: &PartyDiagnostic) {
    println!(
        "  {name}: no-click rates {:.6} / {:.6}, chi-square {:.4}, p = {:.4e} ({:?}) {}",
        p.no_click_rates[0],
        p.no_click_rates[1],
        p.chi_square,
        p.p_value,
        p.method,
        if p.passed { "pass" } else { "FAIL" }
    );
}

fn print_fair_sampling(d: &FairSamplingDiagnostic) {
    println!(
        "fair sampling at significance {}: {}",
        d.significance,
        if d.passed { "pass" } else { "FAIL" }
    );
    print_party("Alice", &d.alice);
    print_party("Bob", &d.bob);
    println!("  detector imbalance γ = {:.4} ± {:.4}", d.gamma, d.gamma_std_error);
}

fn scan_windows(a: ScanArgs) -> CmdResult {
    if a.peaks.is_empty() || a.widths.is_empty() {
        return Err(Failure::Usage("scan grid is empty".into()));
    }
    let alpha = ConfidenceLevel::new(a.alpha).map_err(|e| Failure::Usage(e.to_string()))?;
    let cfg = load_config(a.config.as_deref())?;
    let (log, bytes) = load_log(&a.events)?;
    let max_peaks = *a.peaks.iter().max().expect("non-empty");
    let (peaks, phase, cal_bytes) = calibrate(&a.calibration, a.bin_width_ps, cfg.larmor_frequency, max_peaks)?;
    warn_if_same_log(&a.events, &bytes, &a.calibration, &cal_bytes);
    let res = scan(log.entries(), &peaks.centers_ps(), &a.peaks, &a.widths, alpha).map_err(|e| match e {
        qfccert::Error::InvalidArgument(m) => Failure::Usage(m),
        other => Failure::Lib(other),
    })?;
    let csv = res.to_csv();
    match &a.out {
        Some(out) => fs::write(out, csv).map_err(|e| Failure::Usage(format!("{}: {e}", out.display())))?,
        None => print!("{csv}"),
    }
    let centers: Vec<String> = peaks.centers_ns.iter().map(|c| format!("{c:.3}")).collect();
    eprintln!("calibration phase offset {phase:.4} rad, peaks at [{}] ns", centers.join(", "));
    match res.best_cell() {
        Some(c) => {
            eprintln!(
                "best window: {} peak(s), {} ps, n_c = {}, Ŝ = {:.4}",
                c.num_peaks,
                c.window_length_ps,
                c.n_c,
                c.s_hat.expect("best cell has a bound")
            );
            Ok(())
        }
        None => Err(qfccert::Error::InsufficientData("no grid cell has enough coincidences".into()).into()),
    }
}

fn check_fair_sampling(a: FairArgs) -> CmdResult {
    let (log, _) = load_log(&a.events)?;
    let counts = qfccert::model::tally(log.entries(), None)?;
    let d = fair_sampling_test(&counts, a.significance)?;
    print_fair_sampling(&d);
    if d.passed {
        Ok(())
    } else {
        Err(Failure::Diagnostic)
    }
}
