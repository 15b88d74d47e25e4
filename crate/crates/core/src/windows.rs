//! Detection-time windows for post-selection and the window scan.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{CoincidenceHistogram, Entry, PS_PER_NS};
use crate::stats::{chsh_lower_bound_from, ConfidenceLevel};
use crate::{Error, Result};

/// Windows of equal length around peak centers. Each window is the
/// half-open interval `[c − L/2, c − L/2 + L)` (in picoseconds, clamped at
/// zero); windows that would overlap are cut at the midpoint between their
/// centers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "WindowSpecRepr", try_from = "WindowSpecRepr")]
pub struct WindowSpec {
    centers_ps: Vec<u64>,
    length_ps: u64,
    intervals: Vec<(u64, u64)>,
}

#[derive(Serialize, Deserialize)]
struct WindowSpecRepr {
    peak_centers_ps: Vec<u64>,
    window_length_ps: u64,
    intervals_ps: Vec<(u64, u64)>,
}

impl From<WindowSpec> for WindowSpecRepr {
    fn from(w: WindowSpec) -> Self {
        Self {
            peak_centers_ps: w.centers_ps,
            window_length_ps: w.length_ps,
            intervals_ps: w.intervals,
        }
    }
}

impl TryFrom<WindowSpecRepr> for WindowSpec {
    type Error = Error;
    fn try_from(r: WindowSpecRepr) -> Result<Self> {
        Self::new(r.peak_centers_ps, r.window_length_ps)
    }
}

impl WindowSpec {
    pub fn new(mut centers_ps: Vec<u64>, length_ps: u64) -> Result<Self> {
        if length_ps == 0 {
            return Err(Error::InvalidArgument("window length must be positive".into()));
        }
        if centers_ps.is_empty() {
            return Err(Error::InvalidArgument("at least one window center is required".into()));
        }
        centers_ps.sort_unstable();
        centers_ps.dedup();
        let half = length_ps / 2;
        let mut intervals: Vec<(u64, u64)> = centers_ps
            .iter()
            .map(|&c| (c.saturating_sub(half), c + (length_ps - half)))
            .collect();
        for i in 1..intervals.len() {
            if intervals[i - 1].1 > intervals[i].0 {
                let mid = centers_ps[i - 1] + (centers_ps[i] - centers_ps[i - 1]) / 2;
                intervals[i - 1].1 = mid;
                intervals[i].0 = mid;
            }
        }
        intervals.retain(|&(lo, hi)| hi > lo);
        Ok(Self {
            centers_ps,
            length_ps,
            intervals,
        })
    }

    /// Centers and window length given in nanoseconds, rounded to picoseconds.
    pub fn from_ns(centers_ns: &[f64], length_ns: f64) -> Result<Self> {
        let to_ps = |v: f64| -> Result<u64> {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("time {v} ns must be finite and non-negative")));
            }
            Ok((v * PS_PER_NS as f64).round() as u64)
        };
        Self::new(centers_ns.iter().map(|&c| to_ps(c)).collect::<Result<_>>()?, to_ps(length_ns)?)
    }

    pub fn centers_ps(&self) -> &[u64] {
        &self.centers_ps
    }

    pub fn length_ps(&self) -> u64 {
        self.length_ps
    }

    pub fn half_width_ns(&self) -> f64 {
        self.length_ps as f64 / (2 * PS_PER_NS) as f64
    }

    pub fn intervals_ps(&self) -> &[(u64, u64)] {
        &self.intervals
    }

    pub fn contains_ps(&self, t: u64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= t && t < hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakLocation {
    pub centers_ns: Vec<f64>,
    /// Fewer peaks than requested fit inside the histogram range.
    pub truncated: bool,
}

impl PeakLocation {
    pub fn centers_ps(&self) -> Vec<u64> {
        self.centers_ns.iter().map(|c| (c * PS_PER_NS as f64).round() as u64).collect()
    }
}

/// Maxima of `cos(ω t + φ)`: `t_k = t_0 + k·2π/ω` with
/// `t_0 = ((−φ) mod 2π)/ω`, kept while inside `[0, range_end_ns)`.
pub fn peak_times(larmor_frequency: f64, phase_offset: f64, num_peaks: usize, range_end_ns: f64) -> Result<PeakLocation> {
    if num_peaks == 0 {
        return Err(Error::InvalidArgument("at least one peak is required".into()));
    }
    if !(larmor_frequency > 0.0 && larmor_frequency.is_finite()) {
        return Err(Error::InvalidArgument(format!("Larmor frequency {larmor_frequency} must be positive")));
    }
    let period = TAU / larmor_frequency;
    let t0 = (-phase_offset).rem_euclid(TAU) / larmor_frequency;
    let centers_ns: Vec<f64> = (0..num_peaks)
        .map(|k| t0 + k as f64 * period)
        .take_while(|&t| t < range_end_ns)
        .collect();
    Ok(PeakLocation {
        truncated: centers_ns.len() < num_peaks,
        centers_ns,
    })
}

pub fn locate_peaks(hist: &CoincidenceHistogram, larmor_frequency: f64, phase_offset: f64, num_peaks: usize) -> Result<PeakLocation> {
    peak_times(larmor_frequency, phase_offset, num_peaks, hist.range_end_ps() as f64 / PS_PER_NS as f64)
}

/// Weighted least-squares fit of the per-bin score `8 T̄ − 4` to
/// `C + R cos(ω t + φ)`; returns `φ` in `(−π, π]`.
pub fn estimate_phase_offset(hist: &CoincidenceHistogram, larmor_frequency: f64) -> Result<f64> {
    // Normal equations for the basis (1, cos ωt, sin ωt).
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for (k, bc) in hist.bin_counts().iter().enumerate() {
        if bc.n_c == 0 {
            continue;
        }
        let w = bc.n_c as f64;
        let s = 8.0 * bc.n_wins as f64 / w - 4.0;
        let t = hist.bin_center_ns(k);
        let basis = [1.0, (larmor_frequency * t).cos(), (larmor_frequency * t).sin()];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += w * basis[i] * basis[j];
            }
            atb[i] += w * basis[i] * s;
        }
    }
    let sol = solve3(ata, atb).ok_or_else(|| {
        Error::InsufficientData("calibration histogram does not determine the Larmor phase".into())
    })?;
    // R cos(ωt + φ) = R cos φ cos ωt − R sin φ sin ωt.
    let (c, s) = (sol[1], sol[2]);
    if c == 0.0 && s == 0.0 {
        return Err(Error::InsufficientData("no oscillation in calibration data".into()));
    }
    Ok((-s).atan2(c))
}

fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        v.swap(col, piv);
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            for c in col..3 {
                m[r][c] -= f * m[col][c];
            }
            v[r] -= f * v[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let mut acc = v[r];
        for c in r + 1..3 {
            acc -= m[r][c] * x[c];
        }
        x[r] = acc / m[r][r];
    }
    Some(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub num_peaks: usize,
    pub window_length_ps: u64,
    pub n_c: u64,
    pub n_wins: u64,
    pub t_bar: Option<f64>,
    /// `None` when the cell has insufficient data.
    pub s_hat: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowScanResult {
    pub cells: Vec<ScanCell>,
    /// Index into `cells` of the largest `Ŝ`; ties go to the smaller window,
    /// then to fewer peaks.
    pub best: Option<usize>,
    pub alpha: f64,
}

impl WindowScanResult {
    pub fn best_cell(&self) -> Option<&ScanCell> {
        self.best.map(|i| &self.cells[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("num_peaks,window_length_ps,n_c,n_wins,t_bar,s_hat,status\n");
        for c in &self.cells {
            let opt = |v: Option<f64>| v.map(|x| format!("{x:.10}")).unwrap_or_default();
            let status = if c.s_hat.is_some() { "ok" } else { "insufficient_data" };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.num_peaks,
                c.window_length_ps,
                c.n_c,
                c.n_wins,
                opt(c.t_bar),
                opt(c.s_hat),
                status
            )
            .expect("writing to a String");
        }
        out
    }
}

/// Evaluates `Ŝ` on every `(num_peaks, window_length)` pair, using the first
/// `num_peaks` entries of `peak_centers_ps` as window centers.
pub fn scan(entries: &[Entry], peak_centers_ps: &[u64], peaks: &[usize], window_lengths_ps: &[u64], alpha: ConfidenceLevel) -> Result<WindowScanResult> {
    if peaks.is_empty() || window_lengths_ps.is_empty() {
        return Err(Error::InvalidArgument("scan grid is empty".into()));
    }
    if let Some(&p) = peaks.iter().find(|&&p| p == 0 || p > peak_centers_ps.len()) {
        return Err(Error::InvalidArgument(format!(
            "{p} peaks requested, {} located",
            peak_centers_ps.len()
        )));
    }
    // Only double clicks matter for n_c and n_wins.
    let mut doubles: Vec<(u64, bool)> = Vec::new();
    for e in entries {
        if let Entry::Round(r) = e {
            r.validate()?;
            if r.is_double_click() {
                doubles.push((r.t_detect_ps.expect("validated"), r.wins()));
            }
        }
    }
    let grid: Vec<(usize, u64)> = peaks
        .iter()
        .flat_map(|&p| window_lengths_ps.iter().map(move |&w| (p, w)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(p, w)| -> Result<ScanCell> {
            let spec = WindowSpec::new(peak_centers_ps[..p].to_vec(), w)?;
            let (mut n_c, mut n_wins) = (0u64, 0u64);
            for &(t, win) in &doubles {
                if spec.contains_ps(t) {
                    n_c += 1;
                    n_wins += u64::from(win);
                }
            }
            let s_hat = match chsh_lower_bound_from(n_c, n_wins, alpha) {
                Ok(s) => Some(s),
                Err(Error::InsufficientData(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(ScanCell {
                num_peaks: p,
                window_length_ps: w,
                n_c,
                n_wins,
                t_bar: (n_c > 0).then(|| n_wins as f64 / n_c as f64),
                s_hat,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        let Some(s) = c.s_hat else { continue };
        best = match best {
            None => Some(i),
            Some(j) => {
                let b = &cells[j];
                let bs = b.s_hat.expect("best has a value");
                let better = s > bs
                    || (s == bs
                        && (c.window_length_ps, c.num_peaks) < (b.window_length_ps, b.num_peaks));
                Some(if better { i } else { j })
            }
        };
    }
    Ok(WindowScanResult {
        cells,
        best,
        alpha: alpha.alpha(),
    })
}
