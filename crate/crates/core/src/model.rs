//! Rounds, outcomes, counts and coincidence histograms.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::windows::WindowSpec;
use crate::{Error, Result};

pub const PS_PER_NS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    Zero,
    One,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::Zero, Setting::One];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Self::Zero),
            1 => Some(Self::One),
            _ => None,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
    NoClick,
}

impl Outcome {
    pub fn from_bit(bit: usize) -> Self {
        if bit == 0 {
            Self::Zero
        } else {
            Self::One
        }
    }

    /// The click bit, or `None` for ∅.
    pub fn bit(self) -> Option<usize> {
        match self {
            Self::Zero => Some(0),
            Self::One => Some(1),
            Self::NoClick => None,
        }
    }

    pub fn is_click(self) -> bool {
        self != Self::NoClick
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("0"),
            Self::One => f.write_str("1"),
            Self::NoClick => f.write_str("-"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Round {
    pub round_id: u64,
    pub x: Setting,
    pub y: Setting,
    pub a: Outcome,
    pub b: Outcome,
    /// Photon detection time after the excitation pulse, in picoseconds.
    pub t_detect_ps: Option<u64>,
}

impl Round {
    pub fn validate(&self) -> Result<()> {
        match (self.a.is_click(), self.t_detect_ps.is_some()) {
            (true, false) => Err(Error::MalformedRound {
                round_id: self.round_id,
                reason: "click on Alice's side without a detection time".into(),
            }),
            (false, true) => Err(Error::MalformedRound {
                round_id: self.round_id,
                reason: "detection time given for a no-click outcome".into(),
            }),
            _ => Ok(()),
        }
    }

    pub fn is_double_click(&self) -> bool {
        self.a.is_click() && self.b.is_click()
    }

    /// `a ⊕ b = x·y`; false unless both parties clicked.
    pub fn wins(&self) -> bool {
        match (self.a.bit(), self.b.bit()) {
            (Some(a), Some(b)) => (a ^ b) == self.x.index() * self.y.index(),
            _ => false,
        }
    }
}

/// A block of consecutive rounds `start..end` in which Alice did not click
/// and the settings and Bob's outcome were constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoClickRun {
    pub start: u64,
    pub end: u64,
    pub x: Setting,
    pub y: Setting,
    pub b: Outcome,
}

impl NoClickRun {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn rounds(&self) -> impl Iterator<Item = Round> + '_ {
        (self.start..self.end).map(|round_id| Round {
            round_id,
            x: self.x,
            y: self.y,
            a: Outcome::NoClick,
            b: self.b,
            t_detect_ps: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Entry {
    Round(Round),
    Run(NoClickRun),
}

impl Entry {
    pub fn first_id(&self) -> u64 {
        match self {
            Entry::Round(r) => r.round_id,
            Entry::Run(r) => r.start,
        }
    }

    /// One past the last round id covered.
    pub fn end_id(&self) -> u64 {
        match self {
            Entry::Round(r) => r.round_id + 1,
            Entry::Run(r) => r.end,
        }
    }

    pub fn num_rounds(&self) -> u64 {
        self.end_id() - self.first_id()
    }
}

impl From<Round> for Entry {
    fn from(r: Round) -> Self {
        Entry::Round(r)
    }
}

/// An ordered event log: round ids strictly increase across entries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    entries: Vec<Entry>,
}

impl EventLog {
    pub fn new(entries: Vec<Entry>) -> Result<Self> {
        let mut next: Option<u64> = None;
        for e in &entries {
            if let Entry::Round(r) = e {
                r.validate()?;
            }
            if let Entry::Run(run) = e {
                if run.is_empty() || run.start > run.end {
                    return Err(Error::MalformedRound {
                        round_id: run.start,
                        reason: format!("empty no-click run {}..{}", run.start, run.end),
                    });
                }
            }
            if let Some(min) = next {
                if e.first_id() < min {
                    return Err(Error::MalformedRound {
                        round_id: e.first_id(),
                        reason: "round ids are not strictly increasing".into(),
                    });
                }
            }
            next = Some(e.end_id());
        }
        Ok(Self { entries })
    }

    pub fn from_rounds(rounds: Vec<Round>) -> Result<Self> {
        Self::new(rounds.into_iter().map(Entry::Round).collect())
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<Entry> {
        self.entries
    }

    pub fn num_rounds(&self) -> u64 {
        self.entries.iter().map(Entry::num_rounds).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Explicitly listed rounds (runs are skipped).
    pub fn explicit_rounds(&self) -> impl Iterator<Item = &Round> {
        self.entries.iter().filter_map(|e| match e {
            Entry::Round(r) => Some(r),
            Entry::Run(_) => None,
        })
    }

    /// Every round, with runs expanded.
    pub fn rounds(&self) -> impl Iterator<Item = Round> + '_ {
        self.entries.iter().flat_map(|e| -> Box<dyn Iterator<Item = Round> + '_> {
            match e {
                Entry::Round(r) => Box::new(std::iter::once(*r)),
                Entry::Run(run) => Box::new(run.rounds()),
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingCounts {
    pub rounds: u64,
    pub no_click: u64,
}

impl SettingCounts {
    pub fn clicks(&self) -> u64 {
        self.rounds - self.no_click
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountTable {
    pub n: u64,
    /// Double-click rounds inside the window.
    pub n_c: u64,
    /// Double-click rounds inside the window with `a ⊕ b = x·y`.
    pub n_wins: u64,
    /// Indexed by Alice's setting `x`.
    pub alice: [SettingCounts; 2],
    /// Indexed by Bob's setting `y`.
    pub bob: [SettingCounts; 2],
    /// Alice's clicks by outcome, over all rounds.
    pub alice_clicks_by_outcome: [u64; 2],
    /// Rounds where both clicked, regardless of the window.
    pub double_clicks_unwindowed: u64,
}

impl CountTable {
    pub fn merge(mut self, o: &Self) -> Self {
        self.n += o.n;
        self.n_c += o.n_c;
        self.n_wins += o.n_wins;
        for i in 0..2 {
            self.alice[i].rounds += o.alice[i].rounds;
            self.alice[i].no_click += o.alice[i].no_click;
            self.bob[i].rounds += o.bob[i].rounds;
            self.bob[i].no_click += o.bob[i].no_click;
            self.alice_clicks_by_outcome[i] += o.alice_clicks_by_outcome[i];
        }
        self.double_clicks_unwindowed += o.double_clicks_unwindowed;
        self
    }

    pub fn t_bar(&self) -> Option<f64> {
        (self.n_c > 0).then(|| self.n_wins as f64 / self.n_c as f64)
    }

    pub fn alice_clicks(&self) -> u64 {
        self.alice.iter().map(SettingCounts::clicks).sum()
    }

    pub fn bob_clicks(&self) -> u64 {
        self.bob.iter().map(SettingCounts::clicks).sum()
    }

    fn add_round(&mut self, r: &Round, window: Option<&WindowSpec>) -> Result<()> {
        r.validate()?;
        self.add_block(r.x, r.y, r.a, r.b, 1);
        if r.is_double_click() {
            self.double_clicks_unwindowed += 1;
            let t = r.t_detect_ps.expect("validated");
            if window.is_none_or(|w| w.contains_ps(t)) {
                self.n_c += 1;
                self.n_wins += u64::from(r.wins());
            }
        }
        Ok(())
    }

    fn add_block(&mut self, x: Setting, y: Setting, a: Outcome, b: Outcome, count: u64) {
        self.n += count;
        self.alice[x.index()].rounds += count;
        self.bob[y.index()].rounds += count;
        match a.bit() {
            Some(bit) => self.alice_clicks_by_outcome[bit] += count,
            None => self.alice[x.index()].no_click += count,
        }
        if !b.is_click() {
            self.bob[y.index()].no_click += count;
        }
    }

    fn add_entry(&mut self, e: &Entry, window: Option<&WindowSpec>) -> Result<()> {
        match e {
            Entry::Round(r) => self.add_round(r, window),
            Entry::Run(run) => {
                self.add_block(run.x, run.y, Outcome::NoClick, run.b, run.len());
                Ok(())
            }
        }
    }
}

/// Counts rounds; only double clicks whose detection time falls inside
/// `window` (when given) enter `n_c` and `n_wins`.
pub fn tally<'a>(entries: impl IntoIterator<Item = &'a Entry>, window: Option<&WindowSpec>) -> Result<CountTable> {
    let mut t = CountTable::default();
    for e in entries {
        t.add_entry(e, window)?;
    }
    Ok(t)
}

pub fn tally_rounds<'a>(rounds: impl IntoIterator<Item = &'a Round>, window: Option<&WindowSpec>) -> Result<CountTable> {
    let mut t = CountTable::default();
    for r in rounds {
        t.add_round(r, window)?;
    }
    Ok(t)
}

/// Per-bin win statistics of a histogram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BinCounts {
    pub n_c: u64,
    pub n_wins: u64,
}

/// Double-click counts per `(x, y, a, b)` cell and detection-time bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceHistogram {
    bin_width_ps: u64,
    num_bins: usize,
    /// Flattened `[x][y][a][b]`, each of length `num_bins`.
    cells: Vec<Vec<u64>>,
}

fn cell_index(x: usize, y: usize, a: usize, b: usize) -> usize {
    ((x * 2 + y) * 2 + a) * 2 + b
}

impl CoincidenceHistogram {
    pub fn bin_width_ps(&self) -> u64 {
        self.bin_width_ps
    }

    pub fn num_bins(&self) -> usize {
        self.num_bins
    }

    pub fn cell(&self, x: Setting, y: Setting, a: usize, b: usize) -> &[u64] {
        &self.cells[cell_index(x.index(), y.index(), a, b)]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().sum()
    }

    pub fn bin_start_ps(&self, k: usize) -> u64 {
        k as u64 * self.bin_width_ps
    }

    pub fn bin_center_ns(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.bin_width_ps as f64 / PS_PER_NS as f64
    }

    /// End of the last bin, in picoseconds.
    pub fn range_end_ps(&self) -> u64 {
        self.num_bins as u64 * self.bin_width_ps
    }

    pub fn bin_counts(&self) -> Vec<BinCounts> {
        let mut out = vec![BinCounts::default(); self.num_bins];
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..2 {
                    for b in 0..2 {
                        let win = (a ^ b) == x * y;
                        for (k, &c) in self.cells[cell_index(x, y, a, b)].iter().enumerate() {
                            out[k].n_c += c;
                            if win {
                                out[k].n_wins += c;
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Bins each double click by `floor(t / bin_width)`.
pub fn histogram<'a>(entries: impl IntoIterator<Item = &'a Entry>, bin_width_ps: u64) -> Result<CoincidenceHistogram> {
    if bin_width_ps == 0 {
        return Err(Error::InvalidArgument("bin width must be positive".into()));
    }
    let mut cells = vec![Vec::new(); 16];
    let mut num_bins = 0;
    for e in entries {
        let Entry::Round(r) = e else { continue };
        r.validate()?;
        let (Some(a), Some(b)) = (r.a.bit(), r.b.bit()) else { continue };
        let k = (r.t_detect_ps.expect("validated") / bin_width_ps) as usize;
        let cell: &mut Vec<u64> = &mut cells[cell_index(r.x.index(), r.y.index(), a, b)];
        if cell.len() <= k {
            cell.resize(k + 1, 0);
        }
        cell[k] += 1;
        num_bins = num_bins.max(k + 1);
    }
    for c in &mut cells {
        c.resize(num_bins, 0);
    }
    Ok(CoincidenceHistogram {
        bin_width_ps,
        num_bins,
        cells,
    })
}
