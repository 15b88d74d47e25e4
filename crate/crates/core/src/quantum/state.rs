use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, C0, C1, CI, MAX_DIM};
use crate::{Error, Result, HERMITIAN_TOLERANCE, TRACE_TOLERANCE};

/// A normalized density operator. Sub-normalized operators (channel outputs
/// before renormalization) are kept as plain [`CMatrix`] values.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch {
                expected: mat.rows(),
                found: mat.cols(),
            });
        }
        if mat.rows() == 0 || mat.rows() > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "state dimension {} outside 1..={MAX_DIM}",
                mat.rows()
            )));
        }
        let herm = mat.hermiticity_error();
        if herm > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian(herm));
        }
        let mat = mat.hermitian_part();
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::InvalidTrace(tr));
        }
        mat.eigh()?.check_psd()?;
        Ok(Self { mat })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) non-zero vector.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let unit: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Self::new(CMatrix::outer(&unit, &unit))
    }

    /// Renormalizes a PSD operator with positive trace.
    pub fn from_unnormalized(mat: &CMatrix) -> Result<Self> {
        let tr = mat.trace().re;
        if !(tr > 0.0) {
            return Err(Error::InvalidTrace(tr));
        }
        Self::new(mat.hermitian_part().scale_real(1.0 / tr))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(CMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn kron(&self, other: &Self) -> Result<Self> {
        Self::new(self.mat.kron(&other.mat))
    }

    pub fn purity(&self) -> f64 {
        self.mat.trace_product(&self.mat).re
    }

    /// `tr(ρ O)`.
    pub fn expectation(&self, op: &CMatrix) -> Result<Complex64> {
        if op.rows() != self.dim() || op.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.rows(),
            });
        }
        Ok(self.mat.trace_product(op))
    }

    /// Reduced state of one factor of `H_1 ⊗ H_2`.
    pub fn reduced(&self, dims: (usize, usize), keep_first: bool) -> Result<Self> {
        Self::new(self.mat.partial_trace(dims, keep_first)?)
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_rows(&[&[C0, C1], &[C1, C0]])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_rows(&[&[C0, -CI], &[CI, C0]])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::diag_real(&[1.0, -1.0])
}

/// `n·σ` for a Bloch vector `n`.
pub fn bloch_operator(n: [f64; 3]) -> CMatrix {
    let x = pauli_x().scale_real(n[0]);
    let y = pauli_y().scale_real(n[1]);
    let z = pauli_z().scale_real(n[2]);
    &(&x + &y) + &z
}

/// A measurement described by one PSD element per outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidArgument("POVM without elements".into()))?;
        let dim = first.rows();
        let mut total = CMatrix::zeros(dim, dim);
        for e in &elements {
            if !e.is_square() || e.rows() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.rows(),
                });
            }
            let herm = e.hermiticity_error();
            if herm > HERMITIAN_TOLERANCE {
                return Err(Error::NotHermitian(herm));
            }
            e.eigh()?.check_psd()?;
            total = &total + e;
        }
        let dev = total.max_abs_diff(&CMatrix::identity(dim));
        if dev > TRACE_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "POVM elements sum to identity only within {dev:.3e}"
            )));
        }
        Ok(Self {
            elements: elements.iter().map(CMatrix::hermitian_part).collect(),
        })
    }

    /// Two-outcome projective qubit measurement along the Bloch direction `n`;
    /// outcome 0 is the `+1` eigenprojector `(1 + n·σ)/2`.
    pub fn projective(n: [f64; 3]) -> Result<Self> {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if len == 0.0 {
            return Err(Error::InvalidArgument("zero Bloch vector".into()));
        }
        let unit = [n[0] / len, n[1] / len, n[2] / len];
        Self::unsharp(unit, 1.0)
    }

    /// `(1 ± η n·σ)/2`, a projective measurement mixed with white noise.
    pub fn unsharp(n: [f64; 3], visibility: f64) -> Result<Self> {
        let id = CMatrix::identity(2);
        let op = bloch_operator(n).scale_real(visibility);
        Self::new(vec![
            (&id + &op).scale_real(0.5),
            (&id - &op).scale_real(0.5),
        ])
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn num_outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn element(&self, outcome: usize) -> &CMatrix {
        &self.elements[outcome]
    }
}

/// A completely positive, trace non-increasing map in Kraus form.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("channel without Kraus operators".into()))?;
        let (dout, din) = (first.rows(), first.cols());
        if din > MAX_DIM || dout > MAX_DIM {
            return Err(Error::InvalidArgument(format!(
                "Kraus operator shape {dout}x{din} exceeds {MAX_DIM}"
            )));
        }
        for k in &ops {
            if k.rows() != dout || k.cols() != din {
                return Err(Error::DimensionMismatch {
                    expected: din,
                    found: k.cols(),
                });
            }
        }
        let ch = Self { ops };
        let worst = ch.completeness().eigh()?.values.last().copied().unwrap_or(0.0);
        if worst > 1.0 + TRACE_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "Kraus operators increase trace (largest eigenvalue of ΣK†K is {worst})"
            )));
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            ops: vec![CMatrix::identity(dim)],
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        let dev = (&u.adjoint() * &u).max_abs_diff(&CMatrix::identity(u.cols()));
        if !u.is_square() || dev > TRACE_TOLERANCE {
            return Err(Error::InvalidArgument("operator is not unitary".into()));
        }
        Self::new(vec![u])
    }

    /// Single-operator filter `ρ ↦ KρK†`.
    pub fn filter(k: CMatrix) -> Result<Self> {
        Self::new(vec![k])
    }

    /// Qubit depolarizing channel `ρ ↦ (1-p)ρ + p·1/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        check_probability("depolarizing parameter", p)?;
        Self::new(vec![
            CMatrix::identity(2).scale_real((1.0 - 0.75 * p).sqrt()),
            pauli_x().scale_real((p / 4.0).sqrt()),
            pauli_y().scale_real((p / 4.0).sqrt()),
            pauli_z().scale_real((p / 4.0).sqrt()),
        ])
    }

    /// Qubit phase-flip channel `ρ ↦ (1-p)ρ + p ZρZ`; coherences shrink by `1-2p`.
    pub fn dephasing(p: f64) -> Result<Self> {
        check_probability("dephasing parameter", p)?;
        Self::new(vec![
            CMatrix::identity(2).scale_real((1.0 - p).sqrt()),
            pauli_z().scale_real(p.sqrt()),
        ])
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_probability("damping parameter", gamma)?;
        Self::new(vec![
            CMatrix::diag_real(&[1.0, (1.0 - gamma).sqrt()]),
            CMatrix::from_real_rows(&[&[0.0, gamma.sqrt()], &[0.0, 0.0]]),
        ])
    }

    /// Rotation `exp(-i θ n·σ / 2)` about the Bloch axis `n`.
    pub fn rotation(axis: [f64; 3], angle: f64) -> Result<Self> {
        Self::unitary(rotation_unitary(axis, angle)?)
    }

    /// `after ∘ before`.
    pub fn compose(after: &Self, before: &Self) -> Result<Self> {
        if after.dim_in() != before.dim_out() {
            return Err(Error::DimensionMismatch {
                expected: after.dim_in(),
                found: before.dim_out(),
            });
        }
        let mut ops = Vec::with_capacity(after.ops.len() * before.ops.len());
        for a in &after.ops {
            for b in &before.ops {
                ops.push(a * b);
            }
        }
        Self::new(ops)
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn dim_in(&self) -> usize {
        self.ops[0].cols()
    }

    pub fn dim_out(&self) -> usize {
        self.ops[0].rows()
    }

    /// `Σ K†K`.
    pub fn completeness(&self) -> CMatrix {
        let d = self.dim_in();
        self.ops
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| &acc + &(&k.adjoint() * k))
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.completeness()
            .max_abs_diff(&CMatrix::identity(self.dim_in()))
            <= TRACE_TOLERANCE
    }

    /// `Σ K X K†` on an operator of matching input dimension.
    pub fn apply_to(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.rows() != self.dim_in() || x.cols() != self.dim_in() {
            return Err(Error::DimensionMismatch {
                expected: self.dim_in(),
                found: x.rows(),
            });
        }
        let d = self.dim_out();
        Ok(self
            .ops
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| &acc + &(&(k * x) * &k.adjoint())))
    }
}

pub fn rotation_unitary(axis: [f64; 3], angle: f64) -> Result<CMatrix> {
    let len = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if len == 0.0 {
        return Err(Error::InvalidArgument("zero rotation axis".into()));
    }
    let n = [axis[0] / len, axis[1] / len, axis[2] / len];
    let (s, c) = (angle / 2.0).sin_cos();
    let id = CMatrix::identity(2).scale_real(c);
    let rot = bloch_operator(n).scale(Complex64::new(0.0, -s));
    Ok(&id + &rot)
}

fn check_probability(what: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} {p} outside [0, 1]")))
    }
}

/// Serializable description of a qubit channel.
///
/// The pieces are applied in the order: rotation, dephasing, depolarizing,
/// amplitude damping, then the optional explicit Kraus list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    pub rotation_axis: [f64; 3],
    pub rotation_angle: f64,
    pub dephasing: f64,
    pub depolarizing: f64,
    pub amplitude_damping: f64,
    /// Extra Kraus operators as `[[[re, im]; 2]; 2]`.
    pub kraus: Option<Vec<[[[f64; 2]; 2]; 2]>>,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            rotation_axis: [0.0, 0.0, 1.0],
            rotation_angle: 0.0,
            dephasing: 0.0,
            depolarizing: 0.0,
            amplitude_damping: 0.0,
            kraus: None,
        }
    }
}

impl ChannelSpec {
    pub fn build(&self) -> Result<KrausChannel> {
        let mut ch = KrausChannel::rotation(self.rotation_axis, self.rotation_angle)?;
        if self.dephasing > 0.0 {
            ch = KrausChannel::compose(&KrausChannel::dephasing(self.dephasing)?, &ch)?;
        }
        if self.depolarizing > 0.0 {
            ch = KrausChannel::compose(&KrausChannel::depolarizing(self.depolarizing)?, &ch)?;
        }
        if self.amplitude_damping > 0.0 {
            ch = KrausChannel::compose(
                &KrausChannel::amplitude_damping(self.amplitude_damping)?,
                &ch,
            )?;
        }
        if let Some(raw) = &self.kraus {
            let ops = raw
                .iter()
                .map(|m| {
                    CMatrix::from_fn(2, 2, |i, j| Complex64::new(m[i][j][0], m[i][j][1]))
                })
                .collect();
            ch = KrausChannel::compose(&KrausChannel::new(ops)?, &ch)?;
        }
        Ok(ch)
    }
}
