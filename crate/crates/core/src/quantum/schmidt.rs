use num_complex::Complex64;

use super::channel::{apply_channel, Side};
use super::phi_plus;
use super::state::{DensityMatrix, KrausChannel};
use crate::linalg::{CMatrix, C0, C1};
use crate::{Error, Result};

/// Eigenvalues of `ρ` at or below this are dropped from the purification.
const RANK_CUTOFF: f64 = 1e-14;

/// Purification `|Ψ⟩` of a state on `H_A ⊗ C²` with an ancilla `A'`, stored
/// in `A ⊗ A' ⊗ B` order.
#[derive(Debug, Clone)]
pub struct Purification {
    pub vector: Vec<Complex64>,
    pub dim_a: usize,
    pub dim_ancilla: usize,
}

impl Purification {
    /// `tr_{A'} |Ψ⟩⟨Ψ|` back in `A ⊗ B` order.
    pub fn reduced_state(&self) -> Result<DensityMatrix> {
        let (da, r) = (self.dim_a, self.dim_ancilla);
        let psi = |a: usize, i: usize, b: usize| self.vector[(a * r + i) * 2 + b];
        let m = CMatrix::from_fn(2 * da, 2 * da, |row, col| {
            let (a, b, a2, b2) = (row / 2, row % 2, col / 2, col % 2);
            (0..r).map(|i| psi(a, i, b) * psi(a2, i, b2).conj()).sum()
        });
        DensityMatrix::from_unnormalized(&m)
    }
}

/// `|Ψ⟩ = λ0 |ξ0⟩|b0⟩ + λ1 |ξ1⟩|b1⟩` with `ξ_k ∈ H_A ⊗ H_A'`.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    pub lambda0: f64,
    pub lambda1: f64,
    pub xi: [Vec<Complex64>; 2],
    pub bob_basis: [[Complex64; 2]; 2],
    pub purification: Purification,
}

impl SchmidtForm {
    /// `Σ λ_k |ξ_k⟩|b_k⟩` in `A ⊗ A' ⊗ B` order.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let lambdas = [self.lambda0, self.lambda1];
        let d = self.xi[0].len();
        let mut out = vec![C0; 2 * d];
        for k in 0..2 {
            for (j, xi) in self.xi[k].iter().enumerate() {
                for b in 0..2 {
                    out[j * 2 + b] += lambdas[k] * xi * self.bob_basis[k][b];
                }
            }
        }
        out
    }
}

/// Purifies `rho` (Bob's factor must be a qubit) and Schmidt-decomposes the
/// purification across `AA' | B`.
pub fn schmidt_decompose(rho: &DensityMatrix) -> Result<SchmidtForm> {
    let dim = rho.dim();
    if dim % 2 != 0 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: dim,
        });
    }
    let da = dim / 2;
    let eig = rho.matrix().eigh()?;
    let kept: Vec<usize> = (0..dim).rev().filter(|&k| eig.values[k] > RANK_CUTOFF).collect();
    let r = kept.len();
    if da * r < 2 {
        return Err(Error::InvalidArgument(
            "purification of a pure Bob-only state has no room for a second Schmidt vector".into(),
        ));
    }
    // M[(a·r + i), b] = √p_i ⟨a b|e_i⟩; row-major M is the purification.
    let m = CMatrix::from_fn(da * r, 2, |row, b| {
        let (a, i) = (row / r, row % r);
        let k = kept[i];
        eig.vectors[(a * 2 + b, k)] * eig.values[k].sqrt()
    });
    let purification = Purification {
        vector: m.as_slice().to_vec(),
        dim_a: da,
        dim_ancilla: r,
    };

    let gram = (&m.adjoint() * &m).eigh()?;
    let w = [gram.vectors.col(1), gram.vectors.col(0)];
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        (0..m.rows()).map(|row| m[(row, 0)] * v[0] + m[(row, 1)] * v[1]).collect()
    };
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // M = Σ_k (M w_k) w_k† holds for any orthonormal w, so λ_k and ξ_k are
    // read off M w_k rather than from the squared spectrum.
    let t0 = apply(&w[0]);
    let mut t1 = apply(&w[1]);
    let lambda0 = norm(&t0);
    let xi0: Vec<Complex64> = t0.iter().map(|z| z / lambda0).collect();
    let overlap: Complex64 = xi0.iter().zip(&t1).map(|(a, b)| a.conj() * b).sum();
    for (z, x) in t1.iter_mut().zip(&xi0) {
        *z -= overlap * x;
    }
    let lambda1 = norm(&t1);
    let xi1 = if lambda1 > 1e-14 {
        t1.iter().map(|z| z / lambda1).collect()
    } else {
        orthogonal_unit(&xi0)
    };
    // Normalize away rounding so that λ0² + λ1² = 1.
    let total = lambda0.hypot(lambda1);
    Ok(SchmidtForm {
        lambda0: lambda0 / total,
        lambda1: if lambda1 > 1e-14 { lambda1 / total } else { 0.0 },
        xi: [xi0, xi1],
        bob_basis: [[w[0][0].conj(), w[0][1].conj()], [w[1][0].conj(), w[1][1].conj()]],
        purification,
    })
}

/// Unit vector orthogonal to `v`, by Gram-Schmidt on the standard basis.
fn orthogonal_unit(v: &[Complex64]) -> Vec<Complex64> {
    let mut best = Vec::new();
    let mut best_norm = -1.0;
    for j in 0..v.len() {
        let mut e = vec![C0; v.len()];
        e[j] = C1;
        let ov = v[j].conj();
        for (z, x) in e.iter_mut().zip(v) {
            *z -= ov * x;
        }
        let n = e.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > best_norm {
            best_norm = n;
            best = e.iter().map(|z| z / n).collect();
        }
    }
    best
}

/// The map `V_A` preparing the Schmidt-decomposed state from `Φ⁺`.
#[derive(Debug, Clone)]
pub struct InjectionMap {
    /// Qubit to `H_A` map, one Kraus operator per ancilla basis state.
    pub channel: KrausChannel,
    /// Filter `K = diag(1, λ1/λ0)` in the Schmidt basis.
    pub filter: CMatrix,
    /// Success probability on `Φ⁺`, measured by applying the map.
    pub success_probability: f64,
    /// `(1 + (λ1/λ0)²)/2`.
    pub success_probability_direct_formula: f64,
    /// `1/2 + (λ1/λ0)/2`. Kept for comparison; it differs from the direct
    /// value whenever `0 < λ1 < λ0`.
    pub success_probability_stated_formula: f64,
}

/// With `v|k⟩ = |ξ_k⟩` and `u|k⟩ = |b_k⟩`,
/// `|Ψ⟩ = √2 λ0 (v K uᵀ ⊗ 1)|Φ⁺⟩`; the ancilla is traced out by splitting
/// `v K uᵀ` into Kraus operators `(1_A ⊗ ⟨j|) v K uᵀ`.
pub fn build_injection_map(sf: &SchmidtForm) -> Result<InjectionMap> {
    if !(sf.lambda0 > 0.0) {
        return Err(Error::InvalidArgument("leading Schmidt coefficient is zero".into()));
    }
    let ratio = sf.lambda1 / sf.lambda0;
    let filter = CMatrix::diag_real(&[1.0, ratio]);
    let d = sf.xi[0].len();
    let v = CMatrix::from_fn(d, 2, |j, k| sf.xi[k][j]);
    let u = CMatrix::from_fn(2, 2, |b, k| sf.bob_basis[k][b]);
    let w = &(&v * &filter) * &u.transpose();
    let (da, r) = (sf.purification.dim_a, sf.purification.dim_ancilla);
    let ops = (0..r)
        .map(|j| CMatrix::from_fn(da, 2, |a, q| w[(a * r + j, q)]))
        .collect();
    let channel = KrausChannel::new(ops)?;
    let out = apply_channel(&channel, &phi_plus(), Side::Alice)?;
    Ok(InjectionMap {
        channel,
        filter,
        success_probability: out.success_probability,
        success_probability_direct_formula: (1.0 + ratio * ratio) / 2.0,
        success_probability_stated_formula: 0.5 + 0.5 * ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::random_matrix;
    use crate::quantum::fidelity::uhlmann_fidelity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn random_pure(rng: &mut ChaCha8Rng, dim: usize) -> DensityMatrix {
        DensityMatrix::from_pure(&random_matrix(rng, dim, 1).col(0)).unwrap()
    }

    fn assert_reconstructs(sf: &SchmidtForm) {
        let rec = sf.reconstruct();
        let err = rec
            .iter()
            .zip(&sf.purification.vector)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "reconstruction error {err}");
    }

    #[test]
    fn phi_plus_is_maximally_entangled() {
        let sf = schmidt_decompose(&phi_plus()).unwrap();
        assert!((sf.lambda0 - FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((sf.lambda1 - FRAC_1_SQRT_2).abs() < 1e-12);
        let map = build_injection_map(&sf).unwrap();
        assert!(map.filter.max_abs_diff(&CMatrix::identity(2)) < 1e-12);
        assert!((map.success_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_has_single_term() {
        let plus = [C1 * FRAC_1_SQRT_2, C1 * FRAC_1_SQRT_2];
        let psi = [C1 * plus[0], C1 * plus[1], C0, C0];
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let sf = schmidt_decompose(&rho).unwrap();
        assert!((sf.lambda0 - 1.0).abs() < 1e-12);
        assert_eq!(sf.lambda1, 0.0);
        assert_reconstructs(&sf);
        let map = build_injection_map(&sf).unwrap();
        assert!(map.filter.max_abs_diff(&CMatrix::diag_real(&[1.0, 0.0])) < 1e-12);
        assert!((map.success_probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn unequal_amplitudes_success_probability() {
        let (l0, l1) = ((2.0f64 / 3.0).sqrt(), (1.0f64 / 3.0).sqrt());
        let psi = [C0, C1 * l0, C1 * l1, C0];
        let sf = schmidt_decompose(&DensityMatrix::from_pure(&psi).unwrap()).unwrap();
        let map = build_injection_map(&sf).unwrap();
        // Oracle: ‖(K ⊗ 1)|Φ⁺⟩‖² = (1 + (λ1/λ0)²)/2 = 3/4.
        let k = CMatrix::diag_real(&[1.0, l1 / l0]).kron(&CMatrix::identity(2));
        let direct = (&(&k * phi_plus().matrix()) * &k.adjoint()).trace().re;
        assert!((map.success_probability - direct).abs() < 1e-12);
        assert!((direct - 0.75).abs() < 1e-12);
        assert!((map.success_probability_stated_formula - (0.5 + 0.5 * FRAC_1_SQRT_2)).abs() < 1e-12);
    }

    #[test]
    fn random_pure_two_qubit_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let rho = random_pure(&mut rng, 4);
            let sf = schmidt_decompose(&rho).unwrap();
            assert!(sf.lambda0 >= sf.lambda1 && sf.lambda1 >= 0.0);
            assert!((sf.lambda0.powi(2) + sf.lambda1.powi(2) - 1.0).abs() < 1e-12);
            assert_reconstructs(&sf);
            let map = build_injection_map(&sf).unwrap();
            let out = apply_channel(&map.channel, &phi_plus(), Side::Alice).unwrap();
            let f = uhlmann_fidelity(&out.state.unwrap(), &rho).unwrap();
            assert!(f > 1.0 - 1e-10, "fidelity {f}");
            assert!(map.success_probability >= 0.5 - 1e-12);
            assert!((map.success_probability - map.success_probability_direct_formula).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_states_round_trip_through_purification() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let da = 1 + rng.random_range(1..4);
            let rank = 1 + rng.random_range(0..2);
            let g = random_matrix(&mut rng, 2 * da, rank);
            let rho = DensityMatrix::from_unnormalized(&(&g * &g.adjoint())).unwrap();
            let sf = schmidt_decompose(&rho).unwrap();
            assert_reconstructs(&sf);
            let back = sf.purification.reduced_state().unwrap();
            assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-12);
            let map = build_injection_map(&sf).unwrap();
            let out = apply_channel(&map.channel, &phi_plus(), Side::Alice).unwrap();
            assert!(out.state.unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-10);
            assert!(map.success_probability >= 0.5 - 1e-12);
        }
    }

    #[test]
    fn odd_dimension_rejected() {
        let rho = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(schmidt_decompose(&rho).is_err());
    }
}
