use super::channel::{apply_channel, ChannelOutput, Side};
use super::state::{DensityMatrix, KrausChannel};
use super::phi_plus;
use crate::{Error, Result};

/// Uhlmann fidelity `F(ρ, σ) = (tr|√ρ √σ|)²`, evaluated as
/// `(tr √(√ρ σ √ρ))²`.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    // Eigenvalues below the rounding floor of the spectrum are zeroed; their
    // square roots would otherwise contribute O(√ε) to the trace.
    let floor = |values: &[f64]| {
        let max = values.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        64.0 * f64::EPSILON * max * values.len() as f64
    };
    let eig_rho = rho.matrix().eigh()?;
    eig_rho.check_psd()?;
    let cut = floor(&eig_rho.values);
    let sqrt_rho = eig_rho.reconstruct_with(|l| if l > cut { l.sqrt() } else { 0.0 });
    let inner = &(&sqrt_rho * sigma.matrix()) * &sqrt_rho;
    let eig = inner.eigh()?;
    eig.check_psd()?;
    let cut = floor(&eig.values);
    let root_trace: f64 = eig.values.iter().filter(|&&l| l > cut).map(|l| l.sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// Choi operator `(id ⊗ E)[Φ⁺]` of a qubit-input channel, together with its
/// trace (the channel's success probability on `Φ⁺`).
pub fn choi_state(ch: &KrausChannel) -> Result<ChannelOutput> {
    if ch.dim_in() != 2 {
        return Err(Error::InvalidArgument(format!(
            "Choi state needs a qubit input, channel has input dimension {}",
            ch.dim_in()
        )));
    }
    apply_channel(ch, &phi_plus(), Side::Bob)
}

/// Conditional Choi fidelity of a qubit channel with the identity:
/// `⟨Φ⁺|(id ⊗ E)[Φ⁺]|Φ⁺⟩ / tr (id ⊗ E)[Φ⁺]`. For trace-preserving channels
/// the denominator is one.
pub fn choi_fidelity_to_identity(ch: &KrausChannel) -> Result<f64> {
    if ch.dim_in() != 2 || ch.dim_out() != 2 {
        return Err(Error::InvalidArgument(format!(
            "Choi fidelity to the identity is defined for qubit channels, got {}->{}",
            ch.dim_in(),
            ch.dim_out()
        )));
    }
    let out = choi_state(ch)?;
    let state = out
        .state
        .ok_or_else(|| Error::InvalidArgument("channel never succeeds on Φ⁺".into()))?;
    Ok(state.expectation(phi_plus().matrix())?.re.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::random_matrix;
    use crate::linalg::{CMatrix, C0};
    use crate::quantum::state::pauli_z;
    use nalgebra::{DMatrix, SymmetricEigen};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> DensityMatrix {
        let g = random_matrix(rng, dim, rank);
        DensityMatrix::from_unnormalized(&(&g * &g.adjoint())).unwrap()
    }

    fn to_nalgebra(m: &CMatrix) -> DMatrix<Complex64> {
        DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
    }

    // Independent route: nalgebra eigendecomposition for the square roots and
    // an SVD for the trace norm of √ρ√σ.
    fn oracle_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
        let sqrt = |m: &CMatrix| {
            let eig = SymmetricEigen::new(to_nalgebra(m));
            let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)));
            &eig.eigenvectors * d * eig.eigenvectors.adjoint()
        };
        let prod = sqrt(rho.matrix()) * sqrt(sigma.matrix());
        let tn: f64 = prod.svd(false, false).singular_values.iter().sum();
        tn * tn
    }

    #[test]
    fn fidelity_with_itself_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for rank in 1..=4 {
            let rho = random_state(&mut rng, 4, rank);
            assert!((uhlmann_fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9, "rank {rank}");
        }
    }

    #[test]
    fn pure_state_fidelity_is_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let psi = random_matrix(&mut rng, 3, 1).col(0);
            let phi = random_matrix(&mut rng, 3, 1).col(0);
            let rho = DensityMatrix::from_pure(&psi).unwrap();
            let sigma = DensityMatrix::from_pure(&phi).unwrap();
            let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let overlap: Complex64 = psi.iter().zip(&phi).map(|(a, b)| a.conj() * b).sum();
            let expected = overlap.norm_sqr() / (norm(&psi) * norm(&phi));
            assert!((uhlmann_fidelity(&rho, &sigma).unwrap() - expected).abs() < 1e-7);
        }
    }

    #[test]
    fn random_mixed_states_match_spectral_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let rho = random_state(&mut rng, 4, 4);
            let sigma = random_state(&mut rng, 4, 4);
            let f = uhlmann_fidelity(&rho, &sigma).unwrap();
            assert!((f - oracle_fidelity(&rho, &sigma)).abs() < 1e-12);
            let g = uhlmann_fidelity(&sigma, &rho).unwrap();
            assert!((f - g).abs() < 1e-12, "symmetry");
        }
    }

    #[test]
    fn fidelity_invariant_under_identical_ancilla() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_state(&mut rng, 2, 2);
        let sigma = random_state(&mut rng, 2, 2);
        let anc = random_state(&mut rng, 3, 2);
        let f = uhlmann_fidelity(&rho, &sigma).unwrap();
        let f_ext = uhlmann_fidelity(&rho.kron(&anc).unwrap(), &sigma.kron(&anc).unwrap()).unwrap();
        assert!((f - f_ext).abs() < 1e-10);
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(2).unwrap();
        let b = DensityMatrix::maximally_mixed(4).unwrap();
        assert!(uhlmann_fidelity(&a, &b).is_err());
    }

    #[test]
    fn choi_fidelity_of_identity_and_sigma_z() {
        assert!((choi_fidelity_to_identity(&KrausChannel::identity(2)).unwrap() - 1.0).abs() < 1e-15);
        let z = KrausChannel::unitary(pauli_z()).unwrap();
        assert!(choi_fidelity_to_identity(&z).unwrap().abs() < 1e-15);
    }

    // Choi operator built entry by entry: ½ Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|).
    fn choi_by_blocks(ch: &KrausChannel) -> CMatrix {
        let mut choi = CMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let mut eij = CMatrix::zeros(2, 2);
                eij[(i, j)] = Complex64::new(1.0, 0.0);
                let mut outer = CMatrix::zeros(2, 2);
                outer[(i, j)] = Complex64::new(0.5, 0.0);
                choi = &choi + &outer.kron(&ch.apply_to(&eij).unwrap());
            }
        }
        choi
    }

    #[test]
    fn amplitude_damping_choi_fidelity() {
        let ch = KrausChannel::amplitude_damping(0.3).unwrap();
        let choi = choi_by_blocks(&ch);
        let phi = [Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0), C0, C0, Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)];
        let mut expected = C0;
        for i in 0..4 {
            for j in 0..4 {
                expected += phi[i].conj() * choi[(i, j)] * phi[j];
            }
        }
        // (1 + √0.7)² / 4
        assert!((expected.re - 0.843_330_013_267_037_8).abs() < 1e-12);
        let f = choi_fidelity_to_identity(&ch).unwrap();
        assert!((f - expected.re).abs() < 1e-14);
    }

    #[test]
    fn unitary_choi_fidelity_is_trace_overlap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let g = random_matrix(&mut rng, 2, 2);
            // Unitary from the eigenvectors of a random Hermitian matrix.
            let u = g.hermitian_part().eigh().unwrap().vectors;
            let f = choi_fidelity_to_identity(&KrausChannel::unitary(u.clone()).unwrap()).unwrap();
            assert!((f - u.trace().norm_sqr() / 4.0).abs() < 1e-13);
        }
    }

    #[test]
    fn conditional_choi_fidelity_renormalizes() {
        // A lossy identity keeps conditional fidelity one.
        let lossy = KrausChannel::filter(CMatrix::identity(2).scale_real(0.5)).unwrap();
        assert!((choi_fidelity_to_identity(&lossy).unwrap() - 1.0).abs() < 1e-14);
        assert!((choi_state(&lossy).unwrap().success_probability - 0.25).abs() < 1e-15);
        let bad = KrausChannel::identity(3);
        assert!(choi_fidelity_to_identity(&bad).is_err());
    }
}
