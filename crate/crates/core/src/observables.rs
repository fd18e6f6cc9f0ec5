//! Wootters concurrence, magnetization and energy.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::mps::{DensityMatrix4, MpsError, MpsState};
use crate::spin_model::{bond_hamiltonian, pauli, Axis, CouplingParams, Mat4};

/// A density matrix with an eigenvalue below `-CORRUPT_TOL` is rejected;
/// anything above is clamped to a non-negative spectrum.
pub const CORRUPT_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("density matrix has eigenvalue {0:e}; input is corrupt")]
    CorruptDensityMatrix(f64),
    #[error(transparent)]
    Mps(#[from] MpsError),
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ConcurrenceValue {
    pub value: f64,
    /// Square roots of the eigenvalues of `ρ (σʸ⊗σʸ) ρ* (σʸ⊗σʸ)`, descending.
    pub lambdas: [f64; 4],
}

/// `σʸ⊗σʸ` in the two-site basis.
pub fn spin_flip() -> Mat4 {
    let y = pauli(Axis::Y);
    y.kronecker(&y)
}

/// Eigenvalues of ρ at or below this are treated as exact zeros.
const RANK_TOL: f64 = 1e-14;

/// Wootters concurrence `max(λ1 - λ2 - λ3 - λ4, 0)`.
///
/// The complex conjugate is taken entrywise in the `{↑↑, ↑↓, ↓↑, ↓↓}` basis.
/// With `ρ = W W†` from the spectral decomposition of ρ, the `λᵢ` (square roots
/// of the eigenvalues of `ρ (σʸ⊗σʸ) ρ* (σʸ⊗σʸ)`) are the singular values of
/// `τ = Wᵀ (σʸ⊗σʸ) W`. This avoids taking square roots of round-off in the
/// spectrum of the non-Hermitian product.
pub fn concurrence(rho: &DensityMatrix4) -> Result<ConcurrenceValue, ObservableError> {
    let m = rho.matrix();
    let eig = SymmetricEigen::new((m + m.adjoint()) * C64::from(0.5));
    let mut columns = Vec::with_capacity(4);
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        if e < -CORRUPT_TOL {
            return Err(ObservableError::CorruptDensityMatrix(e));
        }
        if e > RANK_TOL {
            columns.push((k, e.sqrt()));
        }
    }
    let mut lambdas = [0.0f64; 4];
    if !columns.is_empty() {
        let w = DMatrix::from_fn(4, columns.len(), |i, j| {
            let (k, root) = columns[j];
            eig.eigenvectors[(i, k)] * root
        });
        let flip = DMatrix::from_fn(4, 4, |i, j| spin_flip()[(i, j)]);
        let tau = w.transpose() * flip * &w;
        for (slot, s) in lambdas.iter_mut().zip(tau.singular_values().iter()) {
            *slot = *s;
        }
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let value = (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0);
    Ok(ConcurrenceValue { value, lambdas })
}

/// `C_{b,b+1}` for every bond `b`.
pub fn concurrence_profile(state: &MpsState) -> Result<Vec<f64>, ObservableError> {
    concurrences(&state.two_site_rdms()?)
}

pub fn concurrences(rdms: &[DensityMatrix4]) -> Result<Vec<f64>, ObservableError> {
    rdms.iter().map(|r| concurrence(r).map(|c| c.value)).collect()
}

/// `⟨σᶻ_i⟩` for every site.
pub fn magnetization_profile(state: &MpsState) -> Result<Vec<f64>, ObservableError> {
    (0..state.n_sites())
        .map(|i| state.site_magnetization(i).map_err(ObservableError::from))
        .collect()
}

/// `⟨H⟩` summed over all bonds.
pub fn energy(state: &MpsState, params: &CouplingParams) -> Result<f64, ObservableError> {
    Ok(energy_from_rdms(&state.two_site_rdms()?, params))
}

pub fn energy_from_rdms(rdms: &[DensityMatrix4], params: &CouplingParams) -> f64 {
    let h = bond_hamiltonian(params);
    rdms.iter().map(|r| r.expectation(h.matrix()).re).sum()
}
