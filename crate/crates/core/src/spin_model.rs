//! Pauli operators, the XXZ bond Hamiltonian and its exponential.
//!
//! Every two-site matrix in this crate uses the basis ordering
//! `{↑↑, ↑↓, ↓↑, ↓↓}` with `↑` as the first local basis vector, so the index
//! of a two-site basis state is `2 * s_left + s_right` with `↑ = 0, ↓ = 1`.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64 as C64;
use thiserror::Error;

pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

/// Hermiticity threshold for matrices handed to [`bond_gate`].
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("chain needs at least 2 sites, got {0}")]
    TooFewSites(usize),
    #[error("coupling {name} must be finite, got {value}")]
    NonFiniteCoupling { name: &'static str, value: f64 },
    #[error("bond operator is not Hermitian (max |h - h^dag| = {0:e})")]
    NotHermitian(f64),
    #[error("gate time step must be finite, got {0}")]
    NonFiniteTau(f64),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Local spin state. `Up` is the first basis vector.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    /// Eigenvalue of σᶻ.
    pub fn sz(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

/// σᶻ eigenvalue of local basis index 0 or 1.
pub(crate) fn sz_of_index(s: usize) -> i32 {
    1 - 2 * s as i32
}

/// Standard Pauli matrix (eigenvalues ±1).
pub fn pauli(axis: Axis) -> Mat2 {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    match axis {
        Axis::X => Mat2::new(z, one, one, z),
        Axis::Y => Mat2::new(z, -i, i, z),
        Axis::Z => Mat2::new(one, z, z, -one),
    }
}

/// Normalization of the spin operators in the Hamiltonian.
///
/// `Pauli` uses σ with eigenvalues ±1. `SpinHalf` uses `S = σ/2`, which
/// divides every bond term by 4 and stretches all time scales by 4.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum SpinOperators {
    #[default]
    Pauli,
    SpinHalf,
}

impl SpinOperators {
    /// Factor multiplying `σσ` products.
    pub fn scale(self) -> f64 {
        match self {
            SpinOperators::Pauli => 1.0,
            SpinOperators::SpinHalf => 0.25,
        }
    }
}

/// Couplings of the open XXZ chain
/// `H = Σ_i J_xy (σˣσˣ + σʸσʸ) + J_z σᶻσᶻ` on `n_sites` spins.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct CouplingParams {
    pub j_xy: f64,
    pub j_z: f64,
    pub n_sites: usize,
    pub operators: SpinOperators,
}

impl CouplingParams {
    pub fn new(j_xy: f64, j_z: f64, n_sites: usize) -> Result<Self, ModelError> {
        if n_sites < 2 {
            return Err(ModelError::TooFewSites(n_sites));
        }
        if !j_xy.is_finite() {
            return Err(ModelError::NonFiniteCoupling { name: "j_xy", value: j_xy });
        }
        if !j_z.is_finite() {
            return Err(ModelError::NonFiniteCoupling { name: "j_z", value: j_z });
        }
        Ok(Self { j_xy, j_z, n_sites, operators: SpinOperators::Pauli })
    }

    pub fn with_operators(self, operators: SpinOperators) -> Self {
        Self { operators, ..self }
    }

    /// `(j_xy, j_z)` multiplying Pauli products once the operator
    /// normalization is folded in.
    pub fn pauli_couplings(&self) -> (f64, f64) {
        let k = self.operators.scale();
        (self.j_xy * k, self.j_z * k)
    }

    /// Isotropic in-plane coupling `j_xy = 1`.
    pub fn xxz(j_z: f64, n_sites: usize) -> Result<Self, ModelError> {
        Self::new(1.0, j_z, n_sites)
    }

    pub fn n_bonds(&self) -> usize {
        self.n_sites - 1
    }
}

/// Hermitian operator on two adjacent spins.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BondOperator {
    matrix: Mat4,
}

impl BondOperator {
    /// Wraps an arbitrary 4×4 matrix, rejecting non-Hermitian input.
    pub fn from_matrix(matrix: Mat4) -> Result<Self, ModelError> {
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(ModelError::NotHermitian(dev));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }
}

pub(crate) fn hermitian_deviation(m: &Mat4) -> f64 {
    let mut dev = 0.0f64;
    for r in 0..4 {
        for c in 0..4 {
            dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    dev
}

/// `j_xy (σˣ⊗σˣ + σʸ⊗σʸ) + j_z σᶻ⊗σᶻ`.
pub fn bond_hamiltonian(params: &CouplingParams) -> BondOperator {
    let sx = pauli(Axis::X);
    let sy = pauli(Axis::Y);
    let sz = pauli(Axis::Z);
    let xx: Mat4 = sx.kronecker(&sx);
    let yy: Mat4 = sy.kronecker(&sy);
    let zz: Mat4 = sz.kronecker(&sz);
    let (j_xy, j_z) = params.pauli_couplings();
    let matrix = (xx + yy) * C64::from(j_xy) + zz * C64::from(j_z);
    BondOperator { matrix }
}

/// Unitary `exp(-i h tau)` acting on two adjacent spins.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BondGate {
    matrix: Mat4,
    tau: f64,
}

impl BondGate {
    pub fn identity() -> Self {
        Self { matrix: Mat4::identity(), tau: 0.0 }
    }

    /// Wraps an arbitrary 4×4 matrix. Unitarity is checked where the gate is
    /// applied, not here, so tests can build deliberately broken gates.
    pub fn from_matrix(matrix: Mat4, tau: f64) -> Self {
        Self { matrix, tau }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `max |U†U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.matrix.adjoint() * self.matrix;
        (prod - Mat4::identity()).iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    /// Whether the gate only couples two-site states of equal total σᶻ.
    pub fn conserves_magnetization(&self, tol: f64) -> bool {
        for r in 0..4 {
            for c in 0..4 {
                if two_site_sz(r) != two_site_sz(c) && self.matrix[(r, c)].norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Product of two gates, `self · other` (apply `other` first).
    pub fn compose(&self, other: &BondGate) -> BondGate {
        BondGate { matrix: self.matrix * other.matrix, tau: self.tau + other.tau }
    }
}

fn two_site_sz(idx: usize) -> i32 {
    sz_of_index(idx >> 1) + sz_of_index(idx & 1)
}

/// `exp(-i h tau)` by exact spectral decomposition of `h`.
pub fn bond_gate(h: &BondOperator, tau: f64) -> Result<BondGate, ModelError> {
    if !tau.is_finite() {
        return Err(ModelError::NonFiniteTau(tau));
    }
    let dev = hermitian_deviation(&h.matrix);
    if dev > HERMITIAN_TOL {
        return Err(ModelError::NotHermitian(dev));
    }
    if tau == 0.0 {
        return Ok(BondGate::identity());
    }
    // symmetrize so the eigensolver sees an exactly Hermitian matrix
    let herm = (h.matrix + h.matrix.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::new(herm);
    let phases = eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * tau));
    let v = eig.eigenvectors;
    let matrix = v * Mat4::from_diagonal(&phases) * v.adjoint();
    Ok(BondGate { matrix, tau })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_abs(m: &Mat4) -> f64 {
        m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    // Taylor series with scaling and squaring; independent of the spectral route.
    fn expm_scaling_squaring(a: &Mat4) -> Mat4 {
        let norm = a.iter().map(|z| z.norm()).sum::<f64>();
        let mut squarings = 0;
        let mut scale = 1.0;
        while norm * scale > 0.01 {
            scale *= 0.5;
            squarings += 1;
        }
        let scaled = a * c(scale);
        let mut term = Mat4::identity();
        let mut sum = Mat4::identity();
        for k in 1..30 {
            term = term * scaled * c(1.0 / k as f64);
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    #[test]
    fn pauli_matrices() {
        let z = pauli(Axis::Z);
        assert_eq!(z, Mat2::new(c(1.0), c(0.0), c(0.0), c(-1.0)));
        let up = nalgebra::Vector2::new(c(1.0), c(0.0));
        let flipped = pauli(Axis::X) * up;
        assert_eq!(flipped, nalgebra::Vector2::new(c(0.0), c(1.0)));
        let y = pauli(Axis::Y);
        assert_eq!(y * y, Mat2::identity());
    }

    #[test]
    fn xy_only_bond_term_swaps_antiparallel_states() {
        let h = bond_hamiltonian(&CouplingParams::new(1.0, 0.0, 2).unwrap());
        let m = h.matrix();
        for r in 0..4 {
            for col in 0..4 {
                let expect = if (r, col) == (1, 2) || (r, col) == (2, 1) { 2.0 } else { 0.0 };
                assert!((m[(r, col)] - c(expect)).norm() < 1e-15);
            }
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(*m).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in ev.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn z_only_bond_term_is_diagonal() {
        let h = bond_hamiltonian(&CouplingParams::new(0.0, 1.0, 2).unwrap());
        let want = Mat4::from_diagonal(&nalgebra::Vector4::new(c(1.0), c(-1.0), c(-1.0), c(1.0)));
        assert!(max_abs(&(h.matrix() - want)) < 1e-15);
    }

    #[test]
    fn heisenberg_bond_has_singlet_ground_state() {
        let h = bond_hamiltonian(&CouplingParams::new(1.0, 1.0, 2).unwrap());
        let m = h.matrix();
        let s = 1.0 / 2f64.sqrt();
        let singlet = nalgebra::Vector4::new(c(0.0), c(s), c(-s), c(0.0));
        let hs = m * singlet;
        assert!((hs - singlet * c(-3.0)).norm() < 1e-12);
        let mut ev: Vec<f64> = SymmetricEigen::new(*m).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in ev.iter().zip([-3.0, 1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn bond_hamiltonian_is_hermitian_real_and_conserves_sz() {
        let h = bond_hamiltonian(&CouplingParams::new(0.7, -1.3, 4).unwrap());
        assert!(hermitian_deviation(h.matrix()) < 1e-12);
        assert!(h.matrix().iter().all(|z| z.im == 0.0));
        for r in 0..4 {
            for col in 0..4 {
                if two_site_sz(r) != two_site_sz(col) {
                    assert_eq!(h.matrix()[(r, col)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn spin_half_operators_quarter_the_bond_term() {
        let p = CouplingParams::xxz(1.5, 2).unwrap();
        let pauli = bond_hamiltonian(&p);
        let half = bond_hamiltonian(&p.with_operators(SpinOperators::SpinHalf));
        assert!(max_abs(&(pauli.matrix() * c(0.25) - half.matrix())) < 1e-15);
    }

    #[test]
    fn zero_time_gate_is_identity() {
        let h = bond_hamiltonian(&CouplingParams::xxz(1.3, 2).unwrap());
        assert_eq!(*bond_gate(&h, 0.0).unwrap().matrix(), Mat4::identity());
    }

    #[test]
    fn diagonal_gate() {
        let h = bond_hamiltonian(&CouplingParams::new(0.0, 1.0, 2).unwrap());
        let t = 0.37;
        let u = bond_gate(&h, t).unwrap();
        let e = |p: f64| C64::from_polar(1.0, p);
        let want = Mat4::from_diagonal(&nalgebra::Vector4::new(e(-t), e(t), e(t), e(-t)));
        assert!(max_abs(&(u.matrix() - want)) < 1e-14);
    }

    #[test]
    fn gate_matches_scaling_and_squaring_exponential() {
        let h = bond_hamiltonian(&CouplingParams::xxz(1.0, 2).unwrap());
        let tau = 0.0125;
        let u = bond_gate(&h, tau).unwrap();
        let oracle = expm_scaling_squaring(&(h.matrix() * C64::new(0.0, -tau)));
        assert!(max_abs(&(u.matrix() - oracle)) < 1e-12);

        let tau = 0.9;
        let u = bond_gate(&h, tau).unwrap();
        let oracle = expm_scaling_squaring(&(h.matrix() * C64::new(0.0, -tau)));
        assert!(max_abs(&(u.matrix() - oracle)) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = Mat4::zeros();
        m[(0, 1)] = c(1.0);
        assert!(matches!(BondOperator::from_matrix(m), Err(ModelError::NotHermitian(_))));
        assert!(CouplingParams::new(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn gate_invariant_subspaces() {
        let h = bond_hamiltonian(&CouplingParams::xxz(0.4, 2).unwrap());
        let u = bond_gate(&h, 0.8).unwrap();
        assert!(u.conserves_magnetization(1e-14));
        let m = u.matrix();
        for k in [1usize, 2] {
            assert_eq!(m[(0, k)].norm(), 0.0);
            assert_eq!(m[(3, k)].norm(), 0.0);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gate_is_unitary(j_xy in -2.0f64..2.0, j_z in -3.0f64..3.0, tau in 0.0f64..1.0) {
                let h = bond_hamiltonian(&CouplingParams::new(j_xy, j_z, 2).unwrap());
                let u = bond_gate(&h, tau).unwrap();
                prop_assert!(u.unitarity_deviation() < 1e-12);
            }

            #[test]
            fn gates_compose_additively(j_z in -3.0f64..3.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
                let h = bond_hamiltonian(&CouplingParams::xxz(j_z, 2).unwrap());
                let ua = bond_gate(&h, a).unwrap();
                let ub = bond_gate(&h, b).unwrap();
                let uab = bond_gate(&h, a + b).unwrap();
                prop_assert!(max_abs(&(ua.compose(&ub).matrix() - uab.matrix())) < 1e-11);
            }
        }
    }
}
