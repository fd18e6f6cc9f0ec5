//! Dense exact diagonalization for short chains.
//!
//! Basis states are indexed lexicographically with site 0 as the most
//! significant bit and `↑ = 0`, matching the two-site basis `{↑↑, ↑↓, ↓↑, ↓↓}`.
//! Evolution goes through the full eigendecomposition of `H`, so results carry
//! no time-discretization error.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::mps::{DensityMatrix4, MpsError};
use crate::observables::{self, ObservableError};
use crate::spin_model::{CouplingParams, Mat4, Spin};

/// Largest chain for which the dense Hamiltonian is built.
pub const MAX_HAMILTONIAN_SITES: usize = 14;
/// Largest chain for which full diagonalization is attempted.
pub const MAX_EVOLVE_SITES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdError {
    #[error("{n_sites} sites exceeds the dense limit of {limit}")]
    TooLarge { n_sites: usize, limit: usize },
    #[error("site index {site} out of range for {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("state has {got} amplitudes, expected {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n_sites: usize,
    amplitudes: Vec<C64>,
}

impl DenseState {
    pub fn new(amplitudes: Vec<C64>, n_sites: usize) -> Result<Self, EdError> {
        let expected = 1usize << n_sites;
        if amplitudes.len() != expected {
            return Err(EdError::DimensionMismatch { got: amplitudes.len(), expected });
        }
        Ok(Self { n_sites, amplitudes })
    }

    pub fn product(pattern: &[Spin]) -> Self {
        let n = pattern.len();
        let idx = pattern.iter().fold(0usize, |acc, s| (acc << 1) | s.index());
        let mut amplitudes = vec![C64::new(0.0, 0.0); 1 << n];
        amplitudes[idx] = C64::new(1.0, 0.0);
        Self { n_sites: n, amplitudes }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn overlap(&self, other: &DenseState) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

fn spin_at(idx: usize, site: usize, n: usize) -> usize {
    (idx >> (n - 1 - site)) & 1
}

/// Dense real-symmetric `H` of the open chain.
pub fn full_hamiltonian(params: &CouplingParams) -> Result<Mat<f64>, EdError> {
    let n = params.n_sites;
    if n > MAX_HAMILTONIAN_SITES {
        return Err(EdError::TooLarge { n_sites: n, limit: MAX_HAMILTONIAN_SITES });
    }
    let (j_xy, j_z) = params.pauli_couplings();
    let dim = 1usize << n;
    let mut h = Mat::<f64>::zeros(dim, dim);
    for idx in 0..dim {
        for b in 0..n - 1 {
            let (s1, s2) = (spin_at(idx, b, n), spin_at(idx, b + 1, n));
            if s1 == s2 {
                h[(idx, idx)] += j_z;
            } else {
                h[(idx, idx)] -= j_z;
                // σˣσˣ + σʸσʸ = 2 (σ⁺σ⁻ + σ⁻σ⁺)
                let flipped = idx ^ (0b11 << (n - 2 - b));
                h[(flipped, idx)] += 2.0 * j_xy;
            }
        }
    }
    Ok(h)
}

/// Total σᶻ as a diagonal.
pub fn total_sz_diagonal(n_sites: usize) -> Vec<f64> {
    (0..1usize << n_sites)
        .map(|idx| (0..n_sites).map(|i| 1.0 - 2.0 * spin_at(idx, i, n_sites) as f64).sum())
        .collect()
}

/// Spectral decomposition of `H`, reusable for any number of times.
pub struct EdPropagator {
    n_sites: usize,
    energies: Vec<f64>,
    vectors: Mat<f64>,
}

impl EdPropagator {
    pub fn new(params: &CouplingParams) -> Result<Self, EdError> {
        if params.n_sites > MAX_EVOLVE_SITES {
            return Err(EdError::TooLarge { n_sites: params.n_sites, limit: MAX_EVOLVE_SITES });
        }
        let h = full_hamiltonian(params)?;
        let eig = h.self_adjoint_eigen(Side::Lower).map_err(|e| EdError::Eigen(format!("{e:?}")))?;
        let energies = eig.S().column_vector().iter().copied().collect();
        Ok(Self { n_sites: params.n_sites, energies, vectors: eig.U().to_owned() })
    }

    /// Eigenvalues of `H`, ascending.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `exp(-i H t) ψ0` for every `t`.
    pub fn evolve(&self, psi0: &DenseState, times: &[f64]) -> Result<Vec<DenseState>, EdError> {
        let dim = self.energies.len();
        if psi0.n_sites != self.n_sites {
            return Err(EdError::DimensionMismatch { got: psi0.amplitudes.len(), expected: dim });
        }
        let v = &self.vectors;
        let re = Mat::from_fn(dim, 1, |i, _| psi0.amplitudes[i].re);
        let im = Mat::from_fn(dim, 1, |i, _| psi0.amplitudes[i].im);
        let c_re = v.transpose() * &re;
        let c_im = v.transpose() * &im;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let mut p_re = Mat::<f64>::zeros(dim, 1);
            let mut p_im = Mat::<f64>::zeros(dim, 1);
            for k in 0..dim {
                let phase = C64::from_polar(1.0, -self.energies[k] * t);
                let z = phase * C64::new(c_re[(k, 0)], c_im[(k, 0)]);
                p_re[(k, 0)] = z.re;
                p_im[(k, 0)] = z.im;
            }
            let a = v * &p_re;
            let b = v * &p_im;
            let amplitudes = (0..dim).map(|i| C64::new(a[(i, 0)], b[(i, 0)])).collect();
            out.push(DenseState { n_sites: self.n_sites, amplitudes });
        }
        Ok(out)
    }
}

/// `exp(-i H t) ψ0` for every `t`, by full diagonalization.
pub fn ed_evolve(psi0: &DenseState, params: &CouplingParams, times: &[f64]) -> Result<Vec<DenseState>, EdError> {
    EdPropagator::new(params)?.evolve(psi0, times)
}

/// Partial trace down to sites `(site, site + 1)`.
pub fn ed_two_site_rdm(psi: &DenseState, site: usize) -> Result<DensityMatrix4, EdError> {
    let n = psi.n_sites;
    if site + 1 >= n {
        return Err(EdError::SiteOutOfRange { site, n_sites: n });
    }
    let shift = n - 2 - site;
    let low_mask = (1usize << shift) - 1;
    let mut rho = Mat4::zeros();
    let rest = 1usize << (n - 2);
    for env in 0..rest {
        let high = (env >> shift) << (shift + 2);
        let low = env & low_mask;
        let idx = |pair: usize| high | (pair << shift) | low;
        for x in 0..4 {
            let ax = psi.amplitudes[idx(x)];
            if ax == C64::new(0.0, 0.0) {
                continue;
            }
            for y in 0..4 {
                rho[(x, y)] += ax * psi.amplitudes[idx(y)].conj();
            }
        }
    }
    let tr = rho.trace().re;
    Ok(DensityMatrix4::new(rho / C64::from(tr))?)
}

pub fn ed_concurrence_profile(psi: &DenseState) -> Result<Vec<f64>, EdError> {
    let rdms = (0..psi.n_sites - 1).map(|b| ed_two_site_rdm(psi, b)).collect::<Result<Vec<_>, _>>()?;
    Ok(observables::concurrences(&rdms)?)
}

pub fn ed_magnetization_profile(psi: &DenseState) -> Vec<f64> {
    let n = psi.n_sites;
    let norm2: f64 = psi.amplitudes.iter().map(|z| z.norm_sqr()).sum();
    (0..n)
        .map(|i| {
            psi.amplitudes
                .iter()
                .enumerate()
                .map(|(idx, z)| z.norm_sqr() * (1.0 - 2.0 * spin_at(idx, i, n) as f64))
                .sum::<f64>()
                / norm2
        })
        .collect()
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
pub fn ed_energy(psi: &DenseState, params: &CouplingParams) -> Result<f64, EdError> {
    let h = full_hamiltonian(params)?;
    let dim = psi.amplitudes.len();
    let re = Mat::from_fn(dim, 1, |i, _| psi.amplitudes[i].re);
    let im = Mat::from_fn(dim, 1, |i, _| psi.amplitudes[i].im);
    let h_re = &h * &re;
    let h_im = &h * &im;
    let e: f64 = (0..dim).map(|i| re[(i, 0)] * h_re[(i, 0)] + im[(i, 0)] * h_im[(i, 0)]).sum();
    Ok(e / psi.norm().powi(2))
}
