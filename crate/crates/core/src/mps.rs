//! Open-boundary matrix product states with Schmidt weights on every bond.
//!
//! Site tensors are stored right-normalized, `B_i = Γ_i Λ_i`, next to the
//! Schmidt weights `Λ_i` of every bond. A two-site wavefunction at bond `b` is
//! `Λ_{b-1} B_b B_{b+1}`, so reduced density matrices and gate updates are
//! local and never divide by Schmidt values.
//!
//! ```text
//!        Λ[-1]=1    Λ[0]        Λ[1]             Λ[n-2]     (1)
//!           |  B[0] -- · -- B[1] -- · -- ... -- · -- B[n-1]
//!                |             |                      |
//!              s[0]          s[1]                  s[n-1]
//! ```
//!
//! Sites and bonds are 0-based: bond `b` joins sites `b` and `b + 1`.
//!
//! States built from product states and evolved with σᶻ-conserving gates also
//! carry the total σᶻ of the left block for every bond index. Singular value
//! decompositions then run block by block. Any gate that mixes magnetization
//! sectors drops the labels and the state continues with dense decompositions.

use faer::Mat;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::spin_model::{sz_of_index, BondGate, Mat4, Spin};
use crate::svd::decompose;

/// Gate matrix entries below this are treated as zero when deciding whether
/// a gate preserves magnetization sectors.
const SECTOR_TOL: f64 = 1e-13;
/// Allowed change of the two-site norm caused by a gate.
const GATE_NORM_TOL: f64 = 1e-6;
/// Singular values within this distance of the last retained value are kept
/// together when room remains under the bond-dimension cap.
const DEGENERACY_TOL: f64 = 1e-12;
/// Relative cutoff for exact-zero singular values during canonicalization.
const CANONICAL_ZERO: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("cannot build a state on zero sites")]
    EmptyState,
    #[error("bond {bond} out of range for a chain with {n_bonds} bonds")]
    BondOutOfRange { bond: usize, n_bonds: usize },
    #[error("site {site} out of range for a chain with {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("gate is not unitary: two-site norm changed by {0:e}")]
    NonUnitaryGate(f64),
    #[error("state norm underflowed to zero")]
    ZeroNorm,
    #[error("singular value decomposition failed: {0}")]
    SvdFailed(String),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("state vector of length {len} does not describe {n_sites} spins")]
    BadStateVector { len: usize, n_sites: usize },
    #[error("max_bond_dim must be at least 1")]
    ZeroBondDim,
    #[error("discarded_weight_target must be finite and non-negative, got {0}")]
    BadDiscardTarget(f64),
}

/// Bond-dimension cap and discarded-weight target for every truncation.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TruncationParams {
    pub max_bond_dim: usize,
    pub discarded_weight_target: f64,
}

impl TruncationParams {
    pub fn new(max_bond_dim: usize, discarded_weight_target: f64) -> Result<Self, MpsError> {
        if max_bond_dim == 0 {
            return Err(MpsError::ZeroBondDim);
        }
        if !(discarded_weight_target.is_finite() && discarded_weight_target >= 0.0) {
            return Err(MpsError::BadDiscardTarget(discarded_weight_target));
        }
        Ok(Self { max_bond_dim, discarded_weight_target })
    }

    /// Keeps every singular value.
    pub fn exact() -> Self {
        Self { max_bond_dim: usize::MAX, discarded_weight_target: 0.0 }
    }
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self { max_bond_dim: 60, discarded_weight_target: 1e-8 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TruncationReport {
    pub bond: usize,
    pub discarded_weight: f64,
    pub new_bond_dim: usize,
}

/// Number of leading singular values retained under `trunc`, and the
/// normalized weight discarded.
///
/// A value is kept while it is inside the bond-dimension cap and dropping it
/// together with everything below would discard at least the target weight.
/// At least one value is always kept. Values degenerate (within `1e-12`) with
/// the last retained one are kept as long as the cap allows.
pub fn retained_count(values: &[f64], trunc: &TruncationParams) -> Result<(usize, f64), MpsError> {
    let total: f64 = values.iter().map(|s| s * s).sum();
    if !(total > 0.0) || values.is_empty() {
        return Err(MpsError::ZeroNorm);
    }
    let mut tail = vec![0.0; values.len() + 1];
    for k in (0..values.len()).rev() {
        tail[k] = tail[k + 1] + values[k] * values[k] / total;
    }
    let cap = values.len().min(trunc.max_bond_dim);
    let mut keep = 1;
    while keep < cap && tail[keep] >= trunc.discarded_weight_target {
        keep += 1;
    }
    while keep < cap && (values[keep - 1] - values[keep]).abs() <= DEGENERACY_TOL {
        keep += 1;
    }
    Ok((keep, tail[keep].max(0.0)))
}

/// Rank-3 site tensor `B[s][α, γ]`, one `left × right` matrix per spin state.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteTensor {
    pub(crate) phys: [Mat<C64>; 2],
}

impl SiteTensor {
    pub fn left_dim(&self) -> usize {
        self.phys[0].nrows()
    }

    pub fn right_dim(&self) -> usize {
        self.phys[0].ncols()
    }

    /// Entry `B[s][α, γ]`.
    pub fn get(&self, left: usize, spin: usize, right: usize) -> C64 {
        self.phys[spin][(left, right)]
    }

    pub(crate) fn from_fn(left: usize, right: usize, f: impl Fn(usize, usize, usize) -> C64) -> Self {
        Self {
            phys: [
                Mat::from_fn(left, right, |a, g| f(a, 0, g)),
                Mat::from_fn(left, right, |a, g| f(a, 1, g)),
            ],
        }
    }

    /// Rows `(s, α)` stacked as `s * left + α`.
    fn stacked_rows(&self) -> Mat<C64> {
        let l = self.left_dim();
        Mat::from_fn(2 * l, self.right_dim(), |r, g| self.phys[r / l][(r % l, g)])
    }

    /// Columns `(s, γ)` stacked as `s * right + γ`.
    fn stacked_cols(&self) -> Mat<C64> {
        let r = self.right_dim();
        Mat::from_fn(self.left_dim(), 2 * r, |a, c| self.phys[c / r][(a, c % r)])
    }
}

/// Two-site reduced density matrix in the basis `{↑↑, ↑↓, ↓↑, ↓↓}`.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DensityMatrix4 {
    matrix: Mat4,
}

impl DensityMatrix4 {
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const TRACE_TOL: f64 = 1e-8;
    pub const PSD_TOL: f64 = 1e-10;

    /// Checks hermiticity, unit trace and positivity.
    pub fn new(matrix: Mat4) -> Result<Self, MpsError> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    #[cfg(test)]
    pub(crate) fn new_unchecked(matrix: Mat4) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let herm = (self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        let ev = nalgebra::SymmetricEigen::new(herm).eigenvalues;
        let mut out = [ev[0], ev[1], ev[2], ev[3]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }

    pub fn validate(&self) -> Result<(), MpsError> {
        let dev = crate::spin_model::hermitian_deviation(&self.matrix);
        if !(dev <= Self::HERMITIAN_TOL) {
            return Err(MpsError::InvalidDensityMatrix(format!("not Hermitian, deviation {dev:e}")));
        }
        let tr = self.trace();
        if !((tr - 1.0).abs() <= Self::TRACE_TOL) {
            return Err(MpsError::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = self.eigenvalues()[0];
        if !(min >= -Self::PSD_TOL) {
            return Err(MpsError::InvalidDensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `Tr(ρ O)`.
    pub fn expectation(&self, op: &Mat4) -> C64 {
        (self.matrix * op).trace()
    }
}

/// Matrix product state on an open chain.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    sites: Vec<SiteTensor>,
    // weights[b]: Schmidt coefficients of bond b, descending
    weights: Vec<Vec<f64>>,
    // charges[k]: total σᶻ of sites 0..k for each index of the bond left of
    // site k; charges[0] = [0], charges[n] = [total σᶻ]
    charges: Option<Vec<Vec<i32>>>,
}

impl MpsState {
    /// Product state with one spin per site.
    pub fn product_state(pattern: &[Spin]) -> Result<Self, MpsError> {
        if pattern.is_empty() {
            return Err(MpsError::EmptyState);
        }
        let sites = pattern
            .iter()
            .map(|s| {
                let idx = s.index();
                SiteTensor::from_fn(1, 1, |_, p, _| if p == idx { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            })
            .collect();
        let weights = vec![vec![1.0]; pattern.len() - 1];
        let mut charges = Vec::with_capacity(pattern.len() + 1);
        let mut q = 0;
        charges.push(vec![0]);
        for s in pattern {
            q += sz_of_index(s.index());
            charges.push(vec![q]);
        }
        Ok(Self { sites, weights, charges: Some(charges) })
    }

    /// `|↑↓↑↓ … ↑↓⟩`.
    pub fn neel(n_sites: usize) -> Result<Self, MpsError> {
        let pattern: Vec<Spin> =
            (0..n_sites).map(|i| if i % 2 == 0 { Spin::Up } else { Spin::Down }).collect();
        Self::product_state(&pattern)
    }

    /// Left half up, right half down. For odd `n_sites` the extra spin is down.
    pub fn domain_wall(n_sites: usize) -> Result<Self, MpsError> {
        let pattern: Vec<Spin> =
            (0..n_sites).map(|i| if i < n_sites / 2 { Spin::Up } else { Spin::Down }).collect();
        Self::product_state(&pattern)
    }

    /// Decomposes a dense state vector (site 0 most significant, `↑ = 0`).
    /// The result is normalized and carries no sector labels.
    pub fn from_statevector(amplitudes: &[C64], n_sites: usize) -> Result<Self, MpsError> {
        if n_sites == 0 {
            return Err(MpsError::EmptyState);
        }
        if n_sites >= usize::BITS as usize || amplitudes.len() != 1usize << n_sites {
            return Err(MpsError::BadStateVector { len: amplitudes.len(), n_sites });
        }
        let mut sites = Vec::with_capacity(n_sites);
        let mut rest = Mat::from_fn(1, amplitudes.len(), |_, c| amplitudes[c]);
        for i in 0..n_sites {
            let chi = rest.nrows();
            let tail = 1usize << (n_sites - i - 1);
            let m = Mat::from_fn(2 * chi, tail, |r, c| rest[(r % chi, (r / chi) * tail + c)]);
            let dec = decompose(m.as_ref(), None)?;
            let keep = significant_count(dec.values())?;
            let f = dec.factors(keep);
            sites.push(SiteTensor::from_fn(chi, keep, |a, s, g| f.u[(s * chi + a, g)]));
            rest = Mat::from_fn(keep, tail, |r, c| f.vh[(r, c)] * f.s[r]);
        }
        // rest is the 1×1 norm; canonicalize divides it out
        let mut state = Self { sites, weights: vec![Vec::new(); n_sites - 1], charges: None };
        let scale = rest[(0, 0)];
        for p in 0..2 {
            let last = n_sites - 1;
            state.sites[last].phys[p] = Mat::from_fn(state.sites[last].left_dim(), 1, |a, g| {
                state.sites[last].phys[p][(a, g)] * scale
            });
        }
        state.canonicalize()?;
        Ok(state)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_bonds(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn site_tensors(&self) -> &[SiteTensor] {
        &self.sites
    }

    /// Schmidt coefficients of every bond, each sorted descending.
    pub fn bond_weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.weights.iter().map(Vec::len).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.weights.iter().map(Vec::len).max().unwrap_or(1)
    }

    /// Whether sector labels are tracked (block-sparse decompositions).
    pub fn tracks_magnetization_sectors(&self) -> bool {
        self.charges.is_some()
    }

    pub(crate) fn sector_labels(&self) -> Option<&[Vec<i32>]> {
        self.charges.as_deref()
    }

    pub(crate) fn from_parts(
        sites: Vec<SiteTensor>,
        weights: Vec<Vec<f64>>,
        charges: Option<Vec<Vec<i32>>>,
    ) -> Self {
        Self { sites, weights, charges }
    }

    /// Copy with the first site tensor multiplied by `factor`. The copy is no
    /// longer normalized; only [`norm`](Self::norm), [`to_statevector`](Self::to_statevector)
    /// and [`canonicalize`](Self::canonicalize) are meaningful on it.
    #[doc(hidden)]
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for p in 0..2 {
            let m = &out.sites[0].phys[p];
            out.sites[0].phys[p] = Mat::from_fn(m.nrows(), m.ncols(), |a, g| m[(a, g)] * factor);
        }
        out
    }

    fn left_weights(&self, site: usize) -> Vec<f64> {
        if site == 0 {
            vec![1.0]
        } else {
            self.weights[site - 1].clone()
        }
    }

    fn check_bond(&self, bond: usize) -> Result<(), MpsError> {
        if bond + 1 >= self.sites.len() {
            return Err(MpsError::BondOutOfRange { bond, n_bonds: self.n_bonds() });
        }
        Ok(())
    }

    /// `B_b B_{b+1}` with rows `(s1, α)` and columns `(s2, γ)`.
    fn two_site_block(&self, bond: usize) -> Mat<C64> {
        let left = self.sites[bond].stacked_rows();
        let right = self.sites[bond + 1].stacked_cols();
        &left * &right
    }

    /// `⟨ψ|ψ⟩^{1/2}` by full contraction.
    pub fn norm(&self) -> f64 {
        let mut env = Mat::<C64>::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
        for site in &self.sites {
            let mut next = Mat::<C64>::zeros(site.right_dim(), site.right_dim());
            for p in &site.phys {
                let tmp = &env * p;
                next += p.adjoint() * &tmp;
            }
            env = next;
        }
        env[(0, 0)].re.max(0.0).sqrt()
    }

    /// Dense amplitudes, site 0 most significant, `↑ = 0`.
    pub fn to_statevector(&self) -> Vec<C64> {
        let mut psi = Mat::<C64>::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
        for site in &self.sites {
            let parts = [&psi * &site.phys[0], &psi * &site.phys[1]];
            psi = Mat::from_fn(2 * psi.nrows(), site.right_dim(), |r, g| parts[r % 2][(r / 2, g)]);
        }
        (0..psi.nrows()).map(|r| psi[(r, 0)]).collect()
    }

    /// Largest violation of the canonical-form conditions:
    /// `Σ_s B^s B^s† = 1` and `Σ_s B^s† Λ_{i-1}² B^s = Λ_i²` on every site,
    /// plus unit sum of squared weights on every bond.
    pub fn canonical_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, site) in self.sites.iter().enumerate() {
            let lw = self.left_weights(i);
            let rw = if i + 1 < self.sites.len() { self.weights[i].clone() } else { vec![1.0] };
            let (l, r) = (site.left_dim(), site.right_dim());
            let mut right_env = Mat::<C64>::zeros(l, l);
            let mut left_env = Mat::<C64>::zeros(r, r);
            for p in &site.phys {
                right_env += p * p.adjoint();
                let scaled = Mat::from_fn(l, r, |a, g| p[(a, g)] * (lw[a] * lw[a]));
                left_env += p.adjoint() * &scaled;
            }
            for a in 0..l {
                for b in 0..l {
                    let want = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((right_env[(a, b)] - C64::from(want)).norm());
                }
            }
            for a in 0..r {
                for b in 0..r {
                    let want = if a == b { rw[a] * rw[a] } else { 0.0 };
                    worst = worst.max((left_env[(a, b)] - C64::from(want)).norm());
                }
            }
        }
        for w in &self.weights {
            let sum: f64 = w.iter().map(|x| x * x).sum();
            worst = worst.max((sum - 1.0).abs());
        }
        worst
    }

    /// Brings the state to canonical form with unit norm, keeping the
    /// represented state (and its global phase). Exact-zero Schmidt values
    /// are removed.
    pub fn canonicalize(&mut self) -> Result<(), MpsError> {
        let n = self.sites.len();
        let mut charges = self.charges.clone();

        // left-to-right: left-normalized tensors, remainder carried right
        let mut carry = Mat::<C64>::from_fn(1, 1, |_, _| C64::new(1.0, 0.0));
        for i in 0..n {
            let site = &self.sites[i];
            let k = carry.nrows();
            let parts = [&carry * &site.phys[0], &carry * &site.phys[1]];
            let r = site.right_dim();
            let m = Mat::from_fn(2 * k, r, |row, g| parts[row / k][(row % k, g)]);
            let sector_q = charges.as_ref().map(|q| {
                let rows: Vec<i32> = (0..2 * k).map(|row| q[i][row % k] + sz_of_index(row / k)).collect();
                (rows, q[i + 1].clone())
            });
            let dec = decompose(m.as_ref(), sector_q.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())))?;
            let keep = significant_count(dec.values())?;
            let f = dec.factors(keep);
            self.sites[i] = SiteTensor::from_fn(k, keep, |a, s, g| f.u[(s * k + a, g)]);
            carry = Mat::from_fn(keep, r, |a, g| f.vh[(a, g)] * f.s[a]);
            if let (Some(q), Some(new_q)) = (charges.as_mut(), f.charges) {
                q[i + 1] = new_q;
            }
        }
        let total = carry[(0, 0)];
        if !(total.norm() > 0.0) || !total.norm().is_finite() {
            return Err(MpsError::ZeroNorm);
        }

        // right-to-left: right-normalized tensors and Schmidt weights
        let mut carry = Mat::<C64>::from_fn(1, 1, |_, _| total / total.norm());
        for i in (0..n).rev() {
            let site = &self.sites[i];
            let l = site.left_dim();
            let parts = [&site.phys[0] * &carry, &site.phys[1] * &carry];
            let r = carry.ncols();
            let m = Mat::from_fn(l, 2 * r, |a, col| parts[col / r][(a, col % r)]);
            let sector_q = charges.as_ref().map(|q| {
                let cols: Vec<i32> = (0..2 * r).map(|col| q[i + 1][col % r] - sz_of_index(col / r)).collect();
                (q[i].clone(), cols)
            });
            let dec = decompose(m.as_ref(), sector_q.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())))?;
            let keep = significant_count(dec.values())?;
            let f = dec.factors(keep);
            let norm = f.s.iter().map(|x| x * x).sum::<f64>().sqrt();
            if i == 0 {
                // left boundary: U S is a scalar, keep its phase
                let phase = f.u[(0, 0)] * (f.s[0] / norm);
                self.sites[0] = SiteTensor::from_fn(1, r, |_, s, g| f.vh[(0, s * r + g)] * phase);
            } else {
                self.sites[i] = SiteTensor::from_fn(keep, r, |a, s, g| f.vh[(a, s * r + g)]);
                self.weights[i - 1] = f.s.iter().map(|x| x / norm).collect();
                carry = Mat::from_fn(l, keep, |a, g| f.u[(a, g)] * (f.s[g] / norm));
                if let (Some(q), Some(new_q)) = (charges.as_mut(), f.charges) {
                    q[i] = new_q;
                }
            }
        }
        self.charges = charges;
        Ok(())
    }

    /// Contracts `gate` into sites `bond` and `bond + 1`, re-splits the block
    /// by SVD and truncates under `trunc`. Retained weights are renormalized.
    pub fn apply_two_site_gate(
        &mut self,
        gate: &BondGate,
        bond: usize,
        trunc: &TruncationParams,
    ) -> Result<TruncationReport, MpsError> {
        self.check_bond(bond)?;
        let u = gate.matrix();
        let l = self.sites[bond].left_dim();
        let r = self.sites[bond + 1].right_dim();
        let lw = self.left_weights(bond);

        let raw = self.two_site_block(bond);
        let mut phi = Mat::<C64>::zeros(2 * l, 2 * r);
        for out in 0..4 {
            let (s1, s2) = (out >> 1, out & 1);
            for inp in 0..4 {
                let coeff = u[(out, inp)];
                if coeff == C64::new(0.0, 0.0) {
                    continue;
                }
                let (t1, t2) = (inp >> 1, inp & 1);
                for g in 0..r {
                    for a in 0..l {
                        phi[(s1 * l + a, s2 * r + g)] += coeff * raw[(t1 * l + a, t2 * r + g)];
                    }
                }
            }
        }

        let weighted_norm = |m: &Mat<C64>| -> f64 {
            let mut acc = 0.0;
            for c in 0..2 * r {
                for row in 0..2 * l {
                    acc += m[(row, c)].norm_sqr() * lw[row % l] * lw[row % l];
                }
            }
            acc
        };
        let before = weighted_norm(&raw);
        let after = weighted_norm(&phi);
        if !((after - before).abs() <= GATE_NORM_TOL) {
            return Err(MpsError::NonUnitaryGate(after - before));
        }

        let sectors = match &self.charges {
            Some(q) if gate.conserves_magnetization(SECTOR_TOL) => {
                let rows: Vec<i32> = (0..2 * l).map(|row| q[bond][row % l] + sz_of_index(row / l)).collect();
                let cols: Vec<i32> =
                    (0..2 * r).map(|col| q[bond + 2][col % r] - sz_of_index(col / r)).collect();
                Some((rows, cols))
            }
            _ => None,
        };
        if sectors.is_none() {
            self.charges = None;
        }

        let theta = Mat::from_fn(2 * l, 2 * r, |row, c| phi[(row, c)] * lw[row % l]);
        let dec = decompose(
            theta.as_ref(),
            sectors.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice())),
        )?;
        let (keep, discarded) = retained_count(dec.values(), trunc)?;
        let f = dec.factors(keep);
        let kept_norm = f.s.iter().map(|x| x * x).sum::<f64>().sqrt();

        // B_{b+1} = Vh,  B_b = Φ Vh† / |S|
        let vh = &f.vh;
        self.sites[bond + 1] = SiteTensor::from_fn(keep, r, |a, s, g| vh[(a, s * r + g)]);
        let left = &phi * vh.adjoint();
        self.sites[bond] = SiteTensor::from_fn(l, keep, |a, s, g| left[(s * l + a, g)] / kept_norm);
        self.weights[bond] = f.s.iter().map(|x| x / kept_norm).collect();
        if let (Some(q), Some(new_q)) = (self.charges.as_mut(), f.charges) {
            q[bond + 1] = new_q;
        }
        Ok(TruncationReport { bond, discarded_weight: discarded, new_bond_dim: keep })
    }

    /// Reduced density matrix of sites `bond` and `bond + 1`. Assumes
    /// canonical form; the result is normalized to unit trace and validated.
    pub fn two_site_rdm(&self, bond: usize) -> Result<DensityMatrix4, MpsError> {
        self.check_bond(bond)?;
        let l = self.sites[bond].left_dim();
        let r = self.sites[bond + 1].right_dim();
        let lw = self.left_weights(bond);
        let raw = self.two_site_block(bond);
        let mut rho = Mat4::zeros();
        for x in 0..4 {
            for y in x..4 {
                let (s1, s2) = (x >> 1, x & 1);
                let (t1, t2) = (y >> 1, y & 1);
                let mut acc = C64::new(0.0, 0.0);
                for g in 0..r {
                    for a in 0..l {
                        let w = lw[a] * lw[a];
                        acc += raw[(s1 * l + a, s2 * r + g)] * raw[(t1 * l + a, t2 * r + g)].conj() * w;
                    }
                }
                rho[(x, y)] = acc;
                rho[(y, x)] = acc.conj();
            }
        }
        let tr = rho.trace().re;
        if !(tr > 0.0) {
            return Err(MpsError::ZeroNorm);
        }
        DensityMatrix4::new(rho / C64::from(tr))
    }

    /// Reduced density matrices of every bond.
    pub fn two_site_rdms(&self) -> Result<Vec<DensityMatrix4>, MpsError> {
        (0..self.n_bonds()).map(|b| self.two_site_rdm(b)).collect()
    }

    /// `⟨σᶻ⟩` on one site.
    pub fn site_magnetization(&self, site: usize) -> Result<f64, MpsError> {
        if site >= self.sites.len() {
            return Err(MpsError::SiteOutOfRange { site, n_sites: self.sites.len() });
        }
        let lw = self.left_weights(site);
        let t = &self.sites[site];
        let mut w = [0.0; 2];
        for (p, acc) in w.iter_mut().enumerate() {
            for g in 0..t.right_dim() {
                for a in 0..t.left_dim() {
                    *acc += t.phys[p][(a, g)].norm_sqr() * lw[a] * lw[a];
                }
            }
        }
        let total = w[0] + w[1];
        if !(total > 0.0) {
            return Err(MpsError::ZeroNorm);
        }
        Ok((w[0] - w[1]) / total)
    }
}

fn significant_count(values: &[f64]) -> Result<usize, MpsError> {
    let max = values.first().copied().unwrap_or(0.0);
    if !(max > 0.0) || !max.is_finite() {
        return Err(MpsError::ZeroNorm);
    }
    Ok(values.iter().take_while(|&&s| s > max * CANONICAL_ZERO).count().max(1))
}
