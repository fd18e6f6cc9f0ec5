#![allow(dead_code)]

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use xxz_tebd::observables::spin_flip;
use xxz_tebd::spin_model::Mat4;

/// Concurrence from the eigenvalues of `ρ (σʸσʸ) ρ* (σʸσʸ)` taken literally
/// with a general complex eigensolver.
pub fn brute_force_concurrence(rho: &Mat4) -> f64 {
    let flip = spin_flip();
    let prod = rho * flip * rho.map(|z| z.conj()) * flip;
    let m = faer::Mat::from_fn(4, 4, |i, j| prod[(i, j)]);
    let ev = m.eigenvalues().unwrap();
    let mut l: Vec<f64> = ev.iter().map(|z| z.re.max(0.0).sqrt()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

pub fn random_state(rng: &mut ChaCha8Rng, n_sites: usize) -> Vec<C64> {
    let v: Vec<C64> =
        (0..1usize << n_sites).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Applies a two-site matrix to sites `(bond, bond + 1)` of a dense vector
/// with site 0 as the most significant bit.
pub fn apply_dense(psi: &mut [C64], n_sites: usize, bond: usize, gate: &Mat4) {
    let shift = n_sites - 2 - bond;
    for idx in 0..psi.len() {
        if (idx >> shift) & 0b11 != 0 {
            continue;
        }
        let slots = [idx, idx | (1 << shift), idx | (2 << shift), idx | (3 << shift)];
        let old = slots.map(|s| psi[s]);
        for (r, &s) in slots.iter().enumerate() {
            psi[s] = (0..4).map(|c| gate[(r, c)] * old[c]).sum();
        }
    }
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).norm()))
}

pub fn random_unitary2(rng: &mut ChaCha8Rng) -> nalgebra::Matrix2<C64> {
    let mut g = || C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let (a, b, phase) = (g(), g(), g());
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let (a, b) = (a / n, b / n);
    nalgebra::Matrix2::new(a, -b.conj(), b, a.conj()) * (phase / phase.norm())
}

pub fn random_rho(rng: &mut ChaCha8Rng) -> Mat4 {
    let g = Mat4::from_fn(|_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = g * g.adjoint();
    m / m.trace()
}

pub fn singlet_projector() -> Mat4 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let v = nalgebra::Vector4::new(C64::new(0.0, 0.0), h, -h, C64::new(0.0, 0.0));
    v * v.adjoint()
}
