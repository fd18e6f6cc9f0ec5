//! WebAssembly bindings for the in-browser quench explorer.

use wasm_bindgen::prelude::*;
use xxz_tebd::quench::{simulate, Protocol, QuenchConfig};
use xxz_tebd::spin_model::Mat4;
use xxz_tebd::{observables, DensityMatrix4};

use num_complex::Complex64 as C64;

/// Largest chain the page offers; keeps a run interactive.
pub const MAX_SITES: usize = 40;

/// Concurrence of every bond at every observation, row-major by time.
#[wasm_bindgen]
pub struct Surface {
    n_bonds: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    energy: Vec<f64>,
}

#[wasm_bindgen]
impl Surface {
    #[wasm_bindgen(getter)]
    pub fn n_bonds(&self) -> usize {
        self.n_bonds
    }

    #[wasm_bindgen(getter)]
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn energy(&self) -> Vec<f64> {
        self.energy.clone()
    }

    /// `C_{bond,bond+1}(t)` for a 1-based bond.
    pub fn bond_series(&self, bond: usize) -> Vec<f64> {
        if bond == 0 || bond > self.n_bonds {
            return Vec::new();
        }
        self.values.iter().skip(bond - 1).step_by(self.n_bonds).copied().collect()
    }
}

pub fn compute_surface(
    protocol: &str,
    n_sites: usize,
    j_z: f64,
    t_max: f64,
    max_bond_dim: usize,
) -> Result<Surface, String> {
    let protocol = match protocol {
        "anisotropy_quench" | "neel" => Protocol::AnisotropyQuench,
        "domain_wall" => Protocol::DomainWall,
        other => return Err(format!("unknown protocol '{other}'")),
    };
    if n_sites > MAX_SITES {
        return Err(format!("n_sites must be at most {MAX_SITES}"));
    }
    let config = QuenchConfig { protocol, n_sites, j_z, t_max, max_bond_dim, observe_stride: 4, ..Default::default() };
    let record = simulate(&config).map_err(|e| e.to_string())?;
    Ok(Surface {
        n_bonds: n_sites - 1,
        values: record.concurrence_profiles.concat(),
        times: record.times,
        energy: record.energy,
    })
}

/// Runs a quench with the default time step and returns the full surface.
#[wasm_bindgen]
pub fn quench_surface(
    protocol: &str,
    n_sites: usize,
    j_z: f64,
    t_max: f64,
    max_bond_dim: usize,
) -> Result<Surface, JsValue> {
    compute_surface(protocol, n_sites, j_z, t_max, max_bond_dim).map_err(|e| JsValue::from_str(&e))
}

/// Concurrence of `p |ψ⁻⟩⟨ψ⁻| + (1 - p) I/4`.
#[wasm_bindgen]
pub fn werner_concurrence(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let psi = [C64::new(0.0, 0.0), h, -h, C64::new(0.0, 0.0)];
    let rho = Mat4::from_fn(|r, c| psi[r] * psi[c].conj() * p + if r == c { C64::from((1.0 - p) / 4.0) } else { C64::from(0.0) });
    DensityMatrix4::new(rho).ok().and_then(|r| observables::concurrence(&r).ok()).map_or(f64::NAN, |c| c.value)
}

/// Concurrence of `cos θ |↑↓⟩ + e^{iφ} sin θ |↓↑⟩`.
#[wasm_bindgen]
pub fn pair_concurrence(theta: f64, phi: f64) -> f64 {
    let psi = [C64::new(0.0, 0.0), C64::from(theta.cos()), C64::from_polar(theta.sin(), phi), C64::new(0.0, 0.0)];
    let rho = Mat4::from_fn(|r, c| psi[r] * psi[c].conj());
    DensityMatrix4::new(rho).ok().and_then(|r| observables::concurrence(&r).ok()).map_or(f64::NAN, |c| c.value)
}
