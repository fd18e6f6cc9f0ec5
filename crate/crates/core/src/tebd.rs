//! Second-order Trotter evolution of an [`MpsState`].
//!
//! One step applies `exp(-i H_odd dt/2) exp(-i H_even dt) exp(-i H_odd dt/2)`,
//! where the odd layer holds bonds `0, 2, 4, …` (pairs `(1,2), (3,4), …` in
//! 1-based site labels) and the even layer the remaining bonds. Half steps of
//! consecutive steps are not merged, so every step boundary is a valid
//! observation point.

use thiserror::Error;

use crate::mps::{MpsError, MpsState, TruncationParams};
use crate::observables::{self, ObservableError};
use crate::spin_model::{bond_gate, bond_hamiltonian, BondGate, CouplingParams, ModelError};

/// Evolution aborts once `|norm - 1|` exceeds this.
pub const NORM_ABORT_TOL: f64 = 1e-4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TebdError {
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
    #[error("t_max must be finite and not negative, got {0}")]
    BadHorizon(f64),
    #[error("observe_stride must be at least 1")]
    ZeroStride,
    #[error("chain length {state} does not match couplings for {params} sites")]
    SizeMismatch { state: usize, params: usize },
    #[error("norm drifted to {norm} at t = {time}")]
    NormDrift { time: f64, norm: f64 },
    #[error("at t = {time}: {source}")]
    Aborted { time: f64, source: ObservableError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mps(#[from] MpsError),
}

/// Time step, horizon and observation cadence.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TrotterSchedule {
    pub dt: f64,
    pub t_max: f64,
    pub observe_stride: usize,
}

impl TrotterSchedule {
    pub fn new(dt: f64, t_max: f64, observe_stride: usize) -> Result<Self, TebdError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TebdError::BadTimeStep(dt));
        }
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(TebdError::BadHorizon(t_max));
        }
        if observe_stride == 0 {
            return Err(TebdError::ZeroStride);
        }
        Ok(Self { dt, t_max, observe_stride })
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn n_observations(&self) -> usize {
        self.n_steps() / self.observe_stride + 1
    }
}

impl Default for TrotterSchedule {
    fn default() -> Self {
        Self { dt: 0.025, t_max: 40.0, observe_stride: 4 }
    }
}

/// Gates of one symmetric Trotter step. The chain is homogeneous, so each
/// layer uses a single gate on all of its bonds.
#[derive(Clone, Debug, PartialEq)]
pub struct GateLayers {
    pub odd_half: BondGate,
    pub even_full: BondGate,
    pub odd_bonds: Vec<usize>,
    pub even_bonds: Vec<usize>,
}

pub fn build_gate_layers(params: &CouplingParams, dt: f64) -> Result<GateLayers, TebdError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(TebdError::BadTimeStep(dt));
    }
    let h = bond_hamiltonian(params);
    let n_bonds = params.n_bonds();
    Ok(GateLayers {
        odd_half: bond_gate(&h, dt / 2.0)?,
        even_full: bond_gate(&h, dt)?,
        odd_bonds: (0..n_bonds).step_by(2).collect(),
        even_bonds: (1..n_bonds).step_by(2).collect(),
    })
}

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Sum of discarded weights over all gates of the step.
    pub discarded_weight: f64,
    pub max_bond_dim: usize,
}

/// One symmetric step: odd half layer, even full layer, odd half layer.
/// Sweep direction alternates between layers.
pub fn trotter_step(
    state: &mut MpsState,
    layers: &GateLayers,
    trunc: &TruncationParams,
) -> Result<StepReport, MpsError> {
    let mut report = StepReport::default();
    let mut apply = |gate: &BondGate, bond: usize, state: &mut MpsState| -> Result<(), MpsError> {
        let r = state.apply_two_site_gate(gate, bond, trunc)?;
        report.discarded_weight += r.discarded_weight;
        Ok(())
    };
    for &b in &layers.odd_bonds {
        apply(&layers.odd_half, b, state)?;
    }
    for &b in layers.even_bonds.iter().rev() {
        apply(&layers.even_full, b, state)?;
    }
    for &b in &layers.odd_bonds {
        apply(&layers.odd_half, b, state)?;
    }
    // truncated local updates leave the tensors only approximately
    // isometric; a full sweep restores the gauge and the unit norm
    if report.discarded_weight > 0.0 {
        state.canonicalize()?;
    }
    report.max_bond_dim = state.max_bond_dim();
    Ok(report)
}

/// Observables at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub step: usize,
    pub time: f64,
    /// `C_{b,b+1}` for every bond.
    pub concurrence: Vec<f64>,
    /// `⟨σᶻ⟩` for every site.
    pub magnetization: Vec<f64>,
    pub energy: f64,
    pub norm: f64,
    /// Weight discarded during the Trotter step ending at this observation.
    pub discarded_weight_step: f64,
    pub discarded_weight_cum: f64,
    pub max_bond_dim: usize,
}

/// Time series collected by [`evolve`]. Rows are ordered by time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvolutionRecord {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub concurrence_profiles: Vec<Vec<f64>>,
    pub magnetization_profiles: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
    pub norm: Vec<f64>,
    pub discarded_weight_step: Vec<f64>,
    pub cumulative_discarded_weight: Vec<f64>,
    pub max_bond_dim: Vec<usize>,
}

impl EvolutionRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, o: Observation) {
        self.steps.push(o.step);
        self.times.push(o.time);
        self.concurrence_profiles.push(o.concurrence);
        self.magnetization_profiles.push(o.magnetization);
        self.energy.push(o.energy);
        self.norm.push(o.norm);
        self.discarded_weight_step.push(o.discarded_weight_step);
        self.cumulative_discarded_weight.push(o.discarded_weight_cum);
        self.max_bond_dim.push(o.max_bond_dim);
    }

    /// `C_{b,b+1}(t)` of one bond across all observations.
    pub fn bond_series(&self, bond: usize) -> Vec<f64> {
        self.concurrence_profiles.iter().map(|row| row[bond]).collect()
    }
}

/// Measures every observable on `state`.
pub fn observe(
    state: &MpsState,
    params: &CouplingParams,
    step: usize,
    time: f64,
) -> Result<Observation, TebdError> {
    let wrap = |source: ObservableError| TebdError::Aborted { time, source };
    let rdms = state.two_site_rdms().map_err(|e| wrap(e.into()))?;
    let concurrence = observables::concurrences(&rdms).map_err(wrap)?;
    let magnetization = observables::magnetization_profile(state).map_err(wrap)?;
    let energy = observables::energy_from_rdms(&rdms, params);
    Ok(Observation {
        step,
        time,
        concurrence,
        magnetization,
        energy,
        norm: state.norm(),
        discarded_weight_step: 0.0,
        discarded_weight_cum: 0.0,
        max_bond_dim: state.max_bond_dim(),
    })
}

/// Runs `schedule.n_steps()` Trotter steps from `state`, observing at `t = 0`
/// and after every `observe_stride` steps. `observer` sees each observation
/// as it is recorded.
pub fn evolve(
    state: &mut MpsState,
    params: &CouplingParams,
    schedule: &TrotterSchedule,
    trunc: &TruncationParams,
    observer: impl FnMut(&Observation),
) -> Result<EvolutionRecord, TebdError> {
    run_steps(state, params, schedule, trunc, None, observer)
}

/// Where an interrupted evolution left off.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct ResumePoint {
    pub step: usize,
    pub cumulative_discarded_weight: f64,
}

/// Continues an evolution whose state after `from.step` steps is `state`.
/// The returned record only holds observations after `from.step`.
pub fn resume(
    state: &mut MpsState,
    params: &CouplingParams,
    schedule: &TrotterSchedule,
    trunc: &TruncationParams,
    from: ResumePoint,
    observer: impl FnMut(&Observation),
) -> Result<EvolutionRecord, TebdError> {
    run_steps(state, params, schedule, trunc, Some(from), observer)
}

fn run_steps(
    state: &mut MpsState,
    params: &CouplingParams,
    schedule: &TrotterSchedule,
    trunc: &TruncationParams,
    from: Option<ResumePoint>,
    mut observer: impl FnMut(&Observation),
) -> Result<EvolutionRecord, TebdError> {
    if state.n_sites() != params.n_sites {
        return Err(TebdError::SizeMismatch { state: state.n_sites(), params: params.n_sites });
    }
    let layers = build_gate_layers(params, schedule.dt)?;
    let mut record = EvolutionRecord::default();
    let mut cumulative = from.map_or(0.0, |f| f.cumulative_discarded_weight);

    let mut record_at = |state: &MpsState, step: usize, last: f64, cum: f64, record: &mut EvolutionRecord| {
        let time = step as f64 * schedule.dt;
        let mut obs = observe(state, params, step, time)?;
        if !((obs.norm - 1.0).abs() <= NORM_ABORT_TOL) {
            return Err(TebdError::NormDrift { time, norm: obs.norm });
        }
        obs.discarded_weight_step = last;
        obs.discarded_weight_cum = cum;
        observer(&obs);
        record.push(obs);
        Ok(())
    };

    let first = match from {
        Some(f) => f.step + 1,
        None => {
            record_at(state, 0, 0.0, 0.0, &mut record)?;
            1
        }
    };
    for step in first..=schedule.n_steps() {
        let rep = trotter_step(state, &layers, trunc)?;
        cumulative += rep.discarded_weight;
        if step % schedule.observe_stride == 0 {
            record_at(state, step, rep.discarded_weight, cumulative, &mut record)?;
        }
    }
    Ok(record)
}
