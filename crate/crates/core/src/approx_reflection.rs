//! Phase-detector circuits and approximate reflections about `|π⟩|0⟩`.
//!
//! The detector `V` runs `c` independent phase-estimation blocks of `a`
//! ancilla qubits each. Block `b` owns ancilla qubits `b*a .. b*a + a`, and
//! qubit `b*a + l` controls `W^(2^l)`. The closing transform is a Hadamard
//! layer: only the all-zeros outcome matters and
//! `⟨0…0|DFT^dagger = ⟨0…0|H^{⊗a}`.
//!
//! `R̃ = V^dagger (I ⊗ Q) V` with `Q = ω|0…0⟩⟨0…0| + (I - |0…0⟩⟨0…0|)`.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::fixed_point::{omega, OracleMode, ReflectionOracle};
use crate::error::{Error, Result};
use crate::quantum_sim::{
    apply_controlled_matrix, apply_matrix, dft, hadamard_layer, InvocationCounter, StateVector,
    UnitaryOp, Wires, C64,
};
use crate::szegedy_walk::{walk_spectrum, BusySubspace, WalkOperator};

/// Closing transform of each phase-estimation block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseTransform {
    #[default]
    Hadamard,
    InverseFourier,
}

/// `a = ⌈log2(1/Δ)⌉` with `Δ` in turns.
pub fn ancillas_per_block(delta_turns: f64) -> Result<usize> {
    if !(delta_turns > 0.0 && delta_turns <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "phase gap in turns must lie in (0, 1], got {delta_turns}"
        )));
    }
    Ok((1.0 / delta_turns).log2().ceil().max(0.0) as usize)
}

/// `c = ⌈log2(1/sqrt(ε₂))⌉`.
pub fn block_count(eps2: f64) -> Result<usize> {
    if !(eps2 > 0.0 && eps2 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps2 must lie in (0, 1), got {eps2}"
        )));
    }
    Ok((1.0 / eps2.sqrt()).log2().ceil() as usize)
}

/// Amplitude of `|0…0⟩` after one block on an eigenvector `e^{2πiφ}`:
/// `2^{-a} sum_k e^{2πikφ}`.
pub fn block_zero_amplitude(a: usize, phi_turns: f64) -> C64 {
    let size = 1usize << a;
    let sum: C64 = (0..size)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 * phi_turns))
        .sum();
    sum / size as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub a: usize,
    pub c: usize,
    pub eps2: f64,
    pub delta_turns: f64,
    #[serde(default)]
    pub transform: PhaseTransform,
}

/// Config report as emitted by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub a: usize,
    pub c: usize,
    pub eps2: f64,
    pub delta_turns: f64,
    pub cw_invocations_per_reflection: u64,
}

impl DetectorConfig {
    pub fn new(delta_turns: f64, eps2: f64) -> Result<Self> {
        Ok(Self {
            a: ancillas_per_block(delta_turns)?,
            c: block_count(eps2)?,
            eps2,
            delta_turns,
            transform: PhaseTransform::Hadamard,
        })
    }

    /// Explicit sizes; `ε₂ = 4^{-c}` and `Δ = 2^{-a}`.
    pub fn with_sizes(a: usize, c: usize) -> Result<Self> {
        if a == 0 || c == 0 {
            return Err(Error::InvalidParameter(
                "detector needs at least one block of one qubit".into(),
            ));
        }
        Ok(Self {
            a,
            c,
            eps2: 0.25f64.powi(c as i32),
            delta_turns: 0.5f64.powi(a as i32),
            transform: PhaseTransform::Hadamard,
        })
    }

    pub fn with_transform(mut self, transform: PhaseTransform) -> Self {
        self.transform = transform;
        self
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.a * self.c
    }

    /// Controlled-`W` calls in one `V`: `(2^a - 1) c`.
    pub fn cw_per_detector(&self) -> u64 {
        ((1u64 << self.a) - 1) * self.c as u64
    }

    /// Controlled-`W` calls in one `R̃`: `2 (2^a - 1) c`.
    pub fn cw_per_reflection(&self) -> u64 {
        2 * self.cw_per_detector()
    }

    /// `2^{a+1} c`.
    pub fn cw_bound_per_reflection(&self) -> u64 {
        (1u64 << (self.a + 1)) * self.c as u64
    }

    pub fn report(&self) -> DetectorReport {
        DetectorReport {
            a: self.a,
            c: self.c,
            eps2: self.eps2,
            delta_turns: self.delta_turns,
            cw_invocations_per_reflection: self.cw_per_reflection(),
        }
    }
}

/// The detector `V` for one walk with its powers precomputed.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    powers: Vec<DMatrix<C64>>,
    inverse_powers: Vec<DMatrix<C64>>,
    walk_dim: usize,
}

impl Detector {
    pub fn new(walk: &UnitaryOp, config: DetectorConfig) -> Self {
        let powers: Vec<DMatrix<C64>> = (0..config.a).map(|l| walk.pow2(l as u32)).collect();
        let inverse_powers = powers.iter().map(|p| p.adjoint()).collect();
        Self {
            config,
            powers,
            inverse_powers,
            walk_dim: walk.dim(),
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    fn check_layout(&self, state: &StateVector) -> Result<()> {
        let layout = state.layout();
        if layout.walk_dim() != self.walk_dim {
            return Err(Error::DimensionMismatch {
                expected: self.walk_dim,
                got: layout.walk_dim(),
            });
        }
        if layout.ancilla_qubits != self.config.ancilla_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.config.ancilla_qubits(),
                got: layout.ancilla_qubits,
            });
        }
        Ok(())
    }

    fn block_wires(&self, b: usize) -> Wires {
        let a = self.config.a;
        Wires::Ancillas((b * a..(b + 1) * a).collect())
    }

    fn closing(&self) -> DMatrix<C64> {
        match self.config.transform {
            PhaseTransform::Hadamard => hadamard_layer(self.config.a),
            PhaseTransform::InverseFourier => dft(self.config.a).adjoint(),
        }
    }

    /// `V`, with no requirement on the ancillas.
    pub fn forward(&self, state: &StateVector, counter: &InvocationCounter) -> Result<StateVector> {
        self.check_layout(state)?;
        let a = self.config.a;
        let h = hadamard_layer(a);
        let closing = self.closing();
        let mut s = state.clone();
        for b in 0..self.config.c {
            let wires = self.block_wires(b);
            s = apply_matrix(&h, &s, &wires)?;
            for (l, power) in self.powers.iter().enumerate() {
                s = apply_controlled_matrix(power, b * a + l, &s)?;
            }
            s = apply_matrix(&closing, &s, &wires)?;
        }
        counter.add(self.config.cw_per_detector());
        Ok(s)
    }

    /// `V^dagger`.
    pub fn backward(&self, state: &StateVector, counter: &InvocationCounter) -> Result<StateVector> {
        self.check_layout(state)?;
        let a = self.config.a;
        let h = hadamard_layer(a);
        let opening = self.closing().adjoint();
        let mut s = state.clone();
        for b in (0..self.config.c).rev() {
            let wires = self.block_wires(b);
            s = apply_matrix(&opening, &s, &wires)?;
            for (l, power) in self.inverse_powers.iter().enumerate().rev() {
                s = apply_controlled_matrix(power, b * a + l, &s)?;
            }
            s = apply_matrix(&h, &s, &wires)?;
        }
        counter.add(self.config.cw_per_detector());
        Ok(s)
    }
}

/// `V` on a state whose ancillas are in `|0…0⟩`.
pub fn apply_detector(
    walk: &WalkOperator,
    config: DetectorConfig,
    state: &StateVector,
    counter: &InvocationCounter,
) -> Result<StateVector> {
    let residual = state.ancilla_residual();
    if residual > 1e-9 {
        return Err(Error::AncillaNotClean(residual));
    }
    Detector::new(walk.unitary(), config).forward(state, counter)
}

/// Multiplies every amplitude with all ancillas zero by `phase`.
fn ancilla_zero_phase(state: StateVector, phase: C64) -> StateVector {
    let layout = state.layout();
    let shift = layout.ancilla_qubits;
    let mut amps = state.into_amplitudes();
    for w in 0..layout.walk_dim() {
        amps[w << shift] *= phase;
    }
    StateVector::unnormalized(layout, amps).expect("layout unchanged")
}

/// `R̃ = V^dagger (I ⊗ Q) V` with controlled-`W` metering.
#[derive(Debug)]
pub struct ApproxReflection {
    detector: Detector,
    counter: InvocationCounter,
    applications: AtomicU64,
}

impl ApproxReflection {
    pub fn new(walk: &WalkOperator, config: DetectorConfig) -> Self {
        Self {
            detector: Detector::new(walk.unitary(), config),
            counter: InvocationCounter::new(),
            applications: AtomicU64::new(0),
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        self.detector.config()
    }

    /// Controlled-`W` invocations so far.
    pub fn cw_invocations(&self) -> u64 {
        self.counter.get()
    }

    /// Applications of `R̃` or `R̃^dagger` so far.
    pub fn applications(&self) -> u64 {
        self.applications.load(Ordering::Relaxed)
    }

    fn with_phase(&self, state: &StateVector, phase: C64) -> Result<StateVector> {
        let s = self.detector.forward(state, &self.counter)?;
        let s = ancilla_zero_phase(s, phase);
        let s = self.detector.backward(&s, &self.counter)?;
        self.applications.fetch_add(1, Ordering::Relaxed);
        Ok(s)
    }
}

pub fn apply_approx_reflection(refl: &ApproxReflection, state: &StateVector) -> Result<StateVector> {
    refl.with_phase(state, omega())
}

impl ReflectionOracle for ApproxReflection {
    type State = StateVector;

    fn reflect(&self, state: &StateVector) -> Result<StateVector> {
        self.with_phase(state, omega())
    }

    fn reflect_inverse(&self, state: &StateVector) -> Result<StateVector> {
        self.with_phase(state, omega().conj())
    }

    fn mode(&self) -> OracleMode {
        OracleMode::CircuitApproximate
    }
}

/// `(ω|v⟩⟨v| + I - |v⟩⟨v|) ⊗ I_anc` with `v` the walk's `+1` busy
/// eigenvector.
#[derive(Debug, Clone)]
pub struct ExactReflection {
    vector: DVector<C64>,
    busy: BusySubspace,
}

pub fn exact_reflection(walk: &WalkOperator) -> Result<ExactReflection> {
    let spectrum = walk_spectrum(walk)?;
    Ok(ExactReflection {
        vector: spectrum.stationary_vector,
        busy: spectrum.busy,
    })
}

impl ExactReflection {
    pub fn vector(&self) -> &DVector<C64> {
        &self.vector
    }

    pub fn busy(&self) -> &BusySubspace {
        &self.busy
    }

    fn with_phase(&self, state: &StateVector, phase: C64) -> Result<StateVector> {
        let layout = state.layout();
        if layout.walk_dim() != self.vector.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vector.len(),
                got: layout.walk_dim(),
            });
        }
        let shift = layout.ancilla_qubits;
        let factor = phase - C64::new(1.0, 0.0);
        let mut amps = state.amplitudes().clone();
        for bits in 0..layout.ancilla_dim() {
            let overlap: C64 = self
                .vector
                .iter()
                .enumerate()
                .map(|(w, v)| v.conj() * amps[(w << shift) | bits])
                .sum();
            for (w, v) in self.vector.iter().enumerate() {
                amps[(w << shift) | bits] += factor * overlap * v;
            }
        }
        StateVector::unnormalized(layout, amps)
    }

    /// Norm of the component of `state` outside `busy ⊗ ancillas`.
    pub fn idle_component(&self, state: &StateVector) -> f64 {
        idle_component(&self.busy, state)
    }
}

impl ReflectionOracle for ExactReflection {
    type State = StateVector;

    fn reflect(&self, state: &StateVector) -> Result<StateVector> {
        self.with_phase(state, omega())
    }

    fn reflect_inverse(&self, state: &StateVector) -> Result<StateVector> {
        self.with_phase(state, omega().conj())
    }

    fn mode(&self) -> OracleMode {
        OracleMode::ExactSpectral
    }
}

/// `||((I - Π_busy) ⊗ I) ψ||`.
pub fn idle_component(busy: &BusySubspace, state: &StateVector) -> f64 {
    let layout = state.layout();
    let shift = layout.ancilla_qubits;
    let amps = state.amplitudes();
    let mut total = 0.0;
    for bits in 0..layout.ancilla_dim() {
        let slice = DVector::from_fn(layout.walk_dim(), |w, _| amps[(w << shift) | bits]);
        let busy_part = &busy.projector * &slice;
        total += (slice - busy_part).norm_squared();
    }
    total.sqrt()
}
