//! Exact simulation of approximate reflections without the ancilla register.
//!
//! Each `R̃_k = I + (ω - 1) J_k J_k^dagger` with the isometry
//! `J_k = V_k^dagger E`, `E = I ⊗ |0…0⟩`. Starting from `E h`, every state
//! reached by products of `R̃_k` and their inverses has the form
//! `ψ = sum_k J_k u_k` with walk-register coefficients `u_k`. Slot 0 holds
//! the identity walk, for which `J_0 = E`.
//!
//! Everything observable follows from the blocks `G_kl = J_k^dagger J_l`.
//! With `A_m = 2^{-a} sum_j (-1)^{|j ∧ m|} W^j` for one block,
//! `G_kl = F_kl^c(I)` where `F_kl(X) = sum_m A_m^(k) X A_m^(l)dagger`.
//! The cost is independent of `a·c`, so it reaches detector sizes far past
//! what a dense state vector allows.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};

use crate::fixed_point::{omega, OracleMode, ReflectionOracle};
use crate::error::{Error, Result};
use crate::approx_reflection::{Detector, DetectorConfig, PhaseTransform};
use crate::quantum_sim::{InvocationCounter, RegisterLayout, StateVector, UnitaryOp, C64};

/// One-block matrices `A_m`, `m < 2^a`.
fn block_operators(w: &DMatrix<C64>, a: usize) -> Vec<DMatrix<C64>> {
    let size = 1usize << a;
    let d = w.nrows();
    let mut powers = Vec::with_capacity(size);
    powers.push(DMatrix::<C64>::identity(d, d));
    for j in 1..size {
        powers.push(w * &powers[j - 1]);
    }
    let scale = 1.0 / size as f64;
    (0..size)
        .map(|m| {
            let mut acc = DMatrix::<C64>::zeros(d, d);
            for (j, p) in powers.iter().enumerate() {
                if (j & m).count_ones() % 2 == 0 {
                    acc += p;
                } else {
                    acc -= p;
                }
            }
            acc * C64::new(scale, 0.0)
        })
        .collect()
}

/// Gram blocks for the identity walk plus a list of walks.
#[derive(Debug, Clone)]
pub struct ProjectedSpace {
    config: DetectorConfig,
    walk_dim: usize,
    unitaries: Vec<UnitaryOp>,
    gram: Vec<Vec<DMatrix<C64>>>,
}

/// Coefficients `u_k`, one per slot of a [`ProjectedSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedState {
    coeffs: Vec<DVector<C64>>,
}

impl ProjectedState {
    pub fn coeffs(&self) -> &[DVector<C64>] {
        &self.coeffs
    }
}

impl ProjectedSpace {
    /// Slot `k + 1` holds `walks[k]`.
    pub fn new(walks: &[&UnitaryOp], config: DetectorConfig) -> Result<Self> {
        if config.transform != PhaseTransform::Hadamard {
            return Err(Error::InvalidParameter(
                "projected backend models Hadamard detectors".into(),
            ));
        }
        let d = walks.first().map_or(0, |w| w.dim());
        if d == 0 {
            return Err(Error::Empty);
        }
        for w in walks {
            if w.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: w.dim(),
                });
            }
        }
        let mut unitaries = vec![UnitaryOp::identity(d)];
        unitaries.extend(walks.iter().map(|w| (*w).clone()));
        let blocks: Vec<Vec<DMatrix<C64>>> = unitaries
            .iter()
            .map(|u| block_operators(u.matrix(), config.a))
            .collect();
        let slots = unitaries.len();
        let mut gram = vec![vec![DMatrix::<C64>::zeros(d, d); slots]; slots];
        for k in 0..slots {
            for l in k..slots {
                let mut g = DMatrix::<C64>::identity(d, d);
                for _ in 0..config.c {
                    let mut next = DMatrix::<C64>::zeros(d, d);
                    for (ak, al) in blocks[k].iter().zip(&blocks[l]) {
                        next += ak * &g * al.adjoint();
                    }
                    g = next;
                }
                gram[l][k] = g.adjoint();
                gram[k][l] = g;
            }
        }
        Ok(Self {
            config,
            walk_dim: d,
            unitaries,
            gram,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    /// Number of slots including the identity slot.
    pub fn slots(&self) -> usize {
        self.gram.len()
    }

    pub fn walk_dim(&self) -> usize {
        self.walk_dim
    }

    /// `G_kl = J_k^dagger J_l`.
    pub fn gram(&self, k: usize, l: usize) -> &DMatrix<C64> {
        &self.gram[k][l]
    }

    /// `E h`.
    pub fn embed(&self, h: &DVector<C64>) -> Result<ProjectedState> {
        if h.len() != self.walk_dim {
            return Err(Error::DimensionMismatch {
                expected: self.walk_dim,
                got: h.len(),
            });
        }
        let mut coeffs = vec![DVector::zeros(self.walk_dim); self.slots()];
        coeffs[0] = h.clone();
        Ok(ProjectedState { coeffs })
    }

    /// `J_k^dagger ψ = sum_j G_kj u_j`.
    pub fn project(&self, k: usize, state: &ProjectedState) -> DVector<C64> {
        let mut acc = DVector::zeros(self.walk_dim);
        for (g, u) in self.gram[k].iter().zip(&state.coeffs) {
            acc += g * u;
        }
        acc
    }

    /// The walk-register block with all ancillas zero, `E^dagger ψ`.
    pub fn zero_block(&self, state: &ProjectedState) -> DVector<C64> {
        self.project(0, state)
    }

    /// `⟨a|b⟩`.
    pub fn inner(&self, a: &ProjectedState, b: &ProjectedState) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (k, ak) in a.coeffs.iter().enumerate() {
            acc += ak.dotc(&self.project(k, b));
        }
        acc
    }

    pub fn norm_squared(&self, state: &ProjectedState) -> f64 {
        self.inner(state, state).re
    }

    /// `min_φ ||ψ - e^{iφ} E h||`, split as the ancilla-zero difference
    /// (subtracted directly) plus the mass outside `E`.
    pub fn distance_to_embedded(&self, state: &ProjectedState, h: &DVector<C64>) -> f64 {
        let zero = self.zero_block(state);
        let inside = crate::fixed_point::aligned_distance(&zero, h);
        let leak = (self.norm_squared(state) - zero.norm_squared()).max(0.0);
        (inside * inside + leak).sqrt()
    }

    /// Expands to the full register; needs `a·c` ancillas within the cap.
    pub fn to_dense(&self, state: &ProjectedState) -> Result<StateVector> {
        let layout = RegisterLayout::new(self.walk_dim, 1, self.config.ancilla_qubits())?;
        let scratch = InvocationCounter::new();
        let mut total = DVector::zeros(layout.total_dim());
        for (u, coeff) in self.unitaries.iter().zip(&state.coeffs) {
            let embedded = StateVector::from_walk_vector(layout, coeff)?;
            let back = Detector::new(u, self.config).backward(&embedded, &scratch)?;
            total += back.amplitudes();
        }
        StateVector::unnormalized(layout, total)
    }

    /// `R̃` for `walks[walk]`.
    pub fn reflection(&self, walk: usize) -> Result<ProjectedReflection<'_>> {
        if walk + 1 >= self.slots() {
            return Err(Error::IndexOutOfRange {
                index: walk,
                len: self.slots() - 1,
            });
        }
        Ok(ProjectedReflection {
            space: self,
            slot: walk + 1,
            counter: InvocationCounter::new(),
            applications: AtomicU64::new(0),
        })
    }
}

/// `R̃_k` acting on [`ProjectedState`] coefficients.
#[derive(Debug)]
pub struct ProjectedReflection<'a> {
    space: &'a ProjectedSpace,
    slot: usize,
    counter: InvocationCounter,
    applications: AtomicU64,
}

impl ProjectedReflection<'_> {
    pub fn cw_invocations(&self) -> u64 {
        self.counter.get()
    }

    pub fn applications(&self) -> u64 {
        self.applications.load(Ordering::Relaxed)
    }

    fn with_phase(&self, state: &ProjectedState, phase: C64) -> Result<ProjectedState> {
        if state.coeffs.len() != self.space.slots() {
            return Err(Error::DimensionMismatch {
                expected: self.space.slots(),
                got: state.coeffs.len(),
            });
        }
        let projected = self.space.project(self.slot, state);
        let mut out = state.clone();
        out.coeffs[self.slot] += projected * (phase - C64::new(1.0, 0.0));
        self.counter.add(self.space.config.cw_per_reflection());
        self.applications.fetch_add(1, Ordering::Relaxed);
        Ok(out)
    }
}

impl ReflectionOracle for ProjectedReflection<'_> {
    type State = ProjectedState;

    fn reflect(&self, state: &ProjectedState) -> Result<ProjectedState> {
        self.with_phase(state, omega())
    }

    fn reflect_inverse(&self, state: &ProjectedState) -> Result<ProjectedState> {
        self.with_phase(state, omega().conj())
    }

    fn mode(&self) -> OracleMode {
        OracleMode::CircuitApproximate
    }
}
