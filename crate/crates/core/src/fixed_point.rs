//! π/3 fixed-point amplitude amplification over abstract reflections.
//!
//! With `R_i = ω Π_i + Π_i^⊥`, `ω = e^{iπ/3}` and `U_{i;0} = I`,
//!
//! ```text
//! U_{i;m+1} = U_{i;m} R_i U_{i;m}^dagger R_{i+1} U_{i;m}
//! ```
//!
//! maps `|t_i⟩` to a state whose fidelity deficit with `|t_{i+1}⟩` is the
//! cube of the previous level's, so after `m` levels it is at most
//! `(1 - p)^{3^m}`.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum_sim::{InvocationCounter, StateVector, C64};

/// `e^{iπ/3}`.
pub fn omega() -> C64 {
    C64::from_polar(1.0, PI / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    ExactSpectral,
    CircuitApproximate,
}

/// A selective phase `R = ω Π + Π^⊥`, exact or approximate.
pub trait ReflectionOracle {
    type State: Clone;

    fn reflect(&self, state: &Self::State) -> Result<Self::State>;

    fn reflect_inverse(&self, state: &Self::State) -> Result<Self::State>;

    fn mode(&self) -> OracleMode;
}

/// `ω |t⟩⟨t| + (I - |t⟩⟨t|)` for an explicit unit vector `|t⟩`.
#[derive(Debug)]
pub struct ProjectorReflection {
    target: StateVector,
    invocations: InvocationCounter,
}

impl ProjectorReflection {
    pub fn new(target: StateVector) -> Result<Self> {
        let norm = target.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "reflection target has norm {norm}"
            )));
        }
        Ok(Self {
            target,
            invocations: InvocationCounter::new(),
        })
    }

    pub fn target(&self) -> &StateVector {
        &self.target
    }

    /// Applications of `R` or `R^dagger` so far.
    pub fn invocations(&self) -> u64 {
        self.invocations.get()
    }

    fn phase(&self, state: &StateVector, phase: C64) -> Result<StateVector> {
        let overlap = self.target.inner(state)?;
        self.invocations.add(1);
        state.add(&self.target.scale(overlap * (phase - C64::new(1.0, 0.0))))
    }
}

impl ReflectionOracle for ProjectorReflection {
    type State = StateVector;

    fn reflect(&self, state: &StateVector) -> Result<StateVector> {
        self.phase(state, omega())
    }

    fn reflect_inverse(&self, state: &StateVector) -> Result<StateVector> {
        self.phase(state, omega().conj())
    }

    fn mode(&self) -> OracleMode {
        OracleMode::ExactSpectral
    }
}

/// Output of [`amplify`] or [`chain_prepare`].
#[derive(Debug, Clone)]
pub struct Amplified<S> {
    pub state: S,
    /// Number of `R` and `R^dagger` applications.
    pub reflections: u64,
}

/// Reflections used by one `U_{i;m}`: `3^m - 1`.
pub fn reflections_per_level(m: u32) -> u64 {
    3u64.pow(m) - 1
}

struct Recursion<'a, O> {
    source: &'a O,
    target: &'a O,
    count: u64,
}

impl<O: ReflectionOracle> Recursion<'_, O> {
    fn forward(&mut self, m: u32, s: O::State) -> Result<O::State> {
        if m == 0 {
            return Ok(s);
        }
        let s = self.forward(m - 1, s)?;
        let s = self.target.reflect(&s)?;
        let s = self.backward(m - 1, s)?;
        let s = self.source.reflect(&s)?;
        self.count += 2;
        self.forward(m - 1, s)
    }

    fn backward(&mut self, m: u32, s: O::State) -> Result<O::State> {
        if m == 0 {
            return Ok(s);
        }
        let s = self.backward(m - 1, s)?;
        let s = self.source.reflect_inverse(&s)?;
        let s = self.forward(m - 1, s)?;
        let s = self.target.reflect_inverse(&s)?;
        self.count += 2;
        self.backward(m - 1, s)
    }
}

/// Applies `U_{m}` built from reflections about the source and target.
pub fn amplify<O: ReflectionOracle>(
    source: O::State,
    r_src: &O,
    r_tgt: &O,
    m: u32,
) -> Result<Amplified<O::State>> {
    let mut rec = Recursion {
        source: r_src,
        target: r_tgt,
        count: 0,
    };
    let state = rec.forward(m, source)?;
    Ok(Amplified {
        state,
        reflections: rec.count,
    })
}

/// Applies `U_{m}^dagger`.
pub fn amplify_inverse<O: ReflectionOracle>(
    state: O::State,
    r_src: &O,
    r_tgt: &O,
    m: u32,
) -> Result<Amplified<O::State>> {
    let mut rec = Recursion {
        source: r_src,
        target: r_tgt,
        count: 0,
    };
    let state = rec.backward(m, state)?;
    Ok(Amplified {
        state,
        reflections: rec.count,
    })
}

/// Parameters for chained preparation along `t_0, …, t_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplificationPlan {
    pub p: f64,
    pub r: usize,
    pub eps1: f64,
    pub m: u32,
    #[serde(rename = "M")]
    pub big_m: u64,
    #[serde(rename = "L")]
    pub budget: f64,
}

fn log_ratio(r: usize, eps1: f64, p: f64) -> f64 {
    (2.0 * r as f64 / eps1).ln() / (1.0 / (1.0 - p)).ln()
}

/// `M` is the least power of 3 with `M ≥ 2 ln(2r/ε₁) / ln(1/(1-p))` and
/// `L = 12 r ln(2r/ε₁) / ln(1/(1-p))`.
pub fn plan(p: f64, r: usize, eps1: f64) -> Result<AmplificationPlan> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "overlap bound p must lie in (0, 1], got {p}"
        )));
    }
    if r == 0 {
        return Err(Error::InvalidParameter("chain length r must be at least 1".into()));
    }
    if !(eps1 > 0.0 && eps1 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps1 must lie in (0, 1), got {eps1}"
        )));
    }
    // p = 1 makes the ratio 0: one level-0 step already lands on the target
    let ratio = if p == 1.0 { 0.0 } else { log_ratio(r, eps1, p) };
    let threshold = 2.0 * ratio;
    let mut big_m = 1u64;
    let mut m = 0u32;
    while (big_m as f64) < threshold {
        big_m *= 3;
        m += 1;
    }
    Ok(AmplificationPlan {
        p,
        r,
        eps1,
        m,
        big_m,
        budget: 12.0 * r as f64 * ratio,
    })
}

impl AmplificationPlan {
    /// `2 r sqrt((1-p)^M)`, the telescoped error bound.
    pub fn error_bound(&self) -> f64 {
        2.0 * self.r as f64 * (1.0 - self.p).powf(self.big_m as f64 / 2.0)
    }

    /// Exact reflection count of [`chain_prepare`]: `r (3^m - 1)`.
    pub fn reflections(&self) -> u64 {
        self.r as u64 * reflections_per_level(self.m)
    }

    /// `2rM ≤ L`; holds whenever `m ≥ 1`.
    pub fn budget_holds(&self) -> bool {
        2.0 * self.r as f64 * self.big_m as f64 <= self.budget
    }
}

/// Runs `U_{i;m}` for `i = 0, …, r-1`, using `oracles[i]` and
/// `oracles[i + 1]` at step `i`. `oracles` covers `t_0, …, t_r`.
pub fn chain_prepare<O: ReflectionOracle>(
    initial: O::State,
    oracles: &[O],
    plan: &AmplificationPlan,
) -> Result<Amplified<O::State>> {
    if oracles.len() != plan.r + 1 {
        return Err(Error::InvalidParameter(format!(
            "plan has r = {} but {} oracles were given",
            plan.r,
            oracles.len()
        )));
    }
    let mut state = initial;
    let mut reflections = 0;
    for pair in oracles.windows(2) {
        let step = amplify(state, &pair[0], &pair[1], plan.m)?;
        state = step.state;
        reflections += step.reflections;
    }
    Ok(Amplified { state, reflections })
}

/// `min_φ ||a - e^{iφ} b||`.
pub fn phase_aligned_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    a.inner(b)?;
    Ok(aligned_distance(a.amplitudes(), b.amplitudes()))
}

/// `min_φ ||a - e^{iφ} b||`, computed by subtracting the aligned vector.
pub fn aligned_distance(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
    let overlap = b.dotc(a);
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    (a - b * phase).norm()
}
