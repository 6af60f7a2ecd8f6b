//! Quantum sampling along a slowly varying sequence of chains.
//!
//! Starting from `|π_0⟩|0⟩|0…0⟩`, each step `i` runs the fixed-point
//! recursion with approximate reflections about `|π_i⟩|0⟩` and
//! `|π_{i+1}⟩|0⟩`. Measuring `Λ_x = |x⟩⟨x| ⊗ |0⟩⟨0| ⊗ |0…0⟩⟨0…0|` gives
//! `π̃(x)`; the leftover mass is the outcome `⊥`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::fixed_point::{self, aligned_distance, chain_prepare, phase_aligned_distance, AmplificationPlan};
use crate::check::BoundCheck;
use crate::error::{Error, Result};
use crate::markov_core::{self, Distribution, StochasticMatrix};
use crate::projected::ProjectedSpace;
use crate::approx_reflection::{ancillas_per_block, block_count, exact_reflection, ApproxReflection, DetectorConfig};
use crate::quantum_sim::{dimension_cap, sample_indices, RegisterLayout, StateVector, C64};
use crate::szegedy_walk::{build_walk, quantum_sample, PhaseGap, WalkOperator};

/// Chains `P_0 … P_r` with their stationary distributions and gaps.
#[derive(Debug, Clone)]
pub struct ChainSequence {
    pub chains: Vec<StochasticMatrix>,
    pub stationary: Vec<Distribution>,
    /// Spectral gap of each chain.
    pub gaps: Vec<f64>,
    /// `min_i |⟨π_i|π_{i+1}⟩|^2`, or 1 when `r = 0`.
    pub p: f64,
    pub delta: f64,
    /// Smallest phase gap in turns.
    pub delta_turns: f64,
}

impl ChainSequence {
    pub fn new(chains: Vec<StochasticMatrix>) -> Result<Self> {
        let n = chains.first().ok_or(Error::Empty)?.len();
        let mut stationary = Vec::with_capacity(chains.len());
        let mut gaps = Vec::with_capacity(chains.len());
        for chain in &chains {
            if chain.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: chain.len(),
                });
            }
            gaps.push(markov_core::spectral_gap(chain)?.gap);
            stationary.push(markov_core::stationary_distribution(chain)?);
        }
        let mut p = 1.0f64;
        for pair in stationary.windows(2) {
            p = p.min(pair[0].fidelity(&pair[1])?);
        }
        let delta = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let delta_turns = PhaseGap::from_spectral_gap(delta).turns;
        Ok(Self {
            chains,
            stationary,
            gaps,
            p,
            delta,
            delta_turns,
        })
    }

    pub fn r(&self) -> usize {
        self.chains.len() - 1
    }

    pub fn states(&self) -> usize {
        self.chains[0].len()
    }
}

/// Parameters of one sampling run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerParams {
    pub eps: f64,
    pub r: usize,
    pub p: f64,
    pub eps1: f64,
    #[serde(rename = "L")]
    pub budget: f64,
    pub eps2: f64,
    pub a: usize,
    pub c: usize,
    pub m: u32,
    #[serde(rename = "M")]
    pub big_m: u64,
    pub delta_turns: f64,
    /// `r = 0` or `p = 1`: the initial sample is already the target.
    pub trivial: bool,
}

pub fn plan_parameters(seq: &ChainSequence, eps: f64) -> Result<SamplerParams> {
    plan_for(seq.r(), seq.p, seq.delta_turns, eps)
}

/// `ε₁ = ε/4`, `L = 12 r ln(8r/ε) / ln(1/(1-p))`, `ε₂ = ε² / (64 L²)`,
/// `a = ⌈log2(1/Δ)⌉`, `c = ⌈log2(1/sqrt(ε₂))⌉`.
pub fn plan_for(r: usize, p: f64, delta_turns: f64, eps: f64) -> Result<SamplerParams> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "overlap bound p must lie in (0, 1], got {p}"
        )));
    }
    let a = ancillas_per_block(delta_turns)?;
    let eps1 = eps / 4.0;
    if r == 0 || p == 1.0 {
        return Ok(SamplerParams {
            eps,
            r,
            p,
            eps1,
            budget: 0.0,
            eps2: 0.0,
            a,
            c: 0,
            m: 0,
            big_m: 1,
            delta_turns,
            trivial: true,
        });
    }
    let plan = fixed_point::plan(p, r, eps1)?;
    let budget = 12.0 * r as f64 * (8.0 * r as f64 / eps).ln() / (1.0 / (1.0 - p)).ln();
    let eps2 = eps * eps / (64.0 * budget * budget);
    Ok(SamplerParams {
        eps,
        r,
        p,
        eps1,
        budget,
        eps2,
        a,
        c: block_count(eps2)?,
        m: plan.m,
        big_m: plan.big_m,
        delta_turns,
        trivial: false,
    })
}

impl SamplerParams {
    pub fn amplification_plan(&self) -> AmplificationPlan {
        AmplificationPlan {
            p: self.p,
            r: self.r,
            eps1: self.eps1,
            m: self.m,
            big_m: self.big_m,
            budget: self.budget,
        }
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            a: self.a,
            c: self.c,
            eps2: self.eps2,
            delta_turns: self.delta_turns,
            transform: Default::default(),
        }
    }

    /// `⌈log2(96 r ln(8r/ε) / (ε ln(1/(1-p))))⌉`.
    pub fn c_closed_form(&self) -> usize {
        let r = self.r as f64;
        let x = 96.0 * r * (8.0 * r / self.eps).ln() / (self.eps * (1.0 / (1.0 - self.p)).ln());
        x.log2().ceil() as usize
    }

    /// `2^{a+1} c L`.
    pub fn cw_bound(&self) -> f64 {
        (1u64 << (self.a + 1)) as f64 * self.c as f64 * self.budget
    }

    /// `ε₁ + 2 L sqrt(ε₂)`.
    pub fn error_budget(&self) -> f64 {
        self.eps1 + 2.0 * self.budget * self.eps2.sqrt()
    }

    /// Reflections the run will apply: `r (3^m - 1)`.
    pub fn reflections(&self) -> u64 {
        if self.trivial {
            0
        } else {
            self.amplification_plan().reflections()
        }
    }

    /// Controlled-`W` calls the run will make.
    pub fn predicted_cw(&self) -> u64 {
        self.reflections() * self.detector().cw_per_reflection()
    }

    /// Register size of a dense run, `N^2 2^{ac}`.
    pub fn dense_dim(&self, n: usize) -> Option<usize> {
        let shift = u32::try_from(self.a * self.c).ok()?;
        (n * n).checked_mul(1usize.checked_shl(shift)?)
    }
}

/// Simulation strategy for the approximate reflections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Dense when the register fits the dimension cap, projected otherwise.
    #[default]
    Auto,
    Dense,
    Projected,
}

/// `π̃` over `Ω` together with the mass of `⊥`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDistribution {
    pub probs: Vec<f64>,
    pub bottom: f64,
}

impl OutputDistribution {
    /// `π̃(x)` from the walk-register block with ancillas zero, and `⊥`
    /// as whatever is left of `norm_squared`.
    pub fn from_zero_block(zero_block: &DVector<C64>, n: usize, norm_squared: f64) -> Self {
        let probs: Vec<f64> = (0..n).map(|x| zero_block[x * n].norm_sqr()).collect();
        let bottom = (norm_squared - probs.iter().sum::<f64>()).max(0.0);
        Self { probs, bottom }
    }

    /// Variation distance over `Ω ∪ {⊥}`, where the target puts no mass on `⊥`.
    pub fn total_variation(&self, target: &Distribution) -> Result<f64> {
        if target.len() != self.probs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.probs.len(),
                got: target.len(),
            });
        }
        let diff: f64 = self
            .probs
            .iter()
            .zip(target.probs())
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(0.5 * (diff + self.bottom))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.bottom
    }

    /// Seeded draws; `None` is `⊥`.
    pub fn sample(&self, shots: usize, seed: u64) -> Vec<Option<usize>> {
        let n = self.probs.len();
        sample_indices(&self.probs, self.bottom, shots, seed)
            .into_iter()
            .map(|i| (i < n).then_some(i))
            .collect()
    }
}

/// `π̃` for a state on the `system ⊗ coin ⊗ ancilla` layout.
pub fn output_distribution(state: &StateVector) -> OutputDistribution {
    let n = state.layout().system_dim;
    let block = state.ancilla_zero_block();
    let coin = state.layout().coin_dim;
    let probs: Vec<f64> = (0..n).map(|x| block[x * coin].norm_sqr()).collect();
    let bottom = (state.norm().powi(2) - probs.iter().sum::<f64>()).max(0.0);
    OutputDistribution { probs, bottom }
}

/// Bound checks attached to a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleChecks {
    /// `D(π̃_r, π_r) ≤ ε`.
    pub tv: BoundCheck,
    /// `D(π̃_r, π_r) ≤ 2 ||ψ̃ - ψ||`.
    pub tv_state: BoundCheck,
    /// `||ψ̃ - ψ|| ≤ ε₁ + 2 L sqrt(ε₂)`.
    pub error_budget: BoundCheck,
    /// Same run with exact reflections: `||ψ' - ψ|| ≤ ε₁`.
    pub exact_preparation: BoundCheck,
    /// Controlled-`W` calls `≤ 2^{a+1} c L`.
    pub cost: BoundCheck,
}

impl SampleChecks {
    pub fn all_ok(&self) -> bool {
        self.tv.ok
            && self.tv_state.ok
            && self.error_budget.ok
            && self.exact_preparation.ok
            && self.cost.ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub eps: f64,
    pub r: usize,
    pub p: f64,
    pub delta: f64,
    pub delta_turns: f64,
    #[serde(rename = "L")]
    pub budget: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub a: usize,
    pub c: usize,
    pub m: u32,
    #[serde(rename = "M")]
    pub big_m: u64,
    pub backend: Backend,
    pub reflections: u64,
    pub cw_used: u64,
    pub cw_bound: f64,
    pub tv_measured: f64,
    /// Phase-aligned `||ψ̃ - |π_r⟩|0⟩|0…0⟩||`.
    pub state_error: f64,
    /// The same distance with exact reflections in place of `R̃`.
    pub exact_prep_error: f64,
    pub target: Vec<f64>,
    pub distribution: OutputDistribution,
    pub checks: SampleChecks,
}

/// Plans with the sequence's own `p` and runs from `|π_0⟩|0⟩`.
pub fn sample(seq: &ChainSequence, eps: f64, backend: Backend) -> Result<SampleResult> {
    let params = plan_parameters(seq, eps)?;
    run_from_stationary(seq, &params, backend)
}

pub fn run_from_stationary(
    seq: &ChainSequence,
    params: &SamplerParams,
    backend: Backend,
) -> Result<SampleResult> {
    let initial = quantum_sample(&seq.stationary[0]);
    run(seq, &initial, params, backend)
}

/// Runs the pipeline from a walk-register vector `initial`, which must be
/// `|π_0⟩|0⟩` up to global phase.
pub fn run(
    seq: &ChainSequence,
    initial: &DVector<C64>,
    params: &SamplerParams,
    backend: Backend,
) -> Result<SampleResult> {
    if params.r != seq.r() {
        return Err(Error::InvalidParameter(format!(
            "parameters planned for r = {} but the sequence has r = {}",
            params.r,
            seq.r()
        )));
    }
    let n = seq.states();
    let ideal_start = quantum_sample(&seq.stationary[0]);
    if initial.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: initial.len(),
        });
    }
    let start_dev = aligned_distance(initial, &ideal_start);
    if start_dev > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "initial state is {start_dev:e} away from the stationary sample of P_0"
        )));
    }
    let target_dist = &seq.stationary[seq.r()];
    let target = quantum_sample(target_dist);

    if params.trivial {
        let distribution = OutputDistribution::from_zero_block(initial, n, initial.norm_squared());
        let state_error = aligned_distance(initial, &target);
        return Ok(finish(seq, params, Backend::Auto, 0, 0, distribution, state_error, state_error));
    }

    let walks: Vec<WalkOperator> = seq.chains.iter().map(build_walk).collect::<Result<_>>()?;
    let exact_prep_error = exact_preparation_error(&walks, initial, &target, params)?;
    let plan = params.amplification_plan();
    let config = params.detector();
    let resolved = match backend {
        Backend::Auto => match params.dense_dim(n) {
            Some(dim) if dim <= dimension_cap() => Backend::Dense,
            _ => Backend::Projected,
        },
        other => other,
    };

    let (distribution, state_error, reflections, cw_used) = match resolved {
        Backend::Dense => {
            let layout = RegisterLayout::new(n, n, config.ancilla_qubits())?;
            let oracles: Vec<ApproxReflection> =
                walks.iter().map(|w| ApproxReflection::new(w, config)).collect();
            let start = StateVector::from_walk_vector(layout, initial)?;
            let out = chain_prepare(start, &oracles, &plan)?;
            let ideal = StateVector::from_walk_vector(layout, &target)?;
            let err = phase_aligned_distance(&out.state, &ideal)?;
            let cw = oracles.iter().map(ApproxReflection::cw_invocations).sum();
            (output_distribution(&out.state), err, out.reflections, cw)
        }
        _ => {
            let unitaries: Vec<_> = walks.iter().map(|w| w.unitary()).collect();
            let space = ProjectedSpace::new(&unitaries, config)?;
            let oracles = (0..walks.len())
                .map(|k| space.reflection(k))
                .collect::<Result<Vec<_>>>()?;
            let out = chain_prepare(space.embed(initial)?, &oracles, &plan)?;
            let dist = OutputDistribution::from_zero_block(
                &space.zero_block(&out.state),
                n,
                space.norm_squared(&out.state),
            );
            let err = space.distance_to_embedded(&out.state, &target);
            let cw = oracles.iter().map(|o| o.cw_invocations()).sum();
            (dist, err, out.reflections, cw)
        }
    };
    Ok(finish(
        seq,
        params,
        resolved,
        reflections,
        cw_used,
        distribution,
        state_error,
        exact_prep_error,
    ))
}

/// Distance to `|π_r⟩|0⟩` after the same recursion with exact reflections.
fn exact_preparation_error(
    walks: &[WalkOperator],
    initial: &DVector<C64>,
    target: &DVector<C64>,
    params: &SamplerParams,
) -> Result<f64> {
    let n = walks[0].states();
    let layout = RegisterLayout::new(n, n, 0)?;
    let oracles = walks.iter().map(exact_reflection).collect::<Result<Vec<_>>>()?;
    let out = chain_prepare(
        StateVector::from_walk_vector(layout, initial)?,
        &oracles,
        &params.amplification_plan(),
    )?;
    phase_aligned_distance(&out.state, &StateVector::from_walk_vector(layout, target)?)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    seq: &ChainSequence,
    params: &SamplerParams,
    backend: Backend,
    reflections: u64,
    cw_used: u64,
    distribution: OutputDistribution,
    state_error: f64,
    exact_prep_error: f64,
) -> SampleResult {
    let target = &seq.stationary[seq.r()];
    let tv = distribution
        .total_variation(target)
        .expect("output and target share the state space");
    let cw_bound = params.cw_bound();
    SampleResult {
        eps: params.eps,
        r: params.r,
        p: params.p,
        delta: seq.delta,
        delta_turns: params.delta_turns,
        budget: params.budget,
        eps1: params.eps1,
        eps2: params.eps2,
        a: params.a,
        c: params.c,
        m: params.m,
        big_m: params.big_m,
        backend,
        reflections,
        cw_used,
        cw_bound,
        tv_measured: tv,
        state_error,
        exact_prep_error,
        target: target.probs().to_vec(),
        checks: SampleChecks {
            tv: BoundCheck::at_most(tv, params.eps),
            tv_state: BoundCheck::at_most(tv, 2.0 * state_error),
            error_budget: BoundCheck::at_most(state_error, params.error_budget()),
            exact_preparation: BoundCheck::at_most(exact_prep_error, params.eps1),
            cost: BoundCheck::at_most(cw_used as f64, cw_bound),
        },
        distribution,
    }
}
