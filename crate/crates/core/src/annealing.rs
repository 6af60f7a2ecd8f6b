//! Quantum simulated annealing with Metropolis chains.
//!
//! The chain at inverse temperature `β` proposes a neighbor `y` of `x` with
//! probability `1/M` and accepts with `min{1, exp(-β(E(y) - E(x)))}`, so its
//! stationary distribution is `π_β(x) = exp(-βE(x)) / Z_β`. The schedule
//! `β_i = i/||H||` keeps consecutive quantum samples at fidelity `≥ 1/e`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::check::BoundCheck;
use crate::error::{Error, Result};
use crate::markov_core::{self, Distribution, StochasticMatrix};
use crate::quantum_sampler::{plan_for, run_from_stationary, Backend, ChainSequence, SampleResult};
use crate::szegedy_walk::PhaseGap;

/// Energies `E(x) ≥ 0` on a symmetric neighbor graph with `M ≥ max degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLandscape {
    energies: Vec<f64>,
    neighbors: Vec<Vec<usize>>,
    m_norm: usize,
}

impl EnergyLandscape {
    pub fn new(energies: Vec<f64>, neighbors: Vec<Vec<usize>>, m_norm: usize) -> Result<Self> {
        let d = energies.len();
        if d == 0 {
            return Err(Error::Empty);
        }
        if let Some((x, e)) = energies.iter().enumerate().find(|(_, e)| !(**e >= 0.0 && e.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "energy of state {x} must be finite and non-negative, got {e}"
            )));
        }
        if neighbors.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: neighbors.len(),
            });
        }
        for (x, list) in neighbors.iter().enumerate() {
            for (i, &y) in list.iter().enumerate() {
                if y >= d {
                    return Err(Error::IndexOutOfRange { index: y, len: d });
                }
                if y == x {
                    return Err(Error::InvalidParameter(format!("state {x} lists itself as a neighbor")));
                }
                if list[..i].contains(&y) {
                    return Err(Error::InvalidParameter(format!("state {x} lists neighbor {y} twice")));
                }
                if !neighbors[y].contains(&x) {
                    return Err(Error::InvalidParameter(format!(
                        "neighbor relation is not symmetric: {y} ∈ N({x}) but {x} ∉ N({y})"
                    )));
                }
            }
        }
        let max_degree = neighbors.iter().map(Vec::len).max().unwrap_or(0);
        if m_norm == 0 || m_norm < max_degree {
            return Err(Error::InvalidParameter(format!(
                "M = {m_norm} is below the maximum degree {max_degree}"
            )));
        }
        Ok(Self {
            energies,
            neighbors,
            m_norm,
        })
    }

    /// Complete graph on `energies.len()` states.
    pub fn complete(energies: Vec<f64>, m_norm: usize) -> Result<Self> {
        let d = energies.len();
        let neighbors = (0..d).map(|x| (0..d).filter(|&y| y != x).collect()).collect();
        Self::new(energies, neighbors, m_norm)
    }

    /// Unique ground state at energy 0 and `d - 1` states at `γ`, on the
    /// complete graph with `M = d`.
    pub fn two_level(d: usize, gamma: f64) -> Result<Self> {
        let mut energies = vec![gamma; d];
        if let Some(e) = energies.first_mut() {
            *e = 0.0;
        }
        Self::complete(energies, d)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn neighbors(&self) -> &[Vec<usize>] {
        &self.neighbors
    }

    pub fn m_norm(&self) -> usize {
        self.m_norm
    }

    pub fn d(&self) -> usize {
        self.energies.len()
    }

    /// `||H|| = max_x E(x)`.
    pub fn h_norm(&self) -> f64 {
        self.energies.iter().copied().fold(0.0, f64::max)
    }

    fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Gap between the two lowest distinct energies; 0 if all are equal.
    pub fn gamma(&self) -> f64 {
        let ground = self.min_energy();
        self.energies
            .iter()
            .copied()
            .filter(|&e| e > ground)
            .fold(None, |acc: Option<f64>, e| Some(acc.map_or(e, |a| a.min(e))))
            .map_or(0.0, |second| second - ground)
    }

    pub fn ground_states(&self) -> Vec<usize> {
        let ground = self.min_energy();
        (0..self.d()).filter(|&x| self.energies[x] == ground).collect()
    }
}

/// `{"energies": [...], "neighbors": [[...]], "M": int}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeFile {
    pub energies: Vec<f64>,
    pub neighbors: Vec<Vec<usize>>,
    #[serde(rename = "M")]
    pub m_norm: usize,
}

impl LandscapeFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_landscape(&self) -> Result<EnergyLandscape> {
        EnergyLandscape::new(self.energies.clone(), self.neighbors.clone(), self.m_norm)
    }
}

impl From<&EnergyLandscape> for LandscapeFile {
    fn from(l: &EnergyLandscape) -> Self {
        Self {
            energies: l.energies.clone(),
            neighbors: l.neighbors.clone(),
            m_norm: l.m_norm,
        }
    }
}

pub fn metropolis_chain(landscape: &EnergyLandscape, beta: f64) -> Result<StochasticMatrix> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!("beta must be finite and >= 0, got {beta}")));
    }
    let d = landscape.d();
    let m = landscape.m_norm as f64;
    let e = &landscape.energies;
    let mut rows = vec![vec![0.0; d]; d];
    for x in 0..d {
        let mut moved = 0.0;
        for &y in &landscape.neighbors[x] {
            let p = (-beta * (e[y] - e[x])).exp().min(1.0) / m;
            rows[x][y] = p;
            moved += p;
        }
        rows[x][x] = 1.0 - moved;
    }
    StochasticMatrix::from_rows(&rows)
}

/// `π_β` and `Z_β`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoltzmannTarget {
    pub beta: f64,
    pub pi_beta: Distribution,
    pub z_beta: f64,
}

pub fn boltzmann(landscape: &EnergyLandscape, beta: f64) -> Result<BoltzmannTarget> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
    }
    // weights relative to the ground energy never overflow
    let ground = landscape.min_energy();
    let weights: Vec<f64> = landscape
        .energies
        .iter()
        .map(|e| (-beta * (e - ground)).exp())
        .collect();
    let shifted: f64 = weights.iter().sum();
    let probs = weights.iter().map(|w| w / shifted).collect();
    Ok(BoltzmannTarget {
        beta,
        pi_beta: Distribution::new(probs)?,
        z_beta: shifted * (-beta * ground).exp(),
    })
}

/// `exp(-||H|| Δβ)`.
pub fn overlap_lower_bound(landscape: &EnergyLandscape, delta_beta: f64) -> f64 {
    (-landscape.h_norm() * delta_beta).exp()
}

/// `|⟨π_β|π_{β+Δβ}⟩|^2`.
pub fn measured_overlap(landscape: &EnergyLandscape, beta: f64, delta_beta: f64) -> Result<f64> {
    let a = boltzmann(landscape, beta)?.pi_beta;
    let b = boltzmann(landscape, beta + delta_beta)?.pi_beta;
    a.fidelity(&b)
}

/// `β = ln((1 - ε₃) d / ε₃) / γ`.
pub fn required_beta(gamma: f64, d: usize, eps3: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gap gamma must be positive, got {gamma}"
        )));
    }
    if !(eps3 > 0.0 && eps3 < 1.0) {
        return Err(Error::InvalidParameter(format!("eps3 must lie in (0, 1), got {eps3}")));
    }
    Ok(((1.0 - eps3) * d as f64 / eps3).ln() / gamma)
}

/// Ground mass of the two-level landscape: `1 / ((d - 1) e^{-γβ} + 1)`.
pub fn worst_case_ground_mass(gamma: f64, d: usize, beta: f64) -> f64 {
    1.0 / ((d as f64 - 1.0) * (-gamma * beta).exp() + 1.0)
}

/// `β_i = min(i / ||H||, β_final)` for `i = 0 … r`, `r = ⌈β_final ||H||⌉`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub betas: Vec<f64>,
    pub r: usize,
    pub delta_beta: f64,
    /// Overlap bound used for planning, `1/e`.
    pub p: f64,
}

pub fn schedule(landscape: &EnergyLandscape, beta_final: f64) -> Result<AnnealSchedule> {
    if !(beta_final >= 0.0 && beta_final.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "beta_final must be finite and >= 0, got {beta_final}"
        )));
    }
    let h = landscape.h_norm();
    let p = (-1.0f64).exp();
    if h == 0.0 {
        return Ok(AnnealSchedule {
            betas: vec![0.0],
            r: 0,
            delta_beta: 0.0,
            p,
        });
    }
    let r = (beta_final * h).ceil() as usize;
    let betas = (0..=r).map(|i| (i as f64 / h).min(beta_final)).collect();
    Ok(AnnealSchedule {
        betas,
        r,
        delta_beta: 1.0 / h,
        p,
    })
}

/// Annealing run with its schedule and the per-step overlap checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealReport {
    pub d: usize,
    pub h_norm: f64,
    pub gamma: f64,
    #[serde(rename = "M")]
    pub m_norm: usize,
    pub beta_final: f64,
    pub schedule: AnnealSchedule,
    /// `|⟨π_{β_i}|π_{β_{i+1}}⟩|^2 ≥ exp(-||H||(β_{i+1} - β_i))`.
    pub overlaps: Vec<BoundCheck>,
    /// Smallest phase gap along the schedule, in radians.
    pub phase_gap: f64,
    pub sample: SampleResult,
}

pub fn anneal_sample(
    landscape: &EnergyLandscape,
    beta_final: f64,
    eps: f64,
    backend: Backend,
) -> Result<AnnealReport> {
    let sched = schedule(landscape, beta_final)?;
    let chains = sched
        .betas
        .iter()
        .map(|&b| metropolis_chain(landscape, b))
        .collect::<Result<Vec<_>>>()?;
    let seq = ChainSequence::new(chains)?;
    let p = if sched.r == 0 { 1.0 } else { sched.p };
    let params = plan_for(sched.r, p, seq.delta_turns, eps)?;
    let sample = run_from_stationary(&seq, &params, backend)?;
    let overlaps = sched
        .betas
        .windows(2)
        .map(|w| {
            let measured = measured_overlap(landscape, w[0], w[1] - w[0])?;
            Ok(BoundCheck::at_least(measured, overlap_lower_bound(landscape, w[1] - w[0])))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnnealReport {
        d: landscape.d(),
        h_norm: landscape.h_norm(),
        gamma: landscape.gamma(),
        m_norm: landscape.m_norm,
        beta_final,
        phase_gap: PhaseGap::from_spectral_gap(seq.delta).radians,
        schedule: sched,
        overlaps,
        sample,
    })
}

/// Model costs of the two annealing approaches, in walk invocations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenoComparison {
    /// `||H|| / γ`.
    pub h_over_gamma: f64,
    pub d: usize,
    /// Phase gap along our schedule, radians.
    pub delta: f64,
    /// Phase gap along the finer Zeno schedule, radians.
    pub delta_prime: f64,
    /// `(1/Δ) (||H||/γ) log d log((||H||/γ) log d)`.
    pub ours: f64,
    /// `(1/Δ′) (||H||/γ)^2 log^3 d`.
    pub zeno: f64,
    /// `zeno / ours`.
    pub ratio: f64,
}

/// Natural log floored at 1.
fn log_factor(x: f64) -> f64 {
    x.ln().max(1.0)
}

/// Evaluates both cost models with unit constants.
pub fn zeno_cost_comparison(
    landscape: &EnergyLandscape,
    delta_prime: f64,
    delta: f64,
) -> Result<ZenoComparison> {
    let gamma = landscape.gamma();
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("cost models need a positive gap gamma".into()));
    }
    if !(delta > 0.0 && delta_prime > 0.0) {
        return Err(Error::InvalidParameter("phase gaps must be positive".into()));
    }
    if delta_prime > delta {
        return Err(Error::InvalidParameter(format!(
            "Zeno phase gap {delta_prime} exceeds the annealing gap {delta}"
        )));
    }
    let h = landscape.h_norm() / gamma;
    let d = landscape.d();
    let log_d = log_factor(d as f64);
    let ours = h * log_d * log_factor(h * log_d) / delta;
    let zeno = h * h * log_d.powi(3) / delta_prime;
    Ok(ZenoComparison {
        h_over_gamma: h,
        d,
        delta,
        delta_prime,
        ours,
        zeno,
        ratio: zeno / ours,
    })
}

/// Grid refining `sched` so no step exceeds `Δβ′ = γ / (||H||^2 log d)`.
pub fn zeno_betas(landscape: &EnergyLandscape, sched: &AnnealSchedule) -> Result<Vec<f64>> {
    let gamma = landscape.gamma();
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("Zeno schedule needs a positive gap gamma".into()));
    }
    let h = landscape.h_norm();
    let step = gamma / (h * h * log_factor(landscape.d() as f64));
    let mut betas = vec![sched.betas[0]];
    for w in sched.betas.windows(2) {
        let pieces = ((w[1] - w[0]) / step).ceil().max(1.0) as usize;
        for k in 1..=pieces {
            betas.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
        }
    }
    Ok(betas)
}

/// Smallest phase gap in radians over Metropolis chains at `betas`.
pub fn min_phase_gap(landscape: &EnergyLandscape, betas: &[f64]) -> Result<f64> {
    let mut delta = f64::INFINITY;
    for &b in betas {
        let gap = markov_core::spectral_gap(&metropolis_chain(landscape, b)?)?.gap;
        delta = delta.min(PhaseGap::from_spectral_gap(gap).radians);
    }
    Ok(delta)
}

/// Output of the ground-state search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateReport {
    /// Most frequently sampled ground state, if any run found one.
    pub state: Option<usize>,
    pub ground_states: Vec<usize>,
    pub beta_final: f64,
    pub eps: f64,
    pub eps3: f64,
    /// `π_{β_r}` mass on the ground states.
    pub target_ground_mass: f64,
    /// `π̃` mass on the ground states.
    pub success_probability: f64,
    pub runs: usize,
    pub seed: u64,
    pub empirical_success: f64,
    /// Sampled counts per state; `"bottom"` counts `⊥`.
    pub counts: BTreeMap<String, usize>,
    /// `π_{β_r}(ground) ≥ 1 - ε₃`.
    pub ground_mass: BoundCheck,
    /// Exact success probability above `1/2`.
    pub success: BoundCheck,
    pub anneal: AnnealReport,
    pub zeno: Option<ZenoComparison>,
}

pub const GROUND_EPS: f64 = 0.25;
pub const GROUND_EPS3: f64 = 0.25;

/// Anneals to `β = ln(3d)/γ` with `ε = ε₃ = 1/4` and samples `runs` times.
pub fn find_ground_state(
    landscape: &EnergyLandscape,
    runs: usize,
    seed: u64,
    backend: Backend,
) -> Result<GroundStateReport> {
    let gamma = landscape.gamma();
    let beta_final = if gamma > 0.0 {
        required_beta(gamma, landscape.d(), GROUND_EPS3)?
    } else {
        0.0
    };
    let anneal = anneal_sample(landscape, beta_final, GROUND_EPS, backend)?;
    let ground = landscape.ground_states();
    let dist = &anneal.sample.distribution;
    let success_probability: f64 = ground.iter().map(|&x| dist.probs[x]).sum();
    let target_ground_mass: f64 = ground.iter().map(|&x| anneal.sample.target[x]).sum();

    let mut per_state = vec![0usize; landscape.d()];
    let mut bottom = 0usize;
    for draw in dist.sample(runs, seed) {
        match draw {
            Some(x) => per_state[x] += 1,
            None => bottom += 1,
        }
    }
    let hits: usize = ground.iter().map(|&x| per_state[x]).sum();
    let state = ground
        .iter()
        .copied()
        .filter(|&x| per_state[x] > 0)
        .max_by_key(|&x| (per_state[x], std::cmp::Reverse(x)));
    let mut counts: BTreeMap<String, usize> = per_state
        .iter()
        .enumerate()
        .map(|(x, &n)| (x.to_string(), n))
        .collect();
    counts.insert("bottom".into(), bottom);

    let zeno = if gamma > 0.0 && landscape.d() > 1 {
        let fine = zeno_betas(landscape, &anneal.schedule)?;
        let delta_prime = min_phase_gap(landscape, &fine)?;
        Some(zeno_cost_comparison(landscape, delta_prime, anneal.phase_gap)?)
    } else {
        None
    };

    Ok(GroundStateReport {
        state,
        ground_states: ground,
        beta_final,
        eps: GROUND_EPS,
        eps3: GROUND_EPS3,
        target_ground_mass,
        success_probability,
        runs,
        seed,
        empirical_success: if runs == 0 { 0.0 } else { hits as f64 / runs as f64 },
        counts,
        ground_mass: BoundCheck::at_least(target_ground_mass, 1.0 - GROUND_EPS3),
        success: BoundCheck {
            measured: success_probability,
            bound: 0.5,
            ok: success_probability > 0.5,
        },
        anneal,
        zeno,
    })
}
