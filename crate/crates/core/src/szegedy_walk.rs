//! Szegedy quantization of a reversible chain.
//!
//! The walk acts on `C^N ⊗ C^N` with basis `|x⟩|y⟩` at index `x * N + y`.
//! A quantum update `U` maps `|x⟩|0⟩` to `|x⟩|p_x⟩` where
//! `|p_x⟩ = sum_y sqrt(p_xy) |y⟩`. With `A = span{|x⟩|0⟩}`,
//! `B = U^dagger S U A` and reflections `R_K = 2 Π_K - I`, the walk is
//!
//! ```text
//! W = R_B R_A = U^dagger S U R_A U^dagger S U R_A
//! ```
//!
//! On the busy subspace `A + B` its eigenvalues are `1` (once, eigenvector
//! `|π⟩|0⟩`), `e^{±2iθ_j}` with `cos θ_j = |λ_j|` for every non-zero
//! classical eigenvalue, and `-1` with multiplicity `2(N - 1 - M)` where `M`
//! counts the non-zero `λ_j`. The walk is the identity on the idle
//! complement.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov_core::{self, Distribution, SpectralData, StochasticMatrix};
use crate::quantum_sim::{swap, UnitaryOp, C64};

/// Threshold on squared singular values for rank decisions on subspace
/// sums.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Distance from `±1` below which a busy eigenvalue is classified as `±1`.
const UNIT_EIGENVALUE_TOLERANCE: f64 = 2e-8;

/// Eigenvalues of the first Hermitian combination closer than this are
/// split again.
const CLUSTER_TOLERANCE: f64 = 1e-7;

/// Classical eigenvalues at or below this magnitude count as zero.
const ZERO_EIGENVALUE_TOLERANCE: f64 = 1e-8;

fn c(v: f64) -> C64 {
    C64::new(v, 0.0)
}

/// How the columns of `U` outside `{|x⟩|0⟩}` are completed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Completion {
    /// Gram–Schmidt of the standard basis against `|p_x⟩`.
    #[default]
    GramSchmidt,
    /// Householder reflection exchanging `|0⟩` and `|p_x⟩`.
    Householder,
}

/// A unitary with `U|x⟩|0⟩ = |x⟩|p_x⟩`, block diagonal in `x`.
#[derive(Debug, Clone)]
pub struct QuantumUpdate {
    unitary: UnitaryOp,
    n: usize,
    completion: Completion,
}

impl QuantumUpdate {
    pub fn unitary(&self) -> &UnitaryOp {
        &self.unitary
    }

    pub fn states(&self) -> usize {
        self.n
    }

    pub fn completion(&self) -> Completion {
        self.completion
    }

    /// `max_x || U|x⟩|0⟩ - |x⟩|p_x⟩ ||_inf` against `chain`.
    pub fn update_residual(&self, chain: &StochasticMatrix) -> f64 {
        let n = self.n;
        let u = self.unitary.matrix();
        let mut worst = 0.0f64;
        for x in 0..n {
            for row in 0..n * n {
                let (rx, ry) = (row / n, row % n);
                let expected = if rx == x { chain.prob(x, ry).sqrt() } else { 0.0 };
                worst = worst.max((u[(row, x * n)] - c(expected)).norm());
            }
        }
        worst
    }
}

fn sqrt_row(chain: &StochasticMatrix, x: usize) -> DVector<f64> {
    DVector::from_fn(chain.len(), |y, _| chain.prob(x, y).sqrt())
}

/// `N x N` orthogonal block whose first column is `p`.
fn complete_block(p: &DVector<f64>, completion: Completion) -> DMatrix<f64> {
    let n = p.len();
    match completion {
        Completion::GramSchmidt => {
            let mut cols: Vec<DVector<f64>> = vec![p.clone()];
            for k in 0..n {
                if cols.len() == n {
                    break;
                }
                let mut v = DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
                // two passes for numerical orthogonality
                for _ in 0..2 {
                    for q in &cols {
                        let proj = q.dot(&v);
                        v -= q * proj;
                    }
                }
                let norm = v.norm();
                if norm > RANK_THRESHOLD {
                    cols.push(v / norm);
                }
            }
            DMatrix::from_columns(&cols)
        }
        Completion::Householder => {
            let mut v = -p.clone();
            v[0] += 1.0;
            let vv = v.dot(&v);
            if vv < 1e-30 {
                return DMatrix::identity(n, n);
            }
            DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv)
        }
    }
}

pub fn build_quantum_update(chain: &StochasticMatrix) -> Result<QuantumUpdate> {
    build_quantum_update_with(chain, Completion::default())
}

pub fn build_quantum_update_with(
    chain: &StochasticMatrix,
    completion: Completion,
) -> Result<QuantumUpdate> {
    let n = chain.len();
    for x in 0..n {
        let sum: f64 = chain.entries().row(x).iter().sum();
        if (sum - 1.0).abs() > markov_core::ROW_SUM_TOLERANCE {
            return Err(Error::RowSum { row: x, sum });
        }
    }
    let mut u = DMatrix::<f64>::zeros(n * n, n * n);
    for x in 0..n {
        let block = complete_block(&sqrt_row(chain, x), completion);
        u.view_mut((x * n, x * n), (n, n)).copy_from(&block);
    }
    Ok(QuantumUpdate {
        unitary: UnitaryOp::from_real(&u)?,
        n,
        completion,
    })
}

/// The walk `W(P) = R_B R_A` with its factors.
#[derive(Debug, Clone)]
pub struct WalkOperator {
    chain: StochasticMatrix,
    update: QuantumUpdate,
    /// `U^dagger S U`, which maps `A` onto `B`.
    swap_conjugate: DMatrix<C64>,
    unitary: UnitaryOp,
}

pub fn build_walk(chain: &StochasticMatrix) -> Result<WalkOperator> {
    build_walk_with(chain, Completion::default())
}

pub fn build_walk_with(chain: &StochasticMatrix, completion: Completion) -> Result<WalkOperator> {
    let update = build_quantum_update_with(chain, completion)?;
    let n = chain.len();
    let u = update.unitary.matrix();
    let swap_conjugate = u.adjoint() * swap(n) * u;
    let r_a = reflection_a(n);
    let half = &swap_conjugate * &r_a;
    let w = &half * &half;
    Ok(WalkOperator {
        chain: chain.clone(),
        update,
        swap_conjugate,
        unitary: UnitaryOp::new(w)?,
    })
}

/// `R_A = 2 Π_A - I` with `Π_A = sum_x |x0⟩⟨x0|`.
pub fn reflection_a(n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n * n, n * n, |i, j| {
        if i != j {
            c(0.0)
        } else if i % n == 0 {
            c(1.0)
        } else {
            c(-1.0)
        }
    })
}

impl WalkOperator {
    pub fn unitary(&self) -> &UnitaryOp {
        &self.unitary
    }

    pub fn update(&self) -> &QuantumUpdate {
        &self.update
    }

    pub fn chain(&self) -> &StochasticMatrix {
        &self.chain
    }

    pub fn states(&self) -> usize {
        self.chain.len()
    }

    /// Orthonormal basis `b_x = U^dagger (|p_x⟩|x⟩)` of `B`, one column per `x`.
    pub fn b_basis(&self) -> DMatrix<C64> {
        let n = self.states();
        let u = self.update.unitary.matrix();
        let mut swapped = DMatrix::<C64>::zeros(n * n, n);
        for x in 0..n {
            for y in 0..n {
                swapped[(y * n + x, x)] = c(self.chain.prob(x, y).sqrt());
            }
        }
        u.adjoint() * swapped
    }

    /// `R_B R_A` assembled from the projector onto `B` directly.
    pub fn reflection_product(&self) -> DMatrix<C64> {
        let n = self.states();
        let b = self.b_basis();
        let r_b = (&b * b.adjoint()) * c(2.0) - DMatrix::<C64>::identity(n * n, n * n);
        r_b * reflection_a(n)
    }

    /// `max |W - R_B R_A|`.
    pub fn factorization_mismatch(&self) -> f64 {
        (self.unitary.matrix() - self.reflection_product())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `U^dagger S U`.
    pub fn swap_conjugate(&self) -> &DMatrix<C64> {
        &self.swap_conjugate
    }
}

/// Orthonormal basis and projector of the busy subspace `A + B`.
#[derive(Debug, Clone)]
pub struct BusySubspace {
    /// `N^2 x dim` matrix with orthonormal columns.
    pub basis: DMatrix<C64>,
    pub projector: DMatrix<C64>,
    /// `dim(A ∩ B) = 2N - dim(A + B)`.
    pub intersection_dim: usize,
}

impl BusySubspace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

pub fn busy_subspace(update: &QuantumUpdate) -> BusySubspace {
    let n = update.n;
    let d = n * n;
    let u = update.unitary.matrix();
    let s_u = swap(n) * u;
    let u_dag = u.adjoint();
    let mut spanning = DMatrix::<C64>::zeros(d, 2 * n);
    for x in 0..n {
        spanning[(x * n, x)] = c(1.0);
        // U^dagger S U |x0⟩
        let b = &u_dag * s_u.column(x * n);
        spanning.set_column(n + x, &b);
    }
    // eigenvalues of the Gram operator are the squared singular values
    let gram = SymmetricEigen::new(&spanning * spanning.adjoint());
    let keep: Vec<usize> = (0..d)
        .filter(|&k| gram.eigenvalues[k] > RANK_THRESHOLD)
        .collect();
    let rank = keep.len();
    let basis = gram.eigenvectors.select_columns(keep.iter());
    let projector = &basis * basis.adjoint();
    BusySubspace {
        basis,
        projector,
        intersection_dim: 2 * n - rank,
    }
}

/// Spectrum of the walk restricted to the busy subspace.
#[derive(Debug, Clone)]
pub struct WalkSpectrum {
    pub busy: BusySubspace,
    /// Eigenvalues of the walk on the busy subspace, one per basis vector.
    pub busy_eigenvalues: Vec<C64>,
    /// `θ_j ∈ (0, π/2)` for each conjugate pair `e^{±2iθ_j}`, ascending.
    pub phases: Vec<f64>,
    /// The unique `+1` busy eigenvector, phase-fixed so its largest entry is
    /// real and positive.
    pub stationary_vector: DVector<C64>,
    pub minus_one_multiplicity: usize,
    /// `Δ = 2θ_1`, or `π` when no complex pair exists.
    pub phase_gap_radians: f64,
    /// `θ_1 / π`, the gap in the `e^{2πiφ}` convention.
    pub phase_gap_turns: f64,
}

pub fn walk_spectrum(walk: &WalkOperator) -> Result<WalkSpectrum> {
    let busy = busy_subspace(&walk.update);
    let q = &busy.basis;
    let restricted = q.adjoint() * walk.unitary.matrix() * q;
    let (busy_eigenvalues, z) = unitary_eigen(&restricted);
    let vectors = q * z;

    let plus: Vec<usize> = busy_eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, mu)| (*mu - c(1.0)).norm() < UNIT_EIGENVALUE_TOLERANCE)
        .map(|(i, _)| i)
        .collect();
    if plus.len() != 1 {
        return Err(Error::DegenerateFixedSpace(plus.len()));
    }
    let mut stationary_vector: DVector<C64> = vectors.column(plus[0]).into_owned();
    let (imax, _) = stationary_vector
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .expect("non-empty");
    let phase = stationary_vector[imax] / c(stationary_vector[imax].norm());
    stationary_vector /= phase;
    let norm = stationary_vector.norm();
    stationary_vector /= c(norm);

    let minus_one_multiplicity = busy_eigenvalues
        .iter()
        .filter(|mu| (*mu + c(1.0)).norm() < UNIT_EIGENVALUE_TOLERANCE)
        .count();
    let mut phases: Vec<f64> = busy_eigenvalues
        .iter()
        .filter(|mu| {
            mu.im > 0.0
                && (*mu - c(1.0)).norm() >= UNIT_EIGENVALUE_TOLERANCE
                && (*mu + c(1.0)).norm() >= UNIT_EIGENVALUE_TOLERANCE
        })
        .map(|mu| mu.arg() / 2.0)
        .collect();
    phases.sort_by(f64::total_cmp);
    let phase_gap_radians = phases.first().map_or(std::f64::consts::PI, |t| 2.0 * t);
    Ok(WalkSpectrum {
        busy,
        busy_eigenvalues,
        phases,
        stationary_vector,
        minus_one_multiplicity,
        phase_gap_radians,
        phase_gap_turns: phase_gap_radians / (2.0 * std::f64::consts::PI),
    })
}

/// Eigen-decomposition of a unitary `u` through Hermitian combinations
/// `K + αS` of its commuting parts `K = (u + u^dagger)/2` and
/// `S = (u - u^dagger)/2i`. One combination separates all eigenvalues off a
/// single line in the plane; clusters left over are split by a second `α`.
/// Eigenvalues are Rayleigh quotients of `u`.
pub fn unitary_eigen(u: &DMatrix<C64>) -> (Vec<C64>, DMatrix<C64>) {
    let n = u.nrows();
    let adj = u.adjoint();
    let re = (u + &adj) * c(0.5);
    let im = (u - &adj) * C64::new(0.0, -0.5);
    let mix = |alpha: f64| &re + &im * c(alpha);
    let first = SymmetricEigen::new(mix(0.618_033_988_749_895));
    let second = mix(-1.324_717_957_244_746);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| first.eigenvalues[i].total_cmp(&first.eigenvalues[j]));

    let mut vectors = DMatrix::<C64>::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && first.eigenvalues[order[end]] - first.eigenvalues[order[end - 1]] < CLUSTER_TOLERANCE
        {
            end += 1;
        }
        let cluster = DMatrix::from_fn(n, end - start, |r, k| first.eigenvectors[(r, order[start + k])]);
        let split = SymmetricEigen::new(cluster.adjoint() * &second * &cluster);
        vectors
            .columns_mut(start, end - start)
            .copy_from(&(cluster * split.eigenvectors));
        start = end;
    }
    let values = (0..n)
        .map(|k| {
            let v = vectors.column(k);
            (v.adjoint() * u * v)[(0, 0)]
        })
        .collect();
    (values, vectors)
}

/// `|π⟩|0⟩ = sum_x sqrt(π(x)) |x⟩|0⟩` on `C^N ⊗ C^N`.
pub fn quantum_sample(pi: &Distribution) -> DVector<C64> {
    let n = pi.len();
    let mut v = DVector::zeros(n * n);
    for (x, p) in pi.probs().iter().enumerate() {
        v[x * n] = c(p.sqrt());
    }
    v
}

/// Phase gap of a walk, with the `Δ ≥ 2 sqrt(δ)` check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGap {
    pub radians: f64,
    pub turns: f64,
    /// `2 sqrt(δ)`.
    pub bound: f64,
    pub bound_ok: bool,
    /// No complex busy eigenvalues: the nearest non-unit eigenvalue is `-1`.
    pub degenerate: bool,
}

impl PhaseGap {
    /// The gap implied by a classical spectral gap: `θ_1 = arccos(1 - δ)`.
    pub fn from_spectral_gap(delta: f64) -> Self {
        let theta = (1.0 - delta).clamp(-1.0, 1.0).acos();
        let radians = 2.0 * theta;
        let bound = 2.0 * delta.max(0.0).sqrt();
        PhaseGap {
            radians,
            turns: radians / (2.0 * std::f64::consts::PI),
            bound,
            bound_ok: radians >= bound - 1e-9,
            degenerate: delta >= 1.0,
        }
    }
}

pub fn phase_gap(spectrum: &WalkSpectrum, delta: f64) -> PhaseGap {
    let bound = 2.0 * delta.max(0.0).sqrt();
    PhaseGap {
        radians: spectrum.phase_gap_radians,
        turns: spectrum.phase_gap_turns,
        bound,
        bound_ok: spectrum.phase_gap_radians >= bound - 1e-9,
        degenerate: spectrum.phases.is_empty(),
    }
}

/// Comparison of the busy spectrum against the classical eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCheck {
    /// Largest distance between a predicted and a matched busy eigenvalue.
    pub max_mismatch: f64,
    pub busy_dim: usize,
    pub expected_busy_dim: usize,
    /// `|⟨v|π0⟩|^2` for the `+1` busy eigenvector `v`.
    pub stationary_fidelity: f64,
    /// `M`, the number of non-zero `λ_j` with `j ≥ 1`.
    pub nonzero_eigenvalues: usize,
    pub expected_minus_one: usize,
    pub found_minus_one: usize,
}

impl SpectrumCheck {
    pub fn ok(&self, tolerance: f64) -> bool {
        self.max_mismatch <= tolerance
            && self.busy_dim == self.expected_busy_dim
            && self.expected_minus_one == self.found_minus_one
            && self.stationary_fidelity >= 1.0 - 1e-12
    }
}

/// Predicted busy eigenvalues: `1` and `(2λ^2 - 1) ± 2i|λ| sqrt(1 - λ^2)`
/// for each `λ_j`, `j ≥ 1`. Zero eigenvalues give the pair `-1, -1`.
pub fn predicted_busy_eigenvalues(spectral: &SpectralData) -> Vec<C64> {
    let mut out = vec![c(1.0)];
    for l in spectral.eigenvalues.iter().skip(1) {
        let a = l.abs().min(1.0);
        let re = 2.0 * a * a - 1.0;
        let im = 2.0 * a * (1.0 - a * a).sqrt();
        out.push(C64::new(re, im));
        out.push(C64::new(re, -im));
    }
    out
}

pub fn verify_spectrum(
    spectrum: &WalkSpectrum,
    spectral: &SpectralData,
    pi: &Distribution,
) -> SpectrumCheck {
    let expected = predicted_busy_eigenvalues(spectral);
    let mut unused: Vec<C64> = spectrum.busy_eigenvalues.clone();
    let mut max_mismatch = 0.0f64;
    for e in &expected {
        let best = unused
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - e).norm().total_cmp(&(b.1 - e).norm()));
        match best {
            Some((i, mu)) => {
                max_mismatch = max_mismatch.max((mu - e).norm());
                unused.swap_remove(i);
            }
            None => max_mismatch = f64::INFINITY,
        }
    }
    if !unused.is_empty() {
        max_mismatch = f64::INFINITY;
    }
    let target = quantum_sample(pi);
    let nonzero = spectral.nonzero_count(ZERO_EIGENVALUE_TOLERANCE);
    let n = pi.len();
    SpectrumCheck {
        max_mismatch,
        busy_dim: spectrum.busy.dim(),
        expected_busy_dim: 2 * n - 1,
        stationary_fidelity: spectrum.stationary_vector.dotc(&target).norm_sqr(),
        nonzero_eigenvalues: nonzero,
        expected_minus_one: 2 * (n - 1 - nonzero),
        found_minus_one: spectrum.minus_one_multiplicity,
    }
}

/// Walk verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkReport {
    pub chain_id: String,
    pub delta: f64,
    pub phase_gap: f64,
    pub phase_gap_turns: f64,
    pub bound_ok: bool,
    pub max_spectral_mismatch: f64,
    pub stationary_fidelity: f64,
    pub busy_dim: usize,
    pub nonzero_eigenvalues: usize,
    pub minus_one_multiplicity: usize,
    pub degenerate_gap: bool,
    pub factorization_mismatch: f64,
    pub spectrum_ok: bool,
}

/// Builds the walk for `chain` and checks its busy spectrum end to end.
pub fn verify_walk(chain: &StochasticMatrix, chain_id: &str) -> Result<WalkReport> {
    let spectral = markov_core::spectral_gap(chain)?;
    let pi = markov_core::stationary_distribution(chain)?;
    let walk = build_walk(chain)?;
    let spectrum = walk_spectrum(&walk)?;
    let check = verify_spectrum(&spectrum, &spectral, &pi);
    let gap = phase_gap(&spectrum, spectral.gap);
    Ok(WalkReport {
        chain_id: chain_id.to_string(),
        delta: spectral.gap,
        phase_gap: gap.radians,
        phase_gap_turns: gap.turns,
        bound_ok: gap.bound_ok,
        max_spectral_mismatch: check.max_mismatch,
        stationary_fidelity: check.stationary_fidelity,
        busy_dim: check.busy_dim,
        nonzero_eigenvalues: check.nonzero_eigenvalues,
        minus_one_multiplicity: check.found_minus_one,
        degenerate_gap: gap.degenerate,
        factorization_mismatch: walk.factorization_mismatch(),
        spectrum_ok: check.ok(1e-9),
    })
}
