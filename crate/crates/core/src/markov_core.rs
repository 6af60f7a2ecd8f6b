//! Classical ergodic reversible Markov chains.
//!
//! A chain is a row-stochastic matrix `P` over a finite state space. This
//! module validates chains, classifies them (irreducible, aperiodic,
//! reversible), computes their stationary distribution and spectrum, and
//! provides the classical mixing baseline:
//!
//! ```text
//! d_t(x)   = 1/2 * sum_y |P^t(x, y) - pi(y)|
//! lower    = ln(1 / (2 eps)) / (2 delta)
//! upper(x) = (ln(1 / pi(x)) + ln(1 / eps)) / delta
//! ```
//!
//! where `delta = 1 - |lambda_1|` is the spectral gap.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on row sums when validating a stochastic matrix.
pub const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Numerical tolerances used by the chain analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Maximum `|pi(x) p_xy - pi(y) p_yx|` accepted as detailed balance.
    pub detailed_balance: f64,
    /// Largest entry of `S - S^T` accepted for the symmetrized chain `S`.
    pub imaginary: f64,
    /// Maximum residual `||pi^T P - pi^T||_inf` for the stationary vector.
    pub stationary: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            detailed_balance: 1e-10,
            imaginary: 1e-10,
            stationary: 1e-10,
        }
    }
}

/// Row-stochastic transition matrix over a finite state space.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
    labels: Option<Vec<String>>,
}

impl StochasticMatrix {
    /// Validates `entries` as a square row-stochastic matrix.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = entries.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::Empty);
        }
        for row in 0..rows {
            for col in 0..cols {
                let value = entries[(row, col)];
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::EntryOutOfRange { row, col, value });
                }
            }
            let sum: f64 = entries.row(row).iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::RowSum { row, sum });
            }
        }
        Ok(Self {
            entries,
            labels: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        for row in rows {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// The uniform chain `J/N`: every row is the uniform distribution.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(DMatrix::from_element(n, n, 1.0 / n as f64))
    }

    /// Number of states `N`.
    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        self.entries[(x, y)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|i| self.entries.row(i).iter().copied().collect())
            .collect()
    }

    /// One step of the chain applied to a row distribution: `mu^T P`.
    pub fn step(&self, mu: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (x, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (y, o) in out.iter_mut().enumerate() {
                *o += m * self.entries[(x, y)];
            }
        }
        out
    }
}

/// Probability distribution over the states of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Checks non-negativity and normalization within `1e-12`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty);
        }
        if let Some((i, &v)) = probs.iter().enumerate().find(|(_, &v)| !(v >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "probability {i} is negative or NaN ({v})"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[x] = 1.0;
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Total variation distance `1/2 * sum |mu - nu|`.
    pub fn total_variation(&self, other: &Distribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(total_variation(&self.probs, &other.probs))
    }

    /// Squared overlap of the quantum samples, `(sum_x sqrt(mu(x) nu(x)))^2`.
    pub fn fidelity(&self, other: &Distribution) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        let bc: f64 = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a * b).sqrt())
            .sum();
        Ok(bc * bc)
    }
}

pub(crate) fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Structural and reversibility classification of a chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub states: usize,
    pub stochastic: bool,
    pub irreducible: bool,
    pub aperiodic: bool,
    pub ergodic: bool,
    /// Period of the chain; only meaningful when irreducible.
    pub period: usize,
    pub reversible: bool,
    /// `max |pi(x) p_xy - pi(y) p_yx|`, when a unique stationary vector exists.
    pub detailed_balance_violation: Option<f64>,
}

/// Validates a raw matrix as a stochastic matrix and classifies it.
pub fn validate_and_classify(matrix: &DMatrix<f64>) -> Result<ChainDiagnostics> {
    let chain = StochasticMatrix::new(matrix.clone())?;
    Ok(classify(&chain, &Tolerances::default()))
}

/// Classifies an already validated chain. Structural flags never error;
/// non-ergodic chains are simply reported as such.
pub fn classify(chain: &StochasticMatrix, tol: &Tolerances) -> ChainDiagnostics {
    let irreducible = is_irreducible(chain);
    let period = if irreducible { period(chain) } else { 0 };
    let aperiodic = irreducible && period == 1;
    let ergodic = irreducible && aperiodic;
    let violation = if irreducible {
        stationary_solve(chain)
            .ok()
            .map(|pi| detailed_balance_violation(chain, &pi))
    } else {
        None
    };
    ChainDiagnostics {
        states: chain.len(),
        stochastic: true,
        irreducible,
        aperiodic,
        ergodic,
        period,
        reversible: violation.is_some_and(|v| v <= tol.detailed_balance),
        detailed_balance_violation: violation,
    }
}

fn successors(chain: &StochasticMatrix, x: usize) -> impl Iterator<Item = usize> + '_ {
    (0..chain.len()).filter(move |&y| chain.prob(x, y) > 0.0)
}

fn reachable(chain: &StochasticMatrix, reverse: bool) -> Vec<bool> {
    let n = chain.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            let edge = if reverse {
                chain.prob(v, u) > 0.0
            } else {
                chain.prob(u, v) > 0.0
            };
            if edge && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

/// Strong connectivity of the support graph: every state reaches state 0
/// and is reached from it.
pub fn is_irreducible(chain: &StochasticMatrix) -> bool {
    reachable(chain, false).iter().all(|&b| b) && reachable(chain, true).iter().all(|&b| b)
}

/// Period of an irreducible chain: gcd over support edges `u -> v` of
/// `level(u) + 1 - level(v)`, with BFS levels from state 0.
pub fn period(chain: &StochasticMatrix) -> usize {
    let n = chain.len();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for v in successors(chain, u) {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut g = 0usize;
    for u in 0..n {
        if level[u] == usize::MAX {
            continue;
        }
        for v in successors(chain, u) {
            if level[v] == usize::MAX {
                continue;
            }
            let diff = (level[u] as i64 + 1 - level[v] as i64).unsigned_abs() as usize;
            g = gcd(g, diff);
        }
    }
    g
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `max_{x<y} |π(x) p_xy - π(y) p_yx|`.
pub fn detailed_balance_violation(chain: &StochasticMatrix, pi: &[f64]) -> f64 {
    let n = chain.len();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in (x + 1)..n {
            let v = (pi[x] * chain.prob(x, y) - pi[y] * chain.prob(y, x)).abs();
            worst = worst.max(v);
        }
    }
    worst
}

/// Stationary vector from detailed balance along a BFS tree:
/// `ln π(y) = ln π(x) + ln p_xy - ln p_yx`. Well conditioned even when the
/// chain is nearly decoupled. `None` when some edge is one-way or the result
/// does not balance every pair, i.e. the chain is not reversible.
fn reversible_solve(chain: &StochasticMatrix, tol: f64) -> Option<Vec<f64>> {
    let n = chain.len();
    let mut log_pi = vec![f64::NAN; n];
    log_pi[0] = 0.0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for y in 0..n {
            let (fwd, back) = (chain.prob(x, y), chain.prob(y, x));
            if x == y || (fwd == 0.0 && back == 0.0) {
                continue;
            }
            if fwd == 0.0 || back == 0.0 {
                return None;
            }
            if log_pi[y].is_nan() {
                log_pi[y] = log_pi[x] + fwd.ln() - back.ln();
                queue.push_back(y);
            }
        }
    }
    if log_pi.iter().any(|v| v.is_nan()) {
        return None;
    }
    let top = log_pi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = log_pi.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let pi: Vec<f64> = weights.iter().map(|w| w / total).collect();
    (detailed_balance_violation(chain, &pi) <= tol).then_some(pi)
}

/// Solves `(I - P^T) pi = 0` with the last equation replaced by
/// `sum pi = 1`. The system is non-singular for an irreducible chain.
fn stationary_solve(chain: &StochasticMatrix) -> Result<Vec<f64>> {
    let n = chain.len();
    let mut a = DMatrix::<f64>::identity(n, n) - chain.entries().transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let v = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Verification("stationary system is singular".into()))?;
    // clip round-off negatives, then renormalize
    let mut p: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// The unique stationary distribution `pi^T P = pi^T` of an ergodic chain.
pub fn stationary_distribution(chain: &StochasticMatrix) -> Result<Distribution> {
    stationary_distribution_with(chain, &Tolerances::default())
}

pub fn stationary_distribution_with(
    chain: &StochasticMatrix,
    tol: &Tolerances,
) -> Result<Distribution> {
    let irreducible = is_irreducible(chain);
    let aperiodic = irreducible && period(chain) == 1;
    if !(irreducible && aperiodic) {
        return Err(Error::NotErgodic {
            irreducible,
            aperiodic,
        });
    }
    let pi = match reversible_solve(chain, tol.detailed_balance) {
        Some(pi) => pi,
        None => stationary_solve(chain)?,
    };
    let moved = chain.step(&pi);
    let residual = moved
        .iter()
        .zip(&pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > tol.stationary {
        return Err(Error::Verification(format!(
            "stationary residual {residual:e} exceeds {:e}",
            tol.stationary
        )));
    }
    Ok(Distribution { probs: pi })
}

/// Eigenvalues of a reversible chain and its spectral gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    /// `1 = lambda_0 > |lambda_1| >= ... >= |lambda_{N-1}|`.
    pub eigenvalues: Vec<f64>,
    /// `delta = 1 - |lambda_1|`; equal to 1 for a single-state chain.
    pub gap: f64,
}

impl SpectralData {
    /// `|lambda_1|`, or 0 for a single-state chain.
    pub fn second_magnitude(&self) -> f64 {
        self.eigenvalues.get(1).map_or(0.0, |l| l.abs())
    }

    /// Number of eigenvalues `lambda_j`, `j >= 1`, with `|lambda_j| > zero_tol`.
    pub fn nonzero_count(&self, zero_tol: f64) -> usize {
        self.eigenvalues
            .iter()
            .skip(1)
            .filter(|l| l.abs() > zero_tol)
            .count()
    }
}

/// Spectrum and gap of a reversible ergodic chain.
pub fn spectral_gap(chain: &StochasticMatrix) -> Result<SpectralData> {
    spectral_gap_with(chain, &Tolerances::default())
}

/// Errors with [`Error::NotReversible`] when detailed balance fails or when
/// `D^{1/2} P D^{-1/2}` is not symmetric within tolerance.
pub fn spectral_gap_with(chain: &StochasticMatrix, tol: &Tolerances) -> Result<SpectralData> {
    let pi = stationary_distribution_with(chain, tol)?;
    let violation = detailed_balance_violation(chain, pi.probs());
    if violation > tol.detailed_balance {
        return Err(Error::NotReversible(format!(
            "detailed balance violated by {violation:e}"
        )));
    }
    let n = chain.len();
    // D^{1/2} P D^{-1/2} is symmetric for a reversible chain.
    let sqrt_pi: Vec<f64> = pi.probs().iter().map(|p| p.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |x, y| {
        sqrt_pi[x] * chain.prob(x, y) / sqrt_pi[y]
    });
    let asymmetry = (&s - s.transpose()).amax();
    if asymmetry > tol.imaginary {
        return Err(Error::NotReversible(format!(
            "symmetrized matrix off by {asymmetry:e}"
        )));
    }
    let sym = (&s + s.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.abs().total_cmp(&a.abs()).then(b.total_cmp(a)));
    let gap = eigenvalues.get(1).map_or(1.0, |l| 1.0 - l.abs());
    Ok(SpectralData { eigenvalues, gap })
}

/// Row `x` of `P^t` together with its variation distance from `pi`.
pub fn classical_mixing(chain: &StochasticMatrix, x: usize, t: usize) -> Result<(Distribution, f64)> {
    let n = chain.len();
    if x >= n {
        return Err(Error::IndexOutOfRange { index: x, len: n });
    }
    let pi = stationary_distribution(chain)?;
    let mut mu = Distribution::point_mass(n, x).probs;
    for _ in 0..t {
        mu = chain.step(&mu);
    }
    let d = total_variation(&mu, pi.probs());
    Ok((Distribution { probs: mu }, d))
}

/// Smallest `t` with `d_t(x) <= eps`. Variation distance from a point mass
/// is non-increasing in `t`, so the first crossing is the mixing time.
pub fn empirical_mixing_time(
    chain: &StochasticMatrix,
    x: usize,
    eps: f64,
    max_steps: usize,
) -> Result<Option<usize>> {
    let n = chain.len();
    if x >= n {
        return Err(Error::IndexOutOfRange { index: x, len: n });
    }
    let pi = stationary_distribution(chain)?;
    let mut mu = Distribution::point_mass(n, x).probs;
    for t in 0..=max_steps {
        if total_variation(&mu, pi.probs()) <= eps {
            return Ok(Some(t));
        }
        mu = chain.step(&mu);
    }
    Ok(None)
}

/// Spectral bounds on the mixing time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingBounds {
    pub epsilon: f64,
    /// `ln(1/(2 eps)) / (2 delta)`, a bound on `max_x tau_eps(x)`.
    pub lower: f64,
    /// `(ln(1/pi(x)) + ln(1/eps)) / delta` for every state `x`.
    pub upper_per_state: Vec<f64>,
}

pub fn mixing_time_bounds(chain: &StochasticMatrix, epsilon: f64) -> Result<MixingBounds> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let spectrum = spectral_gap(chain)?;
    let pi = stationary_distribution(chain)?;
    Ok(mixing_bounds_from(spectrum.gap, pi.probs(), epsilon))
}

pub(crate) fn mixing_bounds_from(delta: f64, pi: &[f64], epsilon: f64) -> MixingBounds {
    let lower = (1.0 / (2.0 * epsilon)).ln() / (2.0 * delta);
    let upper_per_state = pi
        .iter()
        .map(|p| ((1.0 / p).ln() + (1.0 / epsilon).ln()) / delta)
        .collect();
    MixingBounds {
        epsilon,
        lower,
        upper_per_state,
    }
}

/// On-disk chain description: `{"labels": [...], "matrix": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub matrix: Vec<Vec<f64>>,
}

impl ChainFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_chain(&self) -> Result<StochasticMatrix> {
        let chain = StochasticMatrix::from_rows(&self.matrix)?;
        match &self.labels {
            Some(labels) => chain.with_labels(labels.clone()),
            None => Ok(chain),
        }
    }
}

impl From<&StochasticMatrix> for ChainFile {
    fn from(chain: &StochasticMatrix) -> Self {
        Self {
            labels: chain.labels().map(<[String]>::to_vec),
            matrix: chain.rows(),
        }
    }
}
