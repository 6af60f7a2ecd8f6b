//! Dense statevector simulation over a `system ⊗ coin ⊗ ancillas` register.
//!
//! Basis index layout: `((x * coin_dim + y) << ancilla_qubits) | bits`, where
//! ancilla qubit `q` is bit `q` of `bits`. The system and coin together form
//! the "walk" wires on which a Szegedy walk operator acts.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default cap on the total statevector dimension.
pub const DEFAULT_DIMENSION_CAP: usize = 1 << 20;

/// Environment variable that overrides [`DEFAULT_DIMENSION_CAP`].
pub const DIMENSION_CAP_ENV: &str = "QSAMPLE_DIM_CAP";

/// Unitarity tolerance on `max |U^dagger U - I|`.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// The dimension cap in effect: the env override when set and valid.
pub fn dimension_cap() -> usize {
    std::env::var(DIMENSION_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_DIMENSION_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub system_dim: usize,
    pub coin_dim: usize,
    pub ancilla_qubits: usize,
}

impl RegisterLayout {
    pub fn new(system_dim: usize, coin_dim: usize, ancilla_qubits: usize) -> Result<Self> {
        Self::with_cap(system_dim, coin_dim, ancilla_qubits, dimension_cap())
    }

    pub fn with_cap(
        system_dim: usize,
        coin_dim: usize,
        ancilla_qubits: usize,
        cap: usize,
    ) -> Result<Self> {
        if system_dim == 0 || coin_dim == 0 {
            return Err(Error::Empty);
        }
        let dim = (system_dim * coin_dim)
            .checked_mul(1usize.checked_shl(ancilla_qubits as u32).unwrap_or(0))
            .filter(|&d| d > 0)
            .unwrap_or(usize::MAX);
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self {
            system_dim,
            coin_dim,
            ancilla_qubits,
        })
    }

    /// `C^N ⊗ C^N` with no ancillas.
    pub fn walk(n: usize) -> Self {
        Self {
            system_dim: n,
            coin_dim: n,
            ancilla_qubits: 0,
        }
    }

    /// A plain `C^d` register.
    pub fn plain(d: usize) -> Self {
        Self {
            system_dim: d,
            coin_dim: 1,
            ancilla_qubits: 0,
        }
    }

    pub fn walk_dim(&self) -> usize {
        self.system_dim * self.coin_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        1 << self.ancilla_qubits
    }

    pub fn total_dim(&self) -> usize {
        self.walk_dim() << self.ancilla_qubits
    }

    pub fn index(&self, x: usize, y: usize, ancillas: usize) -> usize {
        ((x * self.coin_dim + y) << self.ancilla_qubits) | ancillas
    }
}

/// Complex amplitudes over a [`RegisterLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    layout: RegisterLayout,
}

impl StateVector {
    /// Requires unit norm within `1e-10`.
    pub fn new(layout: RegisterLayout, amplitudes: DVector<C64>) -> Result<Self> {
        let state = Self::unnormalized(layout, amplitudes)?;
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "state norm is {norm}, expected 1"
            )));
        }
        Ok(state)
    }

    /// Accepts any norm; used for error vectors and intermediate algebra.
    pub fn unnormalized(layout: RegisterLayout, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                got: amplitudes.len(),
            });
        }
        Ok(Self { amplitudes, layout })
    }

    pub fn basis(layout: RegisterLayout, x: usize, y: usize) -> Result<Self> {
        if x >= layout.system_dim {
            return Err(Error::IndexOutOfRange {
                index: x,
                len: layout.system_dim,
            });
        }
        if y >= layout.coin_dim {
            return Err(Error::IndexOutOfRange {
                index: y,
                len: layout.coin_dim,
            });
        }
        let mut amplitudes = DVector::zeros(layout.total_dim());
        amplitudes[layout.index(x, y, 0)] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes, layout })
    }

    /// `|w⟩ ⊗ |0…0⟩` for a walk-register vector `w`.
    pub fn from_walk_vector(layout: RegisterLayout, walk: &DVector<C64>) -> Result<Self> {
        if walk.len() != layout.walk_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.walk_dim(),
                got: walk.len(),
            });
        }
        let mut amplitudes = DVector::zeros(layout.total_dim());
        for (w, a) in walk.iter().enumerate() {
            amplitudes[w << layout.ancilla_qubits] = *a;
        }
        Ok(Self { amplitudes, layout })
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.check_layout(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    fn check_layout(&self, other: &StateVector) -> Result<()> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.total_dim(),
                got: other.layout.total_dim(),
            });
        }
        Ok(())
    }

    /// Walk-register slice with all ancillas in `|0⟩`.
    pub fn ancilla_zero_block(&self) -> DVector<C64> {
        let shift = self.layout.ancilla_qubits;
        DVector::from_fn(self.layout.walk_dim(), |w, _| self.amplitudes[w << shift])
    }

    /// Norm of the component with any ancilla outside `|0…0⟩`.
    pub fn ancilla_residual(&self) -> f64 {
        let mask = self.layout.ancilla_dim() - 1;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, factor: C64) -> StateVector {
        StateVector {
            amplitudes: &self.amplitudes * factor,
            layout: self.layout,
        }
    }

    pub fn sub(&self, other: &StateVector) -> Result<StateVector> {
        self.check_layout(other)?;
        Ok(StateVector {
            amplitudes: &self.amplitudes - &other.amplitudes,
            layout: self.layout,
        })
    }

    pub fn add(&self, other: &StateVector) -> Result<StateVector> {
        self.check_layout(other)?;
        Ok(StateVector {
            amplitudes: &self.amplitudes + &other.amplitudes,
            layout: self.layout,
        })
    }

    /// JSON dump: array of `[re, im]` pairs.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.amplitudes
                .iter()
                .map(|a| serde_json::json!([a.re, a.im]))
                .collect(),
        )
    }
}

/// `|⟨a|b⟩|^2`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `||a - b||_2`.
pub fn norm_distance(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.sub(b)?.norm())
}

/// Dense unitary with a recorded unitarity deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOp {
    matrix: DMatrix<C64>,
    deviation: f64,
}

impl UnitaryOp {
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        let (rows, cols) = matrix.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::NotUnitary(deviation));
        }
        Ok(Self { matrix, deviation })
    }

    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::new(matrix.map(|v| C64::new(v, 0.0)))
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
            deviation: 0.0,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |U^dagger U - I|` measured at construction.
    pub fn deviation(&self) -> f64 {
        self.deviation
    }

    pub fn dagger(&self) -> UnitaryOp {
        UnitaryOp {
            matrix: self.matrix.adjoint(),
            deviation: self.deviation,
        }
    }

    /// `U^(2^k)` by repeated squaring.
    pub fn pow2(&self, k: u32) -> DMatrix<C64> {
        let mut m = self.matrix.clone();
        for _ in 0..k {
            m = &m * &m;
        }
        m
    }

    /// `U^e` for a non-negative integer exponent.
    pub fn pow(&self, e: usize) -> DMatrix<C64> {
        let mut result = DMatrix::identity(self.dim(), self.dim());
        let mut base = self.matrix.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        result
    }
}

pub fn unitarity_deviation(matrix: &DMatrix<C64>) -> f64 {
    let n = matrix.nrows();
    let g = matrix.adjoint() * matrix - DMatrix::<C64>::identity(n, n);
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sub-register an operator acts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Wires {
    System,
    Coin,
    /// System and coin together.
    Walk,
    /// Listed ancilla qubits; the first listed qubit is the least significant
    /// bit of the operator's index.
    Ancillas(Vec<usize>),
}

fn wire_dim(layout: &RegisterLayout, wires: &Wires) -> Result<usize> {
    Ok(match wires {
        Wires::System => layout.system_dim,
        Wires::Coin => layout.coin_dim,
        Wires::Walk => layout.walk_dim(),
        Wires::Ancillas(qubits) => {
            for (i, &q) in qubits.iter().enumerate() {
                if q >= layout.ancilla_qubits {
                    return Err(Error::IndexOutOfRange {
                        index: q,
                        len: layout.ancilla_qubits,
                    });
                }
                if qubits[..i].contains(&q) {
                    return Err(Error::InvalidParameter(format!(
                        "ancilla qubit {q} listed twice"
                    )));
                }
            }
            1 << qubits.len()
        }
    })
}

/// Applies `op` to the selected wires; all other wires are untouched.
pub fn apply(op: &UnitaryOp, state: &StateVector, wires: &Wires) -> Result<StateVector> {
    apply_matrix(op.matrix(), state, wires)
}

pub(crate) fn apply_matrix(
    m: &DMatrix<C64>,
    state: &StateVector,
    wires: &Wires,
) -> Result<StateVector> {
    let layout = state.layout;
    let dim = wire_dim(&layout, wires)?;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: m.nrows(),
        });
    }
    let mut out = state.clone();
    match wires {
        Wires::Walk => apply_walk_block(m, &mut out.amplitudes, &layout, None),
        Wires::System => {
            let coin = layout.coin_dim;
            let anc = layout.ancilla_dim();
            let stride = coin * anc;
            gather_apply(m, &mut out.amplitudes, dim, |rest, k| {
                // rest enumerates (y, bits)
                k * stride + rest
            }, stride);
        }
        Wires::Coin => {
            let coin = layout.coin_dim;
            let anc = layout.ancilla_dim();
            let outer = layout.system_dim;
            gather_apply(m, &mut out.amplitudes, dim, |rest, k| {
                let x = rest / anc;
                let bits = rest % anc;
                (x * coin + k) * anc + bits
            }, outer * anc);
        }
        Wires::Ancillas(qubits) => {
            let mask: usize = qubits.iter().map(|q| 1usize << q).sum();
            let total = layout.total_dim();
            let spread = |k: usize| -> usize {
                qubits
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| k >> i & 1 == 1)
                    .map(|(_, q)| 1usize << q)
                    .sum()
            };
            let offsets: Vec<usize> = (0..dim).map(spread).collect();
            let mut buf = vec![C64::new(0.0, 0.0); dim];
            for base in (0..total).filter(|i| i & mask == 0) {
                for (k, off) in offsets.iter().enumerate() {
                    buf[k] = out.amplitudes[base | off];
                }
                for (row, off) in offsets.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (col, b) in buf.iter().enumerate() {
                        acc += m[(row, col)] * b;
                    }
                    out.amplitudes[base | off] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Applies `m` on a `dim`-sized slice indexed by `index(rest, k)` for every
/// `rest < count`.
fn gather_apply(
    m: &DMatrix<C64>,
    amps: &mut DVector<C64>,
    dim: usize,
    index: impl Fn(usize, usize) -> usize,
    count: usize,
) {
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    for rest in 0..count {
        for (k, b) in buf.iter_mut().enumerate() {
            *b = amps[index(rest, k)];
        }
        for row in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for (col, b) in buf.iter().enumerate() {
                acc += m[(row, col)] * b;
            }
            amps[index(rest, row)] = acc;
        }
    }
}

/// Applies `m` to the walk wires for every ancilla pattern, or only for
/// patterns with `control` set.
fn apply_walk_block(
    m: &DMatrix<C64>,
    amps: &mut DVector<C64>,
    layout: &RegisterLayout,
    control: Option<usize>,
) {
    let shift = layout.ancilla_qubits;
    let d = layout.walk_dim();
    let mut buf = vec![C64::new(0.0, 0.0); d];
    for bits in 0..layout.ancilla_dim() {
        if let Some(c) = control {
            if bits >> c & 1 == 0 {
                continue;
            }
        }
        for (w, b) in buf.iter_mut().enumerate() {
            *b = amps[(w << shift) | bits];
        }
        for row in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for (col, b) in buf.iter().enumerate() {
                acc += m[(row, col)] * b;
            }
            amps[(row << shift) | bits] = acc;
        }
    }
}

/// Thread-safe invocation meter.
#[derive(Debug, Default)]
pub struct InvocationCounter(AtomicU64);

impl InvocationCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

/// Controlled-`W^(2^k)`: walk wires are multiplied by `W^(2^k)` on the
/// branch where ancilla `control` is `|1⟩`. Records `2^k` controlled-`W`
/// invocations.
pub fn apply_controlled_power(
    w: &UnitaryOp,
    k: u32,
    control: usize,
    state: &StateVector,
    counter: &InvocationCounter,
) -> Result<StateVector> {
    let power = w.pow2(k);
    let out = apply_controlled_matrix(&power, control, state)?;
    counter.add(1u64 << k);
    Ok(out)
}

pub(crate) fn apply_controlled_matrix(
    power: &DMatrix<C64>,
    control: usize,
    state: &StateVector,
) -> Result<StateVector> {
    let layout = state.layout;
    if control >= layout.ancilla_qubits {
        return Err(Error::IndexOutOfRange {
            index: control,
            len: layout.ancilla_qubits,
        });
    }
    if power.nrows() != layout.walk_dim() {
        return Err(Error::DimensionMismatch {
            expected: layout.walk_dim(),
            got: power.nrows(),
        });
    }
    let mut out = state.clone();
    apply_walk_block(power, &mut out.amplitudes, &layout, Some(control));
    Ok(out)
}

pub fn hadamard() -> DMatrix<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_row_slice(2, 2, &[h, h, h, -h]).map(|v| C64::new(v, 0.0))
}

/// `H^{⊗ qubits}` with entries `(-1)^{popcount(i & j)} / sqrt(2^qubits)`.
pub fn hadamard_layer(qubits: usize) -> DMatrix<C64> {
    let d = 1usize << qubits;
    let s = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, d, |i, j| {
        let sign = if (i & j).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        C64::new(sign * s, 0.0)
    })
}

/// Discrete Fourier transform on `qubits` qubits:
/// `DFT |m⟩ = 2^{-a/2} sum_k e^{2 pi i m k / 2^a} |k⟩`.
pub fn dft(qubits: usize) -> DMatrix<C64> {
    let d = 1usize << qubits;
    let s = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, d, |k, m| {
        C64::from_polar(s, 2.0 * std::f64::consts::PI * (k * m % d) as f64 / d as f64)
    })
}

/// `S |x⟩|y⟩ = |y⟩|x⟩` on `C^n ⊗ C^n`.
pub fn swap(n: usize) -> DMatrix<C64> {
    let mut s = DMatrix::zeros(n * n, n * n);
    for x in 0..n {
        for y in 0..n {
            s[(y * n + x, x * n + y)] = C64::new(1.0, 0.0);
        }
    }
    s
}

/// One measurement outcome class.
#[derive(Debug, Clone, PartialEq)]
pub enum Projector {
    /// Projector onto a set of computational basis states.
    Basis(Vec<usize>),
    /// Projector onto the span of orthonormal vectors.
    Span(Vec<DVector<C64>>),
}

impl Projector {
    fn probability(&self, amps: &DVector<C64>) -> f64 {
        match self {
            Projector::Basis(idx) => idx.iter().map(|&i| amps[i].norm_sqr()).sum(),
            Projector::Span(vs) => vs.iter().map(|v| v.dotc(amps).norm_sqr()).sum(),
        }
    }

    fn check(&self, dim: usize) -> Result<()> {
        match self {
            Projector::Basis(idx) => {
                if let Some(&i) = idx.iter().find(|&&i| i >= dim) {
                    return Err(Error::IndexOutOfRange { index: i, len: dim });
                }
            }
            Projector::Span(vs) => {
                if let Some(v) = vs.iter().find(|v| v.len() != dim) {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// `max |⟨u|v⟩|` over the two families' spanning vectors.
    fn overlap(&self, other: &Projector, dim: usize) -> f64 {
        let vectors = |p: &Projector| -> Vec<DVector<C64>> {
            match p {
                Projector::Basis(idx) => idx
                    .iter()
                    .map(|&i| {
                        let mut v = DVector::zeros(dim);
                        v[i] = C64::new(1.0, 0.0);
                        v
                    })
                    .collect(),
                Projector::Span(vs) => vs.clone(),
            }
        };
        if let (Projector::Basis(a), Projector::Basis(b)) = (self, other) {
            return if a.iter().any(|i| b.contains(i)) { 1.0 } else { 0.0 };
        }
        let (va, vb) = (vectors(self), vectors(other));
        va.iter()
            .flat_map(|u| vb.iter().map(move |v| u.dotc(v).norm()))
            .fold(0.0, f64::max)
    }
}

/// Exact Born probabilities over a projector family plus a remainder outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    /// Probability of each projector in the family.
    pub probs: Vec<f64>,
    /// Mass of the complement of the family.
    pub remainder: f64,
}

impl OutcomeDistribution {
    /// Deterministically seeded samples; outcome `probs.len()` is the remainder.
    pub fn sample(&self, shots: usize, seed: u64) -> Vec<usize> {
        sample_indices(&self.probs, self.remainder, shots, seed)
    }
}

pub(crate) fn sample_indices(probs: &[f64], remainder: f64, shots: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: f64 = probs.iter().sum::<f64>() + remainder.max(0.0);
    (0..shots)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            probs.len()
        })
        .collect()
}

/// Measures `state` with pairwise-orthogonal projectors (Gram check at `1e-10`).
pub fn measurement_distribution(
    state: &StateVector,
    family: &[Projector],
) -> Result<OutcomeDistribution> {
    let dim = state.layout.total_dim();
    for p in family {
        p.check(dim)?;
    }
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            if family[i].overlap(&family[j], dim) > 1e-10 {
                return Err(Error::NonOrthogonalProjectors(i, j));
            }
        }
    }
    let probs: Vec<f64> = family
        .iter()
        .map(|p| p.probability(&state.amplitudes))
        .collect();
    let remainder = (state.amplitudes.norm_squared() - probs.iter().sum::<f64>()).max(0.0);
    Ok(OutcomeDistribution { probs, remainder })
}

/// `Λ_x = |x⟩⟨x| ⊗ |0⟩⟨0|_coin ⊗ |0…0⟩⟨0…0|` for every system state `x`.
pub fn system_projectors(layout: &RegisterLayout) -> Vec<Projector> {
    (0..layout.system_dim)
        .map(|x| Projector::Basis(vec![layout.index(x, 0, 0)]))
        .collect()
}
