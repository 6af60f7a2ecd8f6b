#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qsample::annealing::EnergyLandscape;
use qsample::markov_core::StochasticMatrix;
use qsample::quantum_sim::{RegisterLayout, StateVector, C64};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Symmetric positive weights on a connected graph with self-loops,
/// normalized by row: reversible with `π ∝` row sums.
pub fn reversible_chain(n: usize, rng: &mut ChaCha8Rng) -> StochasticMatrix {
    let mut w = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        w[(x, x)] = rng.gen_range(0.05..1.0);
        for y in (x + 1)..n {
            let v = if y == x + 1 || rng.gen_bool(0.5) {
                rng.gen_range(0.05..1.0)
            } else {
                0.0
            };
            w[(x, y)] = v;
            w[(y, x)] = v;
        }
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|x| {
            let s: f64 = w.row(x).iter().sum();
            (0..n).map(|y| w[(x, y)] / s).collect()
        })
        .collect();
    StochasticMatrix::from_rows(&rows).unwrap()
}

/// Every row equal to `pi`.
pub fn rank_one_chain(pi: &[f64]) -> StochasticMatrix {
    StochasticMatrix::from_rows(&vec![pi.to_vec(); pi.len()]).unwrap()
}

pub fn random_distribution(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// `A ⊗ B` for stochastic `A`, `B`.
pub fn kron_chain(a: &StochasticMatrix, b: &StochasticMatrix) -> StochasticMatrix {
    StochasticMatrix::new(a.entries().kronecker(b.entries())).unwrap()
}

/// Reversible chain on `n` states, sometimes with exact zero eigenvalues.
pub fn mixed_reversible_chain(n: usize, rng: &mut ChaCha8Rng) -> StochasticMatrix {
    match rng.gen_range(0..4) {
        0 => rank_one_chain(&random_distribution(n, rng)),
        1 if n % 2 == 0 && n >= 4 => {
            let a = reversible_chain(n / 2, rng);
            let b = rank_one_chain(&random_distribution(2, rng));
            kron_chain(&a, &b)
        }
        _ => reversible_chain(n, rng),
    }
}

pub fn random_vector(d: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let v = DVector::from_fn(d, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

pub fn random_state(d: usize, rng: &mut ChaCha8Rng) -> StateVector {
    StateVector::new(RegisterLayout::plain(d), random_vector(d, rng)).unwrap()
}

/// `cos(θ) s + sin(θ) v` with `v ⊥ s`, so the fidelity is `cos^2 θ`.
pub fn rotate_towards(s: &DVector<C64>, theta: f64, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let mut v = random_vector(s.len(), rng);
    let proj = s.dotc(&v);
    v -= s * proj;
    let n = v.norm();
    v /= C64::new(n, 0.0);
    s * C64::new(theta.cos(), 0.0) + v * C64::new(theta.sin(), 0.0)
}

/// Random energies in `[0, 4]` on a connected graph with `M` = max degree
/// plus a random slack.
pub fn random_landscape(d: usize, rng: &mut ChaCha8Rng) -> EnergyLandscape {
    let energies: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..4.0)).collect();
    let mut neighbors = vec![Vec::new(); d];
    for x in 0..d {
        for y in (x + 1)..d {
            if y == x + 1 || rng.gen_bool(0.4) {
                neighbors[x].push(y);
                neighbors[y].push(x);
            }
        }
    }
    let max_degree = neighbors.iter().map(Vec::len).max().unwrap_or(0);
    let m = max_degree + rng.gen_range(1..3);
    EnergyLandscape::new(energies, neighbors, m).unwrap()
}
