//! Quantum sampling of Markov chain stationary distributions, simulated
//! with exact linear algebra.
//!
//! The modules build on one another:
//!
//! - [`markov_core`]: stochastic matrices, stationary distributions, gaps
//!   and mixing times.
//! - [`quantum_sim`]: state vectors over `system ⊗ coin ⊗ ancillas`, gates
//!   and measurements.
//! - [`szegedy_walk`]: the walk `W(P)` and its busy-subspace spectrum.
//! - [`fixed_point`]: π/3 amplitude amplification and chained preparation.
//! - [`approx_reflection`]: phase detectors and `R̃ = V^dagger (I ⊗ Q) V`.
//! - [`projected`]: the same reflections without materializing ancillas.
//! - [`quantum_sampler`]: the full sampling pipeline with its bounds.
//! - [`annealing`]: Metropolis chains, schedules and ground-state search.
//!
//! ```
//! use qsample::markov_core::{spectral_gap, StochasticMatrix};
//! use qsample::szegedy_walk::verify_walk;
//!
//! let p = StochasticMatrix::from_rows(&[vec![0.75, 0.25], vec![0.25, 0.75]])?;
//! assert!((spectral_gap(&p)?.gap - 0.5).abs() < 1e-12);
//! let report = verify_walk(&p, "lazy")?;
//! assert!(report.spectrum_ok && report.bound_ok);
//! # Ok::<(), qsample::Error>(())
//! ```

pub mod annealing;
pub mod approx_reflection;
pub mod check;
pub mod error;
pub mod fixed_point;
pub mod markov_core;
pub mod projected;
pub mod quantum_sampler;
pub mod quantum_sim;
pub mod szegedy_walk;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/markov.md")]
    mod markov {}
    #[doc = include_str!("../../../book/src/walk.md")]
    mod walk {}
    #[doc = include_str!("../../../book/src/fixed_point.md")]
    mod fixed_point {}
    #[doc = include_str!("../../../book/src/reflections.md")]
    mod reflections {}
    #[doc = include_str!("../../../book/src/sampling.md")]
    mod sampling {}
    #[doc = include_str!("../../../book/src/annealing.md")]
    mod annealing {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
