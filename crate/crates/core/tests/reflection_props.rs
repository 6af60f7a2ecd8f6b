mod common;

use nalgebra::{DMatrix, DVector};
use qsample::approx_reflection::{
    apply_approx_reflection, apply_detector, block_count, block_zero_amplitude, exact_reflection,
    ApproxReflection, DetectorConfig, PhaseTransform,
};
use qsample::fixed_point::{omega, ReflectionOracle};
use qsample::markov_core::{stationary_distribution, StochasticMatrix};
use qsample::quantum_sim::{InvocationCounter, RegisterLayout, StateVector, C64};
use qsample::szegedy_walk::{
    build_walk, busy_subspace, quantum_sample, unitary_eigen, walk_spectrum, WalkOperator,
};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Busy eigenvectors of the walk with their phases in turns.
fn busy_eigenvectors(walk: &WalkOperator) -> Vec<(DVector<C64>, f64)> {
    let busy = busy_subspace(walk.update());
    let w = walk.unitary().matrix();
    let restricted = busy.basis.adjoint() * w * &busy.basis;
    let (values, vectors) = unitary_eigen(&restricted);
    let full = &busy.basis * vectors;
    values
        .iter()
        .enumerate()
        .map(|(k, mu)| {
            let v = full.column(k).into_owned();
            assert!((w * &v - &v * *mu).norm() < 1e-9);
            (v, mu.arg() / (2.0 * PI))
        })
        .collect()
}

/// Random ergodic reversible chains on 2 or 3 states whose detector fits
/// in `a <= max_a` qubits per block.
fn chains(max_a: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<(WalkOperator, f64)> {
    let mut out = Vec::new();
    while out.len() < count {
        let n = 2 + out.len() % 2;
        let chain = common::reversible_chain(n, rng);
        let walk = build_walk(&chain).unwrap();
        let turns = walk_spectrum(&walk).unwrap().phase_gap_turns;
        if (1.0 / turns).log2().ceil() as usize <= max_a {
            out.push((walk, turns));
        }
    }
    out
}

fn stationary_state(walk: &WalkOperator, layout: RegisterLayout) -> StateVector {
    let pi = stationary_distribution(walk.chain()).unwrap();
    StateVector::from_walk_vector(layout, &quantum_sample(&pi)).unwrap()
}

fn layout_for(walk: &WalkOperator, config: &DetectorConfig) -> RegisterLayout {
    let n = walk.states();
    RegisterLayout::new(n, n, config.ancilla_qubits()).unwrap()
}

#[test]
fn block_count_for_listed_eps2() {
    // ⌈log2 5⌉ and ⌈log2 10⌉
    assert_eq!(block_count(0.04).unwrap(), 3);
    assert_eq!(block_count(0.01).unwrap(), 4);
}

#[test]
fn stationary_vector_picks_up_omega_exactly() {
    let mut rng = common::rng(41);
    for (walk, turns) in chains(4, 6, &mut rng) {
        let config = DetectorConfig::new(turns, 0.04).unwrap();
        let refl = ApproxReflection::new(&walk, config);
        let s = stationary_state(&walk, layout_for(&walk, &config));
        let out = apply_approx_reflection(&refl, &s).unwrap();
        let ideal = s.scale(omega());
        assert!(out.sub(&ideal).unwrap().norm() <= 1e-9);

        let counter = InvocationCounter::new();
        let detected = apply_detector(&walk, config, &s, &counter).unwrap();
        assert!(detected.sub(&s).unwrap().norm() <= 1e-10);
    }
}

#[test]
fn error_vector_bound_on_busy_eigenvectors() {
    let mut rng = common::rng(42);
    for &eps2 in &[0.04, 0.01] {
        for (walk, turns) in chains(3, 6, &mut rng) {
            let config = DetectorConfig::new(turns, eps2).unwrap();
            assert!(config.a <= 4);
            let layout = layout_for(&walk, &config);
            let refl = ApproxReflection::new(&walk, config);
            let exact = exact_reflection(&walk).unwrap();
            for (v, phi) in busy_eigenvectors(&walk) {
                if phi.abs() < 1e-9 {
                    continue;
                }
                assert!(phi.abs() >= turns - 1e-9);
                let s = StateVector::from_walk_vector(layout, &v).unwrap();
                let out = apply_approx_reflection(&refl, &s).unwrap();
                let ideal = exact.reflect(&s).unwrap();
                let xi = out.sub(&ideal).unwrap().norm();
                assert!(xi <= 2.0 * eps2.sqrt() + 1e-12, "xi {xi} eps2 {eps2}");

                // one block keeps |0…0⟩ with amplitude α₀; c blocks with α₀^c
                let alpha = block_zero_amplitude(config.a, phi).norm();
                assert!(alpha <= 0.5 + 1e-12);
                let counter = InvocationCounter::new();
                let detected = apply_detector(&walk, config, &s, &counter).unwrap();
                let kept = detected.ancilla_zero_block().norm();
                assert!((kept - alpha.powi(config.c as i32)).abs() < 1e-10);
                assert!(kept <= eps2.sqrt() + 1e-12);
            }
        }
    }
}

#[test]
fn half_turn_eigenvector_is_fully_detected() {
    let chain = StochasticMatrix::uniform(2).unwrap();
    let walk = build_walk(&chain).unwrap();
    let config = DetectorConfig::with_sizes(1, 1).unwrap();
    let layout = layout_for(&walk, &config);
    let mut found = 0;
    for (v, phi) in busy_eigenvectors(&walk) {
        if (phi.abs() - 0.5).abs() < 1e-9 {
            let s = StateVector::from_walk_vector(layout, &v).unwrap();
            let counter = InvocationCounter::new();
            let out = apply_detector(&walk, config, &s, &counter).unwrap();
            assert!(out.ancilla_zero_block().norm() < 1e-12);
            found += 1;
        }
    }
    assert_eq!(found, 2);
}

#[test]
fn hadamard_and_fourier_agree_on_zero_outcome() {
    let mut rng = common::rng(43);
    for (walk, _) in chains(4, 4, &mut rng) {
        let n = walk.states();
        for a in 1..=3 {
            let config = DetectorConfig::with_sizes(a, 2).unwrap();
            let layout = layout_for(&walk, &config);
            let v = common::random_vector(n * n, &mut rng);
            let s = StateVector::from_walk_vector(layout, &v).unwrap();
            let counter = InvocationCounter::new();
            let h = apply_detector(&walk, config, &s, &counter).unwrap();
            let f = apply_detector(
                &walk,
                config.with_transform(PhaseTransform::InverseFourier),
                &s,
                &counter,
            )
            .unwrap();
            let diff = h.ancilla_zero_block() - f.ancilla_zero_block();
            assert!(diff.norm() < 1e-10);
        }
    }
}

#[test]
fn invocation_count_is_exact() {
    let mut rng = common::rng(44);
    for (walk, _) in chains(4, 3, &mut rng) {
        for (a, c) in [(1, 1), (2, 3), (3, 2), (4, 1)] {
            let config = DetectorConfig::with_sizes(a, c).unwrap();
            let refl = ApproxReflection::new(&walk, config);
            let s = stationary_state(&walk, layout_for(&walk, &config));
            let mut state = s;
            for k in 1..=3u64 {
                state = if k % 2 == 0 {
                    refl.reflect_inverse(&state).unwrap()
                } else {
                    refl.reflect(&state).unwrap()
                };
                let per = 2 * ((1u64 << a) - 1) * c as u64;
                assert_eq!(refl.cw_invocations(), k * per);
                assert!(per <= (1u64 << (a + 1)) * c as u64);
                assert_eq!(refl.applications(), k);
            }
        }
    }
}

#[test]
fn agrees_with_exact_reflection_on_random_busy_states() {
    let mut rng = common::rng(45);
    let eps2 = 0.04;
    let walks = chains(3, 5, &mut rng);
    let mut checked = 0;
    for (walk, turns) in &walks {
        let config = DetectorConfig::new(*turns, eps2).unwrap();
        let layout = layout_for(walk, &config);
        let refl = ApproxReflection::new(walk, config);
        let exact = exact_reflection(walk).unwrap();
        let basis = &exact.busy().basis;
        for _ in 0..10 {
            let coeffs = common::random_vector(basis.ncols(), &mut rng);
            let v = basis * coeffs;
            let s = StateVector::from_walk_vector(layout, &v).unwrap();
            assert!(exact.idle_component(&s) < 1e-9);
            let out = apply_approx_reflection(&refl, &s).unwrap();
            let ideal = exact.reflect(&s).unwrap();
            assert!(out.sub(&ideal).unwrap().norm() <= 2.0 * eps2.sqrt() + 1e-12);
            checked += 1;
        }
    }
    assert_eq!(checked, 50);
}

#[test]
fn superposition_error_scales_with_weight() {
    let mut rng = common::rng(46);
    let eps2 = 0.01;
    for (walk, turns) in chains(3, 4, &mut rng) {
        let config = DetectorConfig::new(turns, eps2).unwrap();
        let layout = layout_for(&walk, &config);
        let refl = ApproxReflection::new(&walk, config);
        let exact = exact_reflection(&walk).unwrap();
        let vectors = busy_eigenvectors(&walk);
        let psi0 = exact.vector().clone();
        for (v, phi) in vectors.iter().filter(|(_, phi)| phi.abs() > 1e-9) {
            let _ = phi;
            let sum: DVector<C64> = (&psi0 + v) / C64::new(2f64.sqrt(), 0.0);
            let s = StateVector::from_walk_vector(layout, &sum).unwrap();
            let out = apply_approx_reflection(&refl, &s).unwrap();
            let ideal = exact.reflect(&s).unwrap();
            let err = out.sub(&ideal).unwrap().norm();
            assert!(err <= 2.0 * eps2.sqrt() / 2f64.sqrt() + 1e-12);
        }
    }
}

#[test]
fn exact_reflection_has_order_six_on_target() {
    let mut rng = common::rng(47);
    let (walk, _) = chains(4, 1, &mut rng).pop().unwrap();
    let exact = exact_reflection(&walk).unwrap();
    let layout = RegisterLayout::walk(walk.states());
    let s = stationary_state(&walk, layout);
    let mut t = s.clone();
    for k in 1..=6 {
        t = exact.reflect(&t).unwrap();
        if k == 2 {
            assert!(t.sub(&s).unwrap().norm() > 0.5);
        }
    }
    assert!(t.sub(&s).unwrap().norm() < 1e-12);

    // orthogonal components are untouched
    let d = layout.walk_dim();
    let proj = DMatrix::<C64>::identity(d, d) - exact.vector() * exact.vector().adjoint();
    let v = proj * common::random_vector(d, &mut rng);
    let sv = StateVector::unnormalized(layout, v.clone()).unwrap();
    let out = exact.reflect(&sv).unwrap();
    assert!((out.amplitudes() - v).norm() < 1e-12);
}
