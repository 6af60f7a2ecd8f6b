mod common;

use qsample::annealing::{metropolis_chain, EnergyLandscape};
use qsample::markov_core::StochasticMatrix;
use qsample::quantum_sampler::{
    plan_for, plan_parameters, run_from_stationary, sample, Backend, ChainSequence,
};
use rand::Rng;
use std::f64::consts::E;

fn anneal_sequence(l: &EnergyLandscape, betas: &[f64]) -> ChainSequence {
    let chains = betas.iter().map(|&b| metropolis_chain(l, b).unwrap()).collect();
    ChainSequence::new(chains).unwrap()
}

#[test]
fn single_chain_is_sampled_exactly() {
    let chain = StochasticMatrix::from_rows(&[
        vec![0.5, 0.3, 0.2],
        vec![0.3, 0.4, 0.3],
        vec![0.2, 0.3, 0.5],
    ])
    .unwrap();
    let seq = ChainSequence::new(vec![chain]).unwrap();
    let res = sample(&seq, 0.1, Backend::Auto).unwrap();
    assert_eq!(res.cw_used, 0);
    assert_eq!(res.reflections, 0);
    assert!(res.tv_measured < 1e-15);
    assert!(res.distribution.bottom < 1e-15);
    assert!(res.checks.all_ok());
}

#[test]
fn plan_example_identity() {
    let p = 1.0 / E;
    let params = plan_for(10, p, 0.25, 0.25).unwrap();
    let l = 120.0 * 320f64.ln() / (E / (E - 1.0)).ln();
    assert!((params.budget - l).abs() < 1e-9 * l);
    assert!((params.eps1 + 2.0 * params.budget * params.eps2.sqrt() - 0.125).abs() < 1e-15);
    assert!((2.0 * params.budget * params.eps2.sqrt() - 0.0625).abs() < 1e-15);
    assert_eq!(params.c, params.c_closed_form());
    assert_eq!(params.a, 2);

    let trivial = plan_for(1, 1.0, 0.25, 0.25).unwrap();
    assert!(trivial.trivial);
    assert_eq!(trivial.m, 0);
}

#[test]
fn smaller_eps_never_costs_less() {
    let mut rng = common::rng(51);
    for _ in 0..100 {
        let r = rng.gen_range(1..10);
        let p = rng.gen_range(0.05..0.95);
        let turns = rng.gen_range(0.01..0.5);
        let mut prev: Option<(f64, usize, u64)> = None;
        for k in 1..40 {
            let eps = 0.9 * 0.85f64.powi(k);
            let params = plan_for(r, p, turns, eps).unwrap();
            let now = (params.budget, params.a * params.c, params.predicted_cw());
            if let Some(before) = prev {
                assert!(now.0 >= before.0);
                assert!(now.1 >= before.1);
                assert!(now.2 >= before.2);
            }
            prev = Some(now);
        }
    }
}

#[test]
fn annealing_sequences_on_four_states() {
    let mut rng = common::rng(52);
    for trial in 0..8 {
        let energies: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..2.0)).collect();
        let l = EnergyLandscape::complete(energies, 3 + trial % 2).unwrap();
        let h = l.h_norm();
        let r = 1 + trial % 4;
        let betas: Vec<f64> = (0..=r).map(|i| i as f64 / h).collect();
        let seq = anneal_sequence(&l, &betas);
        assert!(seq.p >= (-1.0f64).exp() - 1e-12);
        let params = plan_for(r, (-1.0f64).exp(), seq.delta_turns, 0.25).unwrap();
        let res = run_from_stationary(&seq, &params, Backend::Auto).unwrap();
        assert!(res.checks.all_ok(), "trial {trial}: {:?}", res.checks);
        assert!(res.tv_measured <= 0.25);
        assert!(res.tv_measured <= 2.0 * res.state_error + 1e-12);
        assert!(res.state_error <= params.error_budget());
        assert_eq!(res.cw_used, params.predicted_cw());
        assert!((res.cw_used as f64) <= params.cw_bound());
        assert!((res.distribution.total() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn dense_and_projected_agree_on_reduced_detectors() {
    let l = EnergyLandscape::complete(vec![0.0, 1.0], 2).unwrap();
    let seq = anneal_sequence(&l, &[0.0, 1.0, 2.0]);
    let mut params = plan_parameters(&seq, 0.25).unwrap();
    params.c = 3;
    let dense = run_from_stationary(&seq, &params, Backend::Dense).unwrap();
    let projected = run_from_stationary(&seq, &params, Backend::Projected).unwrap();
    assert_eq!(dense.cw_used, projected.cw_used);
    for (a, b) in dense.distribution.probs.iter().zip(&projected.distribution.probs) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((dense.distribution.bottom - projected.distribution.bottom).abs() < 1e-10);
    assert!((dense.state_error - projected.state_error).abs() < 1e-9);
}

#[test]
fn seeded_draws_are_reproducible() {
    let l = EnergyLandscape::two_level(4, 1.0).unwrap();
    let seq = anneal_sequence(&l, &[0.0, 1.0]);
    let res = sample(&seq, 0.25, Backend::Auto).unwrap();
    let a = res.distribution.sample(200, 7);
    let b = res.distribution.sample(200, 7);
    assert_eq!(a, b);
    assert_eq!(a.len(), 200);
}
