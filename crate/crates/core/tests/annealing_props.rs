mod common;

use qsample::annealing::{
    anneal_sample, boltzmann, find_ground_state, measured_overlap, metropolis_chain,
    min_phase_gap, overlap_lower_bound, required_beta, schedule, worst_case_ground_mass,
    zeno_betas, zeno_cost_comparison, EnergyLandscape,
};
use qsample::markov_core::{detailed_balance_violation, stationary_distribution};
use qsample::quantum_sampler::Backend;
use rand::Rng;
use std::f64::consts::E;

#[test]
fn detailed_balance_on_random_landscapes() {
    let mut rng = common::rng(61);
    for i in 0..60 {
        let d = 2 + i % 7;
        let l = common::random_landscape(d, &mut rng);
        let gamma = l.gamma();
        let beta_max = if gamma > 0.0 { 10.0 / gamma } else { 10.0 };
        let beta = rng.gen_range(0.0..beta_max.min(50.0));
        let chain = metropolis_chain(&l, beta).unwrap();
        let target = boltzmann(&l, beta).unwrap();
        assert!(detailed_balance_violation(&chain, target.pi_beta.probs()) <= 1e-10);
        let pi = stationary_distribution(&chain).unwrap();
        for (a, b) in pi.probs().iter().zip(target.pi_beta.probs()) {
            assert!((a - b).abs() <= 1e-10, "landscape {i} beta {beta} gamma {gamma} diff {}", (a - b).abs());
        }
    }
}

#[test]
fn two_state_metropolis_stationary() {
    let gamma = 0.7;
    let beta = 1.3;
    let l = EnergyLandscape::complete(vec![0.0, gamma], 1).unwrap();
    let pi = stationary_distribution(&metropolis_chain(&l, beta).unwrap()).unwrap();
    let z = 1.0 + (-beta * gamma).exp();
    assert!((pi.probs()[0] - 1.0 / z).abs() < 1e-12);
}

#[test]
fn boltzmann_examples() {
    let l = EnergyLandscape::complete(vec![0.0, 1.0, 2.0], 2).unwrap();
    let b = boltzmann(&l, 1.0).unwrap();
    let z = 1.0 + (-1.0f64).exp() + (-2.0f64).exp();
    assert!((b.z_beta - z).abs() < 1e-12);
    assert!((b.pi_beta.probs()[1] - (-1.0f64).exp() / z).abs() < 1e-12);
    let b0 = boltzmann(&l, 0.0).unwrap();
    assert!((b0.z_beta - 3.0).abs() < 1e-12);

    let flat = EnergyLandscape::complete(vec![2.0; 4], 3).unwrap();
    for beta in [0.0, 1.0, 100.0] {
        let b = boltzmann(&flat, beta).unwrap();
        assert!(b.pi_beta.probs().iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    // large energies do not overflow
    let far = EnergyLandscape::complete(vec![1000.0, 1001.0], 1).unwrap();
    let b = boltzmann(&far, 5.0).unwrap();
    assert!((b.pi_beta.probs()[0] - 1.0 / (1.0 + (-5.0f64).exp())).abs() < 1e-12);
}

#[test]
fn overlap_bound_on_random_triples() {
    let mut rng = common::rng(62);
    for i in 0..60 {
        let l = common::random_landscape(2 + i % 7, &mut rng);
        let beta = rng.gen_range(0.0..5.0);
        let db = rng.gen_range(0.0..3.0);
        let measured = measured_overlap(&l, beta, db).unwrap();
        assert!(measured >= overlap_lower_bound(&l, db) - 1e-12);
    }
    let l = common::random_landscape(5, &mut rng);
    assert_eq!(overlap_lower_bound(&l, 1.0 / l.h_norm()), (-1.0f64).exp());
    assert!((measured_overlap(&l, 0.3, 0.0).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn worst_case_mass_is_tight_at_required_beta() {
    let beta = required_beta(1.0, 4, 0.25).unwrap();
    assert!((beta - 12f64.ln()).abs() < 1e-15);
    let mass = worst_case_ground_mass(1.0, 4, beta);
    assert!((mass - 0.8).abs() < 1e-12);

    let mut rng = common::rng(63);
    for _ in 0..30 {
        let d = rng.gen_range(2..9);
        let gamma = rng.gen_range(0.2..3.0);
        let eps3 = rng.gen_range(0.05..0.5);
        let beta = required_beta(gamma, d, eps3).unwrap();
        let l = EnergyLandscape::two_level(d, gamma).unwrap();
        let pi = boltzmann(&l, beta).unwrap();
        let ground = pi.pi_beta.probs()[l.ground_states()[0]];
        assert!((ground - worst_case_ground_mass(gamma, d, beta)).abs() < 1e-12);
        assert!(ground >= 1.0 - eps3 - 1e-12);
    }
    assert!(required_beta(0.0, 4, 0.25).is_err());
    let b1 = required_beta(1.0, 4, 0.1).unwrap();
    let b2 = required_beta(1.0, 4, 0.01).unwrap();
    assert!(b2 > b1);
}

#[test]
fn schedule_reaches_final_beta_within_one_step() {
    let mut rng = common::rng(64);
    for _ in 0..30 {
        let l = common::random_landscape(5, &mut rng);
        let bf = rng.gen_range(0.0..3.0);
        let s = schedule(&l, bf).unwrap();
        assert_eq!(s.betas.len(), s.r + 1);
        assert_eq!(s.betas[0], 0.0);
        assert!((s.betas[s.r] - bf).abs() < 1e-12);
        assert!(s.r as f64 * s.delta_beta >= bf - 1e-12);
        assert!(s.r as f64 * s.delta_beta < bf + s.delta_beta + 1e-12);
        assert!((s.p - 1.0 / E).abs() < 1e-15);
    }
}

#[test]
fn flat_landscape_samples_uniform_exactly() {
    let l = EnergyLandscape::complete(vec![1.0; 4], 3).unwrap();
    let rep = anneal_sample(&l, 2.0, 0.25, Backend::Auto).unwrap();
    assert!(rep.sample.tv_measured < 1e-12);
    let g = find_ground_state(&l, 50, 3, Backend::Auto).unwrap();
    assert!((g.success_probability - 1.0).abs() < 1e-12);
    assert_eq!(g.ground_states.len(), 4);
    assert!(g.zeno.is_none());
}

#[test]
fn single_state_landscape() {
    let l = EnergyLandscape::new(vec![0.0], vec![vec![]], 1).unwrap();
    let g = find_ground_state(&l, 10, 1, Backend::Auto).unwrap();
    assert!((g.success_probability - 1.0).abs() < 1e-12);
    assert_eq!(g.state, Some(0));
}

#[test]
fn two_level_demo_end_to_end() {
    let l = EnergyLandscape::two_level(4, 1.0).unwrap();
    let rep = anneal_sample(&l, 12f64.ln(), 0.25, Backend::Auto).unwrap();
    assert!(rep.schedule.r <= 4);
    assert!(rep.overlaps.iter().all(|c| c.ok));
    let s = &rep.sample;
    assert!(s.checks.all_ok(), "{:?}", s.checks);
    assert!(s.tv_measured <= 0.25);
    assert!(s.state_error <= s.eps1 + 2.0 * s.budget * s.eps2.sqrt());
    assert!((s.cw_used as f64) <= (1u64 << (s.a + 1)) as f64 * s.c as f64 * s.budget);

    let g = find_ground_state(&l, 100, 42, Backend::Auto).unwrap();
    assert!((g.target_ground_mass - 0.8).abs() < 1e-12);
    assert!(g.success_probability > 0.5);
    assert!(g.success.ok && g.ground_mass.ok);
    assert!(g.empirical_success > 0.5);
    assert_eq!(g.state, Some(0));
}

#[test]
fn zeno_model_arithmetic() {
    let l = EnergyLandscape::two_level(16, 1.0).unwrap();
    let l8 = EnergyLandscape::complete(
        (0..16).map(|x| [0.0, 1.0].get(x).copied().unwrap_or(8.0)).collect(),
        15,
    )
    .unwrap();
    let cmp = zeno_cost_comparison(&l8, 0.1, 0.2).unwrap();
    assert_eq!(cmp.h_over_gamma, 8.0);
    let h = 8.0;
    let log_d = 16f64.ln();
    let expected = h * log_d * log_d / (h * log_d).ln() * (0.2 / 0.1);
    assert!((cmp.ratio - expected).abs() < 1e-9 * expected);
    assert!(zeno_cost_comparison(&l8, 0.3, 0.2).is_err());

    let unit = EnergyLandscape::two_level(2, 1.0).unwrap();
    let cmp = zeno_cost_comparison(&unit, 1.0, 1.0).unwrap();
    assert!((cmp.ours - 1.0).abs() < 1e-12 && (cmp.zeno - 1.0).abs() < 1e-12);

    // refined grid never has a larger phase gap
    let sched = schedule(&l, required_beta(1.0, 16, 0.25).unwrap()).unwrap();
    let fine = zeno_betas(&l, &sched).unwrap();
    assert!(fine.len() >= sched.betas.len());
    let delta = min_phase_gap(&l, &sched.betas).unwrap();
    let delta_prime = min_phase_gap(&l, &fine).unwrap();
    assert!(delta_prime <= delta + 1e-12);
}
