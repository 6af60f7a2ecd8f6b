mod common;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qsample::fixed_point::{
    amplify, chain_prepare, omega, phase_aligned_distance, plan, reflections_per_level,
    ProjectorReflection,
};
use qsample::quantum_sim::{fidelity, RegisterLayout, StateVector, C64};
use rand::Rng;
use std::f64::consts::E;

fn state(v: DVector<C64>) -> StateVector {
    StateVector::new(RegisterLayout::plain(v.len()), v).unwrap()
}

fn reflection_matrix(t: &DVector<C64>) -> DMatrix<C64> {
    let d = t.len();
    DMatrix::identity(d, d) + t * t.adjoint() * (omega() - C64::new(1.0, 0.0))
}

/// `U_{m+1} = U_m R_s U_m^dagger R_t U_m` as an explicit matrix.
fn recursion_matrix(s: &DVector<C64>, t: &DVector<C64>, m: u32) -> DMatrix<C64> {
    let d = s.len();
    let mut u = DMatrix::<C64>::identity(d, d);
    let rs = reflection_matrix(s);
    let rt = reflection_matrix(t);
    for _ in 0..m {
        u = &u * &rs * u.adjoint() * &rt * &u;
    }
    u
}

#[test]
fn fidelity_bound_on_random_pairs() {
    let mut rng = common::rng(31);
    for i in 0..60 {
        let d = 2 + i % 15;
        let s = common::random_vector(d, &mut rng);
        let t = common::random_vector(d, &mut rng);
        let p = s.dotc(&t).norm_sqr();
        for m in 0..=2u32 {
            let src = ProjectorReflection::new(state(s.clone())).unwrap();
            let tgt = ProjectorReflection::new(state(t.clone())).unwrap();
            let out = amplify(state(s.clone()), &src, &tgt, m).unwrap();
            let f = fidelity(&out.state, &state(t.clone())).unwrap();
            let bound = 1.0 - (1.0 - p).powi(3i32.pow(m));
            assert!(f >= bound - 1e-12, "pair {i} m {m}: {f} < {bound}");
            let used = src.invocations() + tgt.invocations();
            assert_eq!(used, out.reflections);
            assert_eq!(used, reflections_per_level(m));
            assert!(used <= 3u64.pow(m));

            let oracle = recursion_matrix(&s, &t, m) * &s;
            assert!((out.state.amplitudes() - oracle).norm() < 1e-10);
        }
    }
}

#[test]
fn three_quarter_overlap_at_level_one() {
    let mut rng = common::rng(32);
    let s = common::random_vector(8, &mut rng);
    let t = common::rotate_towards(&s, 0.75f64.sqrt().acos(), &mut rng);
    let src = ProjectorReflection::new(state(s.clone())).unwrap();
    let tgt = ProjectorReflection::new(state(t.clone())).unwrap();
    let out = amplify(state(s), &src, &tgt, 1).unwrap();
    let f = fidelity(&out.state, &state(t)).unwrap();
    assert!(f >= 0.984375 - 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deficit_cubes_per_level(seed in any::<u64>(), d in 2usize..12, m in 0u32..3) {
        let mut rng = common::rng(seed);
        let s = common::random_vector(d, &mut rng);
        let t = common::random_vector(d, &mut rng);
        let run = |level: u32| {
            let src = ProjectorReflection::new(state(s.clone())).unwrap();
            let tgt = ProjectorReflection::new(state(t.clone())).unwrap();
            let out = amplify(state(s.clone()), &src, &tgt, level).unwrap();
            1.0 - fidelity(&out.state, &state(t.clone())).unwrap()
        };
        let before = run(m);
        let after = run(m + 1);
        prop_assert!(after <= before.powi(3) + 1e-12);
    }
}

#[test]
fn plan_example_values() {
    let p = 1.0 / E;
    let ratio = 200f64.ln() / (E / (E - 1.0)).ln();
    let pl = plan(p, 5, 0.05).unwrap();
    assert!((pl.budget - 60.0 * ratio).abs() < 1e-9);
    assert!(pl.big_m as f64 >= 2.0 * ratio);
    assert!((pl.big_m as f64) / 3.0 < 2.0 * ratio);
    assert_eq!(3u64.pow(pl.m), pl.big_m);
    assert!(pl.budget_holds());

    let trivial = plan(1.0, 3, 0.1).unwrap();
    assert_eq!((trivial.m, trivial.big_m), (0, 1));
}

#[test]
fn budget_holds_whenever_amplification_is_needed() {
    let mut rng = common::rng(33);
    for _ in 0..200 {
        let p = rng.gen_range(0.01..0.99);
        let r = rng.gen_range(1..20);
        let eps1 = rng.gen_range(0.001..0.5);
        let pl = plan(p, r, eps1).unwrap();
        if pl.m >= 1 {
            assert!(pl.budget_holds(), "{pl:?}");
        }
        assert!(pl.reflections() as f64 <= 2.0 * r as f64 * pl.big_m as f64);
    }
}

#[test]
fn chained_preparation_meets_eps1() {
    let mut rng = common::rng(34);
    for trial in 0..20 {
        let r = 1 + trial % 5;
        let d = 4 + trial % 5;
        for &eps1 in &[0.1, 0.05] {
            let p_target: f64 = rng.gen_range(0.3..0.9);
            let theta = p_target.sqrt().acos();
            let mut states = vec![common::random_vector(d, &mut rng)];
            for _ in 0..r {
                let next = common::rotate_towards(states.last().unwrap(), theta, &mut rng);
                states.push(next);
            }
            let p = states
                .windows(2)
                .map(|w| w[0].dotc(&w[1]).norm_sqr())
                .fold(1.0, f64::min);
            assert!(p >= 0.3 - 1e-12);
            let pl = plan(p.min(1.0), r, eps1).unwrap();
            let oracles: Vec<ProjectorReflection> = states
                .iter()
                .map(|s| ProjectorReflection::new(state(s.clone())).unwrap())
                .collect();
            let out = chain_prepare(state(states[0].clone()), &oracles, &pl).unwrap();
            let err = phase_aligned_distance(&out.state, &state(states[r].clone())).unwrap();
            assert!(err <= eps1, "trial {trial}: {err}");
            assert!(err <= pl.error_bound() + 1e-12);
            let used: u64 = oracles.iter().map(ProjectorReflection::invocations).sum();
            assert_eq!(used, out.reflections);
            assert!(used as f64 <= pl.budget);
            assert!(used as f64 <= 2.0 * r as f64 * pl.big_m as f64);
        }
    }
}

#[test]
fn chain_of_three_in_six_dimensions() {
    let mut rng = common::rng(35);
    let mut states = vec![common::random_vector(6, &mut rng)];
    for _ in 0..3 {
        let next = common::rotate_towards(states.last().unwrap(), 0.5, &mut rng);
        states.push(next);
    }
    let p = 0.5f64.cos().powi(2);
    let pl = plan(p, 3, 0.1).unwrap();
    let oracles: Vec<ProjectorReflection> = states
        .iter()
        .map(|s| ProjectorReflection::new(state(s.clone())).unwrap())
        .collect();
    let out = chain_prepare(state(states[0].clone()), &oracles, &pl).unwrap();
    let err = phase_aligned_distance(&out.state, &state(states[3].clone())).unwrap();
    assert!(err <= 0.1);
    assert!(err <= 2.0 * 3.0 * (1.0 - p).powf(pl.big_m as f64 / 2.0));
}
