mod common;

use common::*;
use purelab::linalg::{self, CMat};
use purelab::metrology::{discriminate, transformation_norm, SeesawBudget};
use purelab::theory::{classical_model, paulis, quantum_model, TheoryModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn jacobi_matches_known_spectra() {
    let ev = jacobi_eigenvalues(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
    assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
    let y = &paulis()[2];
    let ev = herm_eigenvalues(y);
    assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
}

#[test]
fn arc_formula_limits() {
    // X against I: phases {0, π}
    assert!((unitary_distance_oracle(&[0.0, std::f64::consts::PI]) - 2.0).abs() < 1e-15);
    assert!(unitary_distance_oracle(&[0.3, 0.3]).abs() < 1e-15);
    let ph = qubit_eigenphases(&paulis()[3]);
    assert!((eigenphase_arc(&ph) - std::f64::consts::PI).abs() < 1e-14);
}

#[test]
fn bloch_and_eigen_oracles_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let r0 = linalg::random_density(2, 2, &mut rng, false);
        let r1 = linalg::random_density(2, 1 + rng.random_range(0..2), &mut rng, false);
        let pi0 = rng.random_range(0.0..1.0);
        let a = helstrom_oracle(&r0, &r1, pi0, 1.0 - pi0);
        let b = bloch_oracle(&r0, &r1, pi0, 1.0 - pi0);
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn qubit_discrimination_matches_oracle() {
    let m = quantum_model(2).unwrap();
    let sys = m.system();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let r0 = linalg::random_density(2, 1 + rng.random_range(0..2), &mut rng, false);
        let r1 = linalg::random_density(2, 1 + rng.random_range(0..2), &mut rng, false);
        let pi0 = rng.random_range(0.05..0.95);
        let s0 = m.state_from_density(&sys, &r0).unwrap();
        let s1 = m.state_from_density(&sys, &r1).unwrap();
        let got = discriminate(&m, &s0, &s1, pi0, 1.0 - pi0).unwrap().p_success;
        assert!((got - helstrom_oracle(&r0, &r1, pi0, 1.0 - pi0)).abs() < 1e-9);
    }
}

#[test]
fn qutrit_discrimination_matches_oracle() {
    let m = quantum_model(3).unwrap();
    let sys = m.system();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let r0 = linalg::random_density(3, 3, &mut rng, false);
        let r1 = linalg::random_density(3, 2, &mut rng, false);
        let s0 = m.state_from_density(&sys, &r0).unwrap();
        let s1 = m.state_from_density(&sys, &r1).unwrap();
        let got = discriminate(&m, &s0, &s1, 0.5, 0.5).unwrap().p_success;
        assert!((got - helstrom_oracle(&r0, &r1, 0.5, 0.5)).abs() < 1e-9);
    }
}

#[test]
fn classical_discrimination_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 2..=5 {
        let m = classical_model(n).unwrap();
        let sys = m.system();
        for _ in 0..40 {
            let s0 = m.random_state(&sys, &mut rng);
            let s1 = m.random_state(&sys, &mut rng);
            let pi0 = rng.random_range(0.0..1.0);
            let got = discriminate(&m, &s0, &s1, pi0, 1.0 - pi0).unwrap().p_success;
            let want = classical_brute_force(&s0.coords, &s1.coords, pi0, 1.0 - pi0);
            assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
        }
    }
}

#[test]
fn unitary_distance_matches_arc_formula() {
    let m = quantum_model(2).unwrap();
    let sys = m.system();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let budget = SeesawBudget {
        restarts: 8,
        ..Default::default()
    };
    for _ in 0..5 {
        let u = linalg::random_unitary(2, &mut rng, false);
        let v = linalg::random_unitary(2, &mut rng, false);
        let delta = m.unitary(&sys, &u).unwrap().sub(&m.unitary(&sys, &v).unwrap()).unwrap();
        let got = transformation_norm(&m, &delta, budget).unwrap().value;
        let want = unitary_distance_oracle(&qubit_eigenphases(&(u.adjoint() * &v)));
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn trace_norm_oracle_matches_library() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [2, 3, 4] {
        let h: CMat = linalg::random_hermitian(n, &mut rng, false);
        assert!((trace_norm_oracle(&h) - linalg::trace_norm(&h)).abs() < 1e-10);
    }
}
