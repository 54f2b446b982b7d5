mod common;

use purelab::choi::faithful_pair;
use purelab::circuit::evaluate;
use purelab::linalg::{self, cr, CMat, CVec};
use purelab::protocols::{
    conjugate_reversible, deterministic_teleport, entanglement_swap, teleport_circuit,
    transpose_reversible,
};
use purelab::theory::{quantum_model, SystemLabel, TheoryId, TheoryModel};
use purelab::{parse_script, DslEnv};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn teleportation_is_deterministic_for_qubits_and_qutrits() {
    for d in [2, 3] {
        let m = quantum_model(d).unwrap();
        let run = deterministic_teleport(&m, d).unwrap();
        assert_eq!(run.effects.len(), d * d);
        assert!(run.max_residual() < 1e-10, "d={d}: {}", run.max_residual());
        let c = &run.clauses;
        assert!(c.atomic && c.reversible_corrections);
        assert!(c.resource_residual < 1e-12);
        assert!(c.marginal_residual < 1e-12);
        assert!(c.twirl_residual < 1e-12);
        assert!(run.dense_coding_residual < 1e-12);
        let total: f64 = run.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn perturbed_correction_breaks_teleportation() {
    let m = quantum_model(2).unwrap();
    let run = deterministic_teleport(&m, 2).unwrap();
    let k = 3;
    let theta: f64 = 0.05;
    let rot = CMat::from_row_slice(
        2,
        2,
        &[cr(theta.cos()), cr(-theta.sin()), cr(theta.sin()), cr(theta.cos())],
    );
    let w = linalg::weyl(2, k / 2, k % 2);
    let bad = m.unitary(&m.system(), &(rot * w)).unwrap();
    let c = teleport_circuit(&m, &run.pair.psi, &run.effects[k], &bad).unwrap();
    let got = evaluate(&c, &m).unwrap().matrix();
    let want = purelab::RMat::identity(got.nrows(), got.ncols()) * run.probabilities[k];
    assert!(linalg::max_abs_real(&(got - want)) >= 1e-3);
}

#[test]
fn teleportation_probability_meets_the_bound() {
    for d in [2, 3, 4] {
        let m = quantum_model(d).unwrap();
        let fp = faithful_pair(&m, &m.system()).unwrap();
        let bound = 1.0 / m.system().coord_dim() as f64;
        assert!(fp.probability <= bound + 1e-15);
        assert!((fp.probability - 1.0 / (d * d) as f64).abs() < 1e-12);
    }
}

#[test]
fn swapping_probabilities() {
    let m = quantum_model(2).unwrap();
    let sys = SystemLabel::composite(TheoryId::Quantum, vec![2, 2]);
    let a: f64 = 0.4;
    let ket = CVec::from_vec(vec![cr(a.cos()), cr(0.0), cr(0.0), cr(a.sin())]);
    let psi = m.state_from_ket(&sys, &ket).unwrap();
    let r = entanglement_swap(&m, &psi).unwrap();
    let want = (a.cos() * a.sin()).powi(2);
    assert!((r.probability - want).abs() < 1e-12);
    assert!(r.residual < 1e-10);

    let prod = m.state_from_ket(&sys, &linalg::basis_ket(4, 0)).unwrap();
    let r = entanglement_swap(&m, &prod).unwrap();
    assert!((r.probability - 1.0).abs() < 1e-12);
    assert!(r.residual < 1e-12);

    let m3 = quantum_model(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sys3 = SystemLabel::composite(TheoryId::Quantum, vec![3, 3]);
    let psi3 = m3.state_from_ket(&sys3, &linalg::random_ket(9, &mut rng, false)).unwrap();
    assert!(entanglement_swap(&m3, &psi3).unwrap().residual < 1e-9);
}

#[test]
fn transpose_and_conjugate_of_random_unitaries() {
    let m = quantum_model(3).unwrap();
    let a = m.system();
    let fp = faithful_pair(&m, &a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let u = linalg::random_unitary(3, &mut rng, false);
        let map = m.unitary(&a, &u).unwrap();
        let t = transpose_reversible(&m, &map, &fp).unwrap();
        assert!(t.max_abs_diff(&m.unitary(&a, &u.transpose()).unwrap()) < 1e-10);
        let c = conjugate_reversible(&m, &map, &fp).unwrap();
        let conj = u.map(|z| z.conj());
        assert!(c.max_abs_diff(&m.unitary(&a, &conj).unwrap()) < 1e-10);
    }
    let noisy = m.map_from_kraus(&a, &a, common::random_kraus(3, 3, 2, &mut rng)).unwrap();
    assert!(transpose_reversible(&m, &noisy, &fp).is_err());
}

#[test]
fn teleportation_script_matches_the_protocol() {
    let m = quantum_model(2).unwrap();
    let run = deterministic_teleport(&m, 2).unwrap();
    for k in 0..4 {
        let text = format!(
            "prep phi : B * C = bell\neff meas : A * B = bell({k})\nbox fix : C -> C = weyl({k})\nrun tele = phi.meas.fix\n"
        );
        let script = parse_script(&text).unwrap();
        let c = script.build("tele", &DslEnv::new(&m)).unwrap();
        let got = evaluate(&c, &m).unwrap().matrix();
        let want = purelab::RMat::identity(got.nrows(), got.ncols()) * run.probabilities[k];
        assert!(linalg::max_abs_real(&(got - want)) < 1e-12, "outcome {k}");
    }
}
