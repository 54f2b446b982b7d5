mod common;

use purelab::ec::{
    bit_flip_code, complementarity_check, is_correctable, is_deletion, one_way_correct,
    refinement_residual, CodeSpec, Correctability, OneWay, OneWayBudget,
};
use purelab::linalg::{self, cr, CMat};
use purelab::theory::{paulis, quantum_model};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Code `C² ⊗ |0⟩` under noise `U_i ⊗ V_i` with `V_i|0⟩` orthogonal,
/// conjugated by a random global unitary.
fn correctable_instance(rng: &mut ChaCha8Rng) -> CodeSpec {
    let g = linalg::random_unitary(4, rng, false);
    let p: f64 = rng.random_range(0.1..0.9);
    let anc0 = linalg::projector(&linalg::basis_ket(2, 0));
    let proj = linalg::kron(&CMat::identity(2, 2), &anc0);
    let u0 = linalg::random_unitary(2, rng, false);
    let u1 = linalg::random_unitary(2, rng, false);
    let k0 = linalg::kron(&u0, &CMat::identity(2, 2)) * cr(p.sqrt());
    let k1 = linalg::kron(&u1, &paulis()[1]) * cr((1.0 - p).sqrt());
    let conj = |m: &CMat| &g * m * g.adjoint();
    CodeSpec::new(conj(&proj), vec![conj(&k0), conj(&k1)]).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng) -> CodeSpec {
    let v = common::random_isometry(2, 4, rng);
    CodeSpec::new(&v * v.adjoint(), common::random_kraus(4, 4, 3, rng)).unwrap()
}

#[test]
fn kl_and_factorization_agree() {
    let m = quantum_model(4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = (0, 0);
    for i in 0..50 {
        let spec = if i % 2 == 0 {
            correctable_instance(&mut rng)
        } else {
            random_instance(&mut rng)
        };
        let verdict = is_correctable(&m, &spec, 1e-8).unwrap();
        let fact = purelab::ec::factorization_residual(&spec);
        assert_eq!(verdict.is_correctable(), fact < 1e-8, "instance {i}: {fact}");
        if verdict.is_correctable() {
            seen.0 += 1;
        } else {
            seen.1 += 1;
        }
    }
    assert_eq!(seen, (25, 25));
}

#[test]
fn refinements_are_corrected_up_to_probability() {
    let m = quantum_model(8).unwrap();
    let spec = bit_flip_code(0.4).unwrap();
    let Correctability::Correctable { recovery, .. } = is_correctable(&m, &spec, 1e-8).unwrap() else {
        panic!("bit-flip code must be correctable");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let subset: Vec<usize> = (0..spec.kraus.len()).filter(|_| rng.random_bool(0.5)).collect();
        let (p, res) = refinement_residual(&spec, &recovery, &subset);
        assert!(res < 1e-10, "p={p} residual={res}");
    }
}

#[test]
fn unitary_channel_is_corrected_by_its_inverse() {
    let m = quantum_model(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let u = linalg::random_unitary(3, &mut rng, false);
    let spec = CodeSpec::full(vec![u.clone()]).unwrap();
    match is_correctable(&m, &spec, 1e-8).unwrap() {
        Correctability::Correctable { recovery, end_to_end_residual, .. } => {
            assert!(end_to_end_residual < 1e-10);
            let r = recovery.iter().fold(CMat::zeros(3, 3), |acc, k| acc + k);
            assert!(linalg::max_abs_diff(&r, &u.adjoint()) < 1e-10);
        }
        other => panic!("{other:?}"),
    }
    let comp = linalg::complementary_kraus(&spec.kraus);
    assert_eq!(comp[0].nrows(), 1);
    let c = complementarity_check(&m, &spec, 1e-8).unwrap();
    assert!(c.correctable && c.complement_deletion && c.consistent());
}

#[test]
fn complementarity_on_the_bit_flip_code() {
    let m = quantum_model(8).unwrap();
    let spec = bit_flip_code(0.3).unwrap();
    let c = complementarity_check(&m, &spec, 1e-8).unwrap();
    assert!(c.correctable && c.complement_deletion);
    assert_eq!(c.converse, Some(true));
}

#[test]
fn constant_and_identity_channels() {
    let m = quantum_model(2).unwrap();
    let full = CMat::identity(2, 2);
    // replace by |0⟩: Kraus |0⟩⟨i|
    let reset: Vec<CMat> = (0..2)
        .map(|i| linalg::basis_ket(2, 0) * linalg::basis_ket(2, i).adjoint())
        .collect();
    assert!(is_deletion(&m, &reset, &full, 1e-9).unwrap().is_deletion());
    assert!(!is_deletion(&m, &[full.clone()], &full, 1e-9).unwrap().is_deletion());
}

#[test]
fn one_way_correction() {
    let m = quantum_model(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let u = linalg::random_unitary(2, &mut rng, false);
    match one_way_correct(&m, &[u.clone()], OneWayBudget::default()).unwrap() {
        OneWay::Decomposed { probabilities, recoveries, .. } => {
            assert_eq!(probabilities.len(), 1);
            assert!((probabilities[0] - 1.0).abs() < 1e-12);
            let prod = &recoveries[0] * &u;
            let phase = prod[(0, 0)];
            assert!(linalg::max_abs_diff(&prod, &(CMat::identity(2, 2) * phase)) < 1e-10);
        }
        other => panic!("{other:?}"),
    }
}
