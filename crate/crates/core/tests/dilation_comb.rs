mod common;

use purelab::choi::{check_causal_order, comb_decompose, CausalOrder};
use purelab::dilation::{connect_dilations, stinespring_padded, Dilation};
use purelab::linalg::{self, CMat};
use purelab::theory::{quantum_model, SystemLabel, TheoryId, TheoryModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn equal_size_dilations_are_unitarily_connected() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..50 {
        let d = 2 + i % 2;
        let m = quantum_model(d).unwrap();
        let a = m.system();
        let r = rng.random_range(1..=d);
        let c = m.map_from_kraus(&a, &a, common::random_kraus(d, d, r, &mut rng)).unwrap();
        let env = d * d;
        let v1 = stinespring_padded(&m, &c, env).unwrap();
        assert!(v1.isometry_residual() < 1e-10);
        let u = linalg::random_unitary(env, &mut rng, false);
        let v2 = Dilation {
            isometry: linalg::kron(&CMat::identity(d, d), &u) * &v1.isometry,
            ..v1.clone()
        };
        assert!(v2.isometry_residual() < 1e-10);
        let conn = connect_dilations(&v1, &v2).unwrap();
        assert!(conn.residual < 1e-8, "residual {}", conn.residual);
        let u = conn.unitary_completion().unwrap();
        assert!(linalg::unitarity_residual(&u) < 1e-8);
        let lifted = linalg::kron(&CMat::identity(d, d), &u) * &v1.isometry;
        assert!(linalg::max_abs_diff(&lifted, &v2.isometry) < 1e-8);
    }
}

#[test]
fn random_ordered_channels_decompose() {
    let m = quantum_model(2).unwrap();
    let sys = SystemLabel::composite(TheoryId::Quantum, vec![2, 2]);
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for i in 0..20 {
        let kraus = common::random_ordered_channel(1 + i % 3, &mut rng);
        let c = m.map_from_kraus(&sys, &sys, kraus).unwrap();
        assert!(matches!(
            check_causal_order(&m, &c, 1, 1, 1e-9).unwrap(),
            CausalOrder::Ordered { .. }
        ));
        let dec = comb_decompose(&m, &c, &[(2, 2), (2, 2)], 1e-9).unwrap();
        let w = dec.recompose();
        let env = w.nrows() / 4;
        let ks = linalg::kraus_from_isometry(&w, 4, env);
        let rebuilt = m.map_from_kraus(&sys, &sys, ks).unwrap();
        assert!(rebuilt.max_abs_diff(&c) < 1e-8);
    }
}

#[test]
fn swap_has_no_comb_decomposition() {
    let m = quantum_model(2).unwrap();
    let sys = SystemLabel::composite(TheoryId::Quantum, vec![2, 2]);
    let sw = m
        .map_from_kraus(&sys, &sys, vec![linalg::permutation_matrix(&[2, 2], &[1, 0])])
        .unwrap();
    assert!(comb_decompose(&m, &sw, &[(2, 2), (2, 2)], 1e-9).is_err());
    let _ = m.system();
}
