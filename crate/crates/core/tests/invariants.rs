mod common;

use common::*;
use proptest::prelude::*;
use purelab::choi::{faithful_pair, link, retrieve, store};
use purelab::circuit::{compose_par, compose_seq, evaluate, Circuit, Payload};
use purelab::dilation::{purify, stinespring};
use purelab::linalg;
use purelab::metrology::{discriminate, state_norm, transformation_norm, SeesawBudget};
use purelab::theory::{classical_model, quantum_model, LinearMap, MapTag, TheoryModel};
use purelab::RMat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stochastic(n: usize, m: usize, rng: &mut ChaCha8Rng) -> RMat {
    let mut s = RMat::from_fn(m, n, |_, _| rng.random_range(0.0..1.0));
    for j in 0..n {
        let col: f64 = s.column(j).sum();
        s.column_mut(j).scale_mut(1.0 / col);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn state_norm_is_monotone_under_quantum_channels(seed in any::<u64>(), d in 2usize..4, r in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = quantum_model(d).unwrap();
        let a = m.system();
        let c = m.map_from_kraus(&a, &a, random_kraus(d, d, r, &mut rng)).unwrap();
        let delta = m.random_state(&a, &mut rng).sub(&m.random_state(&a, &mut rng)).unwrap();
        let before = state_norm(&m, &delta).unwrap();
        let after = state_norm(&m, &c.apply(&delta).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-10);
    }

    #[test]
    fn state_norm_is_monotone_under_stochastic_maps(seed in any::<u64>(), n in 2usize..6, k in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = classical_model(n).unwrap();
        let (a, b) = (m.atom(n).unwrap(), m.atom(k).unwrap());
        let c = LinearMap::new(a.clone(), b, stochastic(n, k, &mut rng), MapTag::Channel).unwrap();
        let delta = m.random_state(&a, &mut rng).sub(&m.random_state(&a, &mut rng)).unwrap();
        let before = state_norm(&m, &delta).unwrap();
        let after = state_norm(&m, &c.apply(&delta).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-10);
    }

    #[test]
    fn classical_transformation_norm_is_monotone(seed in any::<u64>(), n in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = classical_model(n).unwrap();
        let a = m.system();
        let c1 = LinearMap::new(a.clone(), a.clone(), stochastic(n, n, &mut rng), MapTag::Channel).unwrap();
        let c2 = LinearMap::new(a.clone(), a.clone(), stochastic(n, n, &mut rng), MapTag::Channel).unwrap();
        let post = LinearMap::new(a.clone(), a.clone(), stochastic(n, n, &mut rng), MapTag::Channel).unwrap();
        let delta = c1.sub(&c2).unwrap();
        let budget = SeesawBudget::default();
        let before = transformation_norm(&m, &delta, budget).unwrap().value;
        let after = transformation_norm(&m, &delta.then(&post).unwrap(), budget).unwrap().value;
        prop_assert!(after <= before + 1e-10);
    }

    #[test]
    fn discrimination_is_symmetric(seed in any::<u64>(), pi0 in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = quantum_model(2).unwrap();
        let a = m.system();
        let (x, y) = (m.random_state(&a, &mut rng), m.random_state(&a, &mut rng));
        let p = discriminate(&m, &x, &y, pi0, 1.0 - pi0).unwrap().p_success;
        let q = discriminate(&m, &y, &x, 1.0 - pi0, pi0).unwrap().p_success;
        prop_assert_eq!(p.to_bits(), q.to_bits());
        prop_assert!(p >= pi0.max(1.0 - pi0) - 1e-12 && p <= 1.0 + 1e-12);
    }

    #[test]
    fn interchange_law(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = quantum_model(2).unwrap();
        let a = m.system();
        let mut ch = || Payload::Map(m.map_from_kraus(&a, &a, random_kraus(2, 2, 2, &mut rng)).unwrap());
        let (p, q, r, s) = (ch(), ch(), ch(), ch());
        let one = |x: &Payload| Circuit::single("x", x.clone());
        let lhs = compose_seq(
            &compose_par(&one(&p), &one(&q)).unwrap(),
            &compose_par(&one(&r), &one(&s)).unwrap(),
        ).unwrap();
        let rhs = compose_par(
            &compose_seq(&one(&p), &one(&r)).unwrap(),
            &compose_seq(&one(&q), &one(&s)).unwrap(),
        ).unwrap();
        let l = evaluate(&lhs, &m).unwrap().matrix();
        let rr = evaluate(&rhs, &m).unwrap().matrix();
        prop_assert!(linalg::max_abs_real(&(l - rr)) < 1e-12);
    }

    #[test]
    fn purification_marginal_round_trip(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for m in [quantum_model(d).unwrap(), purelab::real_quantum_model(d).unwrap()] {
            let a = m.system();
            let rho = m.random_state(&a, &mut rng);
            let p = purify(&m, &rho).unwrap();
            prop_assert!(m.is_pure(&p.psi, 1e-9));
            let back = m.marginal(&p.psi, &[0]).unwrap();
            prop_assert!(linalg::max_abs_diff_real(&back.coords, &rho.coords) < 1e-10);
        }
    }

    #[test]
    fn choi_round_trip_and_link(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = quantum_model(2).unwrap();
        let a = m.system();
        let fp = faithful_pair(&m, &a).unwrap();
        let c1 = m.map_from_kraus(&a, &a, random_kraus(2, 2, 3, &mut rng)).unwrap();
        let c2 = m.map_from_kraus(&a, &a, random_kraus(2, 2, 2, &mut rng)).unwrap();
        let r1 = store(&m, &c1, &fp).unwrap();
        let r2 = store(&m, &c2, &fp).unwrap();
        prop_assert!(retrieve(&m, &r1, 1e-9).unwrap().max_abs_diff(&c1) < 1e-10);
        let l = retrieve(&m, &link(&m, &r1, &r2).unwrap(), 1e-9).unwrap();
        prop_assert!(l.max_abs_diff(&c1.then(&c2).unwrap()) < 1e-10);
    }

    #[test]
    fn dilation_reduces_to_the_channel(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = quantum_model(d).unwrap();
        let a = m.system();
        let c = m.map_from_kraus(&a, &a, random_kraus(d, d, 2, &mut rng)).unwrap();
        let v = stinespring(&m, &c).unwrap();
        prop_assert!(v.isometry_residual() < 1e-10);
        prop_assert!(v.reduced(&m).unwrap().max_abs_diff(&c) < 1e-10);
    }

    #[test]
    fn channels_preserve_the_deterministic_effect(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = quantum_model(d).unwrap();
        let a = m.system();
        let c = m.map_from_kraus(&a, &a, random_kraus(d, d, 3, &mut rng)).unwrap();
        let e = m.deterministic_effect(&a);
        let back = c.pullback(&e).unwrap();
        prop_assert!(linalg::max_abs_diff_real(&back.coords, &e.coords) < 1e-12);
    }
}
