use criterion::{black_box, criterion_group, criterion_main, Criterion};
use purelab::linalg;
use purelab::theory::{classical_model, quantum_model, TheoryModel};
use purelab::{faithful_pair, link, parse_script, state_norm, store, transformation_norm, SeesawBudget};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lp_state_norm(c: &mut Criterion) {
    let m = classical_model(6).unwrap();
    let sys = m.system();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let delta = m.random_state(&sys, &mut rng).sub(&m.random_state(&sys, &mut rng)).unwrap();
    c.bench_function("classical state norm (lp), n=6", |b| {
        b.iter(|| state_norm(&m, black_box(&delta)).unwrap())
    });
}

fn trace_norm(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h = linalg::random_hermitian(8, &mut rng, false);
    c.bench_function("trace norm, 8x8", |b| b.iter(|| linalg::trace_norm(black_box(&h))));
}

fn seesaw(c: &mut Criterion) {
    let m = quantum_model(2).unwrap();
    let sys = m.system();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = linalg::random_unitary(2, &mut rng, false);
    let v = linalg::random_unitary(2, &mut rng, false);
    let delta = m.unitary(&sys, &u).unwrap().sub(&m.unitary(&sys, &v).unwrap()).unwrap();
    let budget = SeesawBudget {
        restarts: 10,
        ..Default::default()
    };
    c.bench_function("seesaw transformation norm, qubit, 10 restarts", |b| {
        b.iter(|| transformation_norm(&m, black_box(&delta), budget).unwrap())
    });
}

fn link_product(c: &mut Criterion) {
    let m = quantum_model(2).unwrap();
    let a = m.system();
    let fp = faithful_pair(&m, &a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r1 = store(&m, &m.unitary(&a, &linalg::random_unitary(2, &mut rng, false)).unwrap(), &fp).unwrap();
    let r2 = store(&m, &m.unitary(&a, &linalg::random_unitary(2, &mut rng, false)).unwrap(), &fp).unwrap();
    c.bench_function("link product, qubit channels", |b| {
        b.iter(|| link(&m, black_box(&r1), black_box(&r2)).unwrap())
    });
}

fn dsl_parse(c: &mut Criterion) {
    let text = "prep phi : B * C = bell\neff meas : A * B = bell(2)\nbox fix : C -> C = weyl(2)\nrun tele = phi.meas.fix\n\
box d : A -> A = depolarize(0.3)\nbox z : A -> A = z\nrun ch = d.z\n";
    c.bench_function("dsl parse", |b| b.iter(|| parse_script(black_box(text)).unwrap()));
}

criterion_group!(kernels, lp_state_norm, trace_norm, seesaw, link_product, dsl_parse);
criterion_main!(kernels);
