//! Test-only oracles and generators. The oracles use plain `Vec` arithmetic
//! and closed forms, independent of the library's linear algebra.

#![allow(dead_code)]

use purelab::linalg::{self, cr, CMat, CVec};
use rand::RngCore;

/// Cyclic Jacobi rotations on a real symmetric matrix; eigenvalues ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues of a Hermitian matrix through `[[Re, −Im], [Im, Re]]`,
/// whose spectrum is that of `H` with every value doubled.
pub fn herm_eigenvalues(h: &CMat) -> Vec<f64> {
    let n = h.nrows();
    let mut a = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            a[i][j] = z.re;
            a[i + n][j + n] = z.re;
            a[i][j + n] = -z.im;
            a[i + n][j] = z.im;
        }
    }
    jacobi_eigenvalues(a).into_iter().step_by(2).collect()
}

pub fn trace_norm_oracle(h: &CMat) -> f64 {
    herm_eigenvalues(h).iter().map(|v| v.abs()).sum()
}

/// Optimal two-state success probability from the dense eigensolver.
pub fn helstrom_oracle(rho0: &CMat, rho1: &CMat, pi0: f64, pi1: f64) -> f64 {
    let d = rho1 * cr(pi1) - rho0 * cr(pi0);
    0.5 * (1.0 + trace_norm_oracle(&d))
}

pub fn bloch(rho: &CMat) -> [f64; 3] {
    [
        2.0 * rho[(0, 1)].re,
        -2.0 * rho[(0, 1)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}

/// Qubit discrimination over projective tests `(I ± n·σ)/2` and the two
/// trivial tests: `1/2 + max(|π1 − π0|, |π1 r1 − π0 r0|)/2`.
pub fn bloch_oracle(rho0: &CMat, rho1: &CMat, pi0: f64, pi1: f64) -> f64 {
    let (r0, r1) = (bloch(rho0), bloch(rho1));
    let v: f64 = (0..3).map(|k| (pi1 * r1[k] - pi0 * r0[k]).powi(2)).sum::<f64>().sqrt();
    0.5 + 0.5 * v.max((pi1 - pi0).abs())
}

/// Classical success probability by enumerating every deterministic test.
pub fn classical_brute_force(p0: &[f64], p1: &[f64], pi0: f64, pi1: f64) -> f64 {
    let n = p0.len();
    (0u32..1 << n)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { pi1 * p1[i] } else { pi0 * p0[i] })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Smallest arc of the unit circle holding all eigenphases.
pub fn eigenphase_arc(phases: &[f64]) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut p: Vec<f64> = phases.iter().map(|x| x.rem_euclid(tau)).collect();
    p.sort_by(f64::total_cmp);
    let mut gap = tau - (p[p.len() - 1] - p[0]);
    for w in p.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    tau - gap
}

/// `‖U·U† − V·V†‖ = 2 sin(θ/2)` for eigenphase arc `θ < π` of `U†V`, else 2.
pub fn unitary_distance_oracle(phases: &[f64]) -> f64 {
    let arc = eigenphase_arc(phases);
    if arc >= std::f64::consts::PI {
        2.0
    } else {
        2.0 * (arc / 2.0).sin()
    }
}

/// Eigenphases of a 2×2 unitary from its characteristic polynomial.
pub fn qubit_eigenphases(w: &CMat) -> [f64; 2] {
    let tr = w[(0, 0)] + w[(1, 1)];
    let det = w[(0, 0)] * w[(1, 1)] - w[(0, 1)] * w[(1, 0)];
    let disc = (tr * tr - det * cr(4.0)).sqrt();
    let l1 = (tr + disc) / cr(2.0);
    let l2 = (tr - disc) / cr(2.0);
    [l1.arg(), l2.arg()]
}

pub fn random_isometry(din: usize, dout: usize, rng: &mut dyn RngCore) -> CMat {
    let u = linalg::random_unitary(dout, rng, false);
    u.columns(0, din).into_owned()
}

/// Kraus operators of a random channel with `r` operators.
pub fn random_kraus(din: usize, dout: usize, r: usize, rng: &mut dyn RngCore) -> Vec<CMat> {
    let v = random_isometry(din, dout * r, rng);
    linalg::kraus_from_isometry(&v, dout, r)
}

/// Random two-step comb on qubit wires: `V1: A1 → B1 ⊗ E`,
/// `V2: E ⊗ A2 → B2 ⊗ F`, memory `E` of dimension `mem`; returns Kraus
/// operators of `A1 A2 → B1 B2`.
pub fn random_ordered_channel(mem: usize, rng: &mut dyn RngCore) -> Vec<CMat> {
    let v1 = random_isometry(2, 2 * mem, rng);
    let f = mem;
    let v2 = random_isometry(mem * 2, 2 * f, rng);
    let first = linalg::kron(&v1, &CMat::identity(2, 2));
    let second = linalg::kron(&CMat::identity(2, 2), &v2);
    let w = second * first;
    linalg::kraus_from_isometry(&w, 4, f)
}

pub fn random_pure(d: usize, rng: &mut dyn RngCore) -> CVec {
    linalg::random_ket(d, rng, false)
}
