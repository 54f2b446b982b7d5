//! Dense complex and real matrix helpers shared by the Hilbert-space models.
//!
//! Bipartite index convention: for a space `X ⊗ Y` of dimensions `(dx, dy)`
//! the basis vector `|x⟩|y⟩` has flat index `x * dy + y`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_all(ms: &[CMat]) -> CMat {
    ms.iter()
        .fold(CMat::identity(1, 1), |acc, m| acc.kronecker(m))
}

pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

pub fn basis_ket(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = ONE;
    v
}

/// Largest entry-wise modulus of `a - b`.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn hermitian_part(h: &CMat) -> CMat {
    (h + h.adjoint()) * cr(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    if h.iter().all(|z| z.im == 0.0) {
        // keep eigenvectors real for real symmetric input
        let re = RMat::from_fn(n, n, |i, j| 0.5 * (h[(i, j)].re + h[(j, i)].re));
        let eig = re.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = CMat::from_fn(n, n, |r, col| cr(eig.eigenvectors[(r, order[col])]));
        return (vals, vecs);
    }
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn eigvalsh(h: &CMat) -> Vec<f64> {
    eigh(h).0
}

pub fn trace_norm(h: &CMat) -> f64 {
    eigvalsh(h).iter().map(|l| l.abs()).sum()
}

pub fn spectral_norm_herm(h: &CMat) -> f64 {
    eigvalsh(h).iter().map(|l| l.abs()).fold(0.0, f64::max)
}

pub fn min_eig(h: &CMat) -> f64 {
    eigvalsh(h).first().copied().unwrap_or(0.0)
}

/// Rebuild `Σ f(λ) |v⟩⟨v|` from an eigen-decomposition.
pub fn spectral_map(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = eigh(h);
    let n = h.nrows();
    let mut out = CMat::zeros(n, n);
    for (k, &l) in vals.iter().enumerate() {
        let w = f(l);
        if w != 0.0 {
            let v = vecs.column(k);
            out += (v * v.adjoint()) * cr(w);
        }
    }
    out
}

pub fn psd_sqrt(h: &CMat) -> CMat {
    spectral_map(h, |l| l.max(0.0).sqrt())
}

/// Inverse square root restricted to the support (eigenvalues above `floor`).
pub fn support_inv_sqrt(h: &CMat, floor: f64) -> CMat {
    spectral_map(h, |l| if l > floor { 1.0 / l.sqrt() } else { 0.0 })
}

pub fn support_projector(h: &CMat, floor: f64) -> CMat {
    spectral_map(h, |l| if l > floor { 1.0 } else { 0.0 })
}

pub fn positive_part_projector(h: &CMat) -> CMat {
    spectral_map(h, |l| if l > 0.0 { 1.0 } else { 0.0 })
}

pub fn rank(h: &CMat, floor: f64) -> usize {
    eigvalsh(h).iter().filter(|&&l| l > floor).count()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Partial trace over every factor not listed in `keep` (kept factors retain
/// their relative order).
pub fn partial_trace(rho: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let n: usize = dims.iter().product();
    assert_eq!(rho.nrows(), n, "partial_trace: matrix size does not match dims");
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let kdims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let tdims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let nk: usize = kdims.iter().product();
    let nt: usize = tdims.iter().product();
    let mut out = CMat::zeros(nk, nk);
    let mut digits = vec![0usize; dims.len()];
    let compose = |digits: &[usize]| -> usize {
        digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
    };
    for r in 0..nk {
        for s in 0..nk {
            let mut acc = ZERO;
            for t in 0..nt {
                let mut rem = t;
                for (pos, &i) in traced.iter().enumerate().rev() {
                    digits[i] = rem % tdims[pos];
                    rem /= tdims[pos];
                }
                let mut rr = r;
                for (pos, &i) in keep.iter().enumerate().rev() {
                    digits[i] = rr % kdims[pos];
                    rr /= kdims[pos];
                }
                let row = compose(&digits);
                let mut ss = s;
                for (pos, &i) in keep.iter().enumerate().rev() {
                    digits[i] = ss % kdims[pos];
                    ss /= kdims[pos];
                }
                let col = compose(&digits);
                acc += rho[(row, col)];
            }
            out[(r, s)] = acc;
        }
    }
    out
}

/// Permutation matrix sending `|x_0 … x_{k-1}⟩` to `|x_{perm[0]} … x_{perm[k-1]}⟩`.
pub fn permutation_matrix(dims: &[usize], perm: &[usize]) -> CMat {
    let n: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&i| dims[i]).collect();
    let mut p = CMat::zeros(n, n);
    let mut digits = vec![0usize; dims.len()];
    for src in 0..n {
        let mut rem = src;
        for i in (0..dims.len()).rev() {
            digits[i] = rem % dims[i];
            rem /= dims[i];
        }
        let dst = perm
            .iter()
            .zip(&new_dims)
            .fold(0, |acc, (&i, &nd)| acc * nd + digits[i]);
        p[(dst, src)] = ONE;
    }
    p
}

pub fn apply_kraus(kraus: &[CMat], rho: &CMat) -> CMat {
    let (r, _) = kraus[0].shape();
    let mut out = CMat::zeros(r, r);
    for k in kraus {
        out += k * rho * k.adjoint();
    }
    out
}

/// `Σ_k K_k† K_k`.
pub fn kraus_completeness(kraus: &[CMat]) -> CMat {
    let d = kraus[0].ncols();
    let mut out = CMat::zeros(d, d);
    for k in kraus {
        out += k.adjoint() * k;
    }
    out
}

/// Choi matrix `Σ_ij C(|i⟩⟨j|) ⊗ |i⟩⟨j|` on output ⊗ input.
pub fn choi_from_kraus(kraus: &[CMat]) -> CMat {
    let (dout, din) = kraus[0].shape();
    let mut j = CMat::zeros(dout * din, dout * din);
    for k in kraus {
        // vec(K) with output index major: |w⟩ = Σ_{b,a} K_ba |b⟩|a⟩
        let w = CVec::from_iterator(
            dout * din,
            (0..dout).flat_map(|b| (0..din).map(move |a| (b, a))).map(|(b, a)| k[(b, a)]),
        );
        j += &w * w.adjoint();
    }
    j
}

/// Kraus operators from a Choi matrix (output ⊗ input); eigenvalues at or
/// below `floor` are dropped.
pub fn kraus_from_choi(j: &CMat, dout: usize, din: usize, floor: f64) -> Vec<CMat> {
    let (vals, vecs) = eigh(j);
    let mut out = Vec::new();
    for (k, &l) in vals.iter().enumerate().rev() {
        if l <= floor {
            continue;
        }
        let s = l.sqrt();
        let col = vecs.column(k);
        out.push(CMat::from_fn(dout, din, |b, a| col[b * din + a] * cr(s)));
    }
    out
}

/// Isometry `V: A → B ⊗ E`, `V|a⟩ = Σ_k K_k|a⟩ ⊗ |k⟩`.
pub fn isometry_from_kraus(kraus: &[CMat]) -> CMat {
    let (dout, din) = kraus[0].shape();
    let r = kraus.len();
    CMat::from_fn(dout * r, din, |row, a| {
        let (b, k) = (row / r, row % r);
        kraus[k][(b, a)]
    })
}

pub fn kraus_from_isometry(v: &CMat, dout: usize, env: usize) -> Vec<CMat> {
    let din = v.ncols();
    (0..env)
        .map(|k| CMat::from_fn(dout, din, |b, a| v[(b * env + k, a)]))
        .collect()
}

/// Complementary-channel Kraus operators (keep environment, discard output).
pub fn complementary_kraus(kraus: &[CMat]) -> Vec<CMat> {
    let (dout, din) = kraus[0].shape();
    let r = kraus.len();
    (0..dout)
        .map(|b| CMat::from_fn(r, din, |k, a| kraus[k][(b, a)]))
        .collect()
}

/// Unitary `X` minimising `‖a X − b‖_F`.
pub fn procrustes(a: &CMat, b: &CMat) -> CMat {
    let m = a.adjoint() * b;
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    u * vt
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.ncols();
    max_abs_diff(&(u.adjoint() * u), &CMat::identity(n, n))
}

pub fn pinv(m: &CMat, floor: f64) -> CMat {
    m.clone()
        .pseudo_inverse(floor)
        .expect("pseudo-inverse with non-negative epsilon")
}

pub fn gaussian_c(rng: &mut dyn rand::RngCore, real: bool) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    if real {
        cr(re)
    } else {
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    }
}

pub fn ginibre(rows: usize, cols: usize, rng: &mut dyn rand::RngCore, real: bool) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian_c(rng, real))
}

/// Haar-distributed unitary (orthogonal when `real`).
pub fn random_unitary(n: usize, rng: &mut dyn rand::RngCore, real: bool) -> CMat {
    let g = ginibre(n, n, rng, real);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / cr(d.norm()) } else { ONE };
        let mut col = out.column_mut(j);
        col *= phase;
    }
    out
}

pub fn random_ket(n: usize, rng: &mut dyn rand::RngCore, real: bool) -> CVec {
    let v = CVec::from_fn(n, |_, _| gaussian_c(rng, real));
    let norm = v.norm();
    v / cr(norm)
}

/// Random density matrix of the given rank (induced measure).
pub fn random_density(n: usize, rank: usize, rng: &mut dyn rand::RngCore, real: bool) -> CMat {
    let g = ginibre(n, rank, rng, real);
    let m = &g * g.adjoint();
    let t = trace(&m).re;
    m / cr(t)
}

/// Hermitian matrix with Gaussian entries (real symmetric when `real`).
pub fn random_hermitian(n: usize, rng: &mut dyn rand::RngCore, real: bool) -> CMat {
    hermitian_part(&ginibre(n, n, rng, real))
}

/// Unnormalised maximally entangled ket `Σ_i |i⟩|i⟩`.
pub fn omega_ket(d: usize) -> CVec {
    let mut v = CVec::zeros(d * d);
    for i in 0..d {
        v[i * d + i] = ONE;
    }
    v
}

/// Reshape a bipartite ket on `X ⊗ Y` into the `dx × dy` coefficient matrix.
pub fn ket_to_matrix(v: &CVec, dx: usize, dy: usize) -> CMat {
    CMat::from_fn(dx, dy, |x, y| v[x * dy + y])
}

pub fn matrix_to_ket(m: &CMat) -> CVec {
    let (dx, dy) = m.shape();
    CVec::from_fn(dx * dy, |i, _| m[(i / dy, i % dy)])
}

/// Partial transpose of the second factor of a `d1 ⊗ d2` operator.
pub fn partial_transpose_second(m: &CMat, d1: usize, d2: usize) -> CMat {
    CMat::from_fn(d1 * d2, d1 * d2, |r, s| {
        let (a, b) = (r / d2, r % d2);
        let (a2, b2) = (s / d2, s % d2);
        m[(a * d2 + b2, a2 * d2 + b)]
    })
}

pub fn max_abs_real(a: &RMat) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn max_abs_diff_real(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch in max_abs_diff_real");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Kronecker product of two real vectors.
pub fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Weyl operator `X^a Z^b` with `X|j⟩ = |j+1⟩`, `Z|j⟩ = ω^j|j⟩`.
pub fn weyl(d: usize, a: usize, b: usize) -> CMat {
    let w = 2.0 * std::f64::consts::PI / d as f64;
    CMat::from_fn(d, d, |r, col| {
        if r == (col + a) % d {
            let ph = w * ((b * col) % d) as f64;
            c(ph.cos(), ph.sin())
        } else {
            ZERO
        }
    })
}
