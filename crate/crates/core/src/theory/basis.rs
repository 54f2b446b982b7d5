//! Orthonormal Hermitian operator bases used as real coordinates.
//!
//! Atomic ordering: `I/√n`, then for every pair `j < k` the symmetric
//! element `(E_jk + E_kj)/√2`, then (complex case only) the antisymmetric
//! element `(−iE_jk + iE_kj)/√2`, then the diagonal elements
//! `(Σ_{m<l} E_mm − l E_ll)/√(l(l+1))` for `l = 1..n-1`.

use crate::linalg::{c, cr, CMat, C64, ZERO};

type Triplets = Vec<(usize, usize, C64)>;

#[derive(Clone, Debug)]
pub struct HermBasis {
    n: usize,
    elems: Vec<Triplets>,
}

impl HermBasis {
    pub fn gell_mann(n: usize, real: bool) -> Self {
        let mut elems: Vec<Triplets> = Vec::new();
        let s0 = 1.0 / (n as f64).sqrt();
        elems.push((0..n).map(|i| (i, i, cr(s0))).collect());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..n {
            for k in j + 1..n {
                elems.push(vec![(j, k, cr(h)), (k, j, cr(h))]);
            }
        }
        if !real {
            for j in 0..n {
                for k in j + 1..n {
                    elems.push(vec![(j, k, c(0.0, -h)), (k, j, c(0.0, h))]);
                }
            }
        }
        for l in 1..n {
            let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
            let mut t: Triplets = (0..l).map(|m| (m, m, cr(norm))).collect();
            t.push((l, l, cr(-(l as f64) * norm)));
            elems.push(t);
        }
        Self { n, elems }
    }

    /// Tensor-product basis; element order is the Kronecker order of the factors.
    pub fn product(factors: &[HermBasis]) -> Self {
        let mut acc = HermBasis {
            n: 1,
            elems: vec![vec![(0, 0, cr(1.0))]],
        };
        for f in factors {
            let mut elems = Vec::with_capacity(acc.elems.len() * f.elems.len());
            for a in &acc.elems {
                for b in &f.elems {
                    let mut t = Vec::with_capacity(a.len() * b.len());
                    for &(r1, c1, v1) in a {
                        for &(r2, c2, v2) in b {
                            t.push((r1 * f.n + r2, c1 * f.n + c2, v1 * v2));
                        }
                    }
                    elems.push(t);
                }
            }
            acc = HermBasis {
                n: acc.n * f.n,
                elems,
            };
        }
        acc
    }

    pub fn hilbert_dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// `Tr(F_k X)` for every basis element; complex for non-Hermitian `X`.
    pub fn coords_complex(&self, x: &CMat) -> Vec<C64> {
        self.elems
            .iter()
            .map(|t| t.iter().fold(ZERO, |acc, &(r, cc, v)| acc + v * x[(cc, r)]))
            .collect()
    }

    /// Real coordinates of a Hermitian operator.
    pub fn coords(&self, h: &CMat) -> Vec<f64> {
        self.coords_complex(h).into_iter().map(|z| z.re).collect()
    }

    pub fn matrix(&self, x: &[f64]) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (t, &w) in self.elems.iter().zip(x) {
            if w != 0.0 {
                for &(r, cc, v) in t {
                    m[(r, cc)] += v * w;
                }
            }
        }
        m
    }

    pub fn matrix_complex(&self, x: &[C64]) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (t, &w) in self.elems.iter().zip(x) {
            if w != ZERO {
                for &(r, cc, v) in t {
                    m[(r, cc)] += v * w;
                }
            }
        }
        m
    }

    pub fn element(&self, k: usize) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for &(r, cc, v) in &self.elems[k] {
            m[(r, cc)] += v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, trace};

    fn check_orthonormal(b: &HermBasis) {
        for j in 0..b.len() {
            let fj = b.element(j);
            assert!(max_abs_diff(&fj, &fj.adjoint()) < 1e-15);
            for k in 0..b.len() {
                let ip = trace(&(&fj * b.element(k)));
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((ip.re - want).abs() < 1e-12 && ip.im.abs() < 1e-12, "({j},{k})");
            }
        }
    }

    #[test]
    fn gell_mann_orthonormal() {
        for n in 1..=4 {
            let b = HermBasis::gell_mann(n, false);
            assert_eq!(b.len(), n * n);
            check_orthonormal(&b);
            let r = HermBasis::gell_mann(n, true);
            assert_eq!(r.len(), n * (n + 1) / 2);
            check_orthonormal(&r);
        }
    }

    #[test]
    fn product_basis_orthonormal() {
        let b = HermBasis::product(&[HermBasis::gell_mann(2, false), HermBasis::gell_mann(3, false)]);
        assert_eq!((b.hilbert_dim(), b.len()), (6, 36));
        check_orthonormal(&b);
    }

    #[test]
    fn coords_round_trip() {
        let b = HermBasis::gell_mann(3, false);
        let x: Vec<f64> = (0..9).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = b.coords(&b.matrix(&x));
        for (u, v) in x.iter().zip(&back) {
            assert!((u - v).abs() < 1e-14);
        }
    }
}
