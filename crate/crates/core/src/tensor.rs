//! Index gymnastics on coordinate tensors with one index per factor.
//!
//! A vector over factors with coordinate dimensions `dims` is stored in
//! row-major (Kronecker) order, first factor most significant.

use crate::linalg::RMat;

fn digits_of(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for i in (0..dims.len()).rev() {
        out[i] = flat % dims[i];
        flat /= dims[i];
    }
}

fn flat_of(digits: impl Iterator<Item = (usize, usize)>) -> usize {
    digits.fold(0, |acc, (d, n)| acc * n + d)
}

/// Reorder factors so that new factor `j` is old factor `perm[j]`.
pub fn permute_vec(x: &[f64], dims: &[usize], perm: &[usize]) -> Vec<f64> {
    let n: usize = dims.iter().product();
    assert_eq!(x.len(), n, "permute_vec: length does not match dims");
    let mut out = vec![0.0; n];
    let mut dig = vec![0; dims.len()];
    for (src, &v) in x.iter().enumerate() {
        digits_of(src, dims, &mut dig);
        let dst = flat_of(perm.iter().map(|&p| (dig[p], dims[p])));
        out[dst] = v;
    }
    out
}

/// Row permutation of a matrix whose rows are indexed by a factor tensor.
pub fn permute_rows(m: &RMat, dims: &[usize], perm: &[usize]) -> RMat {
    let n: usize = dims.iter().product();
    assert_eq!(m.nrows(), n, "permute_rows: row count does not match dims");
    let mut out = RMat::zeros(n, m.ncols());
    let mut dig = vec![0; dims.len()];
    for src in 0..n {
        digits_of(src, dims, &mut dig);
        let dst = flat_of(perm.iter().map(|&p| (dig[p], dims[p])));
        out.set_row(dst, &m.row(src));
    }
    out
}

/// Contract every factor not in `keep` against `weights[factor]`; the kept
/// factors appear in the order listed by `keep`.
pub fn contract(x: &[f64], dims: &[usize], keep: &[usize], weights: &[Vec<f64>]) -> Vec<f64> {
    let out_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let n_out: usize = out_dims.iter().product();
    let mut out = vec![0.0; n_out];
    let mut dig = vec![0; dims.len()];
    for (src, &v) in x.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        digits_of(src, dims, &mut dig);
        let mut w = v;
        for (f, &d) in dig.iter().enumerate() {
            if !keep.contains(&f) {
                w *= weights[f][d];
                if w == 0.0 {
                    break;
                }
            }
        }
        if w != 0.0 {
            let dst = flat_of(keep.iter().map(|&k| (dig[k], dims[k])));
            out[dst] += w;
        }
    }
    out
}

/// Apply `m` (rows: new block, cols: `d_last`) to the trailing block of the
/// row index of `r`, whose rows factor as `(d_rest, d_last)`.
pub fn apply_on_last(r: &RMat, d_rest: usize, d_last: usize, m: &RMat) -> RMat {
    assert_eq!(r.nrows(), d_rest * d_last, "apply_on_last: row split mismatch");
    assert_eq!(m.ncols(), d_last, "apply_on_last: operator width mismatch");
    let d_new = m.nrows();
    let mut out = RMat::zeros(d_rest * d_new, r.ncols());
    for rest in 0..d_rest {
        let block = r.rows(rest * d_last, d_last);
        let prod = m * block;
        out.rows_mut(rest * d_new, d_new).copy_from(&prod);
    }
    out
}

pub fn kron_real(a: &RMat, b: &RMat) -> RMat {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permute_swaps_factors() {
        // x = a ⊗ b with a = (1,2), b = (3,4,5)
        let x = crate::linalg::kron_vec(&[1.0, 2.0], &[3.0, 4.0, 5.0]);
        let y = permute_vec(&x, &[2, 3], &[1, 0]);
        assert_eq!(y, crate::linalg::kron_vec(&[3.0, 4.0, 5.0], &[1.0, 2.0]));
    }

    #[test]
    fn contract_product() {
        let x = crate::linalg::kron_vec(&[1.0, 2.0], &[3.0, 4.0]);
        let w = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(contract(&x, &[2, 2], &[0], &w), vec![7.0, 14.0]);
        assert_eq!(contract(&x, &[2, 2], &[1], &w), vec![9.0, 12.0]);
    }

    #[test]
    fn apply_on_last_matches_kron() {
        let r = RMat::from_fn(6, 2, |i, j| (i * 2 + j) as f64);
        let m = RMat::from_fn(2, 3, |i, j| (i + j * j) as f64);
        let direct = kron_real(&RMat::identity(2, 2), &m) * &r;
        assert_eq!(apply_on_last(&r, 2, 3, &m), direct);
    }
}
