//! Householder QR, optionally column-pivoted with an early rank cutoff.

use super::matrix::dot_slices;
use super::Matrix;

/// Thin factorization `A = Q R` with `Q` (m x r) orthonormal columns.
///
/// With pivoting the columns of `r` are already returned in the original
/// order, i.e. `r` equals `R P^T`.
#[derive(Debug, Clone)]
pub struct QrFactors {
    pub q: Matrix,
    pub r: Matrix,
}

/// Unpivoted thin QR of an `m x n` matrix with `m >= n`.
pub fn qr_thin(a: &Matrix) -> QrFactors {
    assert!(a.rows() >= a.cols(), "qr_thin needs rows >= cols");
    householder(a, None)
}

/// Column-pivoted QR that stops once every remaining column has norm at most
/// `rel_tol` times the largest initial column norm. The returned `q` has as
/// many columns as steps were taken (the numerical rank).
pub fn qr_pivoted(a: &Matrix, rel_tol: f64) -> QrFactors {
    householder(a, Some(rel_tol))
}

fn householder(a: &Matrix, pivot_tol: Option<f64>) -> QrFactors {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.col(j)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors: Vec<Vec<f64>> = Vec::new();
    let steps = m.min(n);

    let cutoff = pivot_tol.map(|tol| {
        let max0 = cols
            .iter()
            .map(|c| dot_slices(c, c))
            .fold(0.0f64, f64::max)
            .sqrt();
        tol * max0
    });

    for k in 0..steps {
        if let Some(cutoff) = cutoff {
            let (best, best_norm) = (k..n)
                .map(|j| (j, dot_slices(&cols[j][k..], &cols[j][k..])))
                .fold((k, -1.0), |acc, (j, s)| if s > acc.1 { (j, s) } else { acc });
            if best_norm.sqrt() <= cutoff {
                break;
            }
            cols.swap(k, best);
            perm.swap(k, best);
        }

        let x = &cols[k][k..];
        let norm = dot_slices(x, x).sqrt();
        let mut v = x.to_vec();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vv = dot_slices(&v, &v);
        if vv > 0.0 {
            for col in cols.iter_mut().skip(k + 1) {
                let tail = &mut col[k..];
                let tau = 2.0 * dot_slices(&v, tail) / vv;
                for (t, vi) in tail.iter_mut().zip(&v) {
                    *t -= tau * vi;
                }
            }
            cols[k][k] = alpha;
            for t in &mut cols[k][k + 1..] {
                *t = 0.0;
            }
        }
        reflectors.push(v);
    }

    let r_rank = reflectors.len();
    let mut r = Matrix::zeros(r_rank, n);
    for (jp, col) in cols.iter().enumerate() {
        let j = perm[jp];
        for i in 0..r_rank.min(jp + 1) {
            r[(i, j)] = col[i];
        }
    }

    let mut q = Matrix::zeros(m, r_rank);
    let mut e = vec![0.0; m];
    for c in 0..r_rank {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[c] = 1.0;
        // Reflectors past column c only touch rows where e_c is still zero.
        for (k, v) in reflectors.iter().enumerate().take(c + 1).rev() {
            let vv = dot_slices(v, v);
            if vv == 0.0 {
                continue;
            }
            let tail = &mut e[k..];
            let tau = 2.0 * dot_slices(v, tail) / vv;
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= tau * vi;
            }
        }
        q.set_col(c, &e);
    }

    QrFactors { q, r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng_gaussian;

    fn orthonormal_cols(q: &Matrix) -> f64 {
        q.t_matmul(q).sub(&Matrix::identity(q.cols())).max_abs()
    }

    #[test]
    fn thin_qr_reconstructs() {
        let a = rng_gaussian(7, 4, 1);
        let f = qr_thin(&a);
        assert!(orthonormal_cols(&f.q) < 1e-13);
        assert!(f.q.matmul(&f.r).max_abs_diff(&a) < 1e-12);
        for i in 0..4 {
            for j in 0..i {
                assert_eq!(f.r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn pivoted_qr_detects_rank() {
        let u = rng_gaussian(9, 2, 2);
        let v = rng_gaussian(2, 6, 3);
        let a = u.matmul(&v);
        let f = qr_pivoted(&a, 1e-13);
        assert_eq!(f.q.cols(), 2);
        assert!(orthonormal_cols(&f.q) < 1e-13);
        assert!(f.q.matmul(&f.r).max_abs_diff(&a) < 1e-11);
    }

    #[test]
    fn pivoted_qr_full_rank_wide() {
        let a = rng_gaussian(3, 5, 4);
        let f = qr_pivoted(&a, 1e-13);
        assert_eq!(f.q.cols(), 3);
        assert!(f.q.matmul(&f.r).max_abs_diff(&a) < 1e-12);
    }
}
