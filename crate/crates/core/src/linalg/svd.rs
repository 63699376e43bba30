//! Reduced SVD by QR-preconditioned one-sided Jacobi.
//!
//! The input (transposed to be tall) is first reduced with a column-pivoted
//! Householder QR, which also strips numerically null directions. One-sided
//! Jacobi then orthogonalizes the `n x r` transpose of the triangular factor.
//! Gradients are usually low rank, so `r` is often tiny and the Jacobi sweep
//! costs almost nothing next to the QR.

use super::matrix::dot_slices;
use super::qr::qr_pivoted;
use super::Matrix;
use crate::error::{Error, Result};

/// Singular values at or below `RANK_TOL * sigma_max` are discarded.
pub const RANK_TOL: f64 = 1e-10;

/// Columns whose remaining norm falls below this fraction of the largest
/// column norm are dropped by the QR stage. Far below `RANK_TOL`, so the
/// truncation is decided by the singular values themselves.
const QR_TOL: f64 = 1e-14;

const JACOBI_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// `A = U diag(sigma) Vᵀ` with `sigma` nonincreasing and strictly positive.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub vt: Matrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    /// `U Vᵀ`, the orthogonal polar factor of the input.
    pub fn polar(&self) -> Matrix {
        self.u.matmul(&self.vt)
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for i in 0..us.rows() {
            for (v, s) in us.row_mut(i).iter_mut().zip(&self.sigma) {
                *v *= s;
            }
        }
        us.matmul(&self.vt)
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.sigma.iter().sum()
    }
}

pub fn svd_reduced(a: &Matrix) -> Result<SvdResult> {
    if let Some(index) = a.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if a.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    // Tiny entries would underflow when squared inside the QR.
    let peak = a.max_abs();
    let scaled = a.map(|v| v / peak);
    let mut out = if scaled.rows() < scaled.cols() {
        let t = tall_svd(&scaled.transpose());
        SvdResult {
            u: t.vt.transpose(),
            sigma: t.sigma,
            vt: t.u.transpose(),
        }
    } else {
        tall_svd(&scaled)
    };
    for s in &mut out.sigma {
        *s *= peak;
    }
    Ok(out)
}

fn tall_svd(a: &Matrix) -> SvdResult {
    let n = a.cols();
    let qr = qr_pivoted(a, QR_TOL);
    let r = qr.q.cols();

    // Columns of x are the rows of the r x n factor B, so x = Bᵀ (n x r).
    let mut x: Vec<Vec<f64>> = (0..r).map(|i| qr.r.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..r)
        .map(|i| {
            let mut e = vec![0.0; r];
            e[i] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..r {
            for q in p + 1..r {
                let alpha = dot_slices(&x[p], &x[p]);
                let beta = dot_slices(&x[q], &x[q]);
                let gamma = dot_slices(&x[p], &x[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= JACOBI_TOL * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut x, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = x.iter().map(|c| dot_slices(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let smax = norms[order[0]];
    let keep: Vec<usize> = order
        .into_iter()
        .filter(|&i| norms[i] > RANK_TOL * smax)
        .collect();
    let k = keep.len();

    // B = V' Σ U'ᵀ, hence A = (Q V') Σ U'ᵀ.
    let mut vsel = Matrix::zeros(r, k);
    let mut vt = Matrix::zeros(k, n);
    let mut sigma = Vec::with_capacity(k);
    for (c, &i) in keep.iter().enumerate() {
        vsel.set_col(c, &v[i]);
        let s = norms[i];
        for (dst, src) in vt.row_mut(c).iter_mut().zip(&x[i]) {
            *dst = src / s;
        }
        sigma.push(s);
    }
    let u = qr.q.matmul(&vsel);
    SvdResult { u, sigma, vt }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (a, b) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (xp, xq) = (*a, *b);
        *a = c * xp - s * xq;
        *b = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng_gaussian;
    use proptest::prelude::*;

    fn rel_reconstruction(a: &Matrix, s: &SvdResult) -> f64 {
        s.reconstruct().sub(a).frobenius_norm() / a.frobenius_norm()
    }

    fn check_invariants(a: &Matrix, s: &SvdResult) {
        let r = s.rank();
        assert!(r <= a.rows().min(a.cols()));
        assert!(s.u.t_matmul(&s.u).sub(&Matrix::identity(r)).max_abs() < 1e-10);
        assert!(s.vt.matmul_t(&s.vt).sub(&Matrix::identity(r)).max_abs() < 1e-10);
        for w in s.sigma.windows(2) {
            assert!(w[0] >= w[1]);
        }
        assert!(s.sigma.iter().all(|&v| v > RANK_TOL * s.sigma[0]));
        assert!(rel_reconstruction(a, s) < 1e-8);
    }

    #[test]
    fn subnormal_scale_input() {
        let a = Matrix::from_rows(&[[3e-300, 0.0], [0.0, 4e-300], [1e-300, 0.0]]);
        let s = svd_reduced(&a).unwrap();
        assert_eq!(s.rank(), 2);
        assert!((s.sigma[0] / 4e-300 - 1.0).abs() < 1e-12);
        let mut bad = a.clone();
        bad[(1, 1)] = f64::NAN;
        assert_eq!(svd_reduced(&bad).unwrap_err(), Error::NonFinite { index: 3 });
    }

    #[test]
    fn diagonal_rank_one() {
        let s = svd_reduced(&Matrix::from_rows(&[[5.0, 0.0], [0.0, 0.0]])).unwrap();
        assert_eq!(s.sigma, vec![5.0]);
        assert_eq!(s.u.shape(), (2, 1));
        assert!((s.u[(0, 0)].abs() - 1.0).abs() < 1e-15 && s.u[(1, 0)] == 0.0);
        assert!((s.vt[(0, 0)].abs() - 1.0).abs() < 1e-15 && s.vt[(0, 1)] == 0.0);
        assert_eq!(s.u[(0, 0)].signum(), s.vt[(0, 0)].signum());
        assert_eq!(s.polar(), Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]));
    }

    #[test]
    fn single_off_diagonal_entry() {
        let s = svd_reduced(&Matrix::from_rows(&[[0.0, 3.0], [0.0, 0.0]])).unwrap();
        assert_eq!(s.sigma, vec![3.0]);
        assert_eq!(s.polar(), Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]));
    }

    #[test]
    fn zero_matrix_is_an_error() {
        assert_eq!(
            svd_reduced(&Matrix::zeros(3, 2)).unwrap_err(),
            Error::ZeroMatrix
        );
    }

    #[test]
    fn random_tall_reconstructs() {
        let a = rng_gaussian(8, 5, 17);
        let s = svd_reduced(&a).unwrap();
        assert_eq!(s.rank(), 5);
        check_invariants(&a, &s);
    }

    #[test]
    fn low_rank_is_truncated() {
        let a = rng_gaussian(30, 3, 1).matmul(&rng_gaussian(3, 20, 2));
        let s = svd_reduced(&a).unwrap();
        assert_eq!(s.rank(), 3);
        check_invariants(&a, &s);
    }

    #[test]
    fn nuclear_norm_of_diagonal() {
        let s = svd_reduced(&Matrix::diag(&[3.0, 4.0])).unwrap();
        assert!((s.nuclear_norm() - 7.0).abs() < 1e-14);
        assert!((s.sigma[0] - 4.0).abs() < 1e-14);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn round_trip(rows in 1usize..=64, cols in 1usize..=64, seed in any::<u64>()) {
            let a = rng_gaussian(rows, cols, seed);
            let s = svd_reduced(&a).unwrap();
            check_invariants(&a, &s);
        }
    }
}
