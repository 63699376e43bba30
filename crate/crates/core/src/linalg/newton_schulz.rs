use super::Matrix;

/// Quintic coefficients `(a, b, c)` of the iteration
/// `X <- a X + b (X Xᵀ) X + c (X Xᵀ)² X`.
pub const NS_COEFFS: (f64, f64, f64) = (3.4445, -4.7750, 2.0315);

pub const NS_DEFAULT_ITERS: usize = 5;

/// Cubic steps `X <- 1.5 X - 0.5 (X Xᵀ) X` appended after the quintic ones.
pub const NS_POLISH_STEPS: usize = 2;

/// Approximate `U Vᵀ` of `a` without an SVD.
///
/// The input is scaled to unit Frobenius norm so every singular value starts
/// in (0, 1]. The quintic pushes small singular values up quickly but does not
/// converge: values near 1 alternate between about 0.70 and 1.11, so after an
/// odd number of steps a rank-one input sits at 0.70. Two cubic steps then
/// contract [0.6, 1.2] into roughly [0.93, 1]. Zero maps to zero; with
/// `iters == 0` no step of either kind runs and the normalized input is
/// returned.
pub fn newton_schulz_orthogonalize(a: &Matrix, iters: usize) -> Matrix {
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Matrix::zeros(a.rows(), a.cols());
    }
    let tall = a.rows() > a.cols();
    let mut x = if tall { a.transpose() } else { a.clone() };
    x.scale_in_place(1.0 / norm);

    let (ca, cb, cc) = NS_COEFFS;
    for _ in 0..iters {
        let gram = x.matmul_t(&x);
        let mut poly = gram.matmul(&gram);
        poly.scale_in_place(cc);
        poly.axpy(cb, &gram);
        let mut next = poly.matmul(&x);
        next.axpy(ca, &x);
        x = next;
    }
    if iters > 0 {
        for _ in 0..NS_POLISH_STEPS {
            let gram = x.matmul_t(&x);
            let mut next = gram.matmul(&x);
            next.scale_in_place(-0.5);
            next.axpy(1.5, &x);
            x = next;
        }
    }

    if tall {
        x.transpose()
    } else {
        x
    }
}
