use super::qr::qr_thin;
use super::{Matrix, Rng};

/// Semi-orthogonal matrix `Q' = Q sign(diag R)` from the QR factorization of
/// a standard Gaussian `d_out x d_in` matrix. For `d_out < d_in` the
/// factorization is taken on the transpose, so the rows come out orthonormal.
pub fn semi_orthogonal_init(d_out: usize, d_in: usize, seed: u64) -> Matrix {
    semi_orthogonal_from(&mut Rng::new(seed), d_out, d_in)
}

pub(crate) fn semi_orthogonal_from(rng: &mut Rng, d_out: usize, d_in: usize) -> Matrix {
    assert!(d_out >= 1 && d_in >= 1, "dimensions must be positive");
    let g = rng.gaussian_matrix(d_out, d_in);
    if d_out >= d_in {
        sign_fixed_q(&g)
    } else {
        sign_fixed_q(&g.transpose()).transpose()
    }
}

fn sign_fixed_q(tall: &Matrix) -> Matrix {
    let f = qr_thin(tall);
    let mut q = f.q;
    for j in 0..q.cols() {
        if f.r[(j, j)] < 0.0 {
            for i in 0..q.rows() {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}
