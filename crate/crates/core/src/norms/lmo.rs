//! Operator norms, the linear minimization oracle, dual norms and the sharp
//! operator for every [`NormKind`].
//!
//! `lmo(s)` returns a minimizer of `⟨s, x⟩` over `{x : ‖x‖ ≤ ρ}`. Where the
//! minimizer is not unique the choice is fixed:
//!
//! * `sign(0) = 0`, so zero entries of `s` give zero entries in the output;
//! * a zero column (ColNorm) or row (RowNorm) maps to a zero column or row;
//! * `lmo(0) = 0`.
//!
//! All three keep the output inside the ball and make the oracle odd.

use serde::{Deserialize, Serialize};

use super::spec::{NormKind, NormSpec};
use super::vector::{vec_norm, VecNorm};
use crate::error::Result;
use crate::linalg::{newton_schulz_orthogonalize, svd_reduced, Matrix, NS_DEFAULT_ITERS};

/// How the spectral oracle computes `UVᵀ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralBackend {
    #[default]
    ExactSvd,
    NewtonSchulz { iters: usize },
}

impl SpectralBackend {
    pub fn newton_schulz() -> Self {
        SpectralBackend::NewtonSchulz {
            iters: NS_DEFAULT_ITERS,
        }
    }
}

pub fn op_norm(a: &Matrix, spec: &NormSpec) -> Result<f64> {
    spec.check_shape(a)?;
    let (m, n) = (spec.d_out as f64, spec.d_in as f64);
    Ok(match spec.kind {
        NormKind::Sign => a.max_abs(),
        NormKind::ColNorm => a.col_norms().into_iter().fold(0.0, f64::max) / m.sqrt(),
        NormKind::RowNorm => a.row_norms().into_iter().fold(0.0, f64::max) * n.sqrt(),
        NormKind::Spectral => {
            if a.is_zero() {
                0.0
            } else {
                (n / m).sqrt() * svd_reduced(a)?.sigma[0]
            }
        }
        NormKind::EuclideanVec => vec_norm(a.as_slice(), VecNorm::L2)?,
        NormKind::MaxVec => vec_norm(a.as_slice(), VecNorm::Linf)?,
        NormKind::RmsVec => vec_norm(a.as_slice(), VecNorm::Rms)?,
    })
}

/// Oracle with the exact-SVD spectral path.
pub fn lmo(s: &Matrix, spec: &NormSpec) -> Result<Matrix> {
    lmo_with(s, spec, SpectralBackend::ExactSvd)
}

pub fn lmo_with(s: &Matrix, spec: &NormSpec, backend: SpectralBackend) -> Result<Matrix> {
    spec.check_shape(s)?;
    if s.is_zero() {
        return Ok(Matrix::zeros(s.rows(), s.cols()));
    }
    let scale = -spec.lmo_scale();
    Ok(match spec.kind {
        NormKind::Sign | NormKind::MaxVec => s.map(|v| scale * sign(v)),
        NormKind::EuclideanVec | NormKind::RmsVec => {
            let n = s.frobenius_norm();
            s.scale(scale / n)
        }
        NormKind::Spectral => {
            let mut polar = match backend {
                SpectralBackend::ExactSvd => svd_reduced(s)?.polar(),
                SpectralBackend::NewtonSchulz { iters } => newton_schulz_orthogonalize(s, iters),
            };
            polar.scale_in_place(scale);
            polar
        }
        NormKind::ColNorm => {
            let norms = s.col_norms();
            let mut out = s.clone();
            for i in 0..out.rows() {
                for (v, &n) in out.row_mut(i).iter_mut().zip(&norms) {
                    *v = if n > 0.0 { scale * *v / n } else { 0.0 };
                }
            }
            out
        }
        NormKind::RowNorm => {
            let norms = s.row_norms();
            let mut out = s.clone();
            for (i, &n) in norms.iter().enumerate() {
                for v in out.row_mut(i) {
                    *v = if n > 0.0 { scale * *v / n } else { 0.0 };
                }
            }
            out
        }
    })
}

/// `‖s‖_* = -⟨s, lmo(s)⟩ / ρ`, which is independent of the radius.
pub fn dual_norm(s: &Matrix, spec: &NormSpec) -> Result<f64> {
    let x = lmo(s, spec)?;
    Ok(-s.dot(&x) / spec.radius)
}

/// `s^♯ = -(1/ρ) ‖s‖_* lmo(s)`, so that `⟨s, s^♯⟩ = ‖s‖_*²`.
pub fn sharp_op(s: &Matrix, spec: &NormSpec) -> Result<Matrix> {
    let x = lmo(s, spec)?;
    let dual = -s.dot(&x) / spec.radius;
    Ok(x.scale(-dual / spec.radius))
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
