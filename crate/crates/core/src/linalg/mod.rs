//! Dense linear algebra: the matrix type, reduced SVD, Newton–Schulz
//! orthogonalization, seeded random matrices and semi-orthogonal factors.

mod init;
mod matrix;
mod newton_schulz;
mod qr;
mod rng;
mod svd;

pub use init::semi_orthogonal_init;
pub(crate) use init::semi_orthogonal_from;
pub use matrix::Matrix;
pub use newton_schulz::{newton_schulz_orthogonalize, NS_COEFFS, NS_DEFAULT_ITERS, NS_POLISH_STEPS};
pub use qr::{qr_pivoted, qr_thin, QrFactors};
pub use rng::{derive_seed, rng_gaussian, rng_rademacher, Rng};
pub use svd::{svd_reduced, SvdResult, RANK_TOL};
