use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Norm families with a closed-form linear minimization oracle.
///
/// Matrix kinds are operator norms of a `d_out x d_in` weight:
///
/// | kind       | operator norm | value                               |
/// |------------|---------------|-------------------------------------|
/// | `ColNorm`  | 1 → RMS       | `max_j ‖col_j‖₂ / √d_out`           |
/// | `Sign`     | 1 → ∞         | `max_ij |A_ij|`                     |
/// | `Spectral` | RMS → RMS     | `√(d_in/d_out) σ_max(A)`            |
/// | `RowNorm`  | RMS → ∞       | `max_i √d_in ‖row_i‖₂`              |
///
/// Vector kinds act on `d_out x 1` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Sign,
    ColNorm,
    RowNorm,
    Spectral,
    EuclideanVec,
    MaxVec,
    RmsVec,
}

impl NormKind {
    pub const ALL: [NormKind; 7] = [
        NormKind::Sign,
        NormKind::ColNorm,
        NormKind::RowNorm,
        NormKind::Spectral,
        NormKind::EuclideanVec,
        NormKind::MaxVec,
        NormKind::RmsVec,
    ];

    pub fn is_vector(self) -> bool {
        matches!(
            self,
            NormKind::EuclideanVec | NormKind::MaxVec | NormKind::RmsVec
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            NormKind::Sign => "sign",
            NormKind::ColNorm => "col_norm",
            NormKind::RowNorm => "row_norm",
            NormKind::Spectral => "spectral",
            NormKind::EuclideanVec => "euclidean_vec",
            NormKind::MaxVec => "max_vec",
            NormKind::RmsVec => "rms_vec",
        }
    }
}

/// A norm ball: kind, radius and the operand shape it applies to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub kind: NormKind,
    pub radius: f64,
    pub d_out: usize,
    pub d_in: usize,
}

impl NormSpec {
    pub fn new(kind: NormKind, radius: f64, d_out: usize, d_in: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::OutOfRange {
                name: "radius",
                value: radius,
                range: "(0, inf)",
            });
        }
        if d_out == 0 || d_in == 0 {
            return Err(Error::InvalidDims(format!(
                "norm spec dims must be positive, got {d_out}x{d_in}"
            )));
        }
        if kind.is_vector() && d_in != 1 {
            return Err(Error::InvalidDims(format!(
                "vector norm {} needs d_in = 1, got {d_in}",
                kind.name()
            )));
        }
        Ok(Self {
            kind,
            radius,
            d_out,
            d_in,
        })
    }

    /// Vector ball of the given length (`len x 1` operands).
    pub fn vector(kind: NormKind, radius: f64, len: usize) -> Result<Self> {
        Self::new(kind, radius, len, 1)
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    /// Multiplier the oracle applies to its canonical unit direction
    /// (`UVᵀ`, `sign`, normalized column or row) at this radius.
    pub fn lmo_scale(&self) -> f64 {
        let (m, n) = (self.d_out as f64, self.d_in as f64);
        let factor = match self.kind {
            NormKind::Sign | NormKind::MaxVec | NormKind::EuclideanVec => 1.0,
            NormKind::Spectral => (m / n).sqrt(),
            NormKind::ColNorm => m.sqrt(),
            NormKind::RowNorm => 1.0 / n.sqrt(),
            NormKind::RmsVec => m.sqrt(),
        };
        self.radius * factor
    }

    pub fn check_shape(&self, a: &Matrix) -> Result<()> {
        if a.shape() != (self.d_out, self.d_in) {
            return Err(Error::ShapeMismatch {
                expected_rows: self.d_out,
                expected_cols: self.d_in,
                rows: a.rows(),
                cols: a.cols(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(NormSpec::new(NormKind::Sign, 0.0, 2, 2).is_err());
        assert!(NormSpec::new(NormKind::Sign, 1.0, 0, 2).is_err());
        assert!(NormSpec::new(NormKind::MaxVec, 1.0, 3, 2).is_err());
        assert!(NormSpec::vector(NormKind::MaxVec, 1.0, 3).is_ok());
    }

    #[test]
    fn shape_check() {
        let s = NormSpec::new(NormKind::Sign, 1.0, 2, 3).unwrap();
        assert!(s.check_shape(&Matrix::zeros(2, 3)).is_ok());
        assert!(matches!(
            s.check_shape(&Matrix::zeros(3, 2)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn serde_names() {
        let json = serde_json::to_string(&NormKind::ColNorm).unwrap();
        assert_eq!(json, "\"col_norm\"");
    }
}
