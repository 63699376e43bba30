use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VecNorm {
    L1,
    L2,
    Linf,
    /// `‖z‖₂ / √d`, the magnitude of a typical entry.
    Rms,
}

pub fn vec_norm(z: &[f64], which: VecNorm) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::EmptyVector);
    }
    let l2 = || z.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(match which {
        VecNorm::L1 => z.iter().map(|v| v.abs()).sum(),
        VecNorm::L2 => l2(),
        VecNorm::Linf => z.iter().fold(0.0, |m, v| m.max(v.abs())),
        VecNorm::Rms => l2() / (z.len() as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_examples() {
        assert_eq!(vec_norm(&[3.0, 4.0], VecNorm::L2).unwrap(), 5.0);
        assert_eq!(vec_norm(&[1.0; 4], VecNorm::Rms).unwrap(), 1.0);
        assert_eq!(vec_norm(&[3.0, -4.0], VecNorm::L1).unwrap(), 7.0);
        assert_eq!(vec_norm(&[3.0, -4.0], VecNorm::Linf).unwrap(), 4.0);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(vec_norm(&[], VecNorm::L1), Err(Error::EmptyVector));
    }

    proptest! {
        #[test]
        fn norm_chain(z in prop::collection::vec(-100.0f64..100.0, 1..50)) {
            let d = z.len() as f64;
            let inf = vec_norm(&z, VecNorm::Linf).unwrap();
            let two = vec_norm(&z, VecNorm::L2).unwrap();
            let one = vec_norm(&z, VecNorm::L1).unwrap();
            let eps = 1e-9 * (1.0 + one);
            prop_assert!(inf <= two + eps);
            prop_assert!(two <= one + eps);
            prop_assert!(one <= d.sqrt() * two + eps);
            prop_assert!(d.sqrt() * two <= d * inf + eps);
        }
    }
}
