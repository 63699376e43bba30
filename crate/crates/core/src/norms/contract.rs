//! Randomized checks of the oracle contract: boundary, dual pairing and
//! positive scale invariance, for every norm kind.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::lmo::{lmo_with, op_norm, SpectralBackend};
use super::spec::{NormKind, NormSpec};
use crate::error::Result;
use crate::linalg::{svd_reduced, Matrix, Rng};

pub const BOUNDARY_TOL_EXACT: f64 = 1e-10;
pub const BOUNDARY_TOL_SPECTRAL: f64 = 1e-8;
pub const PAIRING_TOL: f64 = 1e-8;
pub const SCALE_TOL: f64 = 1e-10;
pub const SCALES: [f64; 3] = [0.5, 2.0, 10.0];

/// Relative band accepted for the spectral kind under Newton-Schulz.
pub const NS_BAND: (f64, f64) = (0.65, 1.35);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractConfig {
    pub samples: usize,
    pub max_dim: usize,
    pub seed: u64,
    #[serde(default)]
    pub backend: SpectralBackend,
}

impl Default for ContractConfig {
    fn default() -> Self {
        Self {
            samples: 100,
            max_dim: 64,
            seed: 0,
            backend: SpectralBackend::ExactSvd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindReport {
    pub kind: NormKind,
    pub max_boundary_dev: f64,
    pub max_pairing_dev: f64,
    pub max_scale_dev: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractReport {
    pub kinds: Vec<KindReport>,
    pub elapsed: Duration,
}

impl ContractReport {
    pub fn passed(&self) -> bool {
        self.kinds.iter().all(|k| k.violations == 0)
    }

    pub fn max_pairing_dev(&self) -> f64 {
        self.kinds.iter().map(|k| k.max_pairing_dev).fold(0.0, f64::max)
    }
}

/// Dual norm from closed forms, independent of the oracle.
pub fn closed_form_dual(s: &Matrix, spec: &NormSpec) -> Result<f64> {
    let (m, n) = (spec.d_out as f64, spec.d_in as f64);
    Ok(match spec.kind {
        NormKind::Sign | NormKind::MaxVec => s.sum_abs(),
        NormKind::ColNorm => m.sqrt() * s.col_norms().iter().sum::<f64>(),
        NormKind::RowNorm => s.row_norms().iter().sum::<f64>() / n.sqrt(),
        NormKind::Spectral => {
            if s.is_zero() {
                0.0
            } else {
                (m / n).sqrt() * svd_reduced(s)?.nuclear_norm()
            }
        }
        NormKind::EuclideanVec => s.frobenius_norm(),
        NormKind::RmsVec => m.sqrt() * s.frobenius_norm(),
    })
}

pub fn run_contract_suite(cfg: &ContractConfig) -> Result<ContractReport> {
    let start = Instant::now();
    let max_dim = cfg.max_dim.max(1);
    let mut kinds = Vec::with_capacity(NormKind::ALL.len());
    for (ki, kind) in NormKind::ALL.into_iter().enumerate() {
        let mut rng = Rng::with_stream(cfg.seed, ki as u64);
        let approx = kind == NormKind::Spectral
            && matches!(cfg.backend, SpectralBackend::NewtonSchulz { .. });
        let mut rep = KindReport {
            kind,
            max_boundary_dev: 0.0,
            max_pairing_dev: 0.0,
            max_scale_dev: 0.0,
            violations: 0,
        };
        for _ in 0..cfg.samples {
            let d_out = 1 + rng.below(max_dim);
            let d_in = if kind.is_vector() { 1 } else { 1 + rng.below(max_dim) };
            let radius = 0.5 + 1.5 * rng.uniform();
            let spec = NormSpec::new(kind, radius, d_out, d_in)?;
            let s = rng.gaussian_matrix(d_out, d_in);
            let x = lmo_with(&s, &spec, cfg.backend)?;

            let boundary = op_norm(&x, &spec)?;
            let dual = closed_form_dual(&s, &spec)?;
            let pairing = s.dot(&x) + radius * dual;
            let (bdev, pdev, bad_b, bad_p) = if approx {
                let ratio_b = boundary / radius;
                let ratio_p = -s.dot(&x) / (radius * dual);
                let in_band = |r: f64| r >= NS_BAND.0 && r <= NS_BAND.1;
                (
                    (ratio_b - 1.0).abs(),
                    (ratio_p - 1.0).abs(),
                    !in_band(ratio_b),
                    !in_band(ratio_p),
                )
            } else {
                let tol = if kind == NormKind::Spectral {
                    BOUNDARY_TOL_SPECTRAL
                } else {
                    BOUNDARY_TOL_EXACT
                };
                let b = (boundary - radius).abs();
                let p = pairing.abs() / (radius * dual).max(1.0);
                (b, p, b > tol, p > PAIRING_TOL)
            };
            let mut sdev = 0.0f64;
            let mut bad_s = false;
            for a in SCALES {
                let xa = lmo_with(&s.scale(a), &spec, cfg.backend)?;
                let dev = xa.max_abs_diff(&x);
                sdev = sdev.max(dev);
                let exact = matches!(kind, NormKind::Sign | NormKind::MaxVec);
                bad_s |= if exact { dev != 0.0 } else { dev > SCALE_TOL };
            }
            rep.max_boundary_dev = rep.max_boundary_dev.max(bdev);
            rep.max_pairing_dev = rep.max_pairing_dev.max(pdev);
            rep.max_scale_dev = rep.max_scale_dev.max(sdev);
            if bad_b || bad_p || bad_s {
                rep.violations += 1;
            }
        }
        kinds.push(rep);
    }
    Ok(ContractReport {
        kinds,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let cfg = ContractConfig {
            samples: 10,
            max_dim: 12,
            ..Default::default()
        };
        let rep = run_contract_suite(&cfg).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert_eq!(rep.kinds.len(), 7);
        assert!(rep.max_pairing_dev() < PAIRING_TOL);
    }

    #[test]
    fn newton_schulz_without_iterations_fails_boundary() {
        let cfg = ContractConfig {
            samples: 10,
            max_dim: 32,
            backend: SpectralBackend::NewtonSchulz { iters: 0 },
            ..Default::default()
        };
        let rep = run_contract_suite(&cfg).unwrap();
        assert!(!rep.passed());
        let spectral = rep.kinds.iter().find(|k| k.kind == NormKind::Spectral).unwrap();
        assert!(spectral.violations > 0);
    }

    #[test]
    fn newton_schulz_default_stays_in_band() {
        let cfg = ContractConfig {
            samples: 10,
            max_dim: 16,
            backend: SpectralBackend::newton_schulz(),
            ..Default::default()
        };
        let rep = run_contract_suite(&cfg).unwrap();
        assert!(rep.passed(), "{rep:?}");
    }
}
