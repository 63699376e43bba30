use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaSchedule {
    Constant,
    /// `γ₀ (1 - k/n)`.
    LinearDecay,
    /// Constant for `n - warmdown` steps, then linear down to 0 at `k = n`.
    ConstantThenLinear { warmdown: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaSchedule {
    Constant { alpha: f64 },
    /// `α_k = 1/√k`.
    Vanishing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub gamma: GammaSchedule,
    pub gamma0: f64,
    pub alpha: AlphaSchedule,
    pub horizon: usize,
}

impl ScheduleSpec {
    pub fn new(gamma: GammaSchedule, gamma0: f64, alpha: AlphaSchedule, horizon: usize) -> Result<Self> {
        let s = Self {
            gamma,
            gamma0,
            alpha,
            horizon,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(gamma0: f64, alpha: f64, horizon: usize) -> Result<Self> {
        Self::new(
            GammaSchedule::Constant,
            gamma0,
            AlphaSchedule::Constant { alpha },
            horizon,
        )
    }

    /// A zero `gamma0` is accepted and freezes the iterate.
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma0) {
            return Err(Error::OutOfRange {
                name: "gamma0",
                value: self.gamma0,
                range: "[0, 1]",
            });
        }
        if let AlphaSchedule::Constant { alpha } = self.alpha {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::OutOfRange {
                    name: "alpha",
                    value: alpha,
                    range: "(0, 1]",
                });
            }
        }
        if self.horizon == 0 {
            return Err(Error::OutOfRange {
                name: "horizon",
                value: 0.0,
                range: "[1, inf)",
            });
        }
        if let GammaSchedule::ConstantThenLinear { warmdown } = self.gamma {
            if warmdown == 0 || warmdown > self.horizon {
                return Err(Error::OutOfRange {
                    name: "warmdown",
                    value: warmdown as f64,
                    range: "[1, horizon]",
                });
            }
        }
        Ok(())
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.horizon {
            return Err(Error::OutOfRange {
                name: "k",
                value: k as f64,
                range: "[1, horizon]",
            });
        }
        Ok(())
    }

    pub fn gamma_at(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        let n = self.horizon as f64;
        let g = match self.gamma {
            GammaSchedule::Constant => self.gamma0,
            GammaSchedule::LinearDecay => self.gamma0 * (1.0 - k as f64 / n),
            GammaSchedule::ConstantThenLinear { warmdown } => {
                let start = self.horizon - warmdown;
                if k <= start {
                    self.gamma0
                } else {
                    self.gamma0 * (self.horizon - k) as f64 / warmdown as f64
                }
            }
        };
        Ok(g.clamp(0.0, self.gamma0))
    }

    pub fn alpha_at(&self, k: usize) -> Result<f64> {
        self.check_k(k)?;
        Ok(match self.alpha {
            AlphaSchedule::Constant { alpha } => alpha,
            AlphaSchedule::Vanishing => 1.0 / (k as f64).sqrt(),
        })
    }
}

/// `0.75 n^{-3/4}`, inside `(1/(2 n^{3/4}), 1/n^{3/4})`.
pub fn theory_gamma(n: usize) -> f64 {
    0.75 * (n as f64).powf(-0.75)
}

pub fn theory_gamma_interval(n: usize) -> (f64, f64) {
    let b = (n as f64).powf(-0.75);
    (0.5 * b, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_decay_midpoint() {
        let s = ScheduleSpec::new(
            GammaSchedule::LinearDecay,
            0.1,
            AlphaSchedule::Vanishing,
            10,
        )
        .unwrap();
        assert!((s.gamma_at(5).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(s.gamma_at(10).unwrap(), 0.0);
        assert_eq!(s.alpha_at(4).unwrap(), 0.5);
        assert!(s.gamma_at(0).is_err());
        assert!(s.gamma_at(11).is_err());
    }

    #[test]
    fn constant_then_linear() {
        let s = ScheduleSpec::new(
            GammaSchedule::ConstantThenLinear { warmdown: 4 },
            0.2,
            AlphaSchedule::Constant { alpha: 0.1 },
            10,
        )
        .unwrap();
        assert_eq!(s.gamma_at(6).unwrap(), 0.2);
        assert!((s.gamma_at(8).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(s.gamma_at(10).unwrap(), 0.0);
    }

    #[test]
    fn theory_gamma_in_interval() {
        let g = theory_gamma(256);
        assert!((g - 0.75 / 64.0).abs() < 1e-15);
        assert!((g - 0.01172).abs() < 1e-5);
        let (lo, hi) = theory_gamma_interval(256);
        assert!(lo < g && g < hi);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScheduleSpec::constant(1.5, 0.1, 10).is_err());
        assert!(ScheduleSpec::constant(0.1, 0.0, 10).is_err());
        assert!(ScheduleSpec::constant(0.1, 0.5, 0).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let s = ScheduleSpec::constant(0.1, 0.5, 7).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: ScheduleSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(s, back);
    }
}
