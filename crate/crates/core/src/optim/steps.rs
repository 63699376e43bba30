//! Update rules. Every rule works on a flat parameter list aligned with a
//! [`ModelNormSpec`] and applies the oracle layer by layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::norms::{composite_lmo, composite_norm, composite_sharp, ModelNormSpec};

/// Slack allowed on the SCG feasibility precondition.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Uscg,
    Scg,
    UscgWd,
    Almond,
    MuonPlain,
    MuonNesterov,
    Ssd,
    /// Plain stochastic gradient descent, kept as a reference curve.
    Sgd,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Uscg => "uscg",
            Algorithm::Scg => "scg",
            Algorithm::UscgWd => "uscg_wd",
            Algorithm::Almond => "almond",
            Algorithm::MuonPlain => "muon_plain",
            Algorithm::MuonNesterov => "muon_nesterov",
            Algorithm::Ssd => "ssd",
            Algorithm::Sgd => "sgd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// Averaged direction, or the raw momentum buffer for the Muon variants.
    pub d: Vec<Matrix>,
    pub step: usize,
    pub algo: Algorithm,
    pub wd_mu: f64,
    pub light_mode: bool,
    /// Use `α = 1` on the first update. Muon's buffer has no such override,
    /// so matching it with uSCG requires turning this off.
    pub first_step_full_alpha: bool,
}

impl OptimizerState {
    pub fn new(algo: Algorithm, spec: &ModelNormSpec) -> Self {
        let d = spec
            .param_shapes()
            .into_iter()
            .map(|(r, c)| Matrix::zeros(r, c))
            .collect();
        Self {
            d,
            step: 0,
            algo,
            wd_mu: 0.0,
            light_mode: false,
            first_step_full_alpha: true,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.wd_mu = mu;
        self
    }

    pub fn without_first_step_override(mut self) -> Self {
        self.first_step_full_alpha = false;
        self
    }

    fn alpha_now(&self, alpha: f64) -> f64 {
        if self.step == 0 && self.first_step_full_alpha {
            1.0
        } else {
            alpha
        }
    }

    /// Dispatch on `algo`. The Muon variants read `beta = 1 - alpha`.
    pub fn apply(
        &mut self,
        x: &mut [Matrix],
        g: &[Matrix],
        gamma: f64,
        alpha: f64,
        spec: &ModelNormSpec,
    ) -> Result<()> {
        match self.algo {
            Algorithm::Uscg => uscg_step(x, self, g, gamma, alpha, spec),
            Algorithm::Scg => scg_step(x, self, g, gamma, alpha, spec),
            Algorithm::UscgWd => {
                let mu = self.wd_mu;
                uscg_wd_step(x, self, g, gamma, alpha, mu, spec)
            }
            Algorithm::Almond => almond_step(x, self, g, gamma, alpha, spec),
            Algorithm::MuonPlain => muon_step(x, self, g, gamma, 1.0 - alpha, false, spec),
            Algorithm::MuonNesterov => muon_step(x, self, g, gamma, 1.0 - alpha, true, spec),
            Algorithm::Ssd => {
                ssd_step(x, g, gamma, spec)?;
                self.step += 1;
                Ok(())
            }
            Algorithm::Sgd => {
                check_lists(x, g)?;
                check_gamma(gamma, f64::INFINITY)?;
                for (p, gi) in x.iter_mut().zip(g) {
                    p.axpy(-gamma, gi);
                }
                self.step += 1;
                Ok(())
            }
        }
    }
}

fn check_lists(a: &[Matrix], b: &[Matrix]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Misaligned {
            expected: a.len(),
            found: b.len(),
        });
    }
    for (p, q) in a.iter().zip(b) {
        if !p.same_shape(q) {
            return Err(Error::ShapeMismatch {
                expected_rows: p.rows(),
                expected_cols: p.cols(),
                rows: q.rows(),
                cols: q.cols(),
            });
        }
    }
    Ok(())
}

fn check_gamma(gamma: f64, max: f64) -> Result<()> {
    if !(gamma >= 0.0 && gamma <= max) {
        return Err(Error::OutOfRange {
            name: "gamma",
            value: gamma,
            range: if max.is_finite() { "[0, 1]" } else { "[0, inf)" },
        });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 1]",
        });
    }
    Ok(())
}

fn check_state(x: &[Matrix], state: &OptimizerState, g: &[Matrix]) -> Result<()> {
    check_lists(x, g)?;
    check_lists(x, &state.d)
}

/// `(1 - α) d + α g`, elementwise per parameter.
pub fn momentum_update(d: &[Matrix], g: &[Matrix], alpha: f64) -> Result<Vec<Matrix>> {
    check_lists(d, g)?;
    check_alpha(alpha)?;
    Ok(d.iter()
        .zip(g)
        .map(|(di, gi)| di.zip_map(gi, |a, b| a + alpha * (b - a)))
        .collect())
}

fn average_in_place(d: &mut [Matrix], g: &[Matrix], alpha: f64) {
    for (di, gi) in d.iter_mut().zip(g) {
        for (a, &b) in di.as_mut_slice().iter_mut().zip(gi.as_slice()) {
            // Same as (1 - α) a + α b, but leaves `a` untouched when `b == a`.
            *a += alpha * (b - *a);
        }
    }
}

/// `x ← x + γ lmo(d)` after averaging.
pub fn uscg_step(
    x: &mut [Matrix],
    state: &mut OptimizerState,
    g: &[Matrix],
    gamma: f64,
    alpha: f64,
    spec: &ModelNormSpec,
) -> Result<()> {
    check_state(x, state, g)?;
    check_gamma(gamma, f64::INFINITY)?;
    check_alpha(alpha)?;
    let a = state.alpha_now(alpha);
    average_in_place(&mut state.d, g, a);
    let dirs = composite_lmo(&state.d, spec)?;
    for (p, v) in x.iter_mut().zip(&dirs) {
        p.axpy(gamma, v);
    }
    state.step += 1;
    Ok(())
}

/// `x ← (1 - γ) x + γ lmo(d)`. The iterate must be feasible on the first call;
/// afterwards feasibility is preserved by convexity.
pub fn scg_step(
    x: &mut [Matrix],
    state: &mut OptimizerState,
    g: &[Matrix],
    gamma: f64,
    alpha: f64,
    spec: &ModelNormSpec,
) -> Result<()> {
    check_state(x, state, g)?;
    check_gamma(gamma, 1.0)?;
    check_alpha(alpha)?;
    if state.step == 0 {
        let norm = composite_norm(x, spec)?;
        if norm > 1.0 + FEASIBILITY_SLACK {
            return Err(Error::Infeasible { norm });
        }
    }
    let a = state.alpha_now(alpha);
    average_in_place(&mut state.d, g, a);
    let dirs = composite_lmo(&state.d, spec)?;
    for (p, v) in x.iter_mut().zip(&dirs) {
        for (xi, &vi) in p.as_mut_slice().iter_mut().zip(v.as_slice()) {
            *xi = (1.0 - gamma) * *xi + gamma * vi;
        }
    }
    state.step += 1;
    Ok(())
}

/// `x ← x + γ lmo(d) - γ μ x`.
pub fn uscg_wd_step(
    x: &mut [Matrix],
    state: &mut OptimizerState,
    g: &[Matrix],
    gamma: f64,
    alpha: f64,
    mu: f64,
    spec: &ModelNormSpec,
) -> Result<()> {
    check_state(x, state, g)?;
    check_gamma(gamma, 1.0)?;
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::OutOfRange {
            name: "mu",
            value: mu,
            range: "[0, 1]",
        });
    }
    let a = state.alpha_now(alpha);
    average_in_place(&mut state.d, g, a);
    let dirs = composite_lmo(&state.d, spec)?;
    let keep = 1.0 - gamma * mu;
    for (p, v) in x.iter_mut().zip(&dirs) {
        for (xi, &vi) in p.as_mut_slice().iter_mut().zip(v.as_slice()) {
            *xi = keep * *xi + gamma * vi;
        }
    }
    state.step += 1;
    Ok(())
}

/// Oracle on the raw gradient, then averaging: `d ← (1-α) d + α lmo(g)`,
/// `x ← x + γ d`. There is no first-step override.
pub fn almond_step(
    x: &mut [Matrix],
    state: &mut OptimizerState,
    g: &[Matrix],
    gamma: f64,
    alpha: f64,
    spec: &ModelNormSpec,
) -> Result<()> {
    check_state(x, state, g)?;
    check_gamma(gamma, 1.0)?;
    check_alpha(alpha)?;
    let dirs = composite_lmo(g, spec)?;
    average_in_place(&mut state.d, &dirs, alpha);
    for (p, d) in x.iter_mut().zip(&state.d) {
        p.axpy(gamma, d);
    }
    state.step += 1;
    Ok(())
}

/// `G ← g + β G`, then `x ← x + γ lmo(G)`, or `x ← x + γ lmo(g + β G)` with
/// Nesterov. The buffer is updated before the lookahead is formed.
pub fn muon_step(
    x: &mut [Matrix],
    state: &mut OptimizerState,
    g: &[Matrix],
    gamma: f64,
    beta: f64,
    nesterov: bool,
    spec: &ModelNormSpec,
) -> Result<()> {
    check_state(x, state, g)?;
    check_gamma(gamma, f64::INFINITY)?;
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::OutOfRange {
            name: "beta",
            value: beta,
            range: "[0, 1)",
        });
    }
    for (buf, gi) in state.d.iter_mut().zip(g) {
        for (b, &v) in buf.as_mut_slice().iter_mut().zip(gi.as_slice()) {
            *b = v + beta * *b;
        }
    }
    let dirs = if nesterov {
        let look: Vec<Matrix> = g
            .iter()
            .zip(&state.d)
            .map(|(gi, buf)| gi.zip_map(buf, |a, b| a + beta * b))
            .collect();
        composite_lmo(&look, spec)?
    } else {
        composite_lmo(&state.d, spec)?
    };
    for (p, v) in x.iter_mut().zip(&dirs) {
        p.axpy(gamma, v);
    }
    state.step += 1;
    Ok(())
}

/// Steepest descent in the composite norm: `x ← x - γ g^♯`.
///
/// The dual norm couples all layers, so the step length depends on the
/// whole gradient rather than on each layer separately.
pub fn ssd_step(x: &mut [Matrix], g: &[Matrix], gamma: f64, spec: &ModelNormSpec) -> Result<()> {
    check_lists(x, g)?;
    check_gamma(gamma, f64::INFINITY)?;
    let sharp = composite_sharp(g, spec)?;
    for (p, v) in x.iter_mut().zip(&sharp) {
        p.axpy(-gamma, v);
    }
    Ok(())
}
