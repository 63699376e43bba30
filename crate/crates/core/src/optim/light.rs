//! Single-buffer form of uSCG: backprop adds into `gbuf`, which is decayed
//! after each update instead of being zeroed.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::norms::{composite_lmo, ModelNormSpec};

/// `x ← x + γ lmo(gbuf)`, then `gbuf ← (1 - α) gbuf`.
pub fn scion_light_update(
    x: &mut [Matrix],
    gbuf: &mut [Matrix],
    gamma: f64,
    alpha: f64,
    spec: &ModelNormSpec,
) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "(0, 1]",
        });
    }
    step_and_decay(x, gbuf, gamma, 1.0 - alpha, spec)
}

fn step_and_decay(
    x: &mut [Matrix],
    gbuf: &mut [Matrix],
    gamma: f64,
    decay: f64,
    spec: &ModelNormSpec,
) -> Result<()> {
    if x.len() != gbuf.len() {
        return Err(Error::Misaligned {
            expected: x.len(),
            found: gbuf.len(),
        });
    }
    let dirs = composite_lmo(gbuf, spec)?;
    for (p, v) in x.iter_mut().zip(&dirs) {
        p.axpy(gamma, v);
    }
    for b in gbuf.iter_mut() {
        b.scale_in_place(decay);
    }
    Ok(())
}

/// Owns the one gradient-shaped buffer the single-buffer form needs.
///
/// With the first-step override on, the averaged direction after step 1 is
/// the raw gradient rather than `α g`. Decaying the buffer by `(1-α)/α`
/// once, right after that step, restores `d = α G` from then on, so the
/// iterates match [`uscg_step`](super::uscg_step) for a constant `α`.
#[derive(Debug, Clone)]
pub struct ScionLight {
    gbuf: Vec<Matrix>,
    step: usize,
    first_step_full_alpha: bool,
}

impl ScionLight {
    pub fn new(spec: &ModelNormSpec) -> Self {
        Self {
            gbuf: spec
                .param_shapes()
                .into_iter()
                .map(|(r, c)| Matrix::zeros(r, c))
                .collect(),
            step: 0,
            first_step_full_alpha: true,
        }
    }

    pub fn without_first_step_override(mut self) -> Self {
        self.first_step_full_alpha = false;
        self
    }

    pub fn buffer(&self) -> &[Matrix] {
        &self.gbuf
    }

    /// Where backprop writes: gradients are added, never overwritten.
    pub fn buffer_mut(&mut self) -> &mut [Matrix] {
        &mut self.gbuf
    }

    pub fn accumulate(&mut self, g: &[Matrix]) -> Result<()> {
        if g.len() != self.gbuf.len() {
            return Err(Error::Misaligned {
                expected: self.gbuf.len(),
                found: g.len(),
            });
        }
        for (b, gi) in self.gbuf.iter_mut().zip(g) {
            if !b.same_shape(gi) {
                return Err(Error::ShapeMismatch {
                    expected_rows: b.rows(),
                    expected_cols: b.cols(),
                    rows: gi.rows(),
                    cols: gi.cols(),
                });
            }
            b.axpy(1.0, gi);
        }
        Ok(())
    }

    pub fn update(&mut self, x: &mut [Matrix], gamma: f64, alpha: f64, spec: &ModelNormSpec) -> Result<()> {
        if self.step == 0 && self.first_step_full_alpha {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::OutOfRange {
                    name: "alpha",
                    value: alpha,
                    range: "(0, 1]",
                });
            }
            step_and_decay(x, &mut self.gbuf, gamma, (1.0 - alpha) / alpha, spec)?;
        } else {
            scion_light_update(x, &mut self.gbuf, gamma, alpha, spec)?;
        }
        self.step += 1;
        Ok(())
    }

    pub fn step(&self) -> usize {
        self.step
    }
}
