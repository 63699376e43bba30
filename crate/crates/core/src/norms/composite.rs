//! The max-over-layers model norm and the quantities derived from it.
//!
//! Parameters are passed as a flat slice in layer order: `W_1, b_1, W_2, ...`
//! where a bias appears only if its layer declares a bias norm. Biases are
//! `d_out x 1` columns.

use serde::{Deserialize, Serialize};

use super::lmo::{dual_norm, lmo_with, op_norm, SpectralBackend};
use super::spec::NormSpec;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Norms for one layer plus its scaling `rho`. The effective radius of each
/// component is `rho * spec.radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerNorms {
    pub weight: NormSpec,
    pub bias: Option<NormSpec>,
    pub rho: f64,
}

impl LayerNorms {
    pub fn new(weight: NormSpec, bias: Option<NormSpec>, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::OutOfRange {
                name: "rho",
                value: rho,
                range: "(0, inf)",
            });
        }
        if let Some(b) = bias {
            if b.d_out != weight.d_out || !b.kind.is_vector() {
                return Err(Error::InvalidDims(format!(
                    "bias norm must be a vector kind of length {}",
                    weight.d_out
                )));
            }
        }
        Ok(Self { weight, bias, rho })
    }

    pub fn weight_only(weight: NormSpec, rho: f64) -> Result<Self> {
        Self::new(weight, None, rho)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelNormSpec {
    pub layers: Vec<LayerNorms>,
    #[serde(default)]
    pub backend: SpectralBackend,
}

impl ModelNormSpec {
    pub fn new(layers: Vec<LayerNorms>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidDims("model norm needs at least one layer".into()));
        }
        Ok(Self {
            layers,
            backend: SpectralBackend::ExactSvd,
        })
    }

    pub fn with_backend(mut self, backend: SpectralBackend) -> Self {
        self.backend = backend;
        self
    }

    /// Same norms with every layer scaling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.layers {
            l.rho *= factor;
        }
        out
    }

    /// One spec per parameter, in parameter order, carrying effective radii.
    pub fn components(&self) -> Vec<NormSpec> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in &self.layers {
            out.push(l.weight.with_radius(l.weight.radius * l.rho));
            if let Some(b) = l.bias {
                out.push(b.with_radius(b.radius * l.rho));
            }
        }
        out
    }

    pub fn param_shapes(&self) -> Vec<(usize, usize)> {
        self.components().iter().map(|c| (c.d_out, c.d_in)).collect()
    }

    fn aligned(&self, params: &[Matrix]) -> Result<Vec<NormSpec>> {
        let comps = self.components();
        if comps.len() != params.len() {
            return Err(Error::Misaligned {
                expected: comps.len(),
                found: params.len(),
            });
        }
        Ok(comps)
    }
}

/// `max` over components of `‖p‖ / radius`; a value `≤ 1` means feasible.
pub fn composite_norm(params: &[Matrix], spec: &ModelNormSpec) -> Result<f64> {
    let comps = spec.aligned(params)?;
    let mut out = 0.0f64;
    for (p, c) in params.iter().zip(&comps) {
        out = out.max(op_norm(p, c)? / c.radius);
    }
    Ok(out)
}

/// Joint oracle over the unit ball of the composite norm.
pub fn composite_lmo(s: &[Matrix], spec: &ModelNormSpec) -> Result<Vec<Matrix>> {
    let comps = spec.aligned(s)?;
    s.iter()
        .zip(&comps)
        .map(|(p, c)| lmo_with(p, c, spec.backend))
        .collect()
}

/// Dual of the composite norm, `Σ radius · ‖s‖_*`.
pub fn composite_dual_norm(s: &[Matrix], spec: &ModelNormSpec) -> Result<f64> {
    let comps = spec.aligned(s)?;
    let mut total = 0.0;
    for (p, c) in s.iter().zip(&comps) {
        total += c.radius * dual_norm(p, c)?;
    }
    Ok(total)
}

/// Sharp operator of the composite norm: `-‖s‖_* · lmo(s)` at unit radius.
pub fn composite_sharp(s: &[Matrix], spec: &ModelNormSpec) -> Result<Vec<Matrix>> {
    let dual = composite_dual_norm(s, spec)?;
    let dirs = composite_lmo(s, spec)?;
    Ok(dirs.into_iter().map(|d| d.scale(-dual)).collect())
}

/// `⟨g, x - lmo(g)⟩ = ⟨g, x⟩ + Σ radius · ‖g‖_*`.
pub fn fw_gap(grad: &[Matrix], x: &[Matrix], spec: &ModelNormSpec) -> Result<f64> {
    if grad.len() != x.len() {
        return Err(Error::Misaligned {
            expected: grad.len(),
            found: x.len(),
        });
    }
    let mut inner = 0.0;
    for (g, p) in grad.iter().zip(x) {
        if !g.same_shape(p) {
            return Err(Error::ShapeMismatch {
                expected_rows: g.rows(),
                expected_cols: g.cols(),
                rows: p.rows(),
                cols: p.cols(),
            });
        }
        inner += g.dot(p);
    }
    Ok(inner + composite_dual_norm(grad, spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Rng;
    use crate::norms::NormKind;

    fn vec_layer(kind: NormKind, len: usize, rho: f64) -> LayerNorms {
        LayerNorms::weight_only(NormSpec::vector(kind, 1.0, len).unwrap(), rho).unwrap()
    }

    #[test]
    fn two_layer_example() {
        let spec = ModelNormSpec::new(vec![
            vec_layer(NormKind::EuclideanVec, 1, 1.0),
            vec_layer(NormKind::EuclideanVec, 1, 2.0),
        ])
        .unwrap();
        let params = vec![Matrix::column(&[0.5]), Matrix::column(&[3.0])];
        assert_eq!(composite_norm(&params, &spec).unwrap(), 1.5);
        let zeros = vec![Matrix::zeros(1, 1), Matrix::zeros(1, 1)];
        assert_eq!(composite_norm(&zeros, &spec).unwrap(), 0.0);
    }

    #[test]
    fn boundary_layer_has_unit_norm() {
        let w = NormSpec::new(NormKind::Sign, 1.0, 3, 2).unwrap();
        let spec = ModelNormSpec::new(vec![LayerNorms::weight_only(w, 0.25).unwrap()]).unwrap();
        let p = vec![Matrix::filled(3, 2, -0.25)];
        assert_eq!(composite_norm(&p, &spec).unwrap(), 1.0);
    }

    #[test]
    fn misaligned_is_error() {
        let spec = ModelNormSpec::new(vec![vec_layer(NormKind::MaxVec, 2, 1.0)]).unwrap();
        assert!(matches!(
            composite_norm(&[], &spec),
            Err(Error::Misaligned { expected: 1, found: 0 })
        ));
        assert!(ModelNormSpec::new(vec![]).is_err());
        let w = NormSpec::new(NormKind::Sign, 1.0, 3, 2).unwrap();
        assert!(LayerNorms::weight_only(w, 0.0).is_err());
    }

    #[test]
    fn fw_gap_examples() {
        let spec = ModelNormSpec::new(vec![vec_layer(NormKind::EuclideanVec, 2, 1.0)]).unwrap();
        let g = vec![Matrix::column(&[3.0, 4.0])];
        let zero = vec![Matrix::zeros(2, 1)];
        assert_eq!(fw_gap(&g, &zero, &spec).unwrap(), 5.0);
        assert_eq!(fw_gap(&zero, &g, &spec).unwrap(), 0.0);
        let x = composite_lmo(&g, &spec).unwrap();
        assert!(fw_gap(&g, &x, &spec).unwrap().abs() < 1e-14);
    }

    #[test]
    fn composite_lmo_is_on_unit_sphere_and_pairs_with_dual() {
        let w1 = NormSpec::new(NormKind::Spectral, 1.0, 5, 4).unwrap();
        let b1 = NormSpec::vector(NormKind::RmsVec, 0.5, 5).unwrap();
        let w2 = NormSpec::new(NormKind::Sign, 1.0, 3, 5).unwrap();
        let spec = ModelNormSpec::new(vec![
            LayerNorms::new(w1, Some(b1), 2.0).unwrap(),
            LayerNorms::weight_only(w2, 0.2).unwrap(),
        ])
        .unwrap();
        let mut rng = Rng::new(3);
        let g: Vec<Matrix> = spec
            .param_shapes()
            .into_iter()
            .map(|(r, c)| rng.gaussian_matrix(r, c))
            .collect();
        let x = composite_lmo(&g, &spec).unwrap();
        assert!((composite_norm(&x, &spec).unwrap() - 1.0).abs() < 1e-10);
        let inner: f64 = g.iter().zip(&x).map(|(a, b)| a.dot(b)).sum();
        let dual = composite_dual_norm(&g, &spec).unwrap();
        assert!((inner + dual).abs() < 1e-10 * dual);
        let sharp = composite_sharp(&g, &spec).unwrap();
        let inner: f64 = g.iter().zip(&sharp).map(|(a, b)| a.dot(b)).sum();
        assert!((inner - dual * dual).abs() < 1e-9 * dual * dual);
    }

    #[test]
    fn scaled_multiplies_radii() {
        let spec = ModelNormSpec::new(vec![vec_layer(NormKind::MaxVec, 2, 0.5)]).unwrap();
        let s = spec.scaled(4.0);
        assert_eq!(s.components()[0].radius, 2.0);
    }
}
