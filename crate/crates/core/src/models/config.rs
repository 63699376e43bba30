//! Layer specifications and the recommended per-layer norm presets.

use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{Error, Result};
use crate::norms::{LayerNorms, ModelNormSpec, NormKind, NormSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    SemiOrthogonal,
    ColNormalizedGaussian,
    RowNormalizedGaussian,
    RandomSign,
    /// `N(0, 1/d_in)` entries, not scaled onto the boundary.
    Kaiming,
}

impl InitScheme {
    /// The boundary scheme matching a weight norm.
    pub fn boundary_for(kind: NormKind) -> Self {
        match kind {
            NormKind::Spectral => InitScheme::SemiOrthogonal,
            NormKind::ColNorm => InitScheme::ColNormalizedGaussian,
            NormKind::RowNorm => InitScheme::RowNormalizedGaussian,
            _ => InitScheme::RandomSign,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Spectral, Spectral, Sign.
    Image,
    /// ColNorm, Spectral, Sign.
    OneHot,
    /// Sign, Spectral, Sign.
    WeightShared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    Image,
    OneHot,
}

/// One dense layer `f = W h + b`, followed by `activation`.
///
/// `weight_norm` and `bias_norm` have unit radius; the layer scaling
/// `rho_scale` turns them into the actual constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub d_in: usize,
    pub d_out: usize,
    pub activation: Activation,
    pub init: InitScheme,
    pub weight_norm: NormSpec,
    pub bias_norm: Option<NormSpec>,
    pub rho_scale: f64,
}

impl LayerSpec {
    pub fn norms(&self) -> Result<LayerNorms> {
        LayerNorms::new(self.weight_norm, self.bias_norm, self.rho_scale)
    }

    /// Multiplier the weight oracle applies at this layer's scaling.
    pub fn lmo_scale(&self) -> f64 {
        self.weight_norm.with_radius(self.rho_scale).lmo_scale()
    }
}

pub fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    let Some(last) = specs.last() else {
        return Err(Error::InvalidDims("model needs at least one layer".into()));
    };
    for (i, s) in specs.iter().enumerate() {
        if s.weight_norm.d_in != s.d_in || s.weight_norm.d_out != s.d_out {
            return Err(Error::InvalidDims(format!(
                "layer {i}: weight norm is {}x{}, layer is {}x{}",
                s.weight_norm.d_out, s.weight_norm.d_in, s.d_out, s.d_in
            )));
        }
        if i > 0 && specs[i - 1].d_out != s.d_in {
            return Err(Error::InvalidDims(format!(
                "layer {i}: d_in {} does not match previous d_out {}",
                s.d_in,
                specs[i - 1].d_out
            )));
        }
        s.norms()?;
    }
    if last.activation != Activation::Identity {
        return Err(Error::InvalidDims("last layer must use the identity activation".into()));
    }
    if last.bias_norm.is_some() {
        return Err(Error::InvalidDims("last layer carries no bias".into()));
    }
    Ok(())
}

pub fn model_norm_spec(specs: &[LayerSpec]) -> Result<ModelNormSpec> {
    validate_specs(specs)?;
    ModelNormSpec::new(specs.iter().map(LayerSpec::norms).collect::<Result<_>>()?)
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidDims(format!(
            "need at least two positive widths, got {dims:?}"
        )));
    }
    Ok(())
}

/// Layer scaling that makes the spectral oracle scale `max(1, √(d_out/d_in))`.
fn image_spectral_rho(d_out: usize, d_in: usize) -> f64 {
    let r = (d_out as f64 / d_in as f64).sqrt();
    r.max(1.0) / r
}

fn layer(
    kind: NormKind,
    d_out: usize,
    d_in: usize,
    rho: f64,
    activation: Activation,
    bias: bool,
) -> Result<LayerSpec> {
    let bias_norm = if bias {
        let bkind = if kind == NormKind::Sign {
            NormKind::MaxVec
        } else {
            NormKind::RmsVec
        };
        // Unit effective radius once the layer scaling is applied.
        Some(NormSpec::vector(bkind, 1.0 / rho, d_out)?)
    } else {
        None
    };
    Ok(LayerSpec {
        d_in,
        d_out,
        activation,
        init: InitScheme::boundary_for(kind),
        weight_norm: NormSpec::new(kind, 1.0, d_out, d_in)?,
        bias_norm,
        rho_scale: rho,
    })
}

fn assemble(
    dims: &[usize],
    activation: Activation,
    bias: bool,
    mut pick: impl FnMut(usize, usize, usize, bool) -> (NormKind, f64),
) -> Result<Vec<LayerSpec>> {
    check_dims(dims)?;
    let n = dims.len() - 1;
    let specs = (0..n)
        .map(|i| {
            let last = i + 1 == n;
            let (kind, rho) = pick(i, dims[i + 1], dims[i], last);
            let act = if last { Activation::Identity } else { activation };
            layer(kind, dims[i + 1], dims[i], rho, act, bias && !last)
        })
        .collect::<Result<Vec<_>>>()?;
    validate_specs(&specs)?;
    Ok(specs)
}

/// Recommended first, hidden and last layer norms for a domain. `dims` lists
/// widths from input to output; a single layer is treated as the last one.
pub fn build_config(
    domain: Domain,
    dims: &[usize],
    activation: Activation,
    bias: bool,
) -> Result<Vec<LayerSpec>> {
    assemble(dims, activation, bias, |i, d_out, d_in, last| {
        if last {
            (NormKind::Sign, 1.0 / d_in as f64)
        } else if i == 0 {
            match domain {
                Domain::Image => (NormKind::Spectral, image_spectral_rho(d_out, d_in)),
                Domain::OneHot => (NormKind::ColNorm, 1.0),
                Domain::WeightShared => (NormKind::Sign, 1.0),
            }
        } else {
            (NormKind::Spectral, 1.0)
        }
    })
}

/// One norm family on every layer, with the scalings that keep hidden
/// states bounded. `family` is Spectral, ColNorm, RowNorm or Sign.
pub fn same_norm_config(
    family: NormKind,
    input: InputKind,
    dims: &[usize],
    activation: Activation,
    bias: bool,
) -> Result<Vec<LayerSpec>> {
    if family.is_vector() {
        return Err(Error::InvalidDims(format!(
            "{} is not a matrix norm",
            family.name()
        )));
    }
    assemble(dims, activation, bias, |i, d_out, d_in, _| {
        let first = i == 0;
        let din = d_in as f64;
        let rho = match (family, first, input) {
            (NormKind::Spectral, true, InputKind::OneHot) => din.sqrt(),
            (NormKind::Spectral, true, InputKind::Image) => image_spectral_rho(d_out, d_in),
            (NormKind::Spectral, _, _) => 1.0,
            (NormKind::ColNorm, true, InputKind::OneHot) => 1.0,
            (NormKind::ColNorm, _, _) => 1.0 / din,
            (NormKind::RowNorm, true, InputKind::OneHot) => din.sqrt(),
            (NormKind::RowNorm, _, _) => 1.0,
            (NormKind::Sign, true, InputKind::OneHot) => 1.0,
            (_, _, _) => 1.0 / din,
        };
        (family, rho)
    })
}
