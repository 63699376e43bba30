//! Dense MLP with batched forward and reverse passes.
//!
//! Batches are stored sample-major: a batch of `B` inputs is a `B x d_in`
//! matrix. Weights are `d_out x d_in` and biases `d_out x 1`.

use serde::{Deserialize, Serialize};

use super::config::{model_norm_spec, validate_specs, InitScheme, LayerSpec};
use crate::error::{Error, Result};
use crate::linalg::{semi_orthogonal_from, Matrix, Rng};
use crate::norms::ModelNormSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<LayerSpec>,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Option<Matrix>>,
}

/// Preactivations `f^(ℓ)` and activations `h^(ℓ)`, one `B x d` matrix per
/// layer. `post[0]` is the input itself.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl ForwardCache {
    pub fn logits(&self) -> &Matrix {
        self.post.last().expect("cache holds the input")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `½‖f - y‖²` per sample.
    Mse,
    /// Softmax cross-entropy against a class index.
    Logistic,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Values(Matrix),
    Classes(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: Matrix,
    pub targets: Targets,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    /// Rows `idx` of this batch, in the given order.
    pub fn select(&self, idx: &[usize]) -> Batch {
        let d = self.inputs.cols();
        let mut data = Vec::with_capacity(idx.len() * d);
        for &i in idx {
            data.extend_from_slice(self.inputs.row(i));
        }
        let inputs = Matrix::from_vec(idx.len(), d, data).expect("rows of a valid matrix");
        let targets = match &self.targets {
            Targets::Values(y) => {
                let mut data = Vec::with_capacity(idx.len() * y.cols());
                for &i in idx {
                    data.extend_from_slice(y.row(i));
                }
                Targets::Values(Matrix::from_vec(idx.len(), y.cols(), data).expect("valid rows"))
            }
            Targets::Classes(c) => Targets::Classes(idx.iter().map(|&i| c[i]).collect()),
        };
        Batch { inputs, targets }
    }
}

fn draw_weight(rng: &mut Rng, spec: &LayerSpec) -> Matrix {
    let (m, n) = (spec.d_out, spec.d_in);
    let scale = spec.lmo_scale();
    let unit = match spec.init {
        InitScheme::SemiOrthogonal => semi_orthogonal_from(rng, m, n),
        InitScheme::ColNormalizedGaussian => {
            let mut g = rng.gaussian_matrix(m, n);
            let norms = g.col_norms();
            for i in 0..m {
                for (v, nj) in g.row_mut(i).iter_mut().zip(&norms) {
                    *v /= nj;
                }
            }
            g
        }
        InitScheme::RowNormalizedGaussian => {
            let mut g = rng.gaussian_matrix(m, n);
            for i in 0..m {
                let r = g.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
                g.row_mut(i).iter_mut().for_each(|v| *v /= r);
            }
            g
        }
        InitScheme::RandomSign => rng.rademacher_matrix(m, n),
        InitScheme::Kaiming => return rng.gaussian_matrix(m, n).scale(1.0 / (n as f64).sqrt()),
    };
    unit.scale(scale)
}

impl MlpModel {
    /// Weights from each layer's scheme, scaled by its oracle scaling, so the
    /// boundary schemes start with composite norm 1. Biases start at zero.
    pub fn init(specs: &[LayerSpec], seed: u64) -> Result<Self> {
        validate_specs(specs)?;
        let weights = specs
            .iter()
            .enumerate()
            .map(|(i, s)| draw_weight(&mut Rng::with_stream(seed, i as u64), s))
            .collect();
        let biases = specs
            .iter()
            .map(|s| s.bias_norm.map(|_| Matrix::zeros(s.d_out, 1)))
            .collect();
        Ok(Self {
            layers: specs.to_vec(),
            weights,
            biases,
        })
    }

    pub fn d_in(&self) -> usize {
        self.layers[0].d_in
    }

    pub fn d_out(&self) -> usize {
        self.layers.last().map_or(0, |l| l.d_out)
    }

    pub fn norm_spec(&self) -> Result<ModelNormSpec> {
        model_norm_spec(&self.layers)
    }

    /// Flat parameter list `W_1, b_1, W_2, ...`, biases only where present.
    pub fn params(&self) -> Vec<Matrix> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.clone());
            if let Some(b) = b {
                out.push(b.clone());
            }
        }
        out
    }

    pub fn set_params(&mut self, params: &[Matrix]) -> Result<()> {
        let expected = self.weights.len() + self.biases.iter().flatten().count();
        if params.len() != expected {
            return Err(Error::Misaligned {
                expected,
                found: params.len(),
            });
        }
        let mut it = params.iter();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let next = it.next().expect("length checked");
            check_same(w, next)?;
            *w = next.clone();
            if let Some(b) = b {
                let next = it.next().expect("length checked");
                check_same(b, next)?;
                *b = next.clone();
            }
        }
        Ok(())
    }

    pub fn forward_batch(&self, inputs: &Matrix) -> Result<ForwardCache> {
        if inputs.cols() != self.d_in() {
            return Err(Error::ShapeMismatch {
                expected_rows: inputs.rows(),
                expected_cols: self.d_in(),
                rows: inputs.rows(),
                cols: inputs.cols(),
            });
        }
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        post.push(inputs.clone());
        for ((spec, w), b) in self.layers.iter().zip(&self.weights).zip(&self.biases) {
            let mut f = post.last().expect("nonempty").matmul_t(w);
            if let Some(b) = b {
                for i in 0..f.rows() {
                    for (v, bj) in f.row_mut(i).iter_mut().zip(b.as_slice()) {
                        *v += bj;
                    }
                }
            }
            let act = spec.activation;
            post.push(f.map(|v| act.apply(v)));
            pre.push(f);
        }
        Ok(ForwardCache { pre, post })
    }

    /// Single-sample forward pass.
    pub fn forward(&self, z: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if z.len() != self.d_in() {
            return Err(Error::LengthMismatch {
                rows: 1,
                cols: self.d_in(),
                len: z.len(),
            });
        }
        let cache = self.forward_batch(&Matrix::from_vec(1, z.len(), z.to_vec())?)?;
        Ok((cache.logits().row(0).to_vec(), cache))
    }

    /// Reverse pass from `dL/d logits` (`B x d_out`). Returns gradients in
    /// [`params`](Self::params) order; the batch rows are summed.
    pub fn backward(&self, cache: &ForwardCache, logits_grad: &Matrix) -> Result<Vec<Matrix>> {
        let out = cache.logits();
        if !logits_grad.same_shape(out) {
            return Err(Error::ShapeMismatch {
                expected_rows: out.rows(),
                expected_cols: out.cols(),
                rows: logits_grad.rows(),
                cols: logits_grad.cols(),
            });
        }
        let n = self.layers.len();
        let mut grads_w = vec![Matrix::zeros(0, 0); n];
        let mut grads_b: Vec<Option<Matrix>> = vec![None; n];
        let mut upstream = logits_grad.clone();
        for l in (0..n).rev() {
            let act = self.layers[l].activation;
            let delta = cache.pre[l].zip_map(&upstream, |f, u| act.derivative(f) * u);
            grads_w[l] = delta.t_matmul(&cache.post[l]);
            if self.biases[l].is_some() {
                let mut gb = vec![0.0; delta.cols()];
                for i in 0..delta.rows() {
                    for (s, v) in gb.iter_mut().zip(delta.row(i)) {
                        *s += v;
                    }
                }
                grads_b[l] = Some(Matrix::column(&gb));
            }
            if l > 0 {
                upstream = delta.matmul(&self.weights[l]);
            }
        }
        let mut out = Vec::with_capacity(2 * n);
        for (w, b) in grads_w.into_iter().zip(grads_b) {
            out.push(w);
            if let Some(b) = b {
                out.push(b);
            }
        }
        Ok(out)
    }

    /// Mean loss over the batch and its gradient.
    pub fn loss_and_grad(&self, batch: &Batch, loss: Loss) -> Result<(f64, Vec<Matrix>)> {
        let cache = self.forward_batch(&batch.inputs)?;
        let (value, dlogits) = loss_at_logits(cache.logits(), &batch.targets, loss)?;
        let grads = self.backward(&cache, &dlogits)?;
        Ok((value, grads))
    }

    pub fn loss(&self, batch: &Batch, loss: Loss) -> Result<f64> {
        let cache = self.forward_batch(&batch.inputs)?;
        Ok(loss_at_logits(cache.logits(), &batch.targets, loss)?.0)
    }

    /// Fraction of rows whose largest logit is the labelled class.
    pub fn accuracy(&self, inputs: &Matrix, classes: &[usize]) -> Result<f64> {
        let cache = self.forward_batch(inputs)?;
        let logits = cache.logits();
        let hits = (0..logits.rows())
            .filter(|&i| argmax(logits.row(i)) == classes[i])
            .count();
        Ok(hits as f64 / logits.rows().max(1) as f64)
    }
}

fn check_same(a: &Matrix, b: &Matrix) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch {
            expected_rows: a.rows(),
            expected_cols: a.cols(),
            rows: b.rows(),
            cols: b.cols(),
        });
    }
    Ok(())
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Batch-mean loss and its gradient with respect to the logits.
pub fn loss_at_logits(logits: &Matrix, targets: &Targets, loss: Loss) -> Result<(f64, Matrix)> {
    let b = logits.rows();
    if b == 0 {
        return Err(Error::EmptyVector);
    }
    let inv = 1.0 / b as f64;
    match (loss, targets) {
        (Loss::Mse, Targets::Values(y)) => {
            check_same(logits, y)?;
            let diff = logits.sub(y);
            let value = 0.5 * inv * diff.dot(&diff);
            Ok((value, diff.scale(inv)))
        }
        (Loss::Logistic, Targets::Classes(c)) => {
            if c.len() != b {
                return Err(Error::LengthMismatch {
                    rows: b,
                    cols: 1,
                    len: c.len(),
                });
            }
            let k = logits.cols();
            let mut grad = Matrix::zeros(b, k);
            let mut total = 0.0;
            for (i, &label) in c.iter().enumerate() {
                if label >= k {
                    return Err(Error::Format(format!(
                        "label {label} at row {i} exceeds {k} classes"
                    )));
                }
                let row = logits.row(i);
                let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = row.iter().map(|v| (v - m).exp()).sum();
                let lse = m + z.ln();
                total += lse - row[label];
                for (g, v) in grad.row_mut(i).iter_mut().zip(row) {
                    *g = inv * (v - lse).exp();
                }
                grad[(i, label)] -= inv;
            }
            Ok((total * inv, grad))
        }
        _ => Err(Error::Format(
            "mse needs value targets, logistic needs class targets".into(),
        )),
    }
}
