use proptest::prelude::*;
use scion_core::linalg::{svd_reduced, Matrix, Rng};
use scion_core::models::checkpoint;
use scion_core::models::*;
use scion_core::norms::{composite_norm, op_norm, vec_norm, NormKind, NormSpec, VecNorm};

fn identity_layer(d: usize, act: Activation) -> LayerSpec {
    LayerSpec {
        d_in: d,
        d_out: d,
        activation: act,
        init: InitScheme::SemiOrthogonal,
        weight_norm: NormSpec::new(NormKind::Spectral, 1.0, d, d).unwrap(),
        bias_norm: None,
        rho_scale: 1.0,
    }
}

fn with_identity_weights(specs: Vec<LayerSpec>) -> MlpModel {
    let mut m = MlpModel::init(&specs, 0).unwrap();
    for w in &mut m.weights {
        *w = Matrix::identity(w.rows());
    }
    m
}

#[test]
fn forward_examples() {
    let m = with_identity_weights(vec![identity_layer(2, Activation::Identity)]);
    assert_eq!(m.forward(&[1.0, -1.0]).unwrap().0, vec![1.0, -1.0]);

    let m = with_identity_weights(vec![
        identity_layer(2, Activation::Relu),
        identity_layer(2, Activation::Identity),
    ]);
    let (out, cache) = m.forward(&[1.0, -1.0]).unwrap();
    assert_eq!(out, vec![1.0, 0.0]);
    assert_eq!(cache.pre.len(), 2);
    assert_eq!(cache.post.len(), 3);

    let m = with_identity_weights(vec![
        identity_layer(1, Activation::ScaledRelu2),
        identity_layer(1, Activation::Identity),
    ]);
    assert_eq!(m.forward(&[2.0]).unwrap().0, vec![8.0]);
    assert!(m.forward(&[1.0, 2.0]).is_err());
}

#[test]
fn single_sample_weight_gradients_are_rank_one() {
    let specs = build_config(Domain::Image, &[6, 10, 8, 3], Activation::Tanh, false).unwrap();
    let m = MlpModel::init(&specs, 4).unwrap();
    let mut rng = Rng::new(1);
    let batch = Batch {
        inputs: rng.gaussian_matrix(1, 6),
        targets: Targets::Classes(vec![2]),
    };
    let (_, grads) = m.loss_and_grad(&batch, Loss::Logistic).unwrap();
    for g in &grads {
        let s = svd_reduced(g).unwrap();
        let ratio = s.sigma.get(1).copied().unwrap_or(0.0) / s.sigma[0];
        assert!(ratio <= 1e-10, "ratio {ratio}");
    }
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let specs = build_config(Domain::Image, &[4, 5, 2], Activation::Relu, true).unwrap();
    let m = MlpModel::init(&specs, 2).unwrap();
    let x = Rng::new(2).gaussian_matrix(3, 4);
    let cache = m.forward_batch(&x).unwrap();
    let grads = m.backward(&cache, &Matrix::zeros(3, 2)).unwrap();
    assert!(grads.iter().all(Matrix::is_zero));
    assert_eq!(grads.len(), 3);
}

/// Central-difference roundoff is about `eps * |loss| / h`, roughly 1e-10
/// here, so relative errors are measured against at least this magnitude.
const FLOOR: f64 = 1e-4;

fn fd_max_rel_error(act: Activation, loss: Loss, seed: u64) -> f64 {
    let specs = build_config(Domain::Image, &[8, 8, 4, 2], act, true).unwrap();
    let mut m = MlpModel::init(&specs, seed).unwrap();
    let mut rng = Rng::new(seed + 100);
    // Nonzero biases so their gradients are exercised away from init.
    let mut params = m.params();
    for p in &mut params {
        if p.cols() == 1 {
            *p = rng.gaussian_matrix(p.rows(), 1).scale(0.1);
        }
    }
    m.set_params(&params).unwrap();
    let inputs = rng.gaussian_matrix(5, 8);
    let targets = match loss {
        Loss::Mse => Targets::Values(rng.gaussian_matrix(5, 2)),
        Loss::Logistic => Targets::Classes((0..5).map(|i| i % 2).collect()),
    };
    let batch = Batch { inputs, targets };
    let (_, grads) = m.loss_and_grad(&batch, loss).unwrap();
    let mut worst = 0.0f64;
    for (pi, g) in grads.iter().enumerate() {
        for idx in 0..g.len() {
            let x0 = params[pi].as_slice()[idx];
            let h = f64::EPSILON.cbrt() * x0.abs().max(1.0);
            let eval = |v: f64| {
                let mut p = params.clone();
                p[pi].as_mut_slice()[idx] = v;
                let mut mm = m.clone();
                mm.set_params(&p).unwrap();
                mm.loss(&batch, loss).unwrap()
            };
            let fd = (eval(x0 + h) - eval(x0 - h)) / (2.0 * h);
            let an = g.as_slice()[idx];
            let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(FLOOR);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn backprop_matches_finite_differences() {
    for act in Activation::ALL {
        for loss in [Loss::Mse, Loss::Logistic] {
            let err = fd_max_rel_error(act, loss, 7);
            assert!(err <= 1e-5, "{act:?} {loss:?}: {err}");
        }
    }
}

#[test]
fn loss_examples() {
    let specs = build_config(Domain::Image, &[3, 4, 2], Activation::Tanh, false).unwrap();
    let m = MlpModel::init(&specs, 3).unwrap();
    let x = Rng::new(3).gaussian_matrix(4, 3);
    let logits = m.forward_batch(&x).unwrap().logits().clone();
    let batch = Batch {
        inputs: x.clone(),
        targets: Targets::Values(logits),
    };
    let (l, g) = m.loss_and_grad(&batch, Loss::Mse).unwrap();
    assert_eq!(l, 0.0);
    assert!(g.iter().all(Matrix::is_zero));

    let (l, _) = loss_at_logits(&Matrix::zeros(3, 2), &Targets::Classes(vec![0, 1, 1]), Loss::Logistic).unwrap();
    assert!((l - 2f64.ln()).abs() < 1e-15);

    let cls = Batch {
        inputs: x.clone(),
        targets: Targets::Classes(vec![0, 1, 1, 0]),
    };
    let doubled = cls.select(&[0, 1, 2, 3, 0, 1, 2, 3]);
    let (l1, g1) = m.loss_and_grad(&cls, Loss::Logistic).unwrap();
    let (l2, g2) = m.loss_and_grad(&doubled, Loss::Logistic).unwrap();
    assert!((l1 - l2).abs() < 1e-15);
    for (a, b) in g1.iter().zip(&g2) {
        assert!(a.max_abs_diff(b) < 1e-15);
    }

    assert!(loss_at_logits(&Matrix::zeros(3, 2), &Targets::Classes(vec![0]), Loss::Logistic).is_err());
    assert!(loss_at_logits(&Matrix::zeros(3, 2), &Targets::Classes(vec![0, 1, 1]), Loss::Mse).is_err());
}

#[test]
fn init_examples() {
    let specs = same_norm_config(NormKind::Spectral, InputKind::Image, &[128, 128, 128], Activation::Relu, false).unwrap();
    let m = MlpModel::init(&specs, 0).unwrap();
    let op = op_norm(&m.weights[1], &specs[1].weight_norm).unwrap();
    assert!((op - 1.0).abs() < 1e-8);

    let specs = build_config(Domain::Image, &[16, 256, 10], Activation::Relu, false).unwrap();
    let m = MlpModel::init(&specs, 0).unwrap();
    assert_eq!(m.weights[1].max_abs(), 1.0 / 256.0);
    assert!(m.weights[1].as_slice().iter().all(|v| v.abs() == 1.0 / 256.0));

    let specs = build_config(Domain::OneHot, &[10, 64, 5], Activation::Relu, false).unwrap();
    let m = MlpModel::init(&specs, 0).unwrap();
    assert!(m.weights[0].col_norms().iter().all(|n| (n - 8.0).abs() < 1e-10));
}

#[test]
fn kaiming_has_expected_variance() {
    let mut spec = build_config(Domain::Image, &[400, 300, 2], Activation::Relu, false).unwrap();
    spec[0].init = InitScheme::Kaiming;
    let m = MlpModel::init(&spec, 5).unwrap();
    let w = &m.weights[0];
    let var = w.dot(w) / w.len() as f64;
    assert!((var * 400.0 - 1.0).abs() < 0.02, "{var}");
}

#[test]
fn boundary_init_is_on_the_unit_sphere() {
    let dims = [12, 24, 24, 6];
    let mut all = Vec::new();
    for d in [Domain::Image, Domain::OneHot, Domain::WeightShared] {
        all.push(build_config(d, &dims, Activation::Relu, true).unwrap());
    }
    for fam in [NormKind::Spectral, NormKind::ColNorm, NormKind::RowNorm, NormKind::Sign] {
        for input in [InputKind::Image, InputKind::OneHot] {
            all.push(same_norm_config(fam, input, &dims, Activation::Relu, false).unwrap());
        }
    }
    for specs in all {
        for seed in 0..3 {
            let m = MlpModel::init(&specs, seed).unwrap();
            let spec = m.norm_spec().unwrap();
            let weights_only: Vec<Matrix> = m.params();
            let n = composite_norm(&weights_only, &spec).unwrap();
            assert!((n - 1.0).abs() < 1e-8, "{n}");
        }
    }
}

#[test]
fn init_is_deterministic() {
    let specs = build_config(Domain::Image, &[5, 7, 3], Activation::Relu, false).unwrap();
    assert_eq!(MlpModel::init(&specs, 9).unwrap(), MlpModel::init(&specs, 9).unwrap());
    assert_ne!(MlpModel::init(&specs, 9).unwrap(), MlpModel::init(&specs, 10).unwrap());
}

#[test]
fn checkpoint_round_trip() {
    let specs = build_config(Domain::OneHot, &[6, 9, 9, 4], Activation::ScaledGelu, true).unwrap();
    let mut m = MlpModel::init(&specs, 11).unwrap();
    let mut rng = Rng::new(4);
    let p: Vec<Matrix> = m.params().iter().map(|p| rng.gaussian_matrix(p.rows(), p.cols())).collect();
    m.set_params(&p).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    checkpoint::save(&m, &path).unwrap();
    let back = checkpoint::load(&path).unwrap();
    assert_eq!(back, m);

    let bytes = checkpoint::to_bytes(&m).unwrap();
    let err = checkpoint::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err();
    assert!(err.to_string().contains("truncated"), "{err}");
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(checkpoint::from_bytes(&bad).unwrap_err().to_string().contains("magic"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hidden_states_stay_rms_bounded(seed in any::<u64>(), tanh in any::<bool>()) {
        let mut rng = Rng::new(seed);
        let d0 = 2 + rng.below(8);
        let dims = [d0, d0 + rng.below(16), 4 + rng.below(20), 1 + rng.below(8)];
        let act = if tanh { Activation::Tanh } else { Activation::Relu };
        let specs = same_norm_config(NormKind::Spectral, InputKind::Image, &dims, act, false).unwrap();
        let mut m = MlpModel::init(&specs, seed).unwrap();
        let spec = m.norm_spec().unwrap();
        // Random weights pushed inside the ball at a random composite norm.
        let raw: Vec<Matrix> = m.params().iter().map(|p| rng.gaussian_matrix(p.rows(), p.cols())).collect();
        let n = composite_norm(&raw, &spec).unwrap();
        let target = rng.uniform();
        m.set_params(&raw.iter().map(|p| p.scale(target / n)).collect::<Vec<_>>()).unwrap();
        let mut z = rng.gaussian_matrix(1, d0);
        let rms = vec_norm(z.as_slice(), VecNorm::Rms).unwrap();
        z.scale_in_place(rng.uniform() / rms);
        let cache = m.forward_batch(&z).unwrap();
        for h in &cache.post {
            prop_assert!(vec_norm(h.as_slice(), VecNorm::Rms).unwrap() <= 1.0 + 1e-8);
        }
    }
}



