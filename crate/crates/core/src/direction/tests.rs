//! Loss, training, and sweep behavior on the toy stack.

use super::*;
use crate::autodiff::{gradient_check, Tensor};
use crate::rng::{normal_vec, stream, Stream};
use crate::toyworld::{SmoothColorfulness, ToyGenerator, ToyGeneratorConfig};
use rand::Rng;

fn tiny_generator() -> ToyGenerator {
    ToyGenerator::new(ToyGeneratorConfig {
        side: 12,
        blobs: 1,
        latent_dim: 4,
        n_classes: 4,
        ..ToyGeneratorConfig::default()
    })
    .unwrap()
}

fn toy_batch(generator: &ToyGenerator, model: &DirectionModel, n: usize, seed: u64, alpha: Option<f64>) -> Vec<Sample> {
    let mut rng = stream(seed, Stream::Other(40));
    let (ez, ey) = model.eps_dims();
    (0..n)
        .map(|_| {
            let z = normal_vec(&mut rng, generator.latent_dim());
            let mut y = vec![0.0; generator.n_classes()];
            y[rng.random_range(0..generator.n_classes())] = 1.0;
            let a = alpha.unwrap_or_else(|| rng.random_range(-0.5..0.5));
            Sample {
                z,
                y,
                alpha: a,
                eps_z: normal_vec(&mut rng, ez),
                eps_y: normal_vec(&mut rng, ey),
            }
        })
        .collect()
}

// Plain-f64 recomputation of the full toy loss: generator forward, smooth
// colorfulness, direction-net forward, squared gap. Shares nothing with the
// tensor path.
mod naive {
    use crate::toyworld::ToyGeneratorConfig;

    pub fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Planar [3, S, S] image values.
    pub fn generate(cfg: &ToyGeneratorConfig, z: &[f64], y: &[f64]) -> Vec<f64> {
        let s = cfg.side;
        let n = s * s;
        let palette = cfg.resolved_palette();
        let mut col = vec![0.0; 3 * cfg.blobs];
        for (j, yj) in y.iter().enumerate() {
            for k in 0..cfg.blobs {
                for c in 0..3 {
                    col[3 * k + c] += yj * palette[j][k][c];
                }
            }
        }
        let mut out = vec![0.0; 3 * n];
        for py in 0..s {
            for px in 0..s {
                let fx = (px as f64 + 0.5) / s as f64;
                let fy = (py as f64 + 0.5) / s as f64;
                for c in 0..3 {
                    let mut acc = 0.0;
                    for k in 0..cfg.blobs {
                        let cx = 0.5 * z[4 * k].tanh() + 0.5;
                        let cy = 0.5 * z[4 * k + 1].tanh() + 0.5;
                        let r = cfg.softness * (cfg.radius_exponent_scale * z[4 * k + 2]).exp();
                        let w = cfg.weight_scale * z[4 * k + 3].exp();
                        let d2 = (fx - cx).powi(2) + (fy - cy).powi(2);
                        acc += w * (-d2 / (2.0 * r * r)).exp() * col[3 * k + c];
                    }
                    out[c * n + py * s + px] = sigmoid(acc - cfg.bias);
                }
            }
        }
        out
    }

    /// Smooth colorfulness score of a planar image.
    pub fn score(image: &[f64], scale: f64, bias: f64, eps: f64) -> f64 {
        let n = image.len() / 3;
        let (r, g, b) = (&image[..n], &image[n..2 * n], &image[2 * n..]);
        let mut rg = Vec::with_capacity(n);
        let mut yb = Vec::with_capacity(n);
        for i in 0..n {
            rg.push(r[i] - g[i]);
            yb.push(0.5 * (r[i] + g[i]) - b[i]);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mean_sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64;
        let (m_rg, m_yb) = (mean(&rg), mean(&yb));
        let var_rg = mean_sq(&rg) - m_rg * m_rg;
        let var_yb = mean_sq(&yb) - m_yb * m_yb;
        let raw = (var_rg + var_yb + eps).sqrt() + 0.3 * (m_rg * m_rg + m_yb * m_yb + eps).sqrt();
        sigmoid(scale * raw + bias)
    }

    /// Two-layer net forward on the flat parameter layout.
    pub fn net_forward(
        params: &[f64],
        input_dim: usize,
        noise_dim: usize,
        hidden: usize,
        x: &[f64],
        eps: &[f64],
    ) -> Vec<f64> {
        let cat = input_dim + noise_dim;
        let w1 = &params[..hidden * cat];
        let b1 = &params[hidden * cat..hidden * cat + hidden];
        let w2 = &params[hidden * cat + hidden..hidden * cat + hidden + input_dim * hidden];
        let b2 = &params[hidden * cat + hidden + input_dim * hidden..];
        let mut joined = x.to_vec();
        joined.extend_from_slice(eps);
        let mut h = vec![0.0; hidden];
        for i in 0..hidden {
            let mut acc = b1[i];
            for j in 0..cat {
                acc += w1[i * cat + j] * joined[j];
            }
            h[i] = acc.tanh();
        }
        (0..input_dim)
            .map(|i| {
                let mut acc = b2[i];
                for j in 0..hidden {
                    acc += w2[i * hidden + j] * h[j];
                }
                acc
            })
            .collect()
    }
}

#[test]
fn all_alpha_zero_gives_zero_loss() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let mut rng = stream(1, Stream::Other(41));
    let net = DirectionNet::init(4, 4, 16, &mut rng);
    let batch = toy_batch(&generator, &DirectionModel::Noise(net.clone()), 6, 2, Some(0.0));
    let loss = loss_eq1(&net, &batch, &generator, &assessor, false).unwrap();
    assert!(loss < 1e-12, "loss = {loss}");
}

#[test]
fn zeroed_net_loss_is_mean_alpha_squared() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let net = DirectionNet::zeros(4, 4, 16);
    let batch = toy_batch(&generator, &DirectionModel::Noise(net.clone()), 8, 3, None);
    let loss = loss_eq1(&net, &batch, &generator, &assessor, false).unwrap();
    let expect: f64 =
        batch.iter().map(|s| s.alpha * s.alpha).sum::<f64>() / batch.len() as f64;
    assert!((loss - expect).abs() < 1e-12, "{loss} vs {expect}");
}

#[test]
fn eq1_matches_standalone_recomputation() {
    // Seed-0 toy batch, d_z = 4: the tensor-path loss must match the plain
    // f64 recomputation to < 1e-12.
    let generator = tiny_generator();
    let cfg = generator.config().clone();
    let assessor = SmoothColorfulness::default();
    let mut rng = stream(0, Stream::Other(42));
    let mut net = DirectionNet::init(4, 4, 8, &mut rng);
    let tail = normal_vec(&mut rng, net.n_params());
    // Give every layer nonzero weights.
    for (p, t) in net.params.iter_mut().zip(&tail) {
        *p += 0.3 * t;
    }
    let model = DirectionModel::Noise(net.clone());
    let batch = toy_batch(&generator, &model, 8, 0, None);

    let got = loss_eq1(&net, &batch, &generator, &assessor, false).unwrap();

    let mut acc = 0.0;
    for s in &batch {
        let original = naive::score(
            &naive::generate(&cfg, &s.z, &s.y),
            assessor.scale,
            assessor.bias,
            assessor.epsilon,
        );
        let nn = naive::net_forward(&net.params, 4, 4, 8, &s.z, &s.eps_z);
        let tz: Vec<f64> = s.z.iter().zip(&nn).map(|(z, n)| z + s.alpha * n).collect();
        let transformed = naive::score(
            &naive::generate(&cfg, &tz, &s.y),
            assessor.scale,
            assessor.bias,
            assessor.epsilon,
        );
        let gap = transformed - (original + s.alpha);
        acc += gap * gap;
    }
    let expect = acc / batch.len() as f64;
    assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
}

#[test]
fn eq2_matches_standalone_recomputation_and_degenerates_to_eq1() {
    let generator = tiny_generator();
    let cfg = generator.config().clone();
    let assessor = SmoothColorfulness::default();
    let mut rng = stream(0, Stream::Other(43));
    let mut z_net = DirectionNet::init(4, 4, 8, &mut rng);
    let bump = normal_vec(&mut rng, z_net.n_params());
    for (p, t) in z_net.params.iter_mut().zip(&bump) {
        *p += 0.3 * t;
    }
    let y_net_zero = DirectionNet::zeros(4, 4, 8);
    let model =
        DirectionModel::Joint { z_net: z_net.clone(), y_net: y_net_zero.clone() };
    let batch = toy_batch(&generator, &model, 8, 0, None);

    // y-net zeroed: eq2 equals eq1 on the same batch.
    let eq2 = loss_eq2(&z_net, &y_net_zero, &batch, &generator, &assessor, false).unwrap();
    let eq1 = loss_eq1(&z_net, &batch, &generator, &assessor, false).unwrap();
    assert!((eq2 - eq1).abs() < 1e-12, "{eq2} vs {eq1}");

    // Nonzero y-net: compare against the plain recomputation.
    let mut y_net = DirectionNet::init(4, 4, 8, &mut rng);
    let bump = normal_vec(&mut rng, y_net.n_params());
    for (p, t) in y_net.params.iter_mut().zip(&bump) {
        *p += 0.2 * t;
    }
    let got = loss_eq2(&z_net, &y_net, &batch, &generator, &assessor, false).unwrap();
    let mut acc = 0.0;
    for s in &batch {
        let original = naive::score(
            &naive::generate(&cfg, &s.z, &s.y),
            assessor.scale,
            assessor.bias,
            assessor.epsilon,
        );
        let nn_z = naive::net_forward(&z_net.params, 4, 4, 8, &s.z, &s.eps_z);
        let nn_y = naive::net_forward(&y_net.params, 4, 4, 8, &s.y, &s.eps_y);
        let tz: Vec<f64> = s.z.iter().zip(&nn_z).map(|(z, n)| z + s.alpha * n).collect();
        let ty: Vec<f64> = s.y.iter().zip(&nn_y).map(|(y, n)| y + s.alpha * n).collect();
        let transformed = naive::score(
            &naive::generate(&cfg, &tz, &ty),
            assessor.scale,
            assessor.bias,
            assessor.epsilon,
        );
        let gap = transformed - (original + s.alpha);
        acc += gap * gap;
    }
    let expect = acc / batch.len() as f64;
    assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");

    // Both nets zeroed: loss = mean(alpha^2).
    let zz = DirectionNet::zeros(4, 4, 8);
    let both_zero = loss_eq2(&zz, &zz.clone(), &batch, &generator, &assessor, false).unwrap();
    let ms_alpha: f64 = batch.iter().map(|s| s.alpha * s.alpha).sum::<f64>() / batch.len() as f64;
    assert!((both_zero - ms_alpha).abs() < 1e-12);
}

#[test]
fn target_score_arithmetic_and_clamp() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let mut rng = stream(9, Stream::Other(44));
    let z = Tensor::from_vec(normal_vec(&mut rng, 4)).unwrap();
    let y = Tensor::from_vec(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let base = target_score(&assessor, &generator, &z, &y, 0.0, false).unwrap();
    let up = target_score(&assessor, &generator, &z, &y, 0.3, false).unwrap();
    assert!((up - base - 0.3).abs() < 1e-12);
    let clamped = target_score(&assessor, &generator, &z, &y, 0.9, true).unwrap();
    assert!((clamped - (base + 0.9).min(1.0)).abs() < 1e-12);
    assert!(clamped <= 1.0);
}

#[test]
fn loss_gradients_check_against_finite_differences() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let mut rng = stream(5, Stream::Other(45));
    let mut net = DirectionNet::init(4, 4, 6, &mut rng);
    let bump = normal_vec(&mut rng, net.n_params());
    for (p, t) in net.params.iter_mut().zip(&bump) {
        *p += 0.3 * t;
    }
    let model = DirectionModel::Noise(net.clone());
    let batch = toy_batch(&generator, &model, 3, 6, None);
    let params0 = Tensor::from_vec(model.params_flat()).unwrap();
    let err = gradient_check(
        |p| {
            model
                .batch_loss(p, &batch, &generator, &assessor, false)
                .map_err(|_| crate::autodiff::AdError::NonFinite { op: "loss" })
        },
        &params0,
        1e-6,
    )
    .unwrap();
    assert!(err < 1e-5, "err = {err}");
}

#[test]
fn training_decreases_held_out_loss_and_is_deterministic() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let config = TrainConfig { iterations: 400, seed: 0, ..TrainConfig::default() };
    let mut rng = stream(config.seed, Stream::WeightInit);
    let model = DirectionModel::init(ModelKind::Noise, 4, 4, None, 16, &mut rng);

    // Fixed evaluation batch isolates progress from batch-sampling noise.
    let eval_batch = toy_batch(&generator, &model, 16, 99, None);
    let eval_loss = |m: &DirectionModel| {
        let params = Tensor::from_vec(m.params_flat()).unwrap();
        m.batch_loss(&params, &eval_batch, &generator, &assessor, false)
            .unwrap()
            .item()
            .unwrap()
    };
    let before = eval_loss(&model);

    let out1 = train_direction(model.clone(), &generator, &assessor, &config).unwrap();
    let out2 = train_direction(model, &generator, &assessor, &config).unwrap();

    // Same seed twice: bit-identical loss traces.
    assert_eq!(out1.loss_trace.len(), 400);
    assert!(out1
        .loss_trace
        .iter()
        .zip(&out2.loss_trace)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_eq!(out1.model.params_flat(), out2.model.params_flat());

    let after = eval_loss(&out1.model);
    assert!(after < before, "held-out loss {before} -> {after}");
}

#[test]
fn training_rejects_non_differentiable_assessor() {
    struct Opaque;
    impl Assessor for Opaque {
        fn name(&self) -> &str {
            "opaque"
        }
        fn score_image(&self, _: &crate::metrics::Image) -> Result<f64, DirectionError> {
            Ok(0.5)
        }
    }
    let generator = tiny_generator();
    let mut rng = stream(0, Stream::WeightInit);
    let model = DirectionModel::init(ModelKind::Noise, 4, 4, None, 8, &mut rng);
    let err = train_direction(model, &generator, &Opaque, &TrainConfig::default());
    assert!(matches!(err, Err(DirectionError::NotDifferentiable(_))));
}

#[test]
fn fixed_direction_stays_unit_norm_during_training() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let config = TrainConfig { iterations: 25, seed: 3, ..TrainConfig::default() };
    let mut rng = stream(config.seed, Stream::WeightInit);
    let model = DirectionModel::init(ModelKind::Fixed, 4, 4, None, 0, &mut rng);
    let out = train_direction(model, &generator, &assessor, &config).unwrap();
    let DirectionModel::Fixed(f) = &out.model else { panic!("kind preserved") };
    let norm = f.theta.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12, "norm = {norm}");
}

#[test]
fn sweep_identity_rows_and_flat_curve_for_zero_model() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let model = DirectionModel::Noise(DirectionNet::zeros(4, 4, 16));
    let samples = SweepSample::sample_set(6, 4, 4, model.eps_dims(), 11);
    let grid = default_alpha_grid();
    let report =
        alpha_sweep(&model, &samples, &grid, &generator, &assessor, 0.5, None).unwrap();

    assert_eq!(report.alpha_grid.len(), 11);

    // Row at alpha = 0 reproduces the unmodified images' mean score exactly.
    let mut direct = 0.0;
    for s in &samples {
        let z = Tensor::from_vec(s.z.clone()).unwrap();
        let y = Tensor::from_vec(s.y.clone()).unwrap();
        let img = tensor_to_image(&generator.generate(&z, &y).unwrap()).unwrap();
        direct += assessor.score_image(&img).unwrap();
    }
    direct /= samples.len() as f64;
    let at_zero = report.score_mean(0.0).unwrap();
    assert_eq!(at_zero.to_bits(), direct.to_bits(), "alpha = 0 is bit-identical");

    // Zero model: every row equals the alpha = 0 row.
    for (i, _alpha) in grid.iter().enumerate() {
        assert_eq!(report.score[i].0.to_bits(), at_zero.to_bits());
    }
}

#[test]
fn sweep_is_thread_count_invariant() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let mut rng = stream(2, Stream::WeightInit);
    let model = DirectionModel::init(ModelKind::Noise, 4, 4, None, 8, &mut rng);
    let samples = SweepSample::sample_set(5, 4, 4, model.eps_dims(), 3);
    let grid = vec![-0.5, 0.0, 0.5];

    let run_with = |threads: &str| {
        std::env::set_var("LATENT_STEER_THREADS", threads);
        let r = alpha_sweep(&model, &samples, &grid, &generator, &assessor, 0.5, None).unwrap();
        std::env::remove_var("LATENT_STEER_THREADS");
        r.to_csv()
    };
    let single = run_with("1");
    let multi = run_with("4");
    assert_eq!(single, multi);
}

#[test]
fn empty_z_set_is_an_error() {
    let generator = tiny_generator();
    let assessor = SmoothColorfulness::default();
    let model = DirectionModel::Noise(DirectionNet::zeros(4, 4, 8));
    let err = alpha_sweep(&model, &[], &default_alpha_grid(), &generator, &assessor, 0.5, None);
    assert!(matches!(err, Err(DirectionError::EmptyZSet)));
}
