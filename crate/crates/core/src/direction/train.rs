//! The training loop: per-iteration batch sampling, backward pass, optimizer
//! step, loss trace.

use rand::Rng;

use super::loss::Sample;
use super::model::{normalize, DirectionModel};
use super::{Assessor, DirectionError, Generator};
use crate::autodiff::{Tape, Tensor};
use crate::optim::{OptimConfig, Optimizer};
use crate::rng::{normal_vec, stream, Stream};

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct TrainConfig {
    /// Desk default 5000; the paper-scale 400000 is selectable.
    pub iterations: usize,
    pub batch_size: usize,
    /// Training alphas are drawn from Uniform(alpha_low, alpha_high); the
    /// 11-point grid is reserved for evaluation.
    pub alpha_low: f64,
    pub alpha_high: f64,
    /// Clip targets to [0, 1]. Off by default: the objective as printed has
    /// no clamp.
    pub clamp_targets: bool,
    /// Renormalize a fixed direction to unit norm after every step.
    pub normalize_direction: bool,
    pub optimizer: OptimConfig,
    pub seed: u64,
    /// Where to drop a diagnostic checkpoint if the loss goes non-finite.
    #[serde(skip)]
    pub checkpoint_dir: Option<std::path::PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 5000,
            batch_size: 8,
            alpha_low: -0.5,
            alpha_high: 0.5,
            clamp_targets: false,
            normalize_direction: true,
            optimizer: OptimConfig::default(),
            seed: 0,
            checkpoint_dir: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: DirectionModel,
    /// One loss value per iteration.
    pub loss_trace: Vec<f64>,
}

/// Draws one training batch: z ~ N(0,1)^d, one-hot y, alpha ~ U(low, high),
/// eps ~ N(0,1) per net input.
fn sample_batch<R: Rng>(
    rng: &mut R,
    model: &DirectionModel,
    generator: &dyn Generator,
    config: &TrainConfig,
) -> Vec<Sample> {
    let d_z = generator.latent_dim();
    let n_classes = generator.n_classes();
    let (eps_z_dim, eps_y_dim) = model.eps_dims();
    (0..config.batch_size)
        .map(|_| {
            let z = normal_vec(rng, d_z);
            let mut y = vec![0.0; n_classes];
            y[rng.random_range(0..n_classes)] = 1.0;
            let alpha = rng.random_range(config.alpha_low..config.alpha_high);
            let eps_z = normal_vec(rng, eps_z_dim);
            let eps_y = normal_vec(rng, eps_y_dim);
            Sample { z, y, alpha, eps_z, eps_y }
        })
        .collect()
}

/// Trains a direction model. Deterministic given the config seed; a
/// non-finite loss aborts with [`DirectionError::Diverged`] after handing the
/// partly trained model back through the error path's diagnostic checkpoint
/// (written by the pipeline layer).
pub fn train_direction(
    mut model: DirectionModel,
    generator: &dyn Generator,
    assessor: &dyn Assessor,
    config: &TrainConfig,
) -> Result<TrainOutcome, DirectionError> {
    if !assessor.differentiable() {
        return Err(DirectionError::NotDifferentiable(assessor.name().to_string()));
    }
    if generator.latent_dim() == 0 {
        return Err(DirectionError::DimMismatch("latent_dim = 0".into()));
    }

    let mut rng = stream(config.seed, Stream::TrainBatch);
    let mut params = model.params_flat();
    let mut optimizer = Optimizer::new(&config.optimizer, params.len());
    let mut loss_trace = Vec::with_capacity(config.iterations);

    let diverge = |iteration: usize,
                       model: &mut DirectionModel,
                       params: &[f64],
                       trace: &[f64]|
     -> DirectionError {
        if model.set_params(params).is_ok() {
            if let Some(dir) = &config.checkpoint_dir {
                let _ = write_checkpoint(dir, model, trace, iteration);
            }
        }
        DirectionError::Diverged { iteration }
    };

    for iteration in 0..config.iterations {
        let batch = sample_batch(&mut rng, &model, generator, config);

        let tape = Tape::new();
        let tracked = tape.leaf(&Tensor::from_vec(params.clone())?);
        let loss =
            match model.batch_loss(&tracked, &batch, generator, assessor, config.clamp_targets) {
                Ok(loss) => loss,
                Err(DirectionError::Ad(crate::autodiff::AdError::NonFinite { .. })) => {
                    return Err(diverge(iteration, &mut model, &params, &loss_trace));
                }
                Err(e) => return Err(e),
            };
        let loss_value = loss.item()?;
        if !loss_value.is_finite() {
            return Err(diverge(iteration, &mut model, &params, &loss_trace));
        }
        loss_trace.push(loss_value);

        let grads = loss.backward()?;
        let grad = grads.wrt(&tracked)?;
        optimizer.step(&mut params, grad.data())?;

        if config.normalize_direction {
            if let DirectionModel::Fixed(_) = model {
                normalize(&mut params);
            }
        }
    }

    model.set_params(&params)?;
    Ok(TrainOutcome { model, loss_trace })
}

/// Diagnostic checkpoint on divergence: last finite parameters plus the loss
/// trace so far, kept under `.partial` names.
fn write_checkpoint(
    dir: &std::path::Path,
    model: &DirectionModel,
    trace: &[f64],
    iteration: usize,
) -> Result<(), DirectionError> {
    std::fs::create_dir_all(dir)?;
    let sidecar = serde_json::json!({ "diverged_at_iteration": iteration });
    super::persist::save_model(&dir.join("diverged_model.lsdm.partial"), model, &sidecar)?;
    let mut csv = String::from("iteration,loss\n");
    for (i, loss) in trace.iter().enumerate() {
        csv.push_str(&format!("{i},{}\n", crate::numfmt::f64_17(*loss)));
    }
    std::fs::write(dir.join("diverged_loss_trace.csv.partial"), csv)?;
    Ok(())
}
