//! Direction models: the transformation functions that steer latent codes,
//! their training losses, the training loop, and the alpha-sweep evaluator.
//!
//! Three model families are supported against any differentiable
//! generator/assessor pair:
//!
//! * a fixed direction `T(z, alpha) = z + alpha*theta` (the baseline),
//! * a noise-conditioned network `F_z(z, alpha) = z + alpha*NN(z, eps)`,
//! * a joint model that additionally steers the class vector with
//!   `F_y(y, alpha) = y + alpha*NN(y, eps)`.
//!
//! Training minimizes the squared gap between the transformed image's score
//! and the original score shifted by alpha.

mod loss;
mod model;
mod persist;
mod sweep;
#[cfg(test)]
mod tests;
mod train;

pub use loss::{loss_eq1, loss_eq2, target_score, Sample};
pub use model::{
    transform_class, transform_fixed, transform_noise, DirectionModel, DirectionNet,
    FixedDirection, ModelKind,
};
pub use persist::{load_model, save_model, sidecar_path as model_sidecar_path, MODEL_MAGIC};
pub use sweep::{alpha_sweep, default_alpha_grid, eval_threads, SweepReport, SweepSample};
pub use train::{train_direction, TrainConfig, TrainOutcome};

use crate::autodiff::{AdError, Tensor};
use crate::metrics::{Image, MetricError};
use crate::optim::OptimError;

#[derive(Debug, thiserror::Error)]
pub enum DirectionError {
    #[error(transparent)]
    Ad(#[from] AdError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("assessor '{0}' is not differentiable; training requires a differentiable assessor")]
    NotDifferentiable(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("training diverged (non-finite loss) at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("empty z-set")]
    EmptyZSet,
    #[error("bad model file: {0}")]
    BadModelFile(String),
}

/// Pluggable differentiable generator: `G(z, y)` producing a planar
/// `[3, H, W]` image tensor in [0, 1]. Implementations are read-only during
/// sweeps and safe to share across evaluation threads.
pub trait Generator: Sync {
    fn latent_dim(&self) -> usize;
    fn n_classes(&self) -> usize;
    /// (height, width) of generated images.
    fn image_size(&self) -> (usize, usize);
    fn generate(&self, z: &Tensor, y: &Tensor) -> Result<Tensor, AdError>;
}

/// Scoring function over images; documented range [0, 1] for provided
/// assessors. Training requires `differentiable() == true`; sweep evaluation
/// accepts any assessor.
pub trait Assessor: Sync {
    fn name(&self) -> &str;
    fn differentiable(&self) -> bool {
        false
    }
    /// Score as a scalar tensor, preserving the tape when `image` is tracked.
    /// Only meaningful for differentiable assessors.
    fn score_tensor(&self, _image: &Tensor) -> Result<Tensor, DirectionError> {
        Err(DirectionError::NotDifferentiable(self.name().to_string()))
    }
    /// Plain evaluation path; must agree with `score_tensor` where both exist.
    fn score_image(&self, image: &Image) -> Result<f64, DirectionError>;
}

/// Planar `[3, H, W]` tensor from an image.
pub fn image_to_tensor(image: &Image) -> Tensor {
    Tensor::new(vec![3, image.height(), image.width()], image.planar().to_vec())
        .expect("image values are validated in [0,1]")
}

/// Image from a planar `[3, H, W]` tensor.
pub fn tensor_to_image(t: &Tensor) -> Result<Image, DirectionError> {
    let shape = t.shape();
    if shape.len() != 3 || shape[0] != 3 {
        return Err(DirectionError::DimMismatch(format!(
            "expected [3, H, W] image tensor, got {shape:?}"
        )));
    }
    Ok(Image::from_planar(shape[1], shape[2], t.data().to_vec())?)
}
