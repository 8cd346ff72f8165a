//! Training objective: squared gap between the transformed image's score and
//! the original score shifted by alpha.

use super::model::{DirectionModel, DirectionNet};
use super::{Assessor, DirectionError, Generator};
use crate::autodiff::Tensor;

/// One training sample. `eps_*` are standard-normal noise vectors consumed by
/// the direction nets; unused entries stay empty.
#[derive(Clone, Debug)]
pub struct Sample {
    pub z: Vec<f64>,
    /// One-hot class vector at sampling time.
    pub y: Vec<f64>,
    pub alpha: f64,
    pub eps_z: Vec<f64>,
    pub eps_y: Vec<f64>,
}

/// `A(G(z, y)) + alpha`, optionally clipped to [0, 1]. The printed objective
/// has no clamp; the clamp flag covers the lineage where targets are scores.
/// Accepts any assessor (the target side needs no gradient).
pub fn target_score(
    assessor: &dyn Assessor,
    generator: &dyn Generator,
    z: &Tensor,
    y: &Tensor,
    alpha: f64,
    clamp: bool,
) -> Result<f64, DirectionError> {
    let image = generator.generate(&z.detach(), &y.detach())?;
    let score = assessor.score_image(&super::tensor_to_image(&image)?)?;
    Ok(shift_score(score, alpha, clamp))
}

pub(super) fn shift_score(score: f64, alpha: f64, clamp: bool) -> f64 {
    let t = score + alpha;
    if clamp {
        t.clamp(0.0, 1.0)
    } else {
        t
    }
}

impl DirectionModel {
    /// Mean over the batch of the squared score gap, with the model's
    /// parameters supplied as a (typically tracked) flat tensor. The target
    /// side carries no model parameters and is evaluated untracked.
    pub fn batch_loss(
        &self,
        params: &Tensor,
        batch: &[Sample],
        generator: &dyn Generator,
        assessor: &dyn Assessor,
        clamp_targets: bool,
    ) -> Result<Tensor, DirectionError> {
        if batch.is_empty() {
            return Err(DirectionError::EmptyZSet);
        }
        let mut per_sample = Vec::with_capacity(batch.len());
        for sample in batch {
            let z = Tensor::from_vec(sample.z.clone())?;
            let y = Tensor::from_vec(sample.y.clone())?;
            let eps_z = Tensor::from_vec(sample.eps_z.clone())?;
            let eps_y = Tensor::from_vec(sample.eps_y.clone())?;

            let original = assessor.score_tensor(&generator.generate(&z, &y)?)?.item()?;
            let target = shift_score(original, sample.alpha, clamp_targets);

            let (tz, ty) = self.transform(params, &z, &y, sample.alpha, &eps_z, &eps_y)?;
            let score = assessor.score_tensor(&generator.generate(&tz, &ty)?)?;
            let gap = score.sub(&Tensor::scalar(target)?)?;
            per_sample.push(gap.square()?);
        }
        let refs: Vec<&Tensor> = per_sample.iter().collect();
        Ok(Tensor::concat(&refs)?.mean()?)
    }
}

/// Loss of the noise-conditioned model on a batch, untracked convenience
/// evaluation (training goes through [`DirectionModel::batch_loss`]).
pub fn loss_eq1(
    net: &DirectionNet,
    batch: &[Sample],
    generator: &dyn Generator,
    assessor: &dyn Assessor,
    clamp_targets: bool,
) -> Result<f64, DirectionError> {
    let model = DirectionModel::Noise(net.clone());
    let params = Tensor::from_vec(model.params_flat())?;
    model.batch_loss(&params, batch, generator, assessor, clamp_targets)?.item().map_err(Into::into)
}

/// Loss of the joint model (z-net and y-net, one shared alpha per sample).
pub fn loss_eq2(
    z_net: &DirectionNet,
    y_net: &DirectionNet,
    batch: &[Sample],
    generator: &dyn Generator,
    assessor: &dyn Assessor,
    clamp_targets: bool,
) -> Result<f64, DirectionError> {
    let model = DirectionModel::Joint { z_net: z_net.clone(), y_net: y_net.clone() };
    let params = Tensor::from_vec(model.params_flat())?;
    model.batch_loss(&params, batch, generator, assessor, clamp_targets)?.item().map_err(Into::into)
}
