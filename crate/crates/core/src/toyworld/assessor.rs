//! Differentiable assessors over generated images.

use crate::autodiff::Tensor;
use crate::direction::{image_to_tensor, Assessor, DirectionError};
use crate::metrics::Image;

/// Sigmoid-squashed smooth colorfulness: the exact colorfulness metric's
/// structure (opponent-channel spreads plus mean chroma) with epsilon-
/// regularized square roots so it stays differentiable, squashed into [0, 1].
///
/// On a uniform gray image the raw value is ~0 and the score is approximately
/// `sigmoid(bias)`. The raw value is monotone in the exact 0-255 metric on
/// the toy image family (both are increasing in the same opponent statistics;
/// the smooth one works on the [0, 1] scale).
#[derive(Clone, Copy, Debug)]
pub struct SmoothColorfulness {
    /// Multiplier on the raw colorfulness before the sigmoid.
    pub scale: f64,
    /// Additive bias before the sigmoid; `sigmoid(bias)` is the gray anchor.
    pub bias: f64,
    /// Regularizer inside the square roots.
    pub epsilon: f64,
}

impl Default for SmoothColorfulness {
    fn default() -> Self {
        SmoothColorfulness { scale: 10.0, bias: -2.0, epsilon: 1e-6 }
    }
}

impl SmoothColorfulness {
    /// Raw smooth colorfulness (before the sigmoid squash), on [0, 1] scale.
    pub fn raw(&self, image: &Tensor) -> Result<Tensor, DirectionError> {
        let n: usize = image.len() / 3;
        let r = image.slice(0, n)?;
        let g = image.slice(n, n)?;
        let b = image.slice(2 * n, n)?;
        let rg = r.sub(&g)?;
        let yb = r.add(&g)?.scale(0.5)?.sub(&b)?;

        let eps = Tensor::scalar(self.epsilon)?;
        let mean_rg = rg.mean()?;
        let mean_yb = yb.mean()?;
        let var_rg = rg.square()?.mean()?.sub(&mean_rg.square()?)?;
        let var_yb = yb.square()?.mean()?.sub(&mean_yb.square()?)?;
        let sigma = var_rg.add(&var_yb)?.add(&eps)?.sqrt()?;
        let mu = mean_rg.square()?.add(&mean_yb.square()?)?.add(&eps)?.sqrt()?;
        Ok(sigma.add(&mu.scale(0.3)?)?)
    }
}

impl Assessor for SmoothColorfulness {
    fn name(&self) -> &str {
        "smooth_colorfulness"
    }

    fn differentiable(&self) -> bool {
        true
    }

    fn score_tensor(&self, image: &Tensor) -> Result<Tensor, DirectionError> {
        Ok(self.raw(image)?.scale(self.scale)?.add(&Tensor::scalar(self.bias)?)?.sigmoid()?)
    }

    fn score_image(&self, image: &Image) -> Result<f64, DirectionError> {
        Ok(self.score_tensor(&image_to_tensor(image))?.item()?)
    }
}

/// Mean BT.601 luma; already in [0, 1]. An alternative steering target.
#[derive(Clone, Copy, Debug, Default)]
pub struct BrightnessAssessor;

impl Assessor for BrightnessAssessor {
    fn name(&self) -> &str {
        "brightness"
    }

    fn differentiable(&self) -> bool {
        true
    }

    fn score_tensor(&self, image: &Tensor) -> Result<Tensor, DirectionError> {
        let n: usize = image.len() / 3;
        let r = image.slice(0, n)?;
        let g = image.slice(n, n)?;
        let b = image.slice(2 * n, n)?;
        Ok(r.scale(0.299)?.add(&g.scale(0.587)?)?.add(&b.scale(0.114)?)?.mean()?)
    }

    fn score_image(&self, image: &Image) -> Result<f64, DirectionError> {
        Ok(self.score_tensor(&image_to_tensor(image))?.item()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{gradient_check, sigmoid_scalar};
    use crate::metrics;
    use crate::rng::{stream, Stream};
    use rand::Rng;

    fn random_image_tensor(seed: u64, side: usize) -> Tensor {
        let mut rng = stream(seed, Stream::Other(30));
        let vals: Vec<f64> = (0..3 * side * side).map(|_| rng.random::<f64>()).collect();
        Tensor::new(vec![3, side, side], vals).unwrap()
    }

    #[test]
    fn gray_image_scores_near_sigmoid_bias() {
        let a = SmoothColorfulness::default();
        let img = Image::uniform(16, 16, [0.5; 3]);
        let score = a.score_image(&img).unwrap();
        assert!((score - sigmoid_scalar(a.bias)).abs() < 0.01, "score = {score}");
    }

    #[test]
    fn saturated_halves_beat_any_uniform_image() {
        let a = SmoothColorfulness::default();
        let mut halves = Image::uniform(8, 8, [1.0, 0.0, 0.0]);
        for y in 0..8 {
            for x in 4..8 {
                halves.set(0, y, x, 0.0);
                halves.set(1, y, x, 1.0);
            }
        }
        let split_score = a.score_image(&halves).unwrap();
        for rgb in [[0.0; 3], [1.0; 3], [1.0, 0.0, 0.0], [0.3, 0.9, 0.1]] {
            let uniform_score = a.score_image(&Image::uniform(8, 8, rgb)).unwrap();
            assert!(split_score > uniform_score, "{rgb:?}");
        }
    }

    #[test]
    fn colorfulness_gradient_checks() {
        let a = SmoothColorfulness::default();
        let img = random_image_tensor(1, 6);
        let err = gradient_check(|t| Ok(a.score_tensor(t).unwrap()), &img, 1e-6).unwrap();
        assert!(err < 1e-5, "err = {err}");
    }

    #[test]
    fn brightness_matches_exact_metric() {
        let a = BrightnessAssessor;
        assert_eq!(a.score_image(&Image::uniform(8, 8, [0.0; 3])).unwrap(), 0.0);
        assert!((a.score_image(&Image::uniform(8, 8, [1.0; 3])).unwrap() - 1.0).abs() < 1e-12);
        assert!((a.score_image(&Image::uniform(8, 8, [0.5; 3])).unwrap() - 0.5).abs() < 1e-12);

        let t = random_image_tensor(2, 8);
        let img = crate::direction::tensor_to_image(&t).unwrap();
        let direct = metrics::brightness(&img);
        assert!((a.score_image(&img).unwrap() - direct).abs() < 1e-12);

        let err = gradient_check(|t| Ok(a.score_tensor(t).unwrap()), &t, 1e-6).unwrap();
        assert!(err < 1e-7, "err = {err}");
    }

    #[test]
    fn both_assessors_have_bounded_gradients() {
        // Lipschitz in practice: gradient norms stay bounded over 100 random
        // images.
        let smooth = SmoothColorfulness::default();
        let bright = BrightnessAssessor;
        for seed in 0..100u64 {
            let img = random_image_tensor(seed, 6);
            for (name, assessor) in
                [("smooth", &smooth as &dyn Assessor), ("bright", &bright as &dyn Assessor)]
            {
                let tape = crate::autodiff::Tape::new();
                let tracked = tape.leaf(&img);
                let score = assessor.score_tensor(&tracked).unwrap();
                let grad = score.backward().unwrap().wrt(&tracked).unwrap();
                let norm = grad.data().iter().map(|g| g * g).sum::<f64>().sqrt();
                assert!(norm < 25.0, "{name} seed {seed}: grad norm {norm}");
            }
        }
    }
}
