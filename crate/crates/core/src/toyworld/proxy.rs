//! Synthetic proxy-labeled dataset.
//!
//! Mirrors the ancestor-count labeling scheme at desk scale with a 2:1:1
//! split: high-ancestor examples (labeled creative) come from a
//! high-complexity generator config, zero-ancestor examples from a
//! single-class low-complexity config, and the remainder are raw samples of
//! the default generator. The complexity knobs are documented constants, not
//! claims about real creativity.

use rand::Rng;

use super::generator::{ToyGenerator, ToyGeneratorConfig};
use super::ToyError;
use crate::autodiff::Tensor;
use crate::direction::{tensor_to_image, Generator};
use crate::metrics::Image;
use crate::rng::{normal_vec, stream, Stream};

/// Proxy label rule: creative iff `ancestor_count > ANCESTOR_THRESHOLD`.
pub const ANCESTOR_THRESHOLD: u32 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyLabel {
    Creative,
    NonCreative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProxySource {
    HighAncestor,
    ZeroAncestor,
    RawGenerator,
}

#[derive(Clone, Debug)]
pub struct ProxyExample {
    pub image: Image,
    pub ancestor_count: u32,
    pub label: ProxyLabel,
    pub source: ProxySource,
    /// The latent draw behind the image.
    pub latent: Vec<f64>,
}

impl ProxyExample {
    pub fn label_from_count(count: u32) -> ProxyLabel {
        if count > ANCESTOR_THRESHOLD {
            ProxyLabel::Creative
        } else {
            ProxyLabel::NonCreative
        }
    }
}

/// High-complexity config behind the creative class: more blobs, a fully
/// saturated palette, boosted mix weights.
pub(crate) fn creative_config(side: usize) -> ToyGeneratorConfig {
    ToyGeneratorConfig {
        side,
        blobs: 8,
        latent_dim: 32,
        palette_saturation: 1.0,
        palette_value: 1.0,
        softness: 0.3,
        weight_scale: 3.0,
        ..ToyGeneratorConfig::default()
    }
}

/// Low-complexity config behind the zero-ancestor class: two blobs, a nearly
/// gray palette, damped weights; always sampled from class 0.
pub(crate) fn plain_config(side: usize) -> ToyGeneratorConfig {
    ToyGeneratorConfig {
        side,
        blobs: 2,
        latent_dim: 8,
        palette_saturation: 0.08,
        palette_value: 0.55,
        weight_scale: 0.6,
        ..ToyGeneratorConfig::default()
    }
}

/// Generates `n` labeled examples (n >= 8), split creative/zero/raw at
/// 2:1:1. Deterministic in `seed`. Images are 32x32 for desk-scale speed.
pub fn synth_proxy_dataset(n: usize, seed: u64) -> Result<Vec<ProxyExample>, ToyError> {
    synth_proxy_dataset_sized(n, seed, 32)
}

pub fn synth_proxy_dataset_sized(
    n: usize,
    seed: u64,
    side: usize,
) -> Result<Vec<ProxyExample>, ToyError> {
    if n < 8 {
        return Err(ToyError::DatasetTooSmall { min: 8, got: n });
    }
    let n_creative = n / 2;
    let n_zero = n / 4;
    let n_raw = n - n_creative - n_zero;

    let creative = ToyGenerator::new(creative_config(side))?;
    let plain = ToyGenerator::new(plain_config(side))?;
    let raw = ToyGenerator::new(ToyGeneratorConfig { side, ..ToyGeneratorConfig::default() })?;

    let mut rng = stream(seed, Stream::Dataset);
    let mut out = Vec::with_capacity(n);

    let render = |generator: &ToyGenerator,
                      class: usize,
                      rng: &mut rand_chacha::ChaCha12Rng|
     -> Result<(Image, Vec<f64>), ToyError> {
        let latent = normal_vec(rng, generator.latent_dim());
        let z = Tensor::from_vec(latent.clone())?;
        let mut y = vec![0.0; generator.n_classes()];
        y[class] = 1.0;
        let image = generator.generate(&z, &Tensor::from_vec(y)?)?;
        Ok((tensor_to_image(&image)?, latent))
    };

    for _ in 0..n_creative {
        let class = rng.random_range(0..creative.n_classes());
        let (image, latent) = render(&creative, class, &mut rng)?;
        let ancestor_count = rng.random_range(ANCESTOR_THRESHOLD + 1..=5 * ANCESTOR_THRESHOLD);
        out.push(ProxyExample {
            image,
            ancestor_count,
            label: ProxyExample::label_from_count(ancestor_count),
            source: ProxySource::HighAncestor,
            latent,
        });
    }
    for _ in 0..n_zero {
        let (image, latent) = render(&plain, 0, &mut rng)?;
        out.push(ProxyExample {
            image,
            ancestor_count: 0,
            label: ProxyLabel::NonCreative,
            source: ProxySource::ZeroAncestor,
            latent,
        });
    }
    for _ in 0..n_raw {
        let class = rng.random_range(0..raw.n_classes());
        let (image, latent) = render(&raw, class, &mut rng)?;
        out.push(ProxyExample {
            image,
            ancestor_count: 0,
            label: ProxyLabel::NonCreative,
            source: ProxySource::RawGenerator,
            latent,
        });
    }
    Ok(out)
}
