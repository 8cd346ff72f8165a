//! Differentiable procedural generator: soft Gaussian blobs on a bias
//! background, colored by a class-conditioned palette.
//!
//! Latent layout, four coordinates per blob k:
//!
//! * `z[4k]`, `z[4k+1]`: blob center, mapped through tanh into [0, 1],
//! * `z[4k+2]`: log-radius around the softness base radius,
//! * `z[4k+3]`: log color-mix weight (`w_k = weight_scale * exp(z)`), kept
//!   positive so the score landscape has no mirror-image region on the other
//!   side of gray.
//!
//! Pixel value per channel: `sigmoid(sum_k w_k * exp(-|p - c_k|^2 / (2 r_k^2))
//! * color_kc - bias)`, differentiable everywhere and deterministic.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ToyError;
use crate::autodiff::{AdError, Tensor};
use crate::direction::Generator;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ToyGeneratorConfig {
    /// Image side length S (images are S x S).
    pub side: usize,
    /// Blob count K.
    pub blobs: usize,
    /// Latent dimension; must be at least 4K. Default 16 for toy runs; 128
    /// mirrors the full-scale generator.
    pub latent_dim: usize,
    pub n_classes: usize,
    /// Base blob radius in image units; tau in the falloff.
    pub softness: f64,
    /// Scale on the log-radius coordinate.
    pub radius_exponent_scale: f64,
    /// Background bias subtracted before the sigmoid.
    pub bias: f64,
    /// Color table, `[class][blob] -> rgb` in [0, 1]. `None` uses an evenly
    /// spaced hue wheel.
    pub palette: Option<Vec<Vec<[f64; 3]>>>,
    pub palette_saturation: f64,
    pub palette_value: f64,
    /// Multiplier on the raw weight coordinate.
    pub weight_scale: f64,
}

impl Default for ToyGeneratorConfig {
    fn default() -> Self {
        ToyGeneratorConfig {
            side: 64,
            blobs: 4,
            latent_dim: 16,
            n_classes: 8,
            softness: 0.25,
            radius_exponent_scale: 0.5,
            bias: 0.0,
            palette: None,
            // Full saturation keeps one zero channel per hue, so extreme mix
            // weights drive blobs to a vivid color rather than white.
            palette_saturation: 1.0,
            palette_value: 0.9,
            weight_scale: 1.0,
        }
    }
}

impl ToyGeneratorConfig {
    pub fn validate(&self) -> Result<(), ToyError> {
        if self.side < 8 {
            return Err(ToyError::BadConfig(format!("side {} < 8", self.side)));
        }
        if self.blobs == 0 || self.n_classes == 0 {
            return Err(ToyError::BadConfig("blobs and n_classes must be positive".into()));
        }
        if self.latent_dim < 4 * self.blobs {
            return Err(ToyError::BadConfig(format!(
                "latent_dim {} too small for {} blobs (need {})",
                self.latent_dim,
                self.blobs,
                4 * self.blobs
            )));
        }
        if !(self.softness > 0.0) {
            return Err(ToyError::BadConfig("softness must be positive".into()));
        }
        if let Some(palette) = &self.palette {
            if palette.len() != self.n_classes
                || palette.iter().any(|row| row.len() != self.blobs)
            {
                return Err(ToyError::BadConfig("palette must be n_classes x blobs".into()));
            }
            for rgb in palette.iter().flatten().flatten() {
                if !(0.0..=1.0).contains(rgb) {
                    return Err(ToyError::BadConfig("palette entries must lie in [0,1]".into()));
                }
            }
        }
        Ok(())
    }

    /// The palette in effect: explicit table or the default hue wheel.
    pub fn resolved_palette(&self) -> Vec<Vec<[f64; 3]>> {
        if let Some(p) = &self.palette {
            return p.clone();
        }
        let total = (self.n_classes * self.blobs) as f64;
        (0..self.n_classes)
            .map(|j| {
                (0..self.blobs)
                    .map(|k| {
                        let hue = 360.0 * ((j * self.blobs + k) as f64) / total;
                        hsv_to_rgb(hue, self.palette_saturation, self.palette_value)
                    })
                    .collect()
            })
            .collect()
    }
}

pub(crate) fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = (h / 60.0).rem_euclid(6.0);
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// The generator with its precomputed constant buffers. The buffers are
/// wrapped into untracked tensors per call without copying.
pub struct ToyGenerator {
    config: ToyGeneratorConfig,
    /// n_classes x 3K palette matrix; column index = 3k + channel.
    palette_matrix: Arc<Vec<f64>>,
    px: Arc<Vec<f64>>,
    py: Arc<Vec<f64>>,
    ones_col: Arc<Vec<f64>>,
    bias_vec: Arc<Vec<f64>>,
}

impl ToyGenerator {
    pub fn new(config: ToyGeneratorConfig) -> Result<ToyGenerator, ToyError> {
        config.validate()?;
        let s = config.side;
        let n = s * s;
        let mut px = Vec::with_capacity(n);
        let mut py = Vec::with_capacity(n);
        for y in 0..s {
            for x in 0..s {
                px.push((x as f64 + 0.5) / s as f64);
                py.push((y as f64 + 0.5) / s as f64);
            }
        }
        let palette = config.resolved_palette();
        let cols = 3 * config.blobs;
        let mut mat = Vec::with_capacity(config.n_classes * cols);
        for class_row in &palette {
            for rgb in class_row {
                mat.extend_from_slice(rgb);
            }
        }
        Ok(ToyGenerator {
            px: Arc::new(px),
            py: Arc::new(py),
            ones_col: Arc::new(vec![1.0; n]),
            bias_vec: Arc::new(vec![config.bias; n]),
            palette_matrix: Arc::new(mat),
            config,
        })
    }

    pub fn config(&self) -> &ToyGeneratorConfig {
        &self.config
    }

    fn grid_tensor(&self, data: &Arc<Vec<f64>>) -> Tensor {
        Tensor::from_arc(vec![data.len()], Arc::clone(data)).expect("validated buffer")
    }

    /// Broadcasts a scalar tensor over the pixel grid.
    fn broadcast(&self, scalar: &Tensor) -> Result<Tensor, AdError> {
        let n = self.config.side * self.config.side;
        let ones = Tensor::from_arc(vec![n, 1], Arc::clone(&self.ones_col)).expect("validated");
        ones.matmul(&scalar.reshape(vec![1, 1])?)?.reshape(vec![n])
    }
}

impl Generator for ToyGenerator {
    fn latent_dim(&self) -> usize {
        self.config.latent_dim
    }

    fn n_classes(&self) -> usize {
        self.config.n_classes
    }

    fn image_size(&self) -> (usize, usize) {
        (self.config.side, self.config.side)
    }

    fn generate(&self, z: &Tensor, y: &Tensor) -> Result<Tensor, AdError> {
        let cfg = &self.config;
        if z.shape() != [cfg.latent_dim] {
            return Err(AdError::ShapeMismatch {
                op: "toy_generate",
                details: format!("z shape {:?}, want [{}]", z.shape(), cfg.latent_dim),
            });
        }
        if y.shape() != [cfg.n_classes] {
            return Err(AdError::ShapeMismatch {
                op: "toy_generate",
                details: format!("y shape {:?}, want [{}]", y.shape(), cfg.n_classes),
            });
        }
        let s = cfg.side;
        let inv_2tau2 = 1.0 / (2.0 * cfg.softness * cfg.softness);
        let px = self.grid_tensor(&self.px);
        let py = self.grid_tensor(&self.py);
        let bias_vec = self.grid_tensor(&self.bias_vec);
        let half = Tensor::scalar(0.5)?;
        let palette = Tensor::from_arc(
            vec![cfg.n_classes, 3 * cfg.blobs],
            Arc::clone(&self.palette_matrix),
        )?;

        // Color coefficients for this class mix: [3K].
        let col = y
            .reshape(vec![1, cfg.n_classes])?
            .matmul(&palette)?
            .reshape(vec![3 * cfg.blobs])?;

        let mut acc: [Option<Tensor>; 3] = [None, None, None];
        for k in 0..cfg.blobs {
            let cx = z.slice(4 * k, 1)?.tanh()?.scale(0.5)?.add(&half)?;
            let cy = z.slice(4 * k + 1, 1)?.tanh()?.scale(0.5)?.add(&half)?;
            let dx = px.sub(&self.broadcast(&cx)?)?;
            let dy = py.sub(&self.broadcast(&cy)?)?;
            let d2 = dx.square()?.add(&dy.square()?)?;
            // 1 / (2 r_k^2) with r_k = softness * exp(scale * z_r).
            let inv = z
                .slice(4 * k + 2, 1)?
                .scale(-2.0 * cfg.radius_exponent_scale)?
                .exp()?
                .scale(inv_2tau2)?;
            let falloff = d2.mul(&self.broadcast(&inv)?)?.scale(-1.0)?.exp()?;
            let weight = z.slice(4 * k + 3, 1)?.exp()?.scale(cfg.weight_scale)?;
            for (c, slot) in acc.iter_mut().enumerate() {
                let coeff = weight.mul(&col.slice(3 * k + c, 1)?)?;
                let term = falloff.mul(&self.broadcast(&coeff)?)?;
                *slot = Some(match slot.take() {
                    None => term,
                    Some(prev) => prev.add(&term)?,
                });
            }
        }

        let mut channels = Vec::with_capacity(3);
        for slot in acc {
            let pre = slot.expect("at least one blob");
            channels.push(pre.sub(&bias_vec)?.sigmoid()?);
        }
        let refs: Vec<&Tensor> = channels.iter().collect();
        Tensor::concat(&refs)?.reshape(vec![3, s, s])
    }
}
