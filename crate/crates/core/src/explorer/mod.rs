//! Latent-space exploration: PCA reduction followed by exact t-SNE to a 2-D
//! embedding, with per-user coloring and cluster export.

mod pca;
mod report;
mod tsne;

pub use pca::{pca_fit_transform, PcaResult};
pub use report::{embedding_report, EmbeddingPoint, EmbeddingReport};
pub use tsne::{
    perplexity_calibration, tsne_embed, tsne_embed_precomputed, Affinities, TsneResult,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("perplexity {perplexity} too large for {n} points (need < (n-1)/3)")]
    PerplexityTooLarge { perplexity: f64, n: usize },
    #[error("bad component count {k} for {n} points of dimension {d}")]
    BadK { k: usize, n: usize, d: usize },
    #[error("zero-variance data")]
    ZeroVariance,
    #[error("embedding diverged (non-finite values) at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("empty selection after user filter")]
    EmptySelection,
    #[error("{0}")]
    Mismatch(String),
}

/// Knobs of the PCA + t-SNE pipeline. The optimizer constants are standard
/// t-SNE defaults; the source describes only the two-stage reduction.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub pca_dims: usize,
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            pca_dims: 50,
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            seed: 0,
        }
    }
}
