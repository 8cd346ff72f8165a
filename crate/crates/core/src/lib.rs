//! Latent-space steering toolkit.
//!
//! Learns latent-space manipulations that raise or lower an assessor-scored
//! image property, against pluggable differentiable generator/assessor pairs.
//! Ships the full evaluation stack: alpha-sweep score curves, seven image
//! property metrics, proxy-labeled assessor training, and PCA/t-SNE latent
//! exploration.

pub mod autodiff;
pub mod direction;
pub mod explorer;
pub mod metrics;
pub mod numfmt;
pub mod optim;
pub mod pipeline;
pub mod rng;
pub mod svg;
pub mod toyworld;
