//! Differentiable stand-ins for the pretrained generator and the creativity
//! assessor, plus a synthetic proxy-labeled dataset mirroring the
//! ancestor-count labeling scheme, so training and classification are fully
//! testable at desk scale.

mod assessor;
mod classifier;
mod generator;
mod proxy;

pub use assessor::{BrightnessAssessor, SmoothColorfulness};
pub use classifier::{
    load_classifier, save_classifier, train_assessor_classifier, AccuracyReport,
    ClassifierConfig, FeatureMode, MetricFeatureClassifier,
};
pub use generator::{ToyGenerator, ToyGeneratorConfig};
pub use proxy::{
    synth_proxy_dataset, synth_proxy_dataset_sized, ProxyExample, ProxyLabel, ProxySource,
    ANCESTOR_THRESHOLD,
};

#[derive(Debug, thiserror::Error)]
pub enum ToyError {
    #[error("bad generator config: {0}")]
    BadConfig(String),
    #[error("dataset too small: need at least {min}, got {got}")]
    DatasetTooSmall { min: usize, got: usize },
    #[error("degenerate dataset: all examples share one label")]
    SingleClassDataset,
    #[error(transparent)]
    Ad(#[from] crate::autodiff::AdError),
    #[error(transparent)]
    Direction(#[from] crate::direction::DirectionError),
    #[error(transparent)]
    Optim(#[from] crate::optim::OptimError),
}
