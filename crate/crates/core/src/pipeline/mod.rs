//! The operational shell: run configuration, dataset manifests, CLI-facing
//! mode dispatch, sweep orchestration, and CSV/SVG report emission.
//!
//! A run owns its output directory exclusively (lockfile). On failure,
//! whatever was already produced is kept under a `.partial` suffix.

mod compare;
mod config;
mod manifest;
mod run;

pub use compare::{compare_runs, read_sweep_csv, SweepCsv};
pub use config::{
    ClassifierSection, DatasetSection, EmbedSection, Mode, ModelSection, RunConfig, SweepSection,
    TrainSection,
};
pub use manifest::{
    ingest_manifest, label_for, write_manifest, IngestOutcome, LabeledRecord, ManifestRecord,
    RecordLabel,
};
pub use run::{run, RunOutcome};

use std::path::PathBuf;

use crate::direction::DirectionError;
use crate::explorer::EmbedError;
use crate::metrics::MetricError;
use crate::toyworld::ToyError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad config: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error(transparent)]
    Direction(#[from] DirectionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Toy(#[from] ToyError),
    #[error("alpha grids differ: {0}")]
    GridMismatch(String),
    #[error("output directory is locked by another run: {0}")]
    LockHeld(PathBuf),
    #[error("{failed} of {total} checks failed")]
    CheckFailed { failed: usize, total: usize },
    #[error("parse error: {0}")]
    Parse(String),
}
