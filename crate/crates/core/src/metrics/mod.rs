//! The seven appendix image factors and the mask machinery behind them.
//!
//! Color/intensity metrics (redness, colorfulness, brightness, simplicity)
//! work on the raw raster; the object metrics (object size, centeredness,
//! squareness) work on a binary mask produced either by the deterministic
//! threshold segmenter or loaded from an externally produced mask file.
//! All metric functions are pure.

mod color;
mod image;
mod io;
mod mask;
mod report;
mod shape;

pub use color::{brightness, colorfulness, entropy_bits, redness, simplicity, RednessConfig};
pub use image::Image;
pub use io::{load_image, load_mask, save_png, save_ppm};
pub use mask::{segment_largest, Mask};
pub use report::{mean_std, metric_report, MetricReport, MetricRow, REPORT_HEADER};
pub use shape::{centeredness, object_size, squareness, Squareness};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("png decode error: {0}")]
    PngDecode(#[from] png::DecodingError),
    #[error("png encode error: {0}")]
    PngEncode(#[from] png::EncodingError),
    #[error("unsupported image format: {0}")]
    Format(String),
    #[error("bad image: {0}")]
    BadImage(String),
    #[error("empty metric group: {0}")]
    EmptyGroup(String),
}

/// Names of the emitted metric columns, in report order. `entropy_bits` is
/// carried alongside `simplicity` because the source property is described as
/// entropy while the name suggests its negation; both readings are emitted.
pub const METRIC_NAMES: [&str; 8] = [
    "redness",
    "colorfulness",
    "brightness",
    "entropy_bits",
    "simplicity",
    "object_size",
    "centeredness",
    "squareness",
];

/// One image's metric values. Mask-dependent metrics are `None` when the mask
/// is empty (missing, never fabricated).
#[derive(Clone, Copy, Debug)]
pub struct MetricValues {
    pub redness: f64,
    pub colorfulness: f64,
    pub brightness: f64,
    pub entropy_bits: f64,
    pub simplicity: f64,
    pub object_size: f64,
    pub centeredness: Option<f64>,
    pub squareness: Option<f64>,
    pub squareness_degenerate: bool,
}

impl MetricValues {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "redness" => Some(self.redness),
            "colorfulness" => Some(self.colorfulness),
            "brightness" => Some(self.brightness),
            "entropy_bits" => Some(self.entropy_bits),
            "simplicity" => Some(self.simplicity),
            "object_size" => Some(self.object_size),
            "centeredness" => self.centeredness,
            "squareness" => self.squareness,
            _ => None,
        }
    }
}

/// Computes all emitted metrics for one image with the given segmentation
/// threshold (mask metrics come from the largest thresholded component).
pub fn compute_all(image: &Image, threshold: f64) -> MetricValues {
    let mask = segment_largest(image, threshold);
    compute_all_with_mask(image, &mask)
}

/// Same as [`compute_all`] but with a caller-provided mask (e.g. loaded from
/// an external segmentation).
pub fn compute_all_with_mask(image: &Image, mask: &Mask) -> MetricValues {
    let ebits = entropy_bits(image);
    let sq = squareness(mask);
    MetricValues {
        redness: redness(image, &RednessConfig::default()),
        colorfulness: colorfulness(image),
        brightness: brightness(image),
        entropy_bits: ebits,
        simplicity: 1.0 - ebits / 8.0,
        object_size: object_size(mask),
        centeredness: centeredness(mask),
        squareness: sq.map(|s| match s {
            Squareness::Value(v) => v,
            Squareness::Degenerate => 0.0,
        }),
        squareness_degenerate: matches!(sq, Some(Squareness::Degenerate)),
    }
}
