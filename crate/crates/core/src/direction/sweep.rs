//! Alpha-sweep evaluation: one z-set traced across a grid of alphas.
//!
//! The same z-set (and per-sample eps) is reused at every alpha so curves
//! vary only in alpha. Cells are evaluated in parallel up to the width given
//! by the `LATENT_STEER_THREADS` environment variable; workers take strided
//! cell indices and results land in per-cell slots, so the report is
//! identical at any thread count.

use std::path::{Path, PathBuf};

use rand::Rng;

use super::model::DirectionModel;
use super::{tensor_to_image, Assessor, DirectionError, Generator};
use crate::autodiff::Tensor;
use crate::metrics::{compute_all, mean_std, metric_report, save_png, MetricReport, MetricValues};
use crate::numfmt::f64_17;
use crate::rng::{keyed, normal_vec, Stream};

/// The 11-point default grid: -0.5, -0.4, ..., 0.5.
pub fn default_alpha_grid() -> Vec<f64> {
    (-5..=5).map(|i| i as f64 / 10.0).collect()
}

/// Parallel evaluation width: `LATENT_STEER_THREADS` if set, else the
/// available parallelism capped at 8.
pub fn eval_threads() -> usize {
    if let Ok(v) = std::env::var("LATENT_STEER_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8)
}

/// One sweep sample: a latent draw, its class, and the per-sample eps held
/// fixed across the whole grid.
#[derive(Clone, Debug)]
pub struct SweepSample {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    pub eps_z: Vec<f64>,
    pub eps_y: Vec<f64>,
}

impl SweepSample {
    /// Draws `n` samples keyed by sample index, so sample k's draw does not
    /// depend on n.
    pub fn sample_set(
        n: usize,
        latent_dim: usize,
        n_classes: usize,
        eps_dims: (usize, usize),
        seed: u64,
    ) -> Vec<SweepSample> {
        (0..n)
            .map(|k| {
                let mut rng = keyed(seed, Stream::SweepSamples, k as u64);
                let z = normal_vec(&mut rng, latent_dim);
                let mut y = vec![0.0; n_classes];
                y[rng.random_range(0..n_classes)] = 1.0;
                let eps_z = normal_vec(&mut rng, eps_dims.0);
                let eps_y = normal_vec(&mut rng, eps_dims.1);
                SweepSample { z, y, eps_z, eps_y }
            })
            .collect()
    }
}

/// Per-alpha aggregates of assessor score and image metrics.
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub alpha_grid: Vec<f64>,
    /// Per-alpha (mean, std) of the assessor score, over the identical z-set.
    pub score: Vec<(f64, f64)>,
    pub metrics: MetricReport,
    /// Sample-image references saved during the sweep, per alpha.
    pub sample_images: Vec<(f64, Vec<PathBuf>)>,
}

impl SweepReport {
    pub fn score_mean(&self, alpha: f64) -> Option<f64> {
        self.alpha_grid.iter().position(|a| *a == alpha).map(|i| self.score[i].0)
    }

    /// Mean score at the top of the grid minus the bottom.
    pub fn spread(&self) -> f64 {
        match (self.score.last(), self.score.first()) {
            (Some(hi), Some(lo)) => hi.0 - lo.0,
            _ => 0.0,
        }
    }

    /// CSV rows `alpha,metric,mean,std,n_missing` with the assessor score as
    /// metric `score` followed by the image metrics.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(crate::metrics::REPORT_HEADER);
        out.push('\n');
        for (i, alpha) in self.alpha_grid.iter().enumerate() {
            let (mean, std) = self.score[i];
            out.push_str(&format!("{},score,{},{},0\n", f64_17(*alpha), f64_17(mean), f64_17(std)));
            for row in self.metrics.rows.iter().filter(|r| r.alpha == *alpha) {
                out.push_str(&f64_17(row.alpha));
                out.push(',');
                out.push_str(&row.metric);
                out.push(',');
                if let Some(m) = row.mean {
                    out.push_str(&f64_17(m));
                }
                out.push(',');
                if let Some(s) = row.std {
                    out.push_str(&f64_17(s));
                }
                out.push(',');
                out.push_str(&row.n_missing.to_string());
                out.push('\n');
            }
        }
        out
    }
}

struct Cell {
    score: f64,
    metrics: MetricValues,
}

/// Evaluates `model` over `grid x samples`: per-alpha mean/std assessor score
/// plus per-alpha means of each image metric. `save_samples` optionally dumps
/// the first few images per alpha as PNGs into a directory.
pub fn alpha_sweep(
    model: &DirectionModel,
    samples: &[SweepSample],
    grid: &[f64],
    generator: &dyn Generator,
    assessor: &dyn Assessor,
    segment_threshold: f64,
    save_samples: Option<(&Path, usize)>,
) -> Result<SweepReport, DirectionError> {
    if samples.is_empty() {
        return Err(DirectionError::EmptyZSet);
    }
    let n = samples.len();
    let cells = grid.len() * n;
    let flat_params = model.params_flat();

    let render = |alpha: f64, sample: &SweepSample| -> Result<crate::metrics::Image, DirectionError> {
        let params = Tensor::from_vec(flat_params.clone())?;
        let z = Tensor::from_vec(sample.z.clone())?;
        let y = Tensor::from_vec(sample.y.clone())?;
        let eps_z = Tensor::from_vec(sample.eps_z.clone())?;
        let eps_y = Tensor::from_vec(sample.eps_y.clone())?;
        let (tz, ty) = model.transform(&params, &z, &y, alpha, &eps_z, &eps_y)?;
        tensor_to_image(&generator.generate(&tz, &ty)?)
    };

    let eval_cell = |cell: usize| -> Result<Cell, DirectionError> {
        let image = render(grid[cell / n], &samples[cell % n])?;
        let score = assessor.score_image(&image)?;
        Ok(Cell { score, metrics: compute_all(&image, segment_threshold) })
    };

    let threads = eval_threads().min(cells).max(1);
    let mut results: Vec<Option<Result<Cell, DirectionError>>> = Vec::with_capacity(cells);
    results.resize_with(cells, || None);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|worker| {
                let eval_cell = &eval_cell;
                scope.spawn(move || {
                    let mut out = Vec::new();
                    let mut cell = worker;
                    while cell < cells {
                        out.push((cell, eval_cell(cell)));
                        cell += threads;
                    }
                    out
                })
            })
            .collect();
        for handle in handles {
            for (cell, outcome) in handle.join().expect("sweep worker panicked") {
                results[cell] = Some(outcome);
            }
        }
    });

    let mut per_alpha_scores: Vec<Vec<f64>> = vec![Vec::with_capacity(n); grid.len()];
    let mut per_alpha_metrics: Vec<Vec<MetricValues>> = vec![Vec::with_capacity(n); grid.len()];
    for (cell, outcome) in results.into_iter().enumerate() {
        let value = outcome.expect("all cells evaluated")?;
        per_alpha_scores[cell / n].push(value.score);
        per_alpha_metrics[cell / n].push(value.metrics);
    }

    let mut sample_images = Vec::new();
    if let Some((dir, count)) = save_samples {
        std::fs::create_dir_all(dir)?;
        for (ai, alpha) in grid.iter().enumerate() {
            let mut paths = Vec::new();
            for (si, sample) in samples.iter().take(count).enumerate() {
                let image = render(*alpha, sample)?;
                let path = dir.join(format!("sample_a{ai:02}_s{si:02}.png"));
                save_png(&image, &path)?;
                paths.push(path);
            }
            sample_images.push((*alpha, paths));
        }
    }

    let score: Vec<(f64, f64)> = per_alpha_scores
        .iter()
        .map(|scores| {
            let (mean, std) = mean_std(scores);
            (mean.expect("non-empty z-set"), std.expect("non-empty z-set"))
        })
        .collect();
    let groups: Vec<(f64, Vec<MetricValues>)> =
        grid.iter().copied().zip(per_alpha_metrics).collect();
    let metrics = metric_report(&groups)?;

    Ok(SweepReport { alpha_grid: grid.to_vec(), score, metrics, sample_images })
}
