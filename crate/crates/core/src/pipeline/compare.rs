//! Baseline-vs-method comparison of two sweep runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::run::RunOutcome;
use super::PipelineError;
use crate::numfmt::f64_17;
use crate::svg::{line_chart, Series};

/// Parsed `sweep.csv`: alpha grid in file order plus per-(alpha, metric)
/// aggregates.
#[derive(Clone, Debug)]
pub struct SweepCsv {
    pub alpha_grid: Vec<f64>,
    /// metric -> per-alpha mean (None = all samples missing).
    pub means: BTreeMap<String, Vec<Option<f64>>>,
}

impl SweepCsv {
    pub fn score(&self) -> Result<Vec<f64>, PipelineError> {
        let means = self
            .means
            .get("score")
            .ok_or_else(|| PipelineError::Parse("sweep.csv has no score rows".into()))?;
        means
            .iter()
            .map(|m| m.ok_or_else(|| PipelineError::Parse("missing score mean".into())))
            .collect()
    }

    pub fn spread(&self) -> Result<f64, PipelineError> {
        let score = self.score()?;
        Ok(score.last().unwrap_or(&0.0) - score.first().unwrap_or(&0.0))
    }
}

/// Reads the `alpha,metric,mean,std,n_missing` table written by sweep runs.
pub fn read_sweep_csv(path: &Path) -> Result<SweepCsv, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| PipelineError::MissingInput(format!("{}: {e}", path.display())))?;
    let mut alpha_grid: Vec<f64> = Vec::new();
    let mut rows: Vec<(f64, String, Option<f64>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 {
            if line != crate::metrics::REPORT_HEADER {
                return Err(PipelineError::Parse(format!(
                    "unexpected sweep header '{line}'"
                )));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(PipelineError::Parse(format!("row {}: want 5 fields", idx + 1)));
        }
        let alpha: f64 = fields[0]
            .parse()
            .map_err(|e| PipelineError::Parse(format!("row {}: alpha: {e}", idx + 1)))?;
        let mean = if fields[2].is_empty() {
            None
        } else {
            Some(
                fields[2]
                    .parse::<f64>()
                    .map_err(|e| PipelineError::Parse(format!("row {}: mean: {e}", idx + 1)))?,
            )
        };
        if !alpha_grid.contains(&alpha) {
            alpha_grid.push(alpha);
        }
        rows.push((alpha, fields[1].to_string(), mean));
    }

    let mut means: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (alpha, metric, mean) in rows {
        let slot = means
            .entry(metric)
            .or_insert_with(|| vec![None; alpha_grid.len()]);
        let idx = alpha_grid.iter().position(|a| *a == alpha).expect("alpha gathered");
        slot[idx] = mean;
    }
    Ok(SweepCsv { alpha_grid, means })
}

/// Compares two sweep runs over identical grids: per-alpha deltas per metric,
/// spread statistics, and an overlaid score plot. Grid mismatch produces no
/// output.
pub fn compare_runs(
    run_a: &Path,
    run_b: &Path,
    out_dir: &Path,
) -> Result<RunOutcome, PipelineError> {
    let a = read_sweep_csv(&run_a.join("sweep.csv"))?;
    let b = read_sweep_csv(&run_b.join("sweep.csv"))?;
    if a.alpha_grid.len() != b.alpha_grid.len()
        || a.alpha_grid.iter().zip(&b.alpha_grid).any(|(x, y)| x != y)
    {
        return Err(PipelineError::GridMismatch(format!(
            "{:?} vs {:?}",
            a.alpha_grid, b.alpha_grid
        )));
    }

    std::fs::create_dir_all(out_dir)?;
    let mut outputs: Vec<PathBuf> = Vec::new();

    let mut comparison = String::from("alpha,metric,mean_a,mean_b,delta\n");
    for metric in a.means.keys() {
        let empty = vec![None; a.alpha_grid.len()];
        let mas = &a.means[metric];
        let mbs = b.means.get(metric).unwrap_or(&empty);
        for (i, alpha) in a.alpha_grid.iter().enumerate() {
            let (ma, mb) = (mas[i], mbs[i]);
            comparison.push_str(&format!(
                "{},{metric},{},{},{}\n",
                f64_17(*alpha),
                ma.map(f64_17).unwrap_or_default(),
                mb.map(f64_17).unwrap_or_default(),
                ma.zip(mb).map(|(x, y)| f64_17(x - y)).unwrap_or_default(),
            ));
        }
    }
    let comparison_path = out_dir.join("comparison.csv");
    std::fs::write(&comparison_path, comparison)?;
    outputs.push(comparison_path);

    let (spread_a, spread_b) = (a.spread()?, b.spread()?);
    let summary = format!(
        "stat,run_a,run_b,delta\nscore_spread,{},{},{}\n",
        f64_17(spread_a),
        f64_17(spread_b),
        f64_17(spread_a - spread_b)
    );
    let summary_path = out_dir.join("spread_summary.csv");
    std::fs::write(&summary_path, summary)?;
    outputs.push(summary_path);

    let overlay = line_chart(
        "assessor score: run A vs run B",
        "alpha",
        "mean score",
        &a.alpha_grid,
        &[
            Series { name: "run A", values: a.score()?.into_iter().map(Some).collect() },
            Series { name: "run B", values: b.score()?.into_iter().map(Some).collect() },
        ],
    );
    let overlay_path = out_dir.join("overlay.svg");
    std::fs::write(&overlay_path, overlay)?;
    outputs.push(overlay_path);

    Ok(RunOutcome { out_dir: out_dir.to_path_buf(), outputs })
}
