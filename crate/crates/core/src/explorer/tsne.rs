//! Exact t-SNE (O(n^2), desk scale).
//!
//! Conditional affinities are calibrated per row by binary search on the
//! bandwidth so the row entropy hits log2(perplexity); the symmetrized,
//! floored affinities drive momentum gradient descent on a 2-D layout with
//! early exaggeration. The KL trace is recorded against the unexaggerated
//! affinities every iteration.

use super::{EmbedError, EmbeddingConfig};
use crate::rng::{keyed, normal_vec, Stream};

/// Symmetrized affinities, row-major n x n, diagonal 0, floored at 1e-12.
#[derive(Clone, Debug)]
pub struct Affinities {
    pub n: usize,
    pub p: Vec<f64>,
    /// Rows whose bandwidth search did not converge (boundary sigma used).
    pub calibration_failures: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TsneResult {
    pub embedding: Vec<[f64; 2]>,
    /// KL divergence (nats, vs the true affinities) after every iteration.
    pub kl_trace: Vec<f64>,
    pub calibration_failures: Vec<usize>,
}

const P_FLOOR: f64 = 1e-12;
const ENTROPY_TOLERANCE: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;

/// Calibrates the bandwidth for one row of squared distances. `row[i]` is
/// ignored (the self-affinity is zero). Returns `(sigma, conditional row,
/// converged)`; a non-converged search reports the boundary sigma it reached.
pub fn perplexity_calibration(sq_dist_row: &[f64], i: usize, perplexity: f64) -> (f64, Vec<f64>, bool) {
    let n = sq_dist_row.len();
    let target = perplexity.log2();
    // Shift by the smallest non-self distance so exp never fully underflows.
    let shift = sq_dist_row
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);

    let mut beta = 1.0f64;
    let mut beta_lo = f64::NEG_INFINITY;
    let mut beta_hi = f64::INFINITY;
    let mut row = vec![0.0; n];
    let mut converged = false;

    for _ in 0..MAX_BISECTIONS {
        let mut sum = 0.0;
        for j in 0..n {
            if j == i {
                row[j] = 0.0;
            } else {
                row[j] = (-beta * (sq_dist_row[j] - shift)).exp();
                sum += row[j];
            }
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
        let entropy_bits: f64 =
            -row.iter().filter(|p| **p > 0.0).map(|p| p * p.log2()).sum::<f64>();

        let diff = entropy_bits - target;
        if diff.abs() < ENTROPY_TOLERANCE {
            converged = true;
            break;
        }
        if diff > 0.0 {
            // Entropy too high: narrow the kernel.
            beta_lo = beta;
            beta = if beta_hi.is_finite() { 0.5 * (beta + beta_hi) } else { beta * 2.0 };
        } else {
            beta_hi = beta;
            beta = if beta_lo.is_finite() { 0.5 * (beta + beta_lo) } else { beta * 0.5 };
        }
    }
    ((0.5 / beta).sqrt(), row, converged)
}

/// Conditional rows calibrated to `perplexity`, then symmetrized:
/// `P = (P(j|i) + P(i|j)) / 2n`, floored at 1e-12 off the diagonal.
pub fn compute_affinities(x: &[Vec<f64>], perplexity: f64) -> Result<Affinities, EmbedError> {
    let n = x.len();
    if n < 4 {
        return Err(EmbedError::TooFewPoints { min: 4, got: n });
    }
    if !(perplexity >= 1.0) || perplexity >= (n - 1) as f64 / 3.0 {
        return Err(EmbedError::PerplexityTooLarge { perplexity, n });
    }
    let d = x[0].len();
    if x.iter().any(|row| row.len() != d) {
        return Err(EmbedError::Mismatch("ragged input matrix".into()));
    }

    let mut sq = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let dist: f64 =
                x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            sq[i * n + j] = dist;
            sq[j * n + i] = dist;
        }
    }

    let mut conditional = vec![0.0; n * n];
    let mut calibration_failures = Vec::new();
    for i in 0..n {
        let (_, row, converged) = perplexity_calibration(&sq[i * n..(i + 1) * n], i, perplexity);
        if !converged {
            calibration_failures.push(i);
        }
        conditional[i * n..(i + 1) * n].copy_from_slice(&row);
    }

    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = (conditional[i * n + j] + conditional[j * n + i]) / (2.0 * n as f64);
                p[i * n + j] = v.max(P_FLOOR);
            }
        }
    }
    Ok(Affinities { n, p, calibration_failures })
}

/// PCA-free t-SNE on raw vectors. `keys` identify points across runs
/// (defaulting to the row index): the initial layout is seeded per key and
/// every floating-point reduction runs in ascending key order, so permuting
/// rows together with their (unique) keys permutes the embedding
/// bit-identically.
pub fn tsne_embed(
    x: &[Vec<f64>],
    config: &EmbeddingConfig,
    keys: Option<&[u64]>,
) -> Result<TsneResult, EmbedError> {
    if let Some(keys) = keys {
        if keys.len() != x.len() {
            return Err(EmbedError::Mismatch(format!(
                "{} keys for {} points",
                keys.len(),
                x.len()
            )));
        }
    }
    let key_of = |i: usize| keys.map(|k| k[i]).unwrap_or(i as u64);
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by_key(|&i| (key_of(i), i));

    let x_canonical: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let keys_canonical: Vec<u64> = order.iter().map(|&i| key_of(i)).collect();

    let mut affinities = compute_affinities(&x_canonical, config.perplexity)?;
    affinities.calibration_failures =
        affinities.calibration_failures.iter().map(|&a| order[a]).collect();

    let canonical = tsne_embed_precomputed(&affinities, config, Some(&keys_canonical))?;

    let mut embedding = vec![[0.0f64; 2]; x.len()];
    for (a, &i) in order.iter().enumerate() {
        embedding[i] = canonical.embedding[a];
    }
    Ok(TsneResult {
        embedding,
        kl_trace: canonical.kl_trace,
        calibration_failures: canonical.calibration_failures,
    })
}

/// Descent on precomputed affinities.
///
/// Internally the points are processed in ascending key order, so every
/// floating-point reduction happens in a row-order-independent sequence:
/// permuting the input rows together with their keys permutes the embedding
/// bit-identically. Keys should be unique for that contract to be exact.
pub fn tsne_embed_precomputed(
    affinities: &Affinities,
    config: &EmbeddingConfig,
    keys: Option<&[u64]>,
) -> Result<TsneResult, EmbedError> {
    let n = affinities.n;
    if let Some(keys) = keys {
        if keys.len() != n {
            return Err(EmbedError::Mismatch(format!(
                "{} keys for {n} points",
                keys.len()
            )));
        }
    }
    let key_of = |i: usize| keys.map(|k| k[i]).unwrap_or(i as u64);

    // Canonical processing order: ascending key, input position on ties.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (key_of(i), i));
    let mut p = vec![0.0; n * n];
    for (a, &i) in order.iter().enumerate() {
        for (b, &j) in order.iter().enumerate() {
            p[a * n + b] = affinities.p[i * n + j];
        }
    }
    let affinities = Affinities {
        n,
        p,
        calibration_failures: affinities.calibration_failures.clone(),
    };

    // Initial layout ~ N(0, 1e-4) per coordinate, keyed by point identity.
    let mut y: Vec<[f64; 2]> = order
        .iter()
        .map(|&i| {
            let mut rng = keyed(config.seed, Stream::EmbedInit, key_of(i));
            let draw = normal_vec(&mut rng, 2);
            [draw[0] * 1e-2, draw[1] * 1e-2]
        })
        .collect();

    let mut velocity = vec![[0.0f64; 2]; n];
    let mut num = vec![0.0f64; n * n];
    let mut kl_trace = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        let exaggeration = if iteration < config.exaggeration_iters {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iteration < config.momentum_switch_iter {
            config.initial_momentum
        } else {
            config.final_momentum
        };

        // Student-t numerators and their sum.
        let mut sum_num = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = v;
                num[j * n + i] = v;
                sum_num += 2.0 * v;
            }
        }

        let mut kl = 0.0;
        for i in 0..n {
            let mut grad = [0.0f64; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let p = affinities.p[i * n + j];
                let nu = num[i * n + j];
                let q = (nu / sum_num).max(P_FLOOR);
                let coeff = 4.0 * (exaggeration * p - q) * nu;
                grad[0] += coeff * (y[i][0] - y[j][0]);
                grad[1] += coeff * (y[i][1] - y[j][1]);
                kl += p * (p / q).ln();
            }
            velocity[i][0] = momentum * velocity[i][0] - config.learning_rate * grad[0];
            velocity[i][1] = momentum * velocity[i][1] - config.learning_rate * grad[1];
        }
        let mut mean = [0.0f64; 2];
        for i in 0..n {
            y[i][0] += velocity[i][0];
            y[i][1] += velocity[i][1];
            mean[0] += y[i][0];
            mean[1] += y[i][1];
        }
        mean[0] /= n as f64;
        mean[1] /= n as f64;
        for yi in y.iter_mut() {
            yi[0] -= mean[0];
            yi[1] -= mean[1];
            if !yi[0].is_finite() || !yi[1].is_finite() {
                return Err(EmbedError::Diverged { iteration });
            }
        }
        kl_trace.push(kl);
    }

    // Scatter back from canonical order to input order.
    let mut embedding = vec![[0.0f64; 2]; n];
    for (a, &i) in order.iter().enumerate() {
        embedding[i] = y[a];
    }

    Ok(TsneResult { embedding, kl_trace, calibration_failures: affinities.calibration_failures })
}
