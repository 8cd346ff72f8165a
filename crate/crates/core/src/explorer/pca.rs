//! PCA via symmetric eigendecomposition of the sample covariance.
//!
//! The covariance is diagonalized with cyclic Jacobi rotations (tolerance
//! 1e-12), which is deterministic and dependency-free. Components follow the
//! sign convention that each component's largest-|entry| coordinate is
//! positive.

use super::EmbedError;

#[derive(Clone, Debug)]
pub struct PcaResult {
    /// k components, each of length d, pairwise orthonormal.
    pub components: Vec<Vec<f64>>,
    /// n rows of length k: centered data projected onto the components.
    pub projected: Vec<Vec<f64>>,
    /// Eigenvalues of the sample covariance, descending.
    pub explained_variance: Vec<f64>,
    /// Eigenvalues over total variance (covariance trace).
    pub explained_variance_ratio: Vec<f64>,
    /// Column means removed before projection.
    pub mean: Vec<f64>,
}

/// Fits PCA and projects. Requires `n >= 2` and `1 <= k <= min(n-1, d)`.
pub fn pca_fit_transform(x: &[Vec<f64>], k: usize) -> Result<PcaResult, EmbedError> {
    let n = x.len();
    if n < 2 {
        return Err(EmbedError::TooFewPoints { min: 2, got: n });
    }
    let d = x[0].len();
    if x.iter().any(|row| row.len() != d) {
        return Err(EmbedError::Mismatch("ragged input matrix".into()));
    }
    if k == 0 || k > d.min(n - 1) {
        return Err(EmbedError::BadK { k, n, d });
    }

    let mut mean = vec![0.0; d];
    for row in x {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = x
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    // Sample covariance, d x d.
    let mut cov = vec![0.0; d * d];
    for row in &centered {
        for i in 0..d {
            if row[i] == 0.0 {
                continue;
            }
            for j in i..d {
                cov[i * d + j] += row[i] * row[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[i * d + j] /= denom;
            cov[j * d + i] = cov[i * d + j];
        }
    }
    let total_variance: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    if total_variance <= 1e-300 {
        return Err(EmbedError::ZeroVariance);
    }

    let (eigenvalues, eigenvectors) = jacobi_eigen(&mut cov, d);

    // Sort descending by eigenvalue.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));

    let mut components = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    for &col in order.iter().take(k) {
        let mut comp: Vec<f64> = (0..d).map(|row| eigenvectors[row * d + col]).collect();
        // Sign convention: largest-|entry| coordinate positive.
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if comp[lead] < 0.0 {
            for v in comp.iter_mut() {
                *v = -*v;
            }
        }
        explained.push(eigenvalues[col].max(0.0));
        components.push(comp);
    }

    let projected = centered
        .iter()
        .map(|row| {
            components
                .iter()
                .map(|comp| row.iter().zip(comp).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let ratio = explained.iter().map(|v| v / total_variance).collect();

    Ok(PcaResult {
        components,
        projected,
        explained_variance: explained,
        explained_variance_ratio: ratio,
        mean,
    })
}

/// Cyclic Jacobi on a symmetric matrix (in place). Returns (eigenvalues,
/// eigenvectors as columns).
fn jacobi_eigen(a: &mut [f64], d: usize) -> (Vec<f64>, Vec<f64>) {
    const TOLERANCE: f64 = 1e-12;
    const MAX_SWEEPS: usize = 100;

    let mut v = vec![0.0; d * d];
    for i in 0..d {
        v[i * d + i] = 1.0;
    }
    if d == 1 {
        return (vec![a[0]], v);
    }

    for _ in 0..MAX_SWEEPS {
        let mut off: f64 = 0.0;
        for p in 0..d - 1 {
            for q in p + 1..d {
                off += a[p * d + q].abs();
            }
        }
        if off < TOLERANCE {
            break;
        }
        for p in 0..d - 1 {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq.abs() < TOLERANCE / (d * d) as f64 {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for i in 0..d {
                    let aip = a[i * d + p];
                    let aiq = a[i * d + q];
                    a[i * d + p] = c * aip - s * aiq;
                    a[i * d + q] = s * aip + c * aiq;
                }
                for j in 0..d {
                    let apj = a[p * d + j];
                    let aqj = a[q * d + j];
                    a[p * d + j] = c * apj - s * aqj;
                    a[q * d + j] = s * apj + c * aqj;
                }
                for i in 0..d {
                    let vip = v[i * d + p];
                    let viq = v[i * d + q];
                    v[i * d + p] = c * vip - s * viq;
                    v[i * d + q] = s * vip + c * viq;
                }
            }
        }
    }
    let eigenvalues = (0..d).map(|i| a[i * d + i]).collect();
    (eigenvalues, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_vec, stream, Stream};

    #[test]
    fn line_in_2d_has_full_first_component() {
        let x: Vec<Vec<f64>> =
            (0..10).map(|i| vec![i as f64 * 3.0, i as f64 * 4.0]).collect();
        let r = pca_fit_transform(&x, 1).unwrap();
        // Component proportional to the line direction (3,4)/5.
        let c = &r.components[0];
        assert!((c[0] - 0.6).abs() < 1e-9 && (c[1] - 0.8).abs() < 1e-9, "{c:?}");
        assert!((r.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_point_set_on_x_axis() {
        let x = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
        let r = pca_fit_transform(&x, 1).unwrap();
        assert!((r.components[0][0] - 1.0).abs() < 1e-12);
        assert!(r.components[0][1].abs() < 1e-12);
    }

    #[test]
    fn random_matrix_reconstruction_and_variances() {
        // k = d: projecting and reassembling must reproduce the centered data;
        // projected variances must match the eigenvalues. The eigen-oracle is
        // brute-force power iteration with deflation.
        let mut rng = stream(13, Stream::Other(50));
        let x: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                let base = normal_vec(&mut rng, 5);
                base.iter().enumerate().map(|(i, v)| v * (i as f64 + 1.0)).collect()
            })
            .collect();
        let r = pca_fit_transform(&x, 5).unwrap();

        // Orthonormality.
        for i in 0..5 {
            for j in 0..5 {
                let dot: f64 =
                    r.components[i].iter().zip(&r.components[j]).map(|(a, b)| a * b).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-8, "({i},{j}) dot {dot}");
            }
        }

        // Reconstruction of centered rows.
        for (row, proj) in x.iter().zip(&r.projected) {
            for dim in 0..5 {
                let centered = row[dim] - r.mean[dim];
                let rebuilt: f64 =
                    (0..5).map(|k| proj[k] * r.components[k][dim]).sum();
                assert!((rebuilt - centered).abs() < 1e-9);
            }
        }

        // Projected variances equal eigenvalues.
        for k in 0..5 {
            let col: Vec<f64> = r.projected.iter().map(|p| p[k]).collect();
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let var =
                col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (col.len() - 1) as f64;
            assert!(
                (var - r.explained_variance[k]).abs() < 1e-9,
                "k={k}: {var} vs {}",
                r.explained_variance[k]
            );
        }

        // Non-increasing variances.
        for w in r.explained_variance.windows(2) {
            assert!(w[0] >= w[1] - 1e-12);
        }

        // Power-iteration oracle for the top eigenpair.
        let d = 5;
        let mut cov = vec![0.0; d * d];
        let mean: Vec<f64> = (0..d)
            .map(|j| x.iter().map(|row| row[j]).sum::<f64>() / x.len() as f64)
            .collect();
        for row in &x {
            for i in 0..d {
                for j in 0..d {
                    cov[i * d + j] += (row[i] - mean[i]) * (row[j] - mean[j]);
                }
            }
        }
        for v in cov.iter_mut() {
            *v /= (x.len() - 1) as f64;
        }
        let mut vec_est = vec![1.0; d];
        for _ in 0..10_000 {
            let mut next = vec![0.0; d];
            for i in 0..d {
                for j in 0..d {
                    next[i] += cov[i * d + j] * vec_est[j];
                }
            }
            let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in next.iter_mut() {
                *v /= norm;
            }
            vec_est = next;
        }
        let mut av = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                av[i] += cov[i * d + j] * vec_est[j];
            }
        }
        let lambda: f64 = av.iter().zip(&vec_est).map(|(a, b)| a * b).sum();
        assert!((lambda - r.explained_variance[0]).abs() < 1e-6 * lambda.max(1.0));
        let dot: f64 = vec_est.iter().zip(&r.components[0]).map(|(a, b)| a * b).sum();
        assert!(dot.abs() > 1.0 - 1e-6, "top component matches power iteration");
    }

    #[test]
    fn error_cases() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        assert!(matches!(pca_fit_transform(&x, 3), Err(EmbedError::BadK { .. })));
        assert!(matches!(
            pca_fit_transform(&x[..1], 1),
            Err(EmbedError::TooFewPoints { .. })
        ));
        let flat = vec![vec![2.0, 2.0], vec![2.0, 2.0], vec![2.0, 2.0]];
        assert!(matches!(pca_fit_transform(&flat, 1), Err(EmbedError::ZeroVariance)));
    }

    #[test]
    fn sign_convention_largest_entry_positive() {
        let mut rng = stream(14, Stream::Other(51));
        let x: Vec<Vec<f64>> = (0..12).map(|_| normal_vec(&mut rng, 4)).collect();
        let r = pca_fit_transform(&x, 3).unwrap();
        for comp in &r.components {
            let lead = comp
                .iter()
                .cloned()
                .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            assert!(lead > 0.0);
        }
    }
}
