//! Central finite-difference validation of reverse-mode gradients.

use super::tape::Tape;
use super::tensor::Tensor;
use super::AdError;

/// Compares the reverse-mode gradient of a scalar function against central
/// finite differences at `x`. Returns the max over coordinates of
/// `|g_ad - g_fd| / max(1, |g_ad|, |g_fd|)`.
///
/// `f` must accept both tracked and untracked tensors and be finite at every
/// probe point `x ± step*e_i`.
pub fn gradient_check<F>(f: F, x: &Tensor, step: f64) -> Result<f64, AdError>
where
    F: Fn(&Tensor) -> Result<Tensor, AdError>,
{
    if !(1e-8..=1e-4).contains(&step) {
        return Err(AdError::BadStep(step));
    }

    let tape = Tape::new();
    let xt = tape.leaf(x);
    let loss = f(&xt)?;
    if loss.len() != 1 {
        return Err(AdError::NotScalar(loss.shape().to_vec()));
    }
    let g_ad = loss.backward()?.wrt(&xt)?;

    let shape = x.shape().to_vec();
    let base = x.data().to_vec();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let mut lo = base.clone();
        let mut hi = base.clone();
        lo[i] -= step;
        hi[i] += step;
        let f_lo = f(&Tensor::new(shape.clone(), lo)?)?.item()?;
        let f_hi = f(&Tensor::new(shape.clone(), hi)?)?.item()?;
        if !f_lo.is_finite() || !f_hi.is_finite() {
            return Err(AdError::NonFinite { op: "gradient_check probe" });
        }
        let g_fd = (f_hi - f_lo) / (2.0 * step);
        let g = g_ad.data()[i];
        let err = (g - g_fd).abs() / 1.0f64.max(g.abs()).max(g_fd.abs());
        worst = worst.max(err);
    }
    Ok(worst)
}
