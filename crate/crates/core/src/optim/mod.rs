//! Parameter-update rules for training direction networks.
//!
//! Rectified Adam is the primary optimizer; SGD with momentum is kept as a
//! control. Both operate on flat `f64` parameter vectors and keep their own
//! state. The paper-facing setup names only the optimizer and the 1e-3
//! learning rate; beta/epsilon defaults follow the optimizer's original
//! publication and are config-overridable.

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum OptimError {
    #[error("parameter/gradient length mismatch: {params} vs {grads}")]
    LengthMismatch { params: usize, grads: usize },
    #[error("non-finite gradient at index {0}")]
    NonFiniteGrad(usize),
    #[error("non-finite update at index {0}")]
    NonFiniteUpdate(usize),
}

/// Hyperparameters shared by both optimizers.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OptimConfig {
    pub kind: OptimKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub momentum: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum OptimKind {
    Radam,
    SgdMomentum,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            kind: OptimKind::Radam,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            momentum: 0.9,
        }
    }
}

/// Optimizer state over one flat parameter vector.
#[derive(Clone, Debug)]
pub enum Optimizer {
    Radam(RadamState),
    SgdMomentum(SgdMomentumState),
}

impl Optimizer {
    pub fn new(config: &OptimConfig, n_params: usize) -> Optimizer {
        match config.kind {
            OptimKind::Radam => Optimizer::Radam(RadamState::new(
                config.lr,
                config.beta1,
                config.beta2,
                config.eps,
                n_params,
            )),
            OptimKind::SgdMomentum => {
                Optimizer::SgdMomentum(SgdMomentumState::new(config.lr, config.momentum, n_params))
            }
        }
    }

    /// Applies one update in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), OptimError> {
        match self {
            Optimizer::Radam(s) => s.step(params, grads),
            Optimizer::SgdMomentum(s) => s.step(params, grads),
        }
    }
}

/// Rectified Adam.
///
/// Moments follow Adam; the adaptive step is rescaled by the variance
/// rectification term `r_t` once the approximated SMA length `rho_t`
/// exceeds 4, and falls back to a plain bias-corrected momentum step before
/// that.
#[derive(Clone, Debug)]
pub struct RadamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

/// SMA length `rho_t`; rectification applies when it exceeds 4.
pub fn radam_rho(t: u64, beta2: f64) -> f64 {
    let rho_inf = 2.0 / (1.0 - beta2) - 1.0;
    let b2t = beta2.powi(t as i32);
    rho_inf - 2.0 * t as f64 * b2t / (1.0 - b2t)
}

impl RadamState {
    pub fn new(lr: f64, beta1: f64, beta2: f64, eps: f64, n_params: usize) -> RadamState {
        RadamState { lr, beta1, beta2, eps, t: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), OptimError> {
        check_lengths(params, grads, self.m.len())?;
        self.t += 1;
        let t = self.t;
        let b1t = self.beta1.powi(t as i32);
        let b2t = self.beta2.powi(t as i32);
        let rho_inf = 2.0 / (1.0 - self.beta2) - 1.0;
        let rho_t = rho_inf - 2.0 * t as f64 * b2t / (1.0 - b2t);
        let rectified = rho_t > 4.0;
        let r_t = if rectified {
            (((rho_t - 4.0) * (rho_t - 2.0) * rho_inf)
                / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                .sqrt()
        } else {
            0.0
        };

        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / (1.0 - b1t);
            let update = if rectified {
                let v_hat = (self.v[i] / (1.0 - b2t)).sqrt();
                self.lr * r_t * m_hat / (v_hat + self.eps)
            } else {
                self.lr * m_hat
            };
            if !update.is_finite() {
                return Err(OptimError::NonFiniteUpdate(i));
            }
            params[i] -= update;
        }
        Ok(())
    }
}

/// Heavy-ball SGD: v <- momentum*v + g; theta <- theta - lr*v.
#[derive(Clone, Debug)]
pub struct SgdMomentumState {
    pub lr: f64,
    pub momentum: f64,
    pub velocity: Vec<f64>,
}

impl SgdMomentumState {
    pub fn new(lr: f64, momentum: f64, n_params: usize) -> SgdMomentumState {
        SgdMomentumState { lr, momentum, velocity: vec![0.0; n_params] }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), OptimError> {
        check_lengths(params, grads, self.velocity.len())?;
        for i in 0..params.len() {
            self.velocity[i] = self.momentum * self.velocity[i] + grads[i];
            let update = self.lr * self.velocity[i];
            if !update.is_finite() {
                return Err(OptimError::NonFiniteUpdate(i));
            }
            params[i] -= update;
        }
        Ok(())
    }
}

fn check_lengths(params: &[f64], grads: &[f64], state: usize) -> Result<(), OptimError> {
    if params.len() != grads.len() || params.len() != state {
        return Err(OptimError::LengthMismatch { params: params.len(), grads: grads.len() });
    }
    if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
        return Err(OptimError::NonFiniteGrad(i));
    }
    Ok(())
}
