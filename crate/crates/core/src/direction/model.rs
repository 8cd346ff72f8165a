//! Model parameter containers and the transform functions.

use rand::Rng;

use super::DirectionError;
use crate::autodiff::{AdError, Tensor};
use crate::rng::normal_vec;

/// `T(z, alpha) = z + alpha * theta`: the baseline transform along one
/// learned direction. Works on tracked and untracked tensors alike.
pub fn transform_fixed(z: &Tensor, alpha: f64, theta: &Tensor) -> Result<Tensor, AdError> {
    z.add(&theta.scale(alpha)?)
}

/// `F_z(z, alpha) = z + alpha * NN(z, eps)` evaluated with explicit net
/// parameters (tracked during training).
pub fn transform_noise(
    z: &Tensor,
    alpha: f64,
    eps: &Tensor,
    net: &DirectionNet,
    params: &Tensor,
) -> Result<Tensor, AdError> {
    z.add(&net.forward(params, z, eps)?.scale(alpha)?)
}

/// `F_y(y, alpha) = y + alpha * NN(y, eps)`: the class-vector analogue of
/// [`transform_noise`]. The output is used raw (no renormalization).
pub fn transform_class(
    y: &Tensor,
    alpha: f64,
    eps: &Tensor,
    net: &DirectionNet,
    params: &Tensor,
) -> Result<Tensor, AdError> {
    transform_noise(y, alpha, eps, net, params)
}

/// A single learned direction of unit L2 norm.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedDirection {
    pub theta: Vec<f64>,
}

impl FixedDirection {
    /// Random unit-norm direction.
    pub fn init<R: Rng>(dim: usize, rng: &mut R) -> FixedDirection {
        let mut theta = normal_vec(rng, dim);
        normalize(&mut theta);
        FixedDirection { theta }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// Renormalizes to unit L2 norm in place (no-op for the zero vector).
pub fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

/// Two affine layers with tanh between: `NN(x, eps) = W2 tanh(W1 [x; eps] + b1) + b2`.
/// Houses both the latent-code net (input = z) and the class-vector net
/// (input = y); output dimension equals the input dimension.
///
/// Parameter layout in the flat vector: `w1` (hidden x (input+noise),
/// row-major), `b1`, `w2` (input x hidden, row-major), `b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionNet {
    pub input_dim: usize,
    pub noise_dim: usize,
    pub hidden_dim: usize,
    pub params: Vec<f64>,
}

impl DirectionNet {
    /// Identity-start init: the first layer gets small random weights, the
    /// output layer starts at zero so the transform begins as the identity
    /// for every alpha.
    pub fn init<R: Rng>(input_dim: usize, noise_dim: usize, hidden_dim: usize, rng: &mut R) -> DirectionNet {
        let cat = input_dim + noise_dim;
        let mut params = vec![0.0; Self::param_count(input_dim, noise_dim, hidden_dim)];
        let scale = 1.0 / (cat as f64).sqrt();
        for p in params.iter_mut().take(hidden_dim * cat) {
            *p = rng.sample::<f64, _>(rand_distr::StandardNormal) * scale;
        }
        DirectionNet { input_dim, noise_dim, hidden_dim, params }
    }

    /// All-zero parameters; the transform is exactly the identity.
    pub fn zeros(input_dim: usize, noise_dim: usize, hidden_dim: usize) -> DirectionNet {
        DirectionNet {
            input_dim,
            noise_dim,
            hidden_dim,
            params: vec![0.0; Self::param_count(input_dim, noise_dim, hidden_dim)],
        }
    }

    pub fn param_count(input_dim: usize, noise_dim: usize, hidden_dim: usize) -> usize {
        let cat = input_dim + noise_dim;
        hidden_dim * cat + hidden_dim + input_dim * hidden_dim + input_dim
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Forward pass with explicit (possibly tracked) parameters. `params`
    /// must be the flat layout described on the type.
    pub fn forward(&self, params: &Tensor, x: &Tensor, eps: &Tensor) -> Result<Tensor, AdError> {
        let (di, dn, dh) = (self.input_dim, self.noise_dim, self.hidden_dim);
        let cat = di + dn;
        let mut off = 0;
        let w1 = params.slice(off, dh * cat)?.reshape(vec![dh, cat])?;
        off += dh * cat;
        let b1 = params.slice(off, dh)?;
        off += dh;
        let w2 = params.slice(off, di * dh)?.reshape(vec![di, dh])?;
        off += di * dh;
        let b2 = params.slice(off, di)?;

        let input = Tensor::concat(&[x, eps])?.reshape(vec![cat, 1])?;
        let h = w1.matmul(&input)?.reshape(vec![dh])?.add(&b1)?.tanh()?;
        w2.matmul(&h.reshape(vec![dh, 1])?)?.reshape(vec![di])?.add(&b2)
    }

    /// Forward pass using the stored (untracked) parameters.
    pub fn forward_plain(&self, x: &Tensor, eps: &Tensor) -> Result<Tensor, AdError> {
        let params = Tensor::from_vec(self.params.clone())?;
        self.forward(&params, x, eps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Fixed,
    Noise,
    Joint,
}

/// A trainable direction model: the learned artifact.
#[derive(Clone, Debug, PartialEq)]
pub enum DirectionModel {
    Fixed(FixedDirection),
    Noise(DirectionNet),
    Joint { z_net: DirectionNet, y_net: DirectionNet },
}

impl DirectionModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            DirectionModel::Fixed(_) => ModelKind::Fixed,
            DirectionModel::Noise(_) => ModelKind::Noise,
            DirectionModel::Joint { .. } => ModelKind::Joint,
        }
    }

    /// Fresh model with identity-start nets / random unit direction.
    pub fn init<R: Rng>(
        kind: ModelKind,
        latent_dim: usize,
        n_classes: usize,
        noise_dim: Option<usize>,
        hidden_dim: usize,
        rng: &mut R,
    ) -> DirectionModel {
        match kind {
            ModelKind::Fixed => DirectionModel::Fixed(FixedDirection::init(latent_dim, rng)),
            ModelKind::Noise => DirectionModel::Noise(DirectionNet::init(
                latent_dim,
                noise_dim.unwrap_or(latent_dim),
                hidden_dim,
                rng,
            )),
            ModelKind::Joint => {
                let z_net =
                    DirectionNet::init(latent_dim, noise_dim.unwrap_or(latent_dim), hidden_dim, rng);
                let y_net =
                    DirectionNet::init(n_classes, noise_dim.unwrap_or(n_classes), hidden_dim, rng);
                DirectionModel::Joint { z_net, y_net }
            }
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            DirectionModel::Fixed(f) => f.theta.len(),
            DirectionModel::Noise(n) => n.n_params(),
            DirectionModel::Joint { z_net, y_net } => z_net.n_params() + y_net.n_params(),
        }
    }

    /// Flat parameter vector (joint models pack z-net params then y-net).
    pub fn params_flat(&self) -> Vec<f64> {
        match self {
            DirectionModel::Fixed(f) => f.theta.clone(),
            DirectionModel::Noise(n) => n.params.clone(),
            DirectionModel::Joint { z_net, y_net } => {
                let mut v = z_net.params.clone();
                v.extend_from_slice(&y_net.params);
                v
            }
        }
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<(), DirectionError> {
        if flat.len() != self.n_params() {
            return Err(DirectionError::DimMismatch(format!(
                "expected {} params, got {}",
                self.n_params(),
                flat.len()
            )));
        }
        match self {
            DirectionModel::Fixed(f) => f.theta.copy_from_slice(flat),
            DirectionModel::Noise(n) => n.params.copy_from_slice(flat),
            DirectionModel::Joint { z_net, y_net } => {
                let nz = z_net.n_params();
                z_net.params.copy_from_slice(&flat[..nz]);
                y_net.params.copy_from_slice(&flat[nz..]);
            }
        }
        Ok(())
    }

    /// Noise-vector dimensions this model consumes per sample: (eps_z, eps_y).
    pub fn eps_dims(&self) -> (usize, usize) {
        match self {
            DirectionModel::Fixed(_) => (0, 0),
            DirectionModel::Noise(n) => (n.noise_dim, 0),
            DirectionModel::Joint { z_net, y_net } => (z_net.noise_dim, y_net.noise_dim),
        }
    }

    /// Applies the model's transform to `(z, y)` with a (possibly tracked)
    /// flat parameter tensor. Returns the transformed pair; models that do
    /// not steer `y` return it unchanged.
    pub fn transform(
        &self,
        params: &Tensor,
        z: &Tensor,
        y: &Tensor,
        alpha: f64,
        eps_z: &Tensor,
        eps_y: &Tensor,
    ) -> Result<(Tensor, Tensor), AdError> {
        match self {
            DirectionModel::Fixed(_) => Ok((transform_fixed(z, alpha, params)?, y.clone())),
            DirectionModel::Noise(net) => {
                Ok((transform_noise(z, alpha, eps_z, net, params)?, y.clone()))
            }
            DirectionModel::Joint { z_net, y_net } => {
                let nz = z_net.n_params();
                let pz = params.slice(0, nz)?;
                let py = params.slice(nz, y_net.n_params())?;
                let tz = transform_noise(z, alpha, eps_z, z_net, &pz)?;
                let ty = transform_class(y, alpha, eps_y, y_net, &py)?;
                Ok((tz, ty))
            }
        }
    }

    /// Transform with the stored parameters (no tracking).
    pub fn transform_plain(
        &self,
        z: &Tensor,
        y: &Tensor,
        alpha: f64,
        eps_z: &Tensor,
        eps_y: &Tensor,
    ) -> Result<(Tensor, Tensor), AdError> {
        let params = Tensor::from_vec(self.params_flat())?;
        self.transform(&params, z, y, alpha, eps_z, eps_y)
    }
}
