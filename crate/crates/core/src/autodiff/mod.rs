//! Minimal reverse-mode automatic differentiation over dense real tensors.
//!
//! Define-by-run: a [`Tape`] records primitive ops as they execute on tracked
//! tensors, and [`Tensor::backward`] replays the tape in reverse. Everything
//! is double precision, and the tape is rebuilt per training step. Untracked
//! tensors are plain values; forward math on them is pure and thread-safe.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::gradient_check;
pub use tape::{Gradients, Tape};
pub use tensor::{apply, sigmoid_scalar, PrimitiveOp, Tensor};

/// Errors raised at op boundaries.
#[derive(Debug, thiserror::Error)]
pub enum AdError {
    #[error("{op}: shape mismatch ({details})")]
    ShapeMismatch { op: &'static str, details: String },
    #[error("{op}: produced non-finite values")]
    NonFinite { op: &'static str },
    #[error("tensor data length {len} does not match shape {shape:?}")]
    InvalidShape { shape: Vec<usize>, len: usize },
    #[error("backward called on an untracked tensor")]
    Untracked,
    #[error("operands are tracked on different tapes")]
    MixedTapes,
    #[error("{op}: expected {expected} inputs, got {got}")]
    Arity { op: &'static str, expected: usize, got: usize },
    #[error("expected a scalar tensor, got shape {0:?}")]
    NotScalar(Vec<usize>),
    #[error("gradient check step {0} outside [1e-8, 1e-4]")]
    BadStep(f64),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{normal_vec, stream, Stream};

    fn t(v: Vec<f64>) -> Tensor {
        Tensor::from_vec(v).unwrap()
    }

    #[test]
    fn matmul_identity() {
        let eye = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let m = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let out = eye.matmul(&m).unwrap();
        assert_eq!(out.data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn activations_at_zero() {
        assert_eq!(t(vec![0.0]).tanh().unwrap().data(), &[0.0]);
        assert_eq!(t(vec![0.0]).sigmoid().unwrap().data(), &[0.5]);
    }

    #[test]
    fn mean_of_four() {
        assert_eq!(t(vec![1.0, 2.0, 3.0, 4.0]).mean().unwrap().item().unwrap(), 2.5);
    }

    #[test]
    fn square_derivative_at_three() {
        let tape = Tape::new();
        let x = tape.leaf(&t(vec![3.0]));
        let y = x.square().unwrap().sum().unwrap();
        let g = y.backward().unwrap().wrt(&x).unwrap();
        assert_eq!(g.data(), &[6.0]);
    }

    #[test]
    fn tanh_derivative_at_zero() {
        let tape = Tape::new();
        let x = tape.leaf(&t(vec![0.0]));
        let y = x.tanh().unwrap().sum().unwrap();
        let g = y.backward().unwrap().wrt(&x).unwrap();
        assert_eq!(g.data(), &[1.0]);
    }

    #[test]
    fn grad_of_mean_matmul_wrt_weight() {
        // mean(W x) with W = I2, x = [1, 2]; frozen values confirmed by
        // central finite differences (step 1e-6).
        let tape = Tape::new();
        let w = tape.leaf(&Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap());
        let x = Tensor::new(vec![2, 1], vec![1.0, 2.0]).unwrap();
        let y = w.matmul(&x).unwrap().mean().unwrap();
        let g = y.backward().unwrap().wrt(&w).unwrap();
        assert_eq!(g.data(), &[0.5, 1.0, 0.5, 1.0]);

        let w0 = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let err = gradient_check(|w| w.matmul(&x)?.mean(), &w0, 1e-6).unwrap();
        assert!(err < 1e-9, "err = {err}");
    }

    #[test]
    fn untouched_leaf_gets_zero_gradient() {
        let tape = Tape::new();
        let a = tape.leaf(&t(vec![1.0, 2.0]));
        let b = tape.leaf(&t(vec![3.0, 4.0]));
        let loss = a.sum().unwrap();
        let grads = loss.backward().unwrap();
        assert_eq!(grads.wrt(&b).unwrap().data(), &[0.0, 0.0]);
    }

    #[test]
    fn backward_on_untracked_errors() {
        assert!(matches!(t(vec![1.0]).backward(), Err(AdError::Untracked)));
    }

    #[test]
    fn shape_mismatch_and_nonfinite_are_errors() {
        assert!(matches!(
            t(vec![1.0, 2.0]).add(&t(vec![1.0])),
            Err(AdError::ShapeMismatch { .. })
        ));
        assert!(matches!(t(vec![1000.0]).exp(), Err(AdError::NonFinite { .. })));
        assert!(Tensor::new(vec![3], vec![1.0]).is_err());
    }

    #[test]
    fn every_primitive_matches_finite_differences() {
        // 20 seeds per op, inputs kept away from relu/clamp kinks.
        let unary: &[(&str, fn(&Tensor) -> Result<Tensor, AdError>)] = &[
            ("tanh", |x| x.tanh()?.sum()),
            ("sigmoid", |x| x.sigmoid()?.sum()),
            ("square", |x| x.square()?.sum()),
            ("exp", |x| x.exp()?.sum()),
            ("mean", |x| x.mean()),
            ("scale", |x| x.scale(-1.7)?.sum()),
            ("relu", |x| x.relu()?.sum()),
            ("clamp", |x| x.clamp(-0.8, 0.8)?.sum()),
            ("slice", |x| x.slice(1, 3)?.sum()),
        ];
        for seed in 0..20u64 {
            let mut rng = stream(seed, Stream::Other(2));
            let mut vals = normal_vec(&mut rng, 6);
            // Push values away from 0 and +/-0.8 where relu/clamp kink.
            for v in vals.iter_mut() {
                if v.abs() < 0.05 {
                    *v += 0.1;
                }
                if (v.abs() - 0.8).abs() < 0.05 {
                    *v += 0.1;
                }
            }
            let x = t(vals.clone());
            for (name, f) in unary {
                let err = gradient_check(f, &x, 1e-6).unwrap();
                assert!(err < 1e-6, "{name} seed {seed}: err = {err}");
            }
            // sqrt and ln probed on positive inputs only.
            let pos = t(vals.iter().map(|v| v.abs() + 0.5).collect());
            let err = gradient_check(|x| x.sqrt()?.sum(), &pos, 1e-6).unwrap();
            assert!(err < 1e-6, "sqrt seed {seed}: err = {err}");
            let err = gradient_check(|x| x.ln()?.sum(), &pos, 1e-6).unwrap();
            assert!(err < 1e-6, "ln seed {seed}: err = {err}");

            // Binary ops, gradient w.r.t. the first operand.
            let other = t(normal_vec(&mut rng, 6));
            for (name, f) in [
                ("add", Box::new(|x: &Tensor| x.add(&other)?.sum()) as Box<dyn Fn(&Tensor) -> Result<Tensor, AdError>>),
                ("sub", Box::new(|x: &Tensor| x.sub(&other)?.sum())),
                ("mul", Box::new(|x: &Tensor| x.mul(&other)?.sum())),
                ("concat", Box::new(|x: &Tensor| Tensor::concat(&[x, &other])?.square()?.sum())),
            ] {
                let err = gradient_check(&*f, &x, 1e-6).unwrap();
                assert!(err < 1e-6, "{name} seed {seed}: err = {err}");
            }
            let a = Tensor::new(vec![2, 3], normal_vec(&mut rng, 6)).unwrap();
            let b = Tensor::new(vec![3, 2], normal_vec(&mut rng, 6)).unwrap();
            let err = gradient_check(|a| a.matmul(&b)?.square()?.mean(), &a, 1e-6).unwrap();
            assert!(err < 1e-6, "matmul seed {seed}: err = {err}");
        }
    }

    #[test]
    fn backward_is_linear_in_the_loss() {
        let mut rng = stream(3, Stream::Other(3));
        let vals = normal_vec(&mut rng, 8);

        let run = |mode: u8| -> Vec<f64> {
            let tape = Tape::new();
            let x = tape.leaf(&t(vals.clone()));
            let l1 = x.square().unwrap().sum().unwrap();
            let l2 = x.tanh().unwrap().mean().unwrap();
            let loss = match mode {
                0 => l1,
                1 => l2,
                _ => l1.add(&l2).unwrap(),
            };
            loss.backward().unwrap().wrt(&x).unwrap().data().to_vec()
        };
        let g1 = run(0);
        let g2 = run(1);
        let g12 = run(2);
        for i in 0..8 {
            let sum = g1[i] + g2[i];
            assert!((g12[i] - sum).abs() <= 1e-15 * sum.abs().max(1.0), "coord {i}");
        }
    }

    #[test]
    fn identical_tapes_give_bit_identical_gradients() {
        let vals = normal_vec(&mut stream(9, Stream::Other(4)), 10);
        let run = || {
            let tape = Tape::new();
            let x = tape.leaf(&t(vals.clone()));
            let h = x.tanh().unwrap().mul(&x.sigmoid().unwrap()).unwrap();
            let loss = h.square().unwrap().mean().unwrap();
            loss.backward().unwrap().wrt(&x).unwrap().data().to_vec()
        };
        let a = run();
        let b = run();
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn apply_dispatches_by_op_id() {
        let a = t(vec![1.0, 2.0]);
        let b = t(vec![3.0, 4.0]);
        let sum = apply(&PrimitiveOp::Add, &[&a, &b]).unwrap();
        assert_eq!(sum.data(), &[4.0, 6.0]);
        assert!(matches!(
            apply(&PrimitiveOp::Tanh, &[&a, &b]),
            Err(AdError::Arity { .. })
        ));
        let clamped = apply(&PrimitiveOp::Clamp(0.0, 1.5), &[&b]).unwrap();
        assert_eq!(clamped.data(), &[1.5, 1.5]);
    }

    #[test]
    fn mixed_tapes_are_rejected() {
        let t1 = Tape::new();
        let t2 = Tape::new();
        let a = t1.leaf(&t(vec![1.0]));
        let b = t2.leaf(&t(vec![2.0]));
        assert!(matches!(a.add(&b), Err(AdError::MixedTapes)));
    }
}
