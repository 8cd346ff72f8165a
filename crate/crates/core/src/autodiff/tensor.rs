//! Dense f64 tensors and the primitive op set.
//!
//! A tensor is a shape plus row-major values, optionally tracked on a tape.
//! Ops validate shapes, compute the forward value, check finiteness, and
//! record themselves when any input is tracked. Gradient flows only to
//! tracked inputs; untracked operands act as constants.

use std::sync::Arc;

use super::tape::{Op, Tape};
use super::AdError;

#[derive(Clone)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Arc<Vec<f64>>,
    pub(super) trace: Option<(Tape, usize)>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .field("tracked", &self.trace.is_some())
            .finish()
    }
}

impl Tensor {
    /// New untracked tensor. Validates the shape/data length invariant and
    /// rejects non-finite values.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Tensor, AdError> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(AdError::InvalidShape { shape, len: data.len() });
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(AdError::NonFinite { op: "new" });
        }
        Ok(Tensor { shape, data: Arc::new(data), trace: None })
    }

    /// 1-D tensor from a vector.
    pub fn from_vec(data: Vec<f64>) -> Result<Tensor, AdError> {
        Tensor::new(vec![data.len()], data)
    }

    /// Untracked tensor sharing an existing allocation (no copy). The caller
    /// vouches the values were validated when the allocation was built.
    pub fn from_arc(shape: Vec<usize>, data: Arc<Vec<f64>>) -> Result<Tensor, AdError> {
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(AdError::InvalidShape { shape, len: data.len() });
        }
        Ok(Tensor { shape, data, trace: None })
    }

    /// Scalar as a length-1 tensor.
    pub fn scalar(v: f64) -> Result<Tensor, AdError> {
        Tensor::new(vec![1], vec![v])
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let numel: usize = shape.iter().product();
        Tensor { shape, data: Arc::new(vec![0.0; numel]), trace: None }
    }

    pub fn fill(shape: Vec<usize>, v: f64) -> Result<Tensor, AdError> {
        let numel: usize = shape.iter().product();
        Tensor::new(shape, vec![v; numel])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_tracked(&self) -> bool {
        self.trace.is_some()
    }

    /// Value of a length-1 tensor.
    pub fn item(&self) -> Result<f64, AdError> {
        if self.len() == 1 {
            Ok(self.data[0])
        } else {
            Err(AdError::NotScalar(self.shape.clone()))
        }
    }

    /// Detached copy: same values, no tape.
    pub fn detach(&self) -> Tensor {
        Tensor { shape: self.shape.clone(), data: Arc::clone(&self.data), trace: None }
    }

    pub(super) fn shared_data(&self) -> Arc<Vec<f64>> {
        Arc::clone(&self.data)
    }

    pub(super) fn traced(shape: Vec<usize>, data: Arc<Vec<f64>>, trace: Option<(Tape, usize)>) -> Tensor {
        Tensor { shape, data, trace }
    }
}

/// Resolves the common tape of a set of operands, if any is tracked.
fn joint_tape(inputs: &[&Tensor]) -> Result<Option<Tape>, AdError> {
    let mut found: Option<Tape> = None;
    for t in inputs {
        if let Some((tape, _)) = &t.trace {
            match &found {
                None => found = Some(tape.clone()),
                Some(prev) => {
                    if !Tape::same(prev, tape) {
                        return Err(AdError::MixedTapes);
                    }
                }
            }
        }
    }
    Ok(found)
}

fn node_of(t: &Tensor) -> Option<usize> {
    t.trace.as_ref().map(|(_, id)| *id)
}

fn check_finite(op: &'static str, vals: &[f64]) -> Result<(), AdError> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(AdError::NonFinite { op })
    }
}

fn same_shape(op: &'static str, a: &Tensor, b: &Tensor) -> Result<(), AdError> {
    if a.shape == b.shape {
        Ok(())
    } else {
        Err(AdError::ShapeMismatch {
            op,
            details: format!("{:?} vs {:?}", a.shape, b.shape),
        })
    }
}

/// Builds the output tensor, recording `op` when the result is tracked.
fn emit(
    op_name: &'static str,
    tape: Option<Tape>,
    shape: Vec<usize>,
    vals: Vec<f64>,
    op: impl FnOnce() -> Op,
) -> Result<Tensor, AdError> {
    check_finite(op_name, &vals)?;
    let data = Arc::new(vals);
    let trace = match tape {
        Some(tape) => {
            let id = tape.push(op());
            Some((tape, id))
        }
        None => None,
    };
    Ok(Tensor::traced(shape, data, trace))
}

impl Tensor {
    pub fn add(&self, other: &Tensor) -> Result<Tensor, AdError> {
        same_shape("add", self, other)?;
        let tape = joint_tape(&[self, other])?;
        let vals = self.data.iter().zip(other.data.iter()).map(|(a, b)| a + b).collect();
        emit("add", tape, self.shape.clone(), vals, || Op::Add {
            a: node_of(self),
            b: node_of(other),
        })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor, AdError> {
        same_shape("sub", self, other)?;
        let tape = joint_tape(&[self, other])?;
        let vals = self.data.iter().zip(other.data.iter()).map(|(a, b)| a - b).collect();
        emit("sub", tape, self.shape.clone(), vals, || Op::Sub {
            a: node_of(self),
            b: node_of(other),
        })
    }

    /// Elementwise product.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor, AdError> {
        same_shape("mul", self, other)?;
        let tape = joint_tape(&[self, other])?;
        let vals = self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).collect();
        emit("mul", tape, self.shape.clone(), vals, || Op::Mul {
            a: node_of(self),
            b: node_of(other),
            a_vals: self.shared_data(),
            b_vals: other.shared_data(),
        })
    }

    /// Multiply by a plain scalar constant.
    pub fn scale(&self, c: f64) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals = self.data.iter().map(|a| a * c).collect();
        emit("scale", tape, self.shape.clone(), vals, || Op::Scale {
            x: node_of(self).expect("tracked"),
            c,
        })
    }

    /// Matrix product of two 2-D tensors: (m,k) x (k,n) -> (m,n).
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor, AdError> {
        let bad = |details: String| AdError::ShapeMismatch { op: "matmul", details };
        if self.shape.len() != 2 || other.shape.len() != 2 {
            return Err(bad(format!("need 2-D operands, got {:?} and {:?}", self.shape, other.shape)));
        }
        let (m, k) = (self.shape[0], self.shape[1]);
        let (k2, n) = (other.shape[0], other.shape[1]);
        if k != k2 {
            return Err(bad(format!("inner dims {k} vs {k2}")));
        }
        let tape = joint_tape(&[self, other])?;
        let mut vals = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let row = &other.data[p * n..(p + 1) * n];
                let out = &mut vals[i * n..(i + 1) * n];
                for j in 0..n {
                    out[j] += a * row[j];
                }
            }
        }
        emit("matmul", tape, vec![m, n], vals, || Op::Matmul {
            a: node_of(self),
            b: node_of(other),
            a_vals: self.shared_data(),
            b_vals: other.shared_data(),
            m,
            k,
            n,
        })
    }

    pub fn tanh(&self) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals: Vec<f64> = self.data.iter().map(|a| a.tanh()).collect();
        let out = Arc::new(vals);
        let trace = tape.map(|tape| {
            let id = tape.push(Op::Tanh { x: node_of(self).expect("tracked"), y_vals: Arc::clone(&out) });
            (tape, id)
        });
        Ok(Tensor::traced(self.shape.clone(), out, trace))
    }

    pub fn sigmoid(&self) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals: Vec<f64> = self.data.iter().map(|a| sigmoid_scalar(*a)).collect();
        let out = Arc::new(vals);
        let trace = tape.map(|tape| {
            let id = tape.push(Op::Sigmoid { x: node_of(self).expect("tracked"), y_vals: Arc::clone(&out) });
            (tape, id)
        });
        Ok(Tensor::traced(self.shape.clone(), out, trace))
    }

    /// Subgradient at 0 is 0.
    pub fn relu(&self) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals = self.data.iter().map(|a| a.max(0.0)).collect();
        emit("relu", tape, self.shape.clone(), vals, || Op::Relu {
            x: node_of(self).expect("tracked"),
            x_vals: self.shared_data(),
        })
    }

    pub fn square(&self) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals = self.data.iter().map(|a| a * a).collect();
        emit("square", tape, self.shape.clone(), vals, || Op::Square {
            x: node_of(self).expect("tracked"),
            x_vals: self.shared_data(),
        })
    }

    pub fn exp(&self) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals: Vec<f64> = self.data.iter().map(|a| a.exp()).collect();
        check_finite("exp", &vals)?;
        let out = Arc::new(vals);
        let trace = tape.map(|tape| {
            let id = tape.push(Op::Exp { x: node_of(self).expect("tracked"), y_vals: Arc::clone(&out) });
            (tape, id)
        });
        Ok(Tensor::traced(self.shape.clone(), out, trace))
    }

    /// Natural log; domain (0, inf), gradient 1/x.
    pub fn ln(&self) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals: Vec<f64> = self.data.iter().map(|a| a.ln()).collect();
        check_finite("ln", &vals)?;
        let out = Arc::new(vals);
        let trace = tape.map(|tape| {
            let id = tape.push(Op::Ln { x: node_of(self).expect("tracked"), x_vals: self.shared_data() });
            (tape, id)
        });
        Ok(Tensor::traced(self.shape.clone(), out, trace))
    }

    /// Gradient is 1/(2*sqrt(x)); callers regularize away from 0.
    pub fn sqrt(&self) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals: Vec<f64> = self.data.iter().map(|a| a.sqrt()).collect();
        check_finite("sqrt", &vals)?;
        let out = Arc::new(vals);
        let trace = tape.map(|tape| {
            let id = tape.push(Op::Sqrt { x: node_of(self).expect("tracked"), y_vals: Arc::clone(&out) });
            (tape, id)
        });
        Ok(Tensor::traced(self.shape.clone(), out, trace))
    }

    /// Sum of all elements, as a scalar.
    pub fn sum(&self) -> Result<Tensor, AdError> {
        let tape = joint_tape(&[self])?;
        let vals = vec![self.data.iter().sum()];
        emit("sum", tape, vec![1], vals, || Op::Sum {
            x: node_of(self).expect("tracked"),
            n: self.len(),
        })
    }

    /// Mean of all elements, as a scalar.
    pub fn mean(&self) -> Result<Tensor, AdError> {
        if self.is_empty() {
            return Err(AdError::ShapeMismatch { op: "mean", details: "empty tensor".into() });
        }
        let tape = joint_tape(&[self])?;
        let n = self.len();
        let vals = vec![self.data.iter().sum::<f64>() / n as f64];
        emit("mean", tape, vec![1], vals, || Op::Mean {
            x: node_of(self).expect("tracked"),
            n,
        })
    }

    /// Clamp to [lo, hi]. Gradient outside the bounds is 0; the boundary
    /// itself passes gradient through.
    pub fn clamp(&self, lo: f64, hi: f64) -> Result<Tensor, AdError> {
        if lo > hi {
            return Err(AdError::ShapeMismatch { op: "clamp", details: format!("lo {lo} > hi {hi}") });
        }
        let tape = joint_tape(&[self])?;
        let vals = self.data.iter().map(|a| a.clamp(lo, hi)).collect();
        emit("clamp", tape, self.shape.clone(), vals, || Op::Clamp {
            x: node_of(self).expect("tracked"),
            lo,
            hi,
            x_vals: self.shared_data(),
        })
    }

    /// Concatenation of 1-D tensors (flattened in order).
    pub fn concat(parts: &[&Tensor]) -> Result<Tensor, AdError> {
        if parts.is_empty() {
            return Err(AdError::Arity { op: "concat", expected: 1, got: 0 });
        }
        let tape = joint_tape(parts)?;
        let total: usize = parts.iter().map(|t| t.len()).sum();
        let mut vals = Vec::with_capacity(total);
        for t in parts {
            vals.extend_from_slice(&t.data);
        }
        emit("concat", tape, vec![total], vals, || Op::Concat {
            parts: parts.iter().map(|t| (node_of(t), t.len())).collect(),
        })
    }

    /// Contiguous slice of the flattened data, as a 1-D tensor.
    pub fn slice(&self, start: usize, len: usize) -> Result<Tensor, AdError> {
        if start + len > self.len() {
            return Err(AdError::ShapeMismatch {
                op: "slice",
                details: format!("[{start}, {}) out of {}", start + len, self.len()),
            });
        }
        let tape = joint_tape(&[self])?;
        let vals = self.data[start..start + len].to_vec();
        emit("slice", tape, vec![len], vals, || Op::Slice {
            x: node_of(self).expect("tracked"),
            start,
            len,
            x_len: self.len(),
        })
    }

    /// Reinterpret the flat data under a new shape with the same element count.
    pub fn reshape(&self, shape: Vec<usize>) -> Result<Tensor, AdError> {
        let numel: usize = shape.iter().product();
        if numel != self.len() {
            return Err(AdError::ShapeMismatch {
                op: "reshape",
                details: format!("{:?} -> {:?}", self.shape, shape),
            });
        }
        let tape = joint_tape(&[self])?;
        let data = Arc::clone(&self.data);
        let trace = tape.map(|tape| {
            let id = tape.push(Op::Reshape { x: node_of(self).expect("tracked") });
            (tape, id)
        });
        Ok(Tensor::traced(shape, data, trace))
    }
}

/// Numerically stable scalar sigmoid (shared with plain-f64 paths).
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Primitive op identifiers for the generic [`apply`] entry point.
#[derive(Clone, Debug, PartialEq)]
pub enum PrimitiveOp {
    Add,
    Sub,
    Mul,
    Scale(f64),
    Matmul,
    Tanh,
    Relu,
    Sigmoid,
    Square,
    Exp,
    Ln,
    Sqrt,
    Sum,
    Mean,
    Concat,
    Clamp(f64, f64),
    Slice(usize, usize),
    Reshape(Vec<usize>),
}

/// Applies a primitive by id. Thin dispatch over the `Tensor` methods.
pub fn apply(op: &PrimitiveOp, inputs: &[&Tensor]) -> Result<Tensor, AdError> {
    let unary = |name: &'static str| -> Result<&Tensor, AdError> {
        if inputs.len() == 1 {
            Ok(inputs[0])
        } else {
            Err(AdError::Arity { op: name, expected: 1, got: inputs.len() })
        }
    };
    let binary = |name: &'static str| -> Result<(&Tensor, &Tensor), AdError> {
        if inputs.len() == 2 {
            Ok((inputs[0], inputs[1]))
        } else {
            Err(AdError::Arity { op: name, expected: 2, got: inputs.len() })
        }
    };
    match op {
        PrimitiveOp::Add => binary("add").and_then(|(a, b)| a.add(b)),
        PrimitiveOp::Sub => binary("sub").and_then(|(a, b)| a.sub(b)),
        PrimitiveOp::Mul => binary("mul").and_then(|(a, b)| a.mul(b)),
        PrimitiveOp::Scale(c) => unary("scale").and_then(|x| x.scale(*c)),
        PrimitiveOp::Matmul => binary("matmul").and_then(|(a, b)| a.matmul(b)),
        PrimitiveOp::Tanh => unary("tanh").and_then(|x| x.tanh()),
        PrimitiveOp::Relu => unary("relu").and_then(|x| x.relu()),
        PrimitiveOp::Sigmoid => unary("sigmoid").and_then(|x| x.sigmoid()),
        PrimitiveOp::Square => unary("square").and_then(|x| x.square()),
        PrimitiveOp::Exp => unary("exp").and_then(|x| x.exp()),
        PrimitiveOp::Ln => unary("ln").and_then(|x| x.ln()),
        PrimitiveOp::Sqrt => unary("sqrt").and_then(|x| x.sqrt()),
        PrimitiveOp::Sum => unary("sum").and_then(|x| x.sum()),
        PrimitiveOp::Mean => unary("mean").and_then(|x| x.mean()),
        PrimitiveOp::Concat => Tensor::concat(inputs),
        PrimitiveOp::Clamp(lo, hi) => unary("clamp").and_then(|x| x.clamp(*lo, *hi)),
        PrimitiveOp::Slice(start, len) => unary("slice").and_then(|x| x.slice(*start, *len)),
        PrimitiveOp::Reshape(shape) => unary("reshape").and_then(|x| x.reshape(shape.clone())),
    }
}
