//! The recording tape and reverse pass.
//!
//! Nodes are appended in execution order, so ids are already a topological
//! order; the backward pass walks them once in reverse, accumulating vector-
//! Jacobian products into per-node gradient slots.

use std::cell::RefCell;
use std::rc::Rc;
use std::sync::Arc;

use super::tensor::Tensor;
use super::AdError;

#[derive(Clone)]
pub(super) enum Op {
    Leaf,
    Add { a: Option<usize>, b: Option<usize> },
    Sub { a: Option<usize>, b: Option<usize> },
    Mul { a: Option<usize>, b: Option<usize>, a_vals: Arc<Vec<f64>>, b_vals: Arc<Vec<f64>> },
    Scale { x: usize, c: f64 },
    Matmul { a: Option<usize>, b: Option<usize>, a_vals: Arc<Vec<f64>>, b_vals: Arc<Vec<f64>>, m: usize, k: usize, n: usize },
    Tanh { x: usize, y_vals: Arc<Vec<f64>> },
    Relu { x: usize, x_vals: Arc<Vec<f64>> },
    Sigmoid { x: usize, y_vals: Arc<Vec<f64>> },
    Square { x: usize, x_vals: Arc<Vec<f64>> },
    Exp { x: usize, y_vals: Arc<Vec<f64>> },
    Ln { x: usize, x_vals: Arc<Vec<f64>> },
    Sqrt { x: usize, y_vals: Arc<Vec<f64>> },
    Sum { x: usize, n: usize },
    Mean { x: usize, n: usize },
    Clamp { x: usize, lo: f64, hi: f64, x_vals: Arc<Vec<f64>> },
    Concat { parts: Vec<(Option<usize>, usize)> },
    Slice { x: usize, start: usize, len: usize, x_len: usize },
    Reshape { x: usize },
}

struct Node {
    op: Op,
}

/// A recording tape. Cheap to clone (shared handle); confined to one thread.
#[derive(Clone)]
pub struct Tape {
    inner: Rc<RefCell<Vec<Node>>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl Tape {
    pub fn new() -> Tape {
        Tape { inner: Rc::new(RefCell::new(Vec::new())) }
    }

    pub(super) fn same(a: &Tape, b: &Tape) -> bool {
        Rc::ptr_eq(&a.inner, &b.inner)
    }

    /// Registers `t`'s values as a tracked leaf and returns the tracked tensor.
    pub fn leaf(&self, t: &Tensor) -> Tensor {
        let id = self.push(Op::Leaf);
        Tensor::traced(t.shape().to_vec(), t.shared_data(), Some((self.clone(), id)))
    }

    pub fn num_nodes(&self) -> usize {
        self.inner.borrow().len()
    }

    pub(super) fn push(&self, op: Op) -> usize {
        let mut nodes = self.inner.borrow_mut();
        nodes.push(Node { op });
        nodes.len() - 1
    }
}

/// Per-leaf gradients produced by a backward pass.
pub struct Gradients {
    tape: Tape,
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient with respect to a tracked tensor. Leaves the loss never
    /// touched get a zero gradient of the right shape.
    pub fn wrt(&self, t: &Tensor) -> Result<Tensor, AdError> {
        match &t.trace {
            None => Err(AdError::Untracked),
            Some((tape, id)) => {
                if !Tape::same(tape, &self.tape) {
                    return Err(AdError::MixedTapes);
                }
                match &self.grads[*id] {
                    Some(g) => Tensor::new(t.shape().to_vec(), g.clone()),
                    None => Ok(Tensor::zeros(t.shape().to_vec())),
                }
            }
        }
    }
}

impl Tensor {
    /// Reverse pass from a scalar tracked loss.
    pub fn backward(&self) -> Result<Gradients, AdError> {
        let (tape, loss_id) = match &self.trace {
            Some((tape, id)) => (tape.clone(), *id),
            None => return Err(AdError::Untracked),
        };
        if self.len() != 1 {
            return Err(AdError::NotScalar(self.shape().to_vec()));
        }
        let nodes = tape.inner.borrow();
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        grads[loss_id] = Some(vec![1.0]);

        for id in (0..=loss_id).rev() {
            let Some(g) = grads[id].take() else { continue };
            backward_op(&nodes[id].op, &g, &mut grads);
            grads[id] = Some(g);
        }
        drop(nodes);
        Ok(Gradients { tape, grads })
    }
}

fn accum(grads: &mut [Option<Vec<f64>>], id: Option<usize>, contrib: impl Fn(usize) -> f64, len: usize) {
    let Some(id) = id else { return };
    let slot = grads[id].get_or_insert_with(|| vec![0.0; len]);
    for (i, s) in slot.iter_mut().enumerate() {
        *s += contrib(i);
    }
}

fn backward_op(op: &Op, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
    match op {
        Op::Leaf => {}
        Op::Add { a, b } => {
            accum(grads, *a, |i| g[i], g.len());
            accum(grads, *b, |i| g[i], g.len());
        }
        Op::Sub { a, b } => {
            accum(grads, *a, |i| g[i], g.len());
            accum(grads, *b, |i| -g[i], g.len());
        }
        Op::Mul { a, b, a_vals, b_vals } => {
            accum(grads, *a, |i| g[i] * b_vals[i], g.len());
            accum(grads, *b, |i| g[i] * a_vals[i], g.len());
        }
        Op::Scale { x, c } => {
            accum(grads, Some(*x), |i| g[i] * c, g.len());
        }
        Op::Matmul { a, b, a_vals, b_vals, m, k, n } => {
            let (m, k, n) = (*m, *k, *n);
            if a.is_some() {
                // dA = g . B^T
                let mut da = vec![0.0; m * k];
                for i in 0..m {
                    for p in 0..k {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += g[i * n + j] * b_vals[p * n + j];
                        }
                        da[i * k + p] = acc;
                    }
                }
                accum(grads, *a, |i| da[i], m * k);
            }
            if b.is_some() {
                // dB = A^T . g
                let mut db = vec![0.0; k * n];
                for p in 0..k {
                    for i in 0..m {
                        let av = a_vals[i * k + p];
                        if av == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            db[p * n + j] += av * g[i * n + j];
                        }
                    }
                }
                accum(grads, *b, |i| db[i], k * n);
            }
        }
        Op::Tanh { x, y_vals } => {
            accum(grads, Some(*x), |i| g[i] * (1.0 - y_vals[i] * y_vals[i]), g.len());
        }
        Op::Relu { x, x_vals } => {
            accum(grads, Some(*x), |i| if x_vals[i] > 0.0 { g[i] } else { 0.0 }, g.len());
        }
        Op::Sigmoid { x, y_vals } => {
            accum(grads, Some(*x), |i| g[i] * y_vals[i] * (1.0 - y_vals[i]), g.len());
        }
        Op::Square { x, x_vals } => {
            accum(grads, Some(*x), |i| g[i] * 2.0 * x_vals[i], g.len());
        }
        Op::Exp { x, y_vals } => {
            accum(grads, Some(*x), |i| g[i] * y_vals[i], g.len());
        }
        Op::Ln { x, x_vals } => {
            accum(grads, Some(*x), |i| g[i] / x_vals[i], g.len());
        }
        Op::Sqrt { x, y_vals } => {
            accum(grads, Some(*x), |i| g[i] * 0.5 / y_vals[i], g.len());
        }
        Op::Sum { x, n } => {
            accum(grads, Some(*x), |_| g[0], *n);
        }
        Op::Mean { x, n } => {
            let inv = 1.0 / *n as f64;
            accum(grads, Some(*x), |_| g[0] * inv, *n);
        }
        Op::Clamp { x, lo, hi, x_vals } => {
            accum(
                grads,
                Some(*x),
                |i| if x_vals[i] >= *lo && x_vals[i] <= *hi { g[i] } else { 0.0 },
                g.len(),
            );
        }
        Op::Concat { parts } => {
            let mut offset = 0;
            for (id, len) in parts {
                if id.is_some() {
                    let seg = &g[offset..offset + len];
                    accum(grads, *id, |i| seg[i], *len);
                }
                offset += len;
            }
        }
        Op::Slice { x, start, len, x_len } => {
            let (start, len) = (*start, *len);
            accum(
                grads,
                Some(*x),
                move |i| {
                    if i >= start && i < start + len {
                        g[i - start]
                    } else {
                        0.0
                    }
                },
                *x_len,
            );
        }
        Op::Reshape { x } => {
            accum(grads, Some(*x), |i| g[i], g.len());
        }
    }
}
