//! Reverse-mode automatic differentiation over dense float64 matrices.
//!
//! The graph is define-by-run: every forward pass builds a fresh [`Tape`],
//! records one node per primitive, and [`Value::backward`] walks the arena in
//! reverse creation order. This layout suits models whose classifier weights
//! are generated per sample, where a static graph would change shape every
//! batch.
//!
//! Supported primitives: matmul, add, subtract, elementwise multiply, relu,
//! exp, log, clamp, lgamma, digamma, sum, mean, row concatenation, row/column
//! slicing and reshape. Each has a registered backward rule; `lgamma`
//! differentiates through `digamma`, which in turn differentiates through
//! `trigamma`. Broadcasts are expressed with ones-matrix products rather than
//! dedicated primitives.
//!
//! Gradients accumulate: calling `backward` twice without a fresh tape adds
//! the second pass's gradients onto the first. Each pass is computed into
//! pass-local buffers first, so prior accumulated gradients never leak into
//! the propagation itself.
//!
//! A tape is confined to one thread (`Rc` handles are not `Send`);
//! independent tapes may run concurrently.

pub mod check;
pub mod matrix;
pub mod special;

pub use check::{grad_check, GradCheckReport};
pub use matrix::{matmul, matmul_nt, matmul_tn, Matrix};
pub use special::{digamma, lgamma, trigamma};

use crate::error::{Error, Result};
use std::cell::RefCell;
use std::rc::Rc;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Matmul(usize, usize),
    Relu(usize),
    Exp(usize),
    Ln(usize),
    Clamp(usize, f64, f64),
    Lgamma(usize),
    Digamma(usize),
    Sum(usize),
    Mean(usize),
    ConcatRows(Vec<usize>),
    SliceRows(usize, usize, usize),
    SliceCols(usize, usize, usize),
    Reshape(usize),
}

#[derive(Debug)]
struct Node {
    data: Matrix,
    grad: Matrix,
    op: Op,
}

#[derive(Debug, Default)]
struct TapeInner {
    nodes: Vec<Node>,
    /// One bool per relu/clamp element evaluated, in evaluation order. Two
    /// forward passes that took the same nonlinearity branches everywhere
    /// produce equal signatures; `grad_check` uses this to detect kink
    /// crossings.
    branch_sig: Vec<bool>,
}

/// A differentiation graph. Create values with [`Tape::leaf`], combine them
/// through [`Value`] methods, then call [`Value::backward`] on a scalar.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

/// Handle to one node of a [`Tape`]. Cheap to clone; all arithmetic methods
/// record a new node on the originating tape.
#[derive(Debug, Clone)]
pub struct Value {
    tape: Rc<RefCell<TapeInner>>,
    idx: usize,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.borrow().nodes.is_empty()
    }

    fn push(&self, data: Matrix, op: Op) -> Value {
        let mut inner = self.inner.borrow_mut();
        let idx = inner.nodes.len();
        let grad = Matrix::zeros(data.rows(), data.cols());
        inner.nodes.push(Node { data, grad, op });
        Value { tape: Rc::clone(&self.inner), idx }
    }

    /// Binds a matrix to the tape as a differentiable input.
    pub fn leaf(&self, data: Matrix) -> Value {
        self.push(data, Op::Leaf)
    }

    /// A 1×1 leaf, used for loss weights and other scalar constants.
    pub fn scalar(&self, v: f64) -> Value {
        self.leaf(Matrix::scalar(v))
    }

    /// Stacks values with equal column counts into one matrix, top to bottom.
    pub fn concat_rows(&self, parts: &[Value]) -> Value {
        assert!(!parts.is_empty(), "concat_rows needs at least one part");
        let inner = self.inner.borrow();
        let cols = inner.nodes[parts[0].idx].data.cols();
        let mut data = Vec::new();
        let mut idxs = Vec::with_capacity(parts.len());
        for p in parts {
            assert!(Rc::ptr_eq(&p.tape, &self.inner), "concat_rows across tapes");
            let m = &inner.nodes[p.idx].data;
            assert_eq!(m.cols(), cols, "concat_rows column mismatch");
            data.extend_from_slice(m.data());
            idxs.push(p.idx);
        }
        let rows = data.len() / cols;
        drop(inner);
        self.push(Matrix::from_vec(rows, cols, data), Op::ConcatRows(idxs))
    }

    /// The relu/clamp branch pattern of every forward computed so far.
    pub fn branch_signature(&self) -> Vec<bool> {
        self.inner.borrow().branch_sig.clone()
    }
}

impl Value {
    pub fn data(&self) -> Matrix {
        self.tape.borrow().nodes[self.idx].data.clone()
    }

    pub fn grad(&self) -> Matrix {
        self.tape.borrow().nodes[self.idx].grad.clone()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.borrow().nodes[self.idx].data.shape()
    }

    /// The single element of a 1×1 value.
    pub fn item(&self) -> f64 {
        let inner = self.tape.borrow();
        let m = &inner.nodes[self.idx].data;
        assert_eq!(m.shape(), (1, 1), "item() on non-scalar value");
        m.data()[0]
    }

    fn same_tape(&self, other: &Value) -> Tape {
        assert!(Rc::ptr_eq(&self.tape, &other.tape), "values from different tapes");
        Tape { inner: Rc::clone(&self.tape) }
    }

    fn tape(&self) -> Tape {
        Tape { inner: Rc::clone(&self.tape) }
    }

    fn binary(&self, other: &Value, f: impl Fn(f64, f64) -> f64, op: Op) -> Value {
        let tape = self.same_tape(other);
        let (a, b) = {
            let inner = self.tape.borrow();
            (inner.nodes[self.idx].data.clone(), inner.nodes[other.idx].data.clone())
        };
        assert_eq!(a.shape(), b.shape(), "elementwise op shape mismatch");
        let data = Matrix::from_vec(
            a.rows(),
            a.cols(),
            a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect(),
        );
        tape.push(data, op)
    }

    pub fn add(&self, other: &Value) -> Value {
        self.binary(other, |x, y| x + y, Op::Add(self.idx, other.idx))
    }

    pub fn sub(&self, other: &Value) -> Value {
        self.binary(other, |x, y| x - y, Op::Sub(self.idx, other.idx))
    }

    pub fn mul(&self, other: &Value) -> Value {
        self.binary(other, |x, y| x * y, Op::Mul(self.idx, other.idx))
    }

    pub fn matmul(&self, other: &Value) -> Value {
        let tape = self.same_tape(other);
        let data = {
            let inner = self.tape.borrow();
            matmul(&inner.nodes[self.idx].data, &inner.nodes[other.idx].data)
        };
        tape.push(data, Op::Matmul(self.idx, other.idx))
    }

    pub fn relu(&self) -> Value {
        let tape = self.tape();
        let a = self.data();
        {
            let mut inner = self.tape.borrow_mut();
            for &v in a.data() {
                inner.branch_sig.push(v > 0.0);
            }
        }
        tape.push(a.map(|v| if v > 0.0 { v } else { 0.0 }), Op::Relu(self.idx))
    }

    pub fn exp(&self) -> Value {
        let tape = self.tape();
        tape.push(self.data().map(f64::exp), Op::Exp(self.idx))
    }

    /// Natural log. Elements must be positive.
    pub fn ln(&self) -> Value {
        let tape = self.tape();
        let a = self.data();
        assert!(a.data().iter().all(|&v| v > 0.0), "ln of non-positive value");
        tape.push(a.map(f64::ln), Op::Ln(self.idx))
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Value {
        assert!(lo < hi, "clamp bounds out of order");
        let tape = self.tape();
        let a = self.data();
        {
            let mut inner = self.tape.borrow_mut();
            for &v in a.data() {
                // Strict interior counts as pass-through; the boundary itself
                // gets derivative 0, like relu at its kink.
                inner.branch_sig.push(v > lo && v < hi);
            }
        }
        tape.push(a.map(|v| v.clamp(lo, hi)), Op::Clamp(self.idx, lo, hi))
    }

    /// Elementwise ln Gamma. Elements must be positive.
    pub fn lgamma(&self) -> Value {
        let tape = self.tape();
        let a = self.data();
        assert!(
            a.data().iter().all(|&v| v > 0.0),
            "lgamma of non-positive value: invalid concentration reached the graph"
        );
        tape.push(a.map(special::lgamma_raw), Op::Lgamma(self.idx))
    }

    /// Elementwise digamma. Elements must be positive.
    pub fn digamma(&self) -> Value {
        let tape = self.tape();
        let a = self.data();
        assert!(
            a.data().iter().all(|&v| v > 0.0),
            "digamma of non-positive value: invalid concentration reached the graph"
        );
        tape.push(a.map(special::digamma_raw), Op::Digamma(self.idx))
    }

    /// Sum of all elements, as a 1×1 value.
    pub fn sum(&self) -> Value {
        let tape = self.tape();
        let s = self.data().data().iter().sum();
        tape.push(Matrix::scalar(s), Op::Sum(self.idx))
    }

    /// Mean of all elements, as a 1×1 value.
    pub fn mean(&self) -> Value {
        let tape = self.tape();
        let a = self.data();
        let s: f64 = a.data().iter().sum();
        tape.push(Matrix::scalar(s / a.len() as f64), Op::Mean(self.idx))
    }

    pub fn slice_rows(&self, start: usize, end: usize) -> Value {
        let tape = self.tape();
        let a = self.data();
        assert!(start < end && end <= a.rows(), "slice_rows range out of bounds");
        let data: Vec<f64> = (start..end).flat_map(|r| a.row(r).iter().copied()).collect();
        tape.push(
            Matrix::from_vec(end - start, a.cols(), data),
            Op::SliceRows(self.idx, start, end),
        )
    }

    pub fn slice_cols(&self, start: usize, end: usize) -> Value {
        let tape = self.tape();
        let a = self.data();
        assert!(start < end && end <= a.cols(), "slice_cols range out of bounds");
        let mut data = Vec::with_capacity(a.rows() * (end - start));
        for r in 0..a.rows() {
            data.extend_from_slice(&a.row(r)[start..end]);
        }
        tape.push(
            Matrix::from_vec(a.rows(), end - start, data),
            Op::SliceCols(self.idx, start, end),
        )
    }

    /// Same elements, new shape, row-major order preserved.
    pub fn reshape(&self, rows: usize, cols: usize) -> Value {
        let tape = self.tape();
        let a = self.data();
        assert_eq!(a.len(), rows * cols, "reshape element count mismatch");
        tape.push(Matrix::from_vec(rows, cols, a.data().to_vec()), Op::Reshape(self.idx))
    }

    /// Accumulates d(self)/d(leaf) into every node's gradient. `self` must be
    /// a 1×1 scalar.
    pub fn backward(&self) -> Result<()> {
        let mut inner = self.tape.borrow_mut();
        let shape = inner.nodes[self.idx].data.shape();
        if shape != (1, 1) {
            return Err(Error::Usage(format!(
                "backward requires a scalar loss, got a {}x{} value",
                shape.0, shape.1
            )));
        }

        let n = inner.nodes.len();
        let mut tmp: Vec<Matrix> = inner
            .nodes
            .iter()
            .map(|node| Matrix::zeros(node.data.rows(), node.data.cols()))
            .collect();
        tmp[self.idx].data_mut()[0] = 1.0;

        for i in (0..n).rev() {
            if tmp[i].data().iter().all(|&g| g == 0.0) {
                continue;
            }
            let g = tmp[i].clone();
            let op = inner.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    tmp[a].add_assign(&g);
                    tmp[b].add_assign(&g);
                }
                Op::Sub(a, b) => {
                    tmp[a].add_assign(&g);
                    for (d, s) in tmp[b].data_mut().iter_mut().zip(g.data()) {
                        *d -= s;
                    }
                }
                Op::Mul(a, b) => {
                    let (da, db) = {
                        let na = &inner.nodes[a].data;
                        let nb = &inner.nodes[b].data;
                        let da = Matrix::from_vec(
                            g.rows(),
                            g.cols(),
                            g.data().iter().zip(nb.data()).map(|(&gv, &bv)| gv * bv).collect(),
                        );
                        let db = Matrix::from_vec(
                            g.rows(),
                            g.cols(),
                            g.data().iter().zip(na.data()).map(|(&gv, &av)| gv * av).collect(),
                        );
                        (da, db)
                    };
                    tmp[a].add_assign(&da);
                    tmp[b].add_assign(&db);
                }
                Op::Matmul(a, b) => {
                    let (da, db) = {
                        let na = &inner.nodes[a].data;
                        let nb = &inner.nodes[b].data;
                        (matmul_nt(&g, nb), matmul_tn(na, &g))
                    };
                    tmp[a].add_assign(&da);
                    tmp[b].add_assign(&db);
                }
                Op::Relu(a) => {
                    let da = {
                        let na = &inner.nodes[a].data;
                        Matrix::from_vec(
                            g.rows(),
                            g.cols(),
                            g.data()
                                .iter()
                                .zip(na.data())
                                .map(|(&gv, &x)| if x > 0.0 { gv } else { 0.0 })
                                .collect(),
                        )
                    };
                    tmp[a].add_assign(&da);
                }
                Op::Exp(a) => {
                    let da = {
                        let out = &inner.nodes[i].data;
                        Matrix::from_vec(
                            g.rows(),
                            g.cols(),
                            g.data().iter().zip(out.data()).map(|(&gv, &e)| gv * e).collect(),
                        )
                    };
                    tmp[a].add_assign(&da);
                }
                Op::Ln(a) => {
                    let da = {
                        let na = &inner.nodes[a].data;
                        Matrix::from_vec(
                            g.rows(),
                            g.cols(),
                            g.data().iter().zip(na.data()).map(|(&gv, &x)| gv / x).collect(),
                        )
                    };
                    tmp[a].add_assign(&da);
                }
                Op::Clamp(a, lo, hi) => {
                    let da = {
                        let na = &inner.nodes[a].data;
                        Matrix::from_vec(
                            g.rows(),
                            g.cols(),
                            g.data()
                                .iter()
                                .zip(na.data())
                                .map(|(&gv, &x)| if x > lo && x < hi { gv } else { 0.0 })
                                .collect(),
                        )
                    };
                    tmp[a].add_assign(&da);
                }
                Op::Lgamma(a) => {
                    let da = {
                        let na = &inner.nodes[a].data;
                        Matrix::from_vec(
                            g.rows(),
                            g.cols(),
                            g.data()
                                .iter()
                                .zip(na.data())
                                .map(|(&gv, &x)| gv * special::digamma_raw(x))
                                .collect(),
                        )
                    };
                    tmp[a].add_assign(&da);
                }
                Op::Digamma(a) => {
                    let da = {
                        let na = &inner.nodes[a].data;
                        Matrix::from_vec(
                            g.rows(),
                            g.cols(),
                            g.data()
                                .iter()
                                .zip(na.data())
                                .map(|(&gv, &x)| gv * special::trigamma_raw(x))
                                .collect(),
                        )
                    };
                    tmp[a].add_assign(&da);
                }
                Op::Sum(a) => {
                    let gv = g.data()[0];
                    for d in tmp[a].data_mut() {
                        *d += gv;
                    }
                }
                Op::Mean(a) => {
                    let gv = g.data()[0] / inner.nodes[a].data.len() as f64;
                    for d in tmp[a].data_mut() {
                        *d += gv;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut row = 0;
                    for p in parts {
                        let rows = inner.nodes[p].data.rows();
                        let cols = inner.nodes[p].data.cols();
                        for r in 0..rows {
                            let src = g.row(row + r).to_vec();
                            let dst = &mut tmp[p].data_mut()[r * cols..(r + 1) * cols];
                            for (d, s) in dst.iter_mut().zip(&src) {
                                *d += s;
                            }
                        }
                        row += rows;
                    }
                }
                Op::SliceRows(a, start, _end) => {
                    let cols = g.cols();
                    for r in 0..g.rows() {
                        let src = g.row(r).to_vec();
                        let dst =
                            &mut tmp[a].data_mut()[(start + r) * cols..(start + r + 1) * cols];
                        for (d, s) in dst.iter_mut().zip(&src) {
                            *d += s;
                        }
                    }
                }
                Op::SliceCols(a, start, _end) => {
                    let pcols = inner.nodes[a].data.cols();
                    for r in 0..g.rows() {
                        for c in 0..g.cols() {
                            tmp[a].data_mut()[r * pcols + start + c] += g[(r, c)];
                        }
                    }
                }
                Op::Reshape(a) => {
                    for (d, s) in tmp[a].data_mut().iter_mut().zip(g.data()) {
                        *d += s;
                    }
                }
            }
        }

        for (node, t) in inner.nodes.iter_mut().zip(&tmp) {
            node.grad.add_assign(t);
        }
        Ok(())
    }
}
