//! Gradient tape: op recording and the reverse sweep.

use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use super::kernels::{self, ConvDims};
use super::{same_shape, NodeRef, Tensor, TensorError};
use crate::scalar::Scalar;

static TAPE_IDS: AtomicU64 = AtomicU64::new(1);

/// One recorded operation. Parent indices refer to earlier tape nodes, so the
/// node list is topologically ordered by construction.
enum Op<S: Scalar> {
    /// Watched leaf or interned constant; distinguished by `needs_grad`.
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddScalar(usize),
    MulScalar(usize, S),
    Matmul {
        a: usize,
        b: usize,
        m: usize,
        k: usize,
        n: usize,
    },
    Conv2d {
        x: usize,
        w: usize,
        bias: Option<usize>,
        dims: ConvDims,
    },
    MaxPool2 {
        x: usize,
        argmax: Vec<u32>,
    },
    Relu(usize),
    Clamp {
        x: usize,
        lo: S,
        hi: S,
    },
    Softmax {
        x: usize,
        rows: usize,
        cols: usize,
    },
    Log(usize),
    LogSoftmax {
        x: usize,
        rows: usize,
        cols: usize,
    },
    NllPick {
        logp: usize,
        labels: Vec<usize>,
        cols: usize,
    },
    Mean(usize),
    Sum(usize),
    AddBiasRow {
        x: usize,
        bias: usize,
        rows: usize,
        cols: usize,
    },
    Reshape(usize),
}

struct Node<S: Scalar> {
    value: Vec<S>,
    needs_grad: bool,
    op: Op<S>,
}

/// Records forward operations and replays them in reverse for gradients.
///
/// A tape and the tensors attached to it are confined to one logical thread;
/// independent tapes can run in parallel without shared state.
pub struct Tape<S: Scalar> {
    id: u64,
    nodes: Vec<Node<S>>,
}

impl<S: Scalar> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> Tape<S> {
    pub fn new() -> Self {
        Tape {
            id: TAPE_IDS.fetch_add(1, Ordering::Relaxed),
            nodes: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Register a tensor as a differentiable leaf. Returns an attached copy;
    /// the tape snapshots the values, so later mutation of the original does
    /// not affect recorded history.
    pub fn watch(&mut self, t: &Tensor<S>) -> Tensor<S> {
        let node = self.push(t.data().to_vec(), true, Op::Leaf);
        Tensor::new_internal(
            t.shape().to_vec(),
            t.data().to_vec(),
            true,
            Some(NodeRef {
                tape: self.id,
                node,
            }),
        )
    }

    fn push(&mut self, value: Vec<S>, needs_grad: bool, op: Op<S>) -> usize {
        self.nodes.push(Node {
            value,
            needs_grad,
            op,
        });
        self.nodes.len() - 1
    }

    /// Resolve an op input to a node index, interning plain tensors as
    /// constant leaves so their values are available during backward.
    fn input_id(&mut self, t: &Tensor<S>) -> Result<usize, TensorError> {
        match t.node {
            Some(nref) => {
                if nref.tape != self.id {
                    return Err(TensorError::NotOnTape);
                }
                Ok(nref.node)
            }
            None => Ok(self.push(t.data().to_vec(), false, Op::Leaf)),
        }
    }

    /// Package an op result, recording it iff any input is attached here.
    fn finish(
        &mut self,
        op_name: &'static str,
        shape: Vec<usize>,
        data: Vec<S>,
        inputs: &[&Tensor<S>],
        make: impl FnOnce(&[usize]) -> Op<S>,
    ) -> Result<Tensor<S>, TensorError> {
        debug_assert!(
            data.iter().all(|v| v.is_finite()),
            "{op_name}: non-finite value in output"
        );
        if inputs.iter().any(|t| t.node.is_some()) {
            let mut ids = Vec::with_capacity(inputs.len());
            for t in inputs {
                ids.push(self.input_id(t)?);
            }
            let node = self.push(data.clone(), true, make(&ids));
            Ok(Tensor::new_internal(
                shape,
                data,
                true,
                Some(NodeRef {
                    tape: self.id,
                    node,
                }),
            ))
        } else {
            Ok(Tensor::new_internal(shape, data, false, None))
        }
    }

    // ── Elementwise ──────────────────────────────────────────────────

    pub fn add(&mut self, a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        same_shape("add", a, b)?;
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| x + y)
            .collect();
        self.finish("add", a.shape().to_vec(), data, &[a, b], |ids| {
            Op::Add(ids[0], ids[1])
        })
    }

    pub fn sub(&mut self, a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        same_shape("sub", a, b)?;
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| x - y)
            .collect();
        self.finish("sub", a.shape().to_vec(), data, &[a, b], |ids| {
            Op::Sub(ids[0], ids[1])
        })
    }

    pub fn mul(&mut self, a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        same_shape("mul", a, b)?;
        let data = a
            .data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| x * y)
            .collect();
        self.finish("mul", a.shape().to_vec(), data, &[a, b], |ids| {
            Op::Mul(ids[0], ids[1])
        })
    }

    pub fn add_scalar(&mut self, a: &Tensor<S>, c: S) -> Result<Tensor<S>, TensorError> {
        let data = a.data().iter().map(|&x| x + c).collect();
        self.finish("add_scalar", a.shape().to_vec(), data, &[a], |ids| {
            Op::AddScalar(ids[0])
        })
    }

    pub fn mul_scalar(&mut self, a: &Tensor<S>, c: S) -> Result<Tensor<S>, TensorError> {
        let data = a.data().iter().map(|&x| x * c).collect();
        self.finish("mul_scalar", a.shape().to_vec(), data, &[a], |ids| {
            Op::MulScalar(ids[0], c)
        })
    }

    pub fn relu(&mut self, a: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let data = a
            .data()
            .iter()
            .map(|&x| if x > S::zero() { x } else { S::zero() })
            .collect();
        self.finish("relu", a.shape().to_vec(), data, &[a], |ids| {
            Op::Relu(ids[0])
        })
    }

    /// Coordinate-wise clamp into `[lo, hi]`. The subgradient is 1 strictly
    /// inside the interval and 0 outside or exactly on the boundary.
    pub fn clamp(&mut self, a: &Tensor<S>, lo: S, hi: S) -> Result<Tensor<S>, TensorError> {
        let data = a
            .data()
            .iter()
            .map(|&x| {
                if x < lo {
                    lo
                } else if x > hi {
                    hi
                } else {
                    x
                }
            })
            .collect();
        self.finish("clamp", a.shape().to_vec(), data, &[a], |ids| Op::Clamp {
            x: ids[0],
            lo,
            hi,
        })
    }

    pub fn log(&mut self, a: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let data = a.data().iter().map(|&x| x.ln()).collect();
        self.finish("log", a.shape().to_vec(), data, &[a], |ids| Op::Log(ids[0]))
    }

    // ── Linear algebra ───────────────────────────────────────────────

    pub fn matmul(&mut self, a: &Tensor<S>, b: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let (ash, bsh) = (a.shape(), b.shape());
        if ash.len() != 2 || bsh.len() != 2 || ash[1] != bsh[0] {
            return Err(TensorError::ShapeMismatch {
                op: "matmul",
                lhs: ash.to_vec(),
                rhs: bsh.to_vec(),
            });
        }
        let (m, k, n) = (ash[0], ash[1], bsh[1]);
        let mut data = kernels::zeros(m * n);
        kernels::matmul_nn(a.data(), b.data(), m, k, n, &mut data);
        self.finish("matmul", vec![m, n], data, &[a, b], |ids| Op::Matmul {
            a: ids[0],
            b: ids[1],
            m,
            k,
            n,
        })
    }

    /// 2-D convolution, stride 1, symmetric zero padding, optional bias.
    pub fn conv2d(
        &mut self,
        x: &Tensor<S>,
        w: &Tensor<S>,
        bias: Option<&Tensor<S>>,
        pad: usize,
    ) -> Result<Tensor<S>, TensorError> {
        let (xs, ws) = (x.shape(), w.shape());
        if xs.len() != 4 || ws.len() != 4 || xs[1] != ws[1] {
            return Err(TensorError::ShapeMismatch {
                op: "conv2d",
                lhs: xs.to_vec(),
                rhs: ws.to_vec(),
            });
        }
        let (batch, cin, h, wd) = (xs[0], xs[1], xs[2], xs[3]);
        let (cout, kh, kw) = (ws[0], ws[2], ws[3]);
        if kh > h + 2 * pad || kw > wd + 2 * pad {
            return Err(TensorError::BadShape {
                op: "conv2d",
                expected: "kernel no larger than padded input",
                got: ws.to_vec(),
            });
        }
        if let Some(b) = bias {
            if b.shape() != [cout] {
                return Err(TensorError::ShapeMismatch {
                    op: "conv2d bias",
                    lhs: b.shape().to_vec(),
                    rhs: vec![cout],
                });
            }
        }
        let dims = ConvDims {
            batch,
            cin,
            cout,
            h,
            w: wd,
            kh,
            kw,
            pad,
            oh: h + 2 * pad - kh + 1,
            ow: wd + 2 * pad - kw + 1,
        };
        let mut data = kernels::zeros(batch * cout * dims.oh * dims.ow);
        kernels::conv2d_forward(x.data(), w.data(), bias.map(|b| b.data()), &dims, &mut data);
        let shape = vec![batch, cout, dims.oh, dims.ow];
        match bias {
            Some(b) => self.finish("conv2d", shape, data, &[x, w, b], |ids| Op::Conv2d {
                x: ids[0],
                w: ids[1],
                bias: Some(ids[2]),
                dims,
            }),
            None => self.finish("conv2d", shape, data, &[x, w], |ids| Op::Conv2d {
                x: ids[0],
                w: ids[1],
                bias: None,
                dims,
            }),
        }
    }

    /// 2x2 max pooling with stride 2 over the trailing two dimensions of a
    /// 4-D tensor; both must be even.
    pub fn maxpool2(&mut self, x: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let xs = x.shape();
        if xs.len() != 4 || xs[2] % 2 != 0 || xs[3] % 2 != 0 {
            return Err(TensorError::BadShape {
                op: "maxpool2",
                expected: "4-D tensor with even height and width",
                got: xs.to_vec(),
            });
        }
        let (planes, h, w) = (xs[0] * xs[1], xs[2], xs[3]);
        let mut data = kernels::zeros(planes * (h / 2) * (w / 2));
        let mut argmax = Vec::new();
        kernels::maxpool2_forward(x.data(), planes, h, w, &mut data, &mut argmax);
        let shape = vec![xs[0], xs[1], h / 2, w / 2];
        self.finish("maxpool2", shape, data, &[x], |ids| Op::MaxPool2 {
            x: ids[0],
            argmax,
        })
    }

    // ── Rows: softmax family and bias ────────────────────────────────

    fn rows_cols(op: &'static str, t: &Tensor<S>) -> Result<(usize, usize), TensorError> {
        let s = t.shape();
        if s.len() != 2 {
            return Err(TensorError::BadShape {
                op,
                expected: "2-D tensor",
                got: s.to_vec(),
            });
        }
        Ok((s[0], s[1]))
    }

    pub fn softmax(&mut self, x: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let (rows, cols) = Self::rows_cols("softmax", x)?;
        let mut data = kernels::zeros(rows * cols);
        kernels::softmax_rows(x.data(), rows, cols, &mut data);
        self.finish("softmax", x.shape().to_vec(), data, &[x], |ids| {
            Op::Softmax {
                x: ids[0],
                rows,
                cols,
            }
        })
    }

    pub fn log_softmax(&mut self, x: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let (rows, cols) = Self::rows_cols("log_softmax", x)?;
        let mut data = kernels::zeros(rows * cols);
        kernels::log_softmax_rows(x.data(), rows, cols, &mut data);
        self.finish("log_softmax", x.shape().to_vec(), data, &[x], |ids| {
            Op::LogSoftmax {
                x: ids[0],
                rows,
                cols,
            }
        })
    }

    /// Per-row negative picked log-probability: `out[r] = -logp[r, labels[r]]`.
    pub fn nll_pick(
        &mut self,
        logp: &Tensor<S>,
        labels: &[usize],
    ) -> Result<Tensor<S>, TensorError> {
        let (rows, cols) = Self::rows_cols("nll_pick", logp)?;
        if labels.len() != rows {
            return Err(TensorError::ShapeMismatch {
                op: "nll_pick",
                lhs: vec![rows, cols],
                rhs: vec![labels.len()],
            });
        }
        for &y in labels {
            if y >= cols {
                return Err(TensorError::LabelOutOfRange {
                    op: "nll_pick",
                    label: y,
                    classes: cols,
                });
            }
        }
        let data = labels
            .iter()
            .enumerate()
            .map(|(r, &y)| -logp.data()[r * cols + y])
            .collect();
        let labels = labels.to_vec();
        self.finish("nll_pick", vec![rows], data, &[logp], |ids| Op::NllPick {
            logp: ids[0],
            labels,
            cols,
        })
    }

    pub fn add_bias_row(
        &mut self,
        x: &Tensor<S>,
        bias: &Tensor<S>,
    ) -> Result<Tensor<S>, TensorError> {
        let (rows, cols) = Self::rows_cols("add_bias_row", x)?;
        if bias.shape() != [cols] {
            return Err(TensorError::ShapeMismatch {
                op: "add_bias_row",
                lhs: x.shape().to_vec(),
                rhs: bias.shape().to_vec(),
            });
        }
        let mut data = x.data().to_vec();
        for r in 0..rows {
            for (o, &b) in data[r * cols..(r + 1) * cols].iter_mut().zip(bias.data()) {
                *o = *o + b;
            }
        }
        self.finish("add_bias_row", x.shape().to_vec(), data, &[x, bias], |ids| {
            Op::AddBiasRow {
                x: ids[0],
                bias: ids[1],
                rows,
                cols,
            }
        })
    }

    // ── Reductions and shape ─────────────────────────────────────────

    pub fn mean(&mut self, x: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let n = x.numel();
        if n == 0 {
            return Err(TensorError::BadShape {
                op: "mean",
                expected: "nonempty tensor",
                got: x.shape().to_vec(),
            });
        }
        let inv = S::one() / S::from_usize(n).expect("size fits scalar");
        let mut acc = S::zero();
        for &v in x.data() {
            acc = acc + v;
        }
        self.finish("mean", Vec::new(), vec![acc * inv], &[x], |ids| {
            Op::Mean(ids[0])
        })
    }

    pub fn sum(&mut self, x: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let mut acc = S::zero();
        for &v in x.data() {
            acc = acc + v;
        }
        self.finish("sum", Vec::new(), vec![acc], &[x], |ids| Op::Sum(ids[0]))
    }

    pub fn reshape(
        &mut self,
        x: &Tensor<S>,
        new_shape: Vec<usize>,
    ) -> Result<Tensor<S>, TensorError> {
        if new_shape.iter().product::<usize>() != x.numel() {
            return Err(TensorError::ShapeMismatch {
                op: "reshape",
                lhs: x.shape().to_vec(),
                rhs: new_shape,
            });
        }
        let data = x.data().to_vec();
        self.finish("reshape", new_shape, data, &[x], |ids| Op::Reshape(ids[0]))
    }

    // ── Backward ─────────────────────────────────────────────────────

    /// Reverse sweep from a scalar loss. Every watched leaf gets a gradient;
    /// leaves the loss does not depend on get exact zeros.
    pub fn backward(&self, loss: &Tensor<S>) -> Result<Grads<S>, TensorError> {
        let nref = loss.node.ok_or(TensorError::NotOnTape)?;
        if nref.tape != self.id {
            return Err(TensorError::NotOnTape);
        }
        if loss.numel() != 1 {
            return Err(TensorError::LossNotScalar {
                shape: loss.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<S>>> = vec![None; self.nodes.len()];
        grads[nref.node] = Some(vec![S::one()]);

        for id in (0..=nref.node).rev() {
            if grads[id].is_none() {
                continue;
            }
            if matches!(self.nodes[id].op, Op::Leaf) {
                continue; // keep leaf gradients for lookup
            }
            let g = grads[id].take().expect("present");
            self.backward_op(id, &g, &mut grads);
        }

        Ok(Grads {
            tape: self.id,
            grads,
        })
    }

    fn backward_op(&self, id: usize, g: &[S], grads: &mut [Option<Vec<S>>]) {
        let numel = |i: usize| self.nodes[i].value.len();
        macro_rules! acc {
            ($i:expr) => {
                grads[$i].get_or_insert_with(|| vec![S::zero(); numel($i)])
            };
        }
        let ng = |i: usize| self.nodes[i].needs_grad;
        let val = |i: usize| -> &[S] { &self.nodes[i].value };

        match &self.nodes[id].op {
            Op::Leaf => unreachable!("leaves are skipped in the sweep"),
            Op::Add(a, b) => {
                if ng(*a) {
                    for (o, &gv) in acc!(*a).iter_mut().zip(g) {
                        *o = *o + gv;
                    }
                }
                if ng(*b) {
                    for (o, &gv) in acc!(*b).iter_mut().zip(g) {
                        *o = *o + gv;
                    }
                }
            }
            Op::Sub(a, b) => {
                if ng(*a) {
                    for (o, &gv) in acc!(*a).iter_mut().zip(g) {
                        *o = *o + gv;
                    }
                }
                if ng(*b) {
                    for (o, &gv) in acc!(*b).iter_mut().zip(g) {
                        *o = *o - gv;
                    }
                }
            }
            Op::Mul(a, b) => {
                if ng(*a) {
                    let bv = val(*b);
                    for ((o, &gv), &y) in acc!(*a).iter_mut().zip(g).zip(bv) {
                        *o = *o + gv * y;
                    }
                }
                if ng(*b) {
                    let av = val(*a);
                    for ((o, &gv), &x) in acc!(*b).iter_mut().zip(g).zip(av) {
                        *o = *o + gv * x;
                    }
                }
            }
            Op::AddScalar(a) => {
                if ng(*a) {
                    for (o, &gv) in acc!(*a).iter_mut().zip(g) {
                        *o = *o + gv;
                    }
                }
            }
            Op::MulScalar(a, c) => {
                if ng(*a) {
                    let c = *c;
                    for (o, &gv) in acc!(*a).iter_mut().zip(g) {
                        *o = *o + gv * c;
                    }
                }
            }
            Op::Matmul { a, b, m, k, n } => {
                if ng(*a) {
                    let bv = val(*b);
                    kernels::matmul_nt(g, bv, *m, *n, *k, acc!(*a));
                }
                if ng(*b) {
                    let av = val(*a);
                    kernels::matmul_tn(av, g, *m, *k, *n, acc!(*b));
                }
            }
            Op::Conv2d { x, w, bias, dims } => {
                if ng(*x) {
                    let wv = val(*w);
                    kernels::conv2d_backward_x(g, wv, dims, acc!(*x));
                }
                if ng(*w) {
                    let xv = val(*x);
                    kernels::conv2d_backward_w(xv, g, dims, acc!(*w));
                }
                if let Some(b) = bias {
                    if ng(*b) {
                        let plane = dims.oh * dims.ow;
                        let gb = acc!(*b);
                        for bi in 0..dims.batch {
                            for co in 0..dims.cout {
                                let gp = &g[(bi * dims.cout + co) * plane..][..plane];
                                let mut s = S::zero();
                                for &gv in gp {
                                    s = s + gv;
                                }
                                gb[co] = gb[co] + s;
                            }
                        }
                    }
                }
            }
            Op::MaxPool2 { x, argmax } => {
                if ng(*x) {
                    let gx = acc!(*x);
                    for (&src, &gv) in argmax.iter().zip(g) {
                        gx[src as usize] = gx[src as usize] + gv;
                    }
                }
            }
            Op::Relu(a) => {
                if ng(*a) {
                    let av = val(*a);
                    for ((o, &gv), &x) in acc!(*a).iter_mut().zip(g).zip(av) {
                        if x > S::zero() {
                            *o = *o + gv;
                        }
                    }
                }
            }
            Op::Clamp { x, lo, hi } => {
                if ng(*x) {
                    let xv = val(*x);
                    let (lo, hi) = (*lo, *hi);
                    for ((o, &gv), &v) in acc!(*x).iter_mut().zip(g).zip(xv) {
                        if v > lo && v < hi {
                            *o = *o + gv;
                        }
                    }
                }
            }
            Op::Softmax { x, rows, cols } => {
                if ng(*x) {
                    let y = &self.nodes[id].value;
                    let gx = acc!(*x);
                    for r in 0..*rows {
                        let yr = &y[r * cols..(r + 1) * cols];
                        let gr = &g[r * cols..(r + 1) * cols];
                        let mut dot = S::zero();
                        for (&gv, &yv) in gr.iter().zip(yr) {
                            dot = dot + gv * yv;
                        }
                        let or = &mut gx[r * cols..(r + 1) * cols];
                        for ((o, &gv), &yv) in or.iter_mut().zip(gr).zip(yr) {
                            *o = *o + yv * (gv - dot);
                        }
                    }
                }
            }
            Op::Log(a) => {
                if ng(*a) {
                    let av = val(*a);
                    for ((o, &gv), &x) in acc!(*a).iter_mut().zip(g).zip(av) {
                        *o = *o + gv / x;
                    }
                }
            }
            Op::LogSoftmax { x, rows, cols } => {
                if ng(*x) {
                    let out = &self.nodes[id].value;
                    let gx = acc!(*x);
                    for r in 0..*rows {
                        let lr = &out[r * cols..(r + 1) * cols];
                        let gr = &g[r * cols..(r + 1) * cols];
                        let mut gsum = S::zero();
                        for &gv in gr {
                            gsum = gsum + gv;
                        }
                        let or = &mut gx[r * cols..(r + 1) * cols];
                        for ((o, &gv), &lp) in or.iter_mut().zip(gr).zip(lr) {
                            *o = *o + gv - lp.exp() * gsum;
                        }
                    }
                }
            }
            Op::NllPick { logp, labels, cols } => {
                if ng(*logp) {
                    let gl = acc!(*logp);
                    for (r, &y) in labels.iter().enumerate() {
                        gl[r * cols + y] = gl[r * cols + y] - g[r];
                    }
                }
            }
            Op::Mean(a) => {
                if ng(*a) {
                    let n = numel(*a);
                    let gv = g[0] / S::from_usize(n).expect("size fits scalar");
                    for o in acc!(*a).iter_mut() {
                        *o = *o + gv;
                    }
                }
            }
            Op::Sum(a) => {
                if ng(*a) {
                    let gv = g[0];
                    for o in acc!(*a).iter_mut() {
                        *o = *o + gv;
                    }
                }
            }
            Op::AddBiasRow { x, bias, rows, cols } => {
                if ng(*x) {
                    for (o, &gv) in acc!(*x).iter_mut().zip(g) {
                        *o = *o + gv;
                    }
                }
                if ng(*bias) {
                    let gb = acc!(*bias);
                    for r in 0..*rows {
                        for (j, o) in gb.iter_mut().enumerate() {
                            *o = *o + g[r * cols + j];
                        }
                    }
                }
            }
            Op::Reshape(a) => {
                if ng(*a) {
                    for (o, &gv) in acc!(*a).iter_mut().zip(g) {
                        *o = *o + gv;
                    }
                }
            }
        }
    }
}

/// Gradients produced by one backward sweep, keyed by watched leaves.
#[derive(Debug)]
pub struct Grads<S: Scalar> {
    tape: u64,
    grads: Vec<Option<Vec<S>>>,
}

impl<S: Scalar> Grads<S> {
    /// Gradient of the loss with respect to a watched leaf. Leaves the loss
    /// never touched yield an all-zero tensor of the leaf's shape.
    pub fn wrt(&self, leaf: &Tensor<S>) -> Result<Tensor<S>, TensorError> {
        let nref = leaf.node.ok_or(TensorError::NotOnTape)?;
        if nref.tape != self.tape {
            return Err(TensorError::NotOnTape);
        }
        if !leaf.requires_grad() {
            return Err(TensorError::NotALeaf);
        }
        let data = match &self.grads[nref.node] {
            Some(g) => g.clone(),
            None => vec![S::zero(); leaf.numel()],
        };
        Tensor::from_vec(leaf.shape().to_vec(), data)
    }
}
