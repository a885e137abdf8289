//! Reverse-mode tape over vector-valued nodes.
//!
//! Nodes hold whole vectors (or row-major matrices) rather than scalars, so
//! a two-layer MLP forward pass is ~10 nodes and the inner loops stay plain
//! scalar arithmetic. The op set is fixed: matrix-vector products,
//! elementwise arithmetic, the nonlinearities the policy heads need, fused
//! softmax/log-softmax, and a few reductions. Graphs are append-only DAGs;
//! `backward` walks ids in reverse insertion order, which is a valid reverse
//! topological order by construction.
//!
//! The tape is generic over the scalar type: `Tape<f64>` for gradients,
//! `Tape<Dual>` for exact Hessian-vector products (seed the parameter leaf's
//! tangents with the direction, read the tangent parts of the gradient).
//!
//! Shape errors are caller bugs, so construction asserts rather than
//! returning `Result`.

use super::scalar::Real;
use std::rc::Rc;

/// Handle to a node. Only valid for the tape that created it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Copy, Debug)]
enum Unary {
    Tanh,
    Exp,
    Ln,
    Softplus,
    Sigmoid,
    Square,
    Sqrt,
    Lgamma,
    Digamma,
}

enum Op {
    Leaf,
    /// `w` is a `(rows x cols)` matrix node, `x` a length-`cols` vector.
    MatVec { w: usize, x: usize },
    /// Constant matrix (not differentiated) times vector node.
    ConstMatVec { m: Rc<Vec<f64>>, cols: usize, x: usize },
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Neg(usize),
    Scale(usize, f64),
    AddConst(usize),
    Unary(Unary, usize),
    Softmax(usize),
    LogSoftmax(usize),
    Sum(usize),
    Dot(usize, usize),
    Gather { x: usize, idx: usize },
    Slice { x: usize, start: usize },
    Reshape(usize),
    Clamp { x: usize, lo: f64, hi: f64 },
    Min2(usize, usize),
    /// Concatenates scalar nodes into one vector node.
    Stack(Vec<usize>),
}

struct Node<S> {
    op: Op,
    value: Vec<S>,
    rows: usize,
    cols: usize,
}

pub struct Tape<S: Real> {
    nodes: Vec<Node<S>>,
}

/// Adjoints of every node after a backward pass, indexed by `Var`.
pub struct Adjoints<S>(Vec<Vec<S>>);

impl<S: Real> Adjoints<S> {
    pub fn grad(&self, v: Var) -> &[S] {
        &self.0[v.0]
    }
}

impl<S: Real> Default for Tape<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Real> Tape<S> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn len(&self, v: Var) -> usize {
        self.nodes[v.0].value.len()
    }

    pub fn value(&self, v: Var) -> &[S] {
        &self.nodes[v.0].value
    }

    /// Scalar node's value; asserts length 1.
    pub fn scalar_value(&self, v: Var) -> S {
        assert_eq!(self.len(v), 1, "scalar_value on non-scalar node");
        self.nodes[v.0].value[0]
    }

    fn push(&mut self, op: Op, value: Vec<S>, rows: usize, cols: usize) -> Var {
        debug_assert_eq!(value.len(), rows * cols);
        self.nodes.push(Node { op, value, rows, cols });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, values: Vec<S>) -> Var {
        let n = values.len();
        self.push(Op::Leaf, values, n, 1)
    }

    pub fn leaf_f64(&mut self, values: &[f64]) -> Var {
        self.leaf(values.iter().map(|&v| S::from_f64(v)).collect())
    }

    pub fn scalar(&mut self, v: f64) -> Var {
        self.leaf(vec![S::from_f64(v)])
    }

    /// View a length `rows*cols` vector node as a `(rows x cols)` matrix.
    pub fn reshape(&mut self, x: Var, rows: usize, cols: usize) -> Var {
        assert_eq!(self.len(x), rows * cols, "reshape size mismatch");
        let value = self.nodes[x.0].value.clone();
        self.push(Op::Reshape(x.0), value, rows, cols)
    }

    pub fn matvec(&mut self, w: Var, x: Var) -> Var {
        let (r, c) = (self.nodes[w.0].rows, self.nodes[w.0].cols);
        assert_eq!(self.len(x), c, "matvec: W is {r}x{c} but x has length {}", self.len(x));
        let mut out = Vec::with_capacity(r);
        {
            let wv = &self.nodes[w.0].value;
            let xv = &self.nodes[x.0].value;
            for i in 0..r {
                let row = &wv[i * c..(i + 1) * c];
                let mut acc = S::zero();
                for (a, b) in row.iter().zip(xv.iter()) {
                    acc += *a * *b;
                }
                out.push(acc);
            }
        }
        self.push(Op::MatVec { w: w.0, x: x.0 }, out, r, 1)
    }

    /// Multiply by a constant `f64` matrix that is not part of the gradient.
    pub fn const_matvec(&mut self, m: Rc<Vec<f64>>, rows: usize, cols: usize, x: Var) -> Var {
        assert_eq!(m.len(), rows * cols);
        assert_eq!(self.len(x), cols);
        let mut out = Vec::with_capacity(rows);
        {
            let xv = &self.nodes[x.0].value;
            for i in 0..rows {
                let row = &m[i * cols..(i + 1) * cols];
                let mut acc = S::zero();
                for (a, b) in row.iter().zip(xv.iter()) {
                    acc += b.mul_f64(*a);
                }
                out.push(acc);
            }
        }
        self.push(Op::ConstMatVec { m, cols, x: x.0 }, out, rows, 1)
    }

    fn binary(&mut self, a: Var, b: Var, f: impl Fn(S, S) -> S, op: Op) -> Var {
        assert_eq!(self.len(a), self.len(b), "elementwise op on mismatched lengths");
        let out: Vec<S> = self.nodes[a.0]
            .value
            .iter()
            .zip(self.nodes[b.0].value.iter())
            .map(|(&x, &y)| f(x, y))
            .collect();
        let n = out.len();
        self.push(op, out, n, 1)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x + y, Op::Add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary(a, b, |x, y| x - y, Op::Sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        assert_ne!(a, b, "mul(x, x): use square(x)");
        self.binary(a, b, |x, y| x * y, Op::Mul(a.0, b.0))
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        assert_ne!(a, b, "div(x, x) is constant 1; build it as a constant");
        self.binary(a, b, |x, y| x / y, Op::Div(a.0, b.0))
    }

    pub fn neg(&mut self, x: Var) -> Var {
        let out: Vec<S> = self.nodes[x.0].value.iter().map(|&v| -v).collect();
        let n = out.len();
        self.push(Op::Neg(x.0), out, n, 1)
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let out: Vec<S> = self.nodes[x.0].value.iter().map(|&v| v.mul_f64(c)).collect();
        let n = out.len();
        self.push(Op::Scale(x.0, c), out, n, 1)
    }

    pub fn add_const(&mut self, x: Var, c: f64) -> Var {
        let out: Vec<S> = self.nodes[x.0].value.iter().map(|&v| v.add_f64(c)).collect();
        let n = out.len();
        self.push(Op::AddConst(x.0), out, n, 1)
    }

    fn unary(&mut self, kind: Unary, x: Var) -> Var {
        let out: Vec<S> = self.nodes[x.0]
            .value
            .iter()
            .map(|&v| match kind {
                Unary::Tanh => v.tanh(),
                Unary::Exp => v.exp(),
                Unary::Ln => v.ln(),
                Unary::Softplus => v.softplus(),
                Unary::Sigmoid => v.sigmoid(),
                Unary::Square => v * v,
                Unary::Sqrt => v.sqrt(),
                Unary::Lgamma => v.lgamma(),
                Unary::Digamma => v.digamma(),
            })
            .collect();
        let n = out.len();
        self.push(Op::Unary(kind, x.0), out, n, 1)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.unary(Unary::Tanh, x)
    }
    pub fn exp(&mut self, x: Var) -> Var {
        self.unary(Unary::Exp, x)
    }
    pub fn ln(&mut self, x: Var) -> Var {
        self.unary(Unary::Ln, x)
    }
    pub fn softplus(&mut self, x: Var) -> Var {
        self.unary(Unary::Softplus, x)
    }
    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.unary(Unary::Sigmoid, x)
    }
    pub fn square(&mut self, x: Var) -> Var {
        self.unary(Unary::Square, x)
    }
    pub fn sqrt(&mut self, x: Var) -> Var {
        self.unary(Unary::Sqrt, x)
    }
    pub fn lgamma(&mut self, x: Var) -> Var {
        self.unary(Unary::Lgamma, x)
    }
    pub fn digamma(&mut self, x: Var) -> Var {
        self.unary(Unary::Digamma, x)
    }

    /// `ln sigmoid(x)` as `-softplus(-x)`; exact for large negative inputs.
    pub fn log_sigmoid(&mut self, x: Var) -> Var {
        let nx = self.neg(x);
        let sp = self.softplus(nx);
        self.neg(sp)
    }

    /// Max-subtracted softmax. The subtracted maximum is a constant, which
    /// leaves both value and derivative exact (softmax is shift-invariant).
    pub fn softmax(&mut self, x: Var) -> Var {
        let m = self.max_primal(x);
        let out: Vec<S> = {
            let xv = &self.nodes[x.0].value;
            let e: Vec<S> = xv.iter().map(|&v| v.add_f64(-m).exp()).collect();
            let mut z = S::zero();
            for &v in &e {
                z += v;
            }
            e.into_iter().map(|v| v / z).collect()
        };
        let n = out.len();
        self.push(Op::Softmax(x.0), out, n, 1)
    }

    /// `x - logsumexp(x)`, max-subtracted.
    pub fn log_softmax(&mut self, x: Var) -> Var {
        let m = self.max_primal(x);
        let out: Vec<S> = {
            let xv = &self.nodes[x.0].value;
            let mut z = S::zero();
            for &v in xv {
                z += v.add_f64(-m).exp();
            }
            let lse = z.ln().add_f64(m);
            xv.iter().map(|&v| v - lse).collect()
        };
        let n = out.len();
        self.push(Op::LogSoftmax(x.0), out, n, 1)
    }

    fn max_primal(&self, x: Var) -> f64 {
        self.nodes[x.0]
            .value
            .iter()
            .map(|v| v.value())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let mut acc = S::zero();
        for &v in &self.nodes[x.0].value {
            acc += v;
        }
        self.push(Op::Sum(x.0), vec![acc], 1, 1)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let n = self.len(x);
        assert!(n > 0, "mean of empty node");
        let s = self.sum(x);
        self.scale(s, 1.0 / n as f64)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.len(a), self.len(b), "dot on mismatched lengths");
        assert_ne!(a, b, "dot(x, x): square then sum instead");
        let mut acc = S::zero();
        for (&x, &y) in self.nodes[a.0].value.iter().zip(self.nodes[b.0].value.iter()) {
            acc += x * y;
        }
        self.push(Op::Dot(a.0, b.0), vec![acc], 1, 1)
    }

    pub fn gather(&mut self, x: Var, idx: usize) -> Var {
        assert!(idx < self.len(x), "gather index out of range");
        let v = self.nodes[x.0].value[idx];
        self.push(Op::Gather { x: x.0, idx }, vec![v], 1, 1)
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Var {
        assert!(start + len <= self.len(x), "slice out of range");
        let v = self.nodes[x.0].value[start..start + len].to_vec();
        self.push(Op::Slice { x: x.0, start }, v, len, 1)
    }

    /// Elementwise clamp on primal values. Gradient passes where the input
    /// lies inside `[lo, hi]` (inclusive) and is zero where it is pegged.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Var {
        assert!(lo <= hi);
        let out: Vec<S> = self.nodes[x.0]
            .value
            .iter()
            .map(|&v| {
                let p = v.value();
                if p < lo {
                    S::from_f64(lo)
                } else if p > hi {
                    S::from_f64(hi)
                } else {
                    v
                }
            })
            .collect();
        let n = out.len();
        self.push(Op::Clamp { x: x.0, lo, hi }, out, n, 1)
    }

    /// Concatenates scalar nodes into one vector node. Inputs may repeat.
    pub fn stack(&mut self, xs: &[Var]) -> Var {
        assert!(!xs.is_empty(), "stack of no nodes");
        let values: Vec<S> = xs
            .iter()
            .map(|&v| {
                assert_eq!(self.len(v), 1, "stack inputs must be scalar nodes");
                self.nodes[v.0].value[0]
            })
            .collect();
        let n = values.len();
        self.push(Op::Stack(xs.iter().map(|v| v.0).collect()), values, n, 1)
    }

    /// Elementwise minimum by primal value; on ties the gradient routes to
    /// the first argument.
    pub fn min2(&mut self, a: Var, b: Var) -> Var {
        assert_ne!(a, b, "min2(x, x) is x");
        self.binary(
            a,
            b,
            |x, y| if y.value() < x.value() { y } else { x },
            Op::Min2(a.0, b.0),
        )
    }

    /// Reverse pass from a scalar root. Returns adjoints for every node.
    pub fn backward(&self, root: Var) -> Adjoints<S> {
        assert_eq!(self.len(root), 1, "backward requires a scalar root node");
        let mut adj: Vec<Vec<S>> = self
            .nodes
            .iter()
            .map(|n| vec![S::zero(); n.value.len()])
            .collect();
        adj[root.0][0] = S::one();

        for id in (0..=root.0).rev() {
            // Take this node's adjoint out so children can be borrowed freely.
            let dz = std::mem::take(&mut adj[id]);
            let node = &self.nodes[id];
            if dz.iter().all(|v| v.is_zero()) {
                adj[id] = dz;
                continue;
            }
            match &node.op {
                Op::Leaf => {}
                Op::MatVec { w, x } => {
                    let c = self.nodes[*w].cols;
                    let xv = &self.nodes[*x].value;
                    let wv = &self.nodes[*w].value;
                    // dW[i,j] += dz[i] x[j]; dx[j] += sum_i W[i,j] dz[i]
                    let (dw, dx) = two_mut(&mut adj, *w, *x);
                    for (i, &dzi) in dz.iter().enumerate() {
                        if dzi.is_zero() {
                            continue;
                        }
                        let row = &wv[i * c..(i + 1) * c];
                        let drow = &mut dw[i * c..(i + 1) * c];
                        for j in 0..c {
                            drow[j] += dzi * xv[j];
                            dx[j] += dzi * row[j];
                        }
                    }
                }
                Op::ConstMatVec { m, cols, x } => {
                    let dx = &mut adj[*x];
                    for (i, &dzi) in dz.iter().enumerate() {
                        if dzi.is_zero() {
                            continue;
                        }
                        let row = &m[i * cols..(i + 1) * cols];
                        for j in 0..*cols {
                            dx[j] += dzi.mul_f64(row[j]);
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(&mut adj[*a], &dz);
                    add_into(&mut adj[*b], &dz);
                }
                Op::Sub(a, b) => {
                    add_into(&mut adj[*a], &dz);
                    sub_into(&mut adj[*b], &dz);
                }
                Op::Mul(a, b) => {
                    let (da, db) = two_mut(&mut adj, *a, *b);
                    let av = &self.nodes[*a].value;
                    let bv = &self.nodes[*b].value;
                    for i in 0..dz.len() {
                        da[i] += dz[i] * bv[i];
                        db[i] += dz[i] * av[i];
                    }
                }
                Op::Div(a, b) => {
                    let (da, db) = two_mut(&mut adj, *a, *b);
                    let av = &self.nodes[*a].value;
                    let bv = &self.nodes[*b].value;
                    for i in 0..dz.len() {
                        let inv = S::one() / bv[i];
                        da[i] += dz[i] * inv;
                        db[i] += -(dz[i] * av[i] * inv * inv);
                    }
                }
                Op::Neg(x) => sub_into(&mut adj[*x], &dz),
                Op::Scale(x, c) => {
                    let dx = &mut adj[*x];
                    for i in 0..dz.len() {
                        dx[i] += dz[i].mul_f64(*c);
                    }
                }
                Op::AddConst(x) => add_into(&mut adj[*x], &dz),
                Op::Unary(kind, x) => {
                    let xv = &self.nodes[*x].value;
                    let yv = &node.value;
                    let dx = &mut adj[*x];
                    for i in 0..dz.len() {
                        if dz[i].is_zero() {
                            continue;
                        }
                        let g = match kind {
                            Unary::Tanh => S::one() - yv[i] * yv[i],
                            Unary::Exp => yv[i],
                            Unary::Ln => S::one() / xv[i],
                            Unary::Softplus => xv[i].sigmoid(),
                            Unary::Sigmoid => yv[i] * (S::one() - yv[i]),
                            Unary::Square => xv[i].mul_f64(2.0),
                            Unary::Sqrt => S::one() / yv[i].mul_f64(2.0),
                            Unary::Lgamma => xv[i].digamma(),
                            Unary::Digamma => xv[i].trigamma(),
                        };
                        dx[i] += dz[i] * g;
                    }
                }
                Op::Softmax(x) => {
                    // dx = y .* (dz - (dz . y))
                    let yv = &node.value;
                    let mut dot = S::zero();
                    for i in 0..dz.len() {
                        dot += dz[i] * yv[i];
                    }
                    let dx = &mut adj[*x];
                    for i in 0..dz.len() {
                        dx[i] += yv[i] * (dz[i] - dot);
                    }
                }
                Op::LogSoftmax(x) => {
                    // dx = dz - softmax(x) * sum(dz); softmax = exp(value)
                    let yv = &node.value;
                    let mut s = S::zero();
                    for &d in &dz {
                        s += d;
                    }
                    let dx = &mut adj[*x];
                    for i in 0..dz.len() {
                        dx[i] += dz[i] - yv[i].exp() * s;
                    }
                }
                Op::Sum(x) => {
                    let dx = &mut adj[*x];
                    for v in dx.iter_mut() {
                        *v += dz[0];
                    }
                }
                Op::Dot(a, b) => {
                    let (da, db) = two_mut(&mut adj, *a, *b);
                    let av = &self.nodes[*a].value;
                    let bv = &self.nodes[*b].value;
                    for i in 0..av.len() {
                        da[i] += dz[0] * bv[i];
                        db[i] += dz[0] * av[i];
                    }
                }
                Op::Gather { x, idx } => {
                    adj[*x][*idx] += dz[0];
                }
                Op::Slice { x, start } => {
                    let dx = &mut adj[*x];
                    for (i, &d) in dz.iter().enumerate() {
                        dx[start + i] += d;
                    }
                }
                Op::Reshape(x) => add_into(&mut adj[*x], &dz),
                Op::Clamp { x, lo, hi } => {
                    let xv = &self.nodes[*x].value;
                    let dx = &mut adj[*x];
                    for i in 0..dz.len() {
                        let p = xv[i].value();
                        if p >= *lo && p <= *hi {
                            dx[i] += dz[i];
                        }
                    }
                }
                Op::Min2(a, b) => {
                    let (da, db) = two_mut(&mut adj, *a, *b);
                    let av = &self.nodes[*a].value;
                    let bv = &self.nodes[*b].value;
                    for i in 0..dz.len() {
                        if bv[i].value() < av[i].value() {
                            db[i] += dz[i];
                        } else {
                            da[i] += dz[i];
                        }
                    }
                }
                Op::Stack(xs) => {
                    for (k, &src) in xs.iter().enumerate() {
                        adj[src][0] += dz[k];
                    }
                }
            }
            adj[id] = dz;
        }
        Adjoints(adj)
    }
}

fn add_into<S: Real>(dx: &mut [S], dz: &[S]) {
    for (d, &z) in dx.iter_mut().zip(dz.iter()) {
        *d += z;
    }
}

fn sub_into<S: Real>(dx: &mut [S], dz: &[S]) {
    for (d, &z) in dx.iter_mut().zip(dz.iter()) {
        *d += -z;
    }
}

/// Two disjoint mutable borrows from the adjoint table.
fn two_mut<S>(adj: &mut [Vec<S>], a: usize, b: usize) -> (&mut Vec<S>, &mut Vec<S>) {
    assert_ne!(a, b);
    if a < b {
        let (lo, hi) = adj.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = adj.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}
