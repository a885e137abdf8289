//! Linear layers and tanh MLP encoders, in two parallel forms: a plain-value
//! form for rollouts and diagnostics, and a tape form for losses, built by
//! carving slices out of a single flat parameter leaf.
//!
//! Flatten order, the contract every optimizer and checkpoint relies on:
//! layers in listed order; within a layer the weight matrix row-major, then
//! the bias. A network's own flatten method documents the order of its
//! blocks; carving uses the same code path by construction (a shared cursor
//! over `(rows, cols)` segments), so flatten/carve cannot drift apart.

use super::scalar::Real;
use super::tape::{Tape, Var};
use crate::rngstream::Rng;
use rand::Rng as _;

/// Dense layer `y = W x + b`, stored row-major.
#[derive(Clone, Debug)]
pub struct Linear {
    pub rows: usize,
    pub cols: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Linear {
    /// Scaled uniform fan-in init: `U(-s, s)` with `s = scale * sqrt(1/cols)`,
    /// biases zero. `scale = 1` for hidden layers; final policy output layers
    /// use `scale = 0.01` so initial distributions are near-uniform /
    /// near-zero-mean.
    pub fn init(rng: &mut Rng, rows: usize, cols: usize, scale: f64) -> Self {
        let bound = scale * (1.0 / cols as f64).sqrt();
        let w = (0..rows * cols)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        Linear {
            rows,
            cols,
            w,
            b: vec![0.0; rows],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let row = &self.w[i * self.cols..(i + 1) * self.cols];
            let dot: f64 = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            out.push(dot + self.b[i]);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.w);
        out.extend_from_slice(&self.b);
    }

    pub fn unflatten_from(&mut self, src: &[f64], pos: &mut usize) {
        let nw = self.rows * self.cols;
        self.w.copy_from_slice(&src[*pos..*pos + nw]);
        *pos += nw;
        self.b.copy_from_slice(&src[*pos..*pos + self.rows]);
        *pos += self.rows;
    }
}

/// Tape-side handles for one linear layer.
#[derive(Clone, Copy)]
pub struct LinearNodes {
    pub w: Var,
    pub b: Var,
}

/// Carve the next linear layer out of the flat parameter leaf. Must visit
/// layers in exactly the flatten order.
pub fn carve_linear<S: Real>(
    tape: &mut Tape<S>,
    flat: Var,
    pos: &mut usize,
    rows: usize,
    cols: usize,
) -> LinearNodes {
    let wflat = tape.slice(flat, *pos, rows * cols);
    *pos += rows * cols;
    let w = tape.reshape(wflat, rows, cols);
    let b = tape.slice(flat, *pos, rows);
    *pos += rows;
    LinearNodes { w, b }
}

pub fn linear_forward<S: Real>(tape: &mut Tape<S>, layer: LinearNodes, x: Var) -> Var {
    let mv = tape.matvec(layer.w, x);
    tape.add(mv, layer.b)
}

/// Tanh MLP: `h = tanh(W_n(...tanh(W_1 x + b_1)...) + b_n)`. The output is
/// the hidden feature vector; heads attach their own linear layers.
#[derive(Clone, Debug)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    pub fn init(rng: &mut Rng, in_dim: usize, hidden: &[usize]) -> Self {
        assert!(!hidden.is_empty(), "encoder needs at least one hidden layer");
        let mut layers = Vec::with_capacity(hidden.len());
        let mut prev = in_dim;
        for &h in hidden {
            layers.push(Linear::init(rng, h, prev, 1.0));
            prev = h;
        }
        Mlp { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().expect("non-empty MLP").rows
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut h = self.layers[0].forward(x);
        h.iter_mut().for_each(|v| *v = v.tanh());
        for layer in &self.layers[1..] {
            h = layer.forward(&h);
            h.iter_mut().for_each(|v| *v = v.tanh());
        }
        h
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Linear::param_count).sum()
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            layer.flatten_into(out);
        }
    }

    pub fn unflatten_from(&mut self, src: &[f64], pos: &mut usize) {
        for layer in &mut self.layers {
            layer.unflatten_from(src, pos);
        }
    }
}

pub struct MlpNodes {
    pub layers: Vec<LinearNodes>,
}

pub fn carve_mlp<S: Real>(tape: &mut Tape<S>, flat: Var, pos: &mut usize, mlp: &Mlp) -> MlpNodes {
    MlpNodes {
        layers: mlp
            .layers
            .iter()
            .map(|l| carve_linear(tape, flat, pos, l.rows, l.cols))
            .collect(),
    }
}

pub fn mlp_forward<S: Real>(tape: &mut Tape<S>, nodes: &MlpNodes, x: Var) -> Var {
    let mut h = x;
    for &layer in &nodes.layers {
        let z = linear_forward(tape, layer, h);
        h = tape.tanh(z);
    }
    h
}
