//! Gradient and Hessian-vector-product drivers.
//!
//! A differentiable scalar objective is anything that can rebuild its graph
//! on a fresh tape for any scalar type: gradients run the graph on
//! `Tape<f64>`, Hessian-vector products run the *same builder* on
//! `Tape<Dual>` with parameter tangents seeded to the direction
//! (forward-over-reverse), so `H v` is exact to rounding, with no
//! finite-difference step anywhere.

use super::scalar::{Dual, Real};
use super::tape::{Tape, Var};

/// A scalar function of a flat parameter vector, expressed as a graph
/// builder. `build` must construct the same computation for every scalar
/// type `S` (the type only changes what is propagated, not the math).
pub trait ParamScalarFn {
    fn build<S: Real>(&self, tape: &mut Tape<S>, params: Var) -> Var;
}

pub fn value_of(f: &impl ParamScalarFn, at: &[f64]) -> f64 {
    let mut tape: Tape<f64> = Tape::new();
    let p = tape.leaf_f64(at);
    let root = f.build(&mut tape, p);
    tape.scalar_value(root)
}

pub fn value_and_grad(f: &impl ParamScalarFn, at: &[f64]) -> (f64, Vec<f64>) {
    let mut tape: Tape<f64> = Tape::new();
    let p = tape.leaf_f64(at);
    let root = f.build(&mut tape, p);
    let value = tape.scalar_value(root);
    let adj = tape.backward(root);
    (value, adj.grad(p).to_vec())
}

pub struct HvpResult {
    pub value: f64,
    pub grad: Vec<f64>,
    /// `H(at) . v`
    pub hvp: Vec<f64>,
}

pub fn hessian_vector_product(f: &impl ParamScalarFn, at: &[f64], v: &[f64]) -> HvpResult {
    assert_eq!(at.len(), v.len(), "direction length must match parameters");
    let mut tape: Tape<Dual> = Tape::new();
    let p = tape.leaf(
        at.iter()
            .zip(v.iter())
            .map(|(&a, &t)| Dual::new(a, t))
            .collect(),
    );
    let root = f.build(&mut tape, p);
    let value = tape.scalar_value(root).re;
    let adj = tape.backward(root);
    let g = adj.grad(p);
    HvpResult {
        value,
        grad: g.iter().map(|d| d.re).collect(),
        hvp: g.iter().map(|d| d.du).collect(),
    }
}
