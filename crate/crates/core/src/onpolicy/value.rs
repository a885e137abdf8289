//! State-value network and its regression fit.

use super::adam::Adam;
use crate::diffmath::{
    carve_linear, carve_mlp, linear_forward, mlp_forward, Linear, Mlp, ParameterVector, Real,
    Tape, Var,
};
use crate::error::{CoreError, CoreResult};
use crate::rngstream::Rng;
use rand::seq::SliceRandom;

/// Tanh MLP with a scalar linear head. `hidden` may be empty, which makes
/// the net an affine function of the observation (handy for closed-form
/// regression checks).
pub struct ValueNet {
    encoder: Option<Mlp>,
    head: Linear,
    obs_dim: usize,
}

impl ValueNet {
    pub fn init(rng: &mut Rng, obs_dim: usize, hidden: &[usize]) -> ValueNet {
        assert!(obs_dim >= 1, "observation must have at least one entry");
        let encoder = (!hidden.is_empty()).then(|| Mlp::init(rng, obs_dim, hidden));
        let feat_dim = encoder.as_ref().map_or(obs_dim, Mlp::out_dim);
        ValueNet {
            encoder,
            head: Linear::init(rng, 1, feat_dim, 0.01),
            obs_dim,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn predict(&self, obs: &[f64]) -> f64 {
        assert_eq!(obs.len(), self.obs_dim, "observation length");
        match &self.encoder {
            Some(mlp) => self.head.forward(&mlp.forward(obs))[0],
            None => self.head.forward(obs)[0],
        }
    }

    pub fn param_count(&self) -> usize {
        self.encoder.as_ref().map_or(0, Mlp::param_count) + self.head.param_count()
    }

    pub fn flatten(&self) -> ParameterVector {
        let mut out = Vec::with_capacity(self.param_count());
        if let Some(mlp) = &self.encoder {
            mlp.flatten_into(&mut out);
        }
        self.head.flatten_into(&mut out);
        ParameterVector(out)
    }

    pub fn set_params(&mut self, p: &ParameterVector) -> CoreResult<()> {
        if p.len() != self.param_count() {
            return Err(CoreError::contract(format!(
                "value params length {} != {}",
                p.len(),
                self.param_count()
            )));
        }
        if !p.all_finite() {
            return Err(CoreError::numeric("value parameters non-finite"));
        }
        let mut pos = 0;
        if let Some(mlp) = &mut self.encoder {
            mlp.unflatten_from(p.as_slice(), &mut pos);
        }
        self.head.unflatten_from(p.as_slice(), &mut pos);
        debug_assert_eq!(pos, p.len());
        Ok(())
    }

    /// Scalar prediction node for one observation, as a function of the
    /// flat parameter leaf.
    fn predict_node<S: Real>(&self, tape: &mut Tape<S>, flat: Var, obs: &[f64]) -> Var {
        let mut pos = 0;
        let x = tape.leaf_f64(obs);
        let feat = match &self.encoder {
            Some(mlp) => {
                let nodes = carve_mlp(tape, flat, &mut pos, mlp);
                mlp_forward(tape, &nodes, x)
            }
            None => x,
        };
        let head = carve_linear(tape, flat, &mut pos, self.head.rows, self.head.cols);
        linear_forward(tape, head, feat)
    }

    fn mse(&self, obs: &[Vec<f64>], targets: &[f64]) -> f64 {
        let n = obs.len() as f64;
        obs.iter()
            .zip(targets.iter())
            .map(|(o, t)| {
                let e = self.predict(o) - t;
                e * e
            })
            .sum::<f64>()
            / n
    }
}

pub struct ValueFitReport {
    pub pre_mse: f64,
    pub post_mse: f64,
}

/// Minibatch squared-error regression of the value net onto `targets`.
/// The optimizer is caller-owned so moment state persists across calls.
pub fn value_fit(
    net: &mut ValueNet,
    opt: &mut Adam,
    obs: &[Vec<f64>],
    targets: &[f64],
    epochs: usize,
    minibatch: usize,
    shuffle_rng: &mut Rng,
) -> CoreResult<ValueFitReport> {
    assert_eq!(obs.len(), targets.len(), "one target per observation");
    assert!(!obs.is_empty(), "cannot fit on an empty batch");
    assert!(epochs >= 1 && minibatch >= 1, "counts must be >= 1");
    let pre_mse = net.mse(obs, targets);
    let mut params = net.flatten().0;
    let mut order: Vec<usize> = (0..obs.len()).collect();
    for _ in 0..epochs {
        order.shuffle(shuffle_rng);
        for chunk in order.chunks(minibatch) {
            let mut tape: Tape<f64> = Tape::new();
            let flat = tape.leaf_f64(&params);
            let preds: Vec<Var> = chunk
                .iter()
                .map(|&i| net.predict_node(&mut tape, flat, &obs[i]))
                .collect();
            let stacked = tape.stack(&preds);
            let target_leaf = tape.leaf_f64(&chunk.iter().map(|&i| targets[i]).collect::<Vec<_>>());
            let err = tape.sub(stacked, target_leaf);
            let sq = tape.square(err);
            let loss = tape.mean(sq);
            if !tape.scalar_value(loss).is_finite() {
                return Err(CoreError::numeric("value-fit loss non-finite"));
            }
            let adj = tape.backward(loss);
            let grad = adj.grad(flat);
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(CoreError::numeric("value-fit gradient non-finite"));
            }
            opt.step(&mut params, grad);
        }
    }
    net.set_params(&ParameterVector(params))?;
    Ok(ValueFitReport {
        pre_mse,
        post_mse: net.mse(obs, targets),
    })
}
