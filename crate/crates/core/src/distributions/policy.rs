//! Policy network: a shared tanh MLP encoder with one of five heads on
//! top, plus the tape graph builders that differentiate through it.
//!
//! Parameters flatten to a single vector in a fixed order (encoder layers,
//! head layer, then free log-std for gaussian heads). The tape-side
//! builders carve the same layout out of one flat leaf, so the value-level
//! forward pass and the differentiated graph cannot disagree about which
//! coordinate is which.

use super::dist::{ActionSample, DimDist, HeadKind, PolicyDistribution};
use super::grid::ActionGrid;
use super::ordinal::{ordinal_transform, CE_EPS};
use crate::diffmath::net::{
    carve_linear, carve_mlp, linear_forward, mlp_forward, Linear, LinearNodes, Mlp, MlpNodes,
};
use crate::diffmath::special::softplus;
use crate::diffmath::{ParameterVector, Real, Tape, Var};
use crate::distributions::dist::{ln_beta_fn, LN_2, LN_2PI};
use crate::error::{CoreError, CoreResult};
use crate::rngstream::Rng;
use serde::{Deserialize, Serialize};
use std::rc::Rc;

/// Upper clamp on beta shape parameters; hit only when the head is already
/// diverging, at which point the gradient through the clamp goes flat.
pub const BETA_PARAM_CAP: f64 = 1e4;

/// Final-layer weight scale; small so fresh policies start near uniform.
const HEAD_INIT_SCALE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub obs_dim: usize,
    pub act_dim: usize,
    /// Encoder hidden widths; must be non-empty.
    pub hidden: Vec<usize>,
    pub head: HeadKind,
    /// Atom count per dimension; required for atomic heads, forbidden
    /// otherwise.
    pub bins: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct PolicyNet {
    head: HeadKind,
    obs_dim: usize,
    act_dim: usize,
    encoder: Mlp,
    head_linear: Linear,
    /// Free per-dimension log standard deviation, shared across states;
    /// empty unless the head is gaussian.
    log_std: Vec<f64>,
    grid: Option<ActionGrid>,
    /// Cached K x K masks for the ordinal prefix/suffix sums.
    tri_lower: Option<Rc<Vec<f64>>>,
    tri_upper: Option<Rc<Vec<f64>>>,
}

/// Tape-side handles to the carved parameter blocks.
pub struct PolicyNodes {
    pub encoder: MlpNodes,
    pub head: LinearNodes,
    pub log_std: Option<Var>,
}

impl PolicyNet {
    pub fn init(rng: &mut Rng, cfg: &PolicyConfig) -> CoreResult<PolicyNet> {
        if cfg.obs_dim == 0 || cfg.act_dim == 0 {
            return Err(CoreError::invalid_config("zero observation or action dimension"));
        }
        if cfg.hidden.is_empty() {
            return Err(CoreError::invalid_config("encoder needs at least one hidden layer"));
        }
        let grid = match (cfg.head.is_atomic(), cfg.bins) {
            (true, Some(k)) => Some(ActionGrid::new(k)?),
            (true, None) => {
                return Err(CoreError::invalid_config(format!(
                    "head {} requires a bin count",
                    cfg.head
                )))
            }
            (false, Some(_)) => {
                return Err(CoreError::invalid_config(format!(
                    "head {} takes no bin count",
                    cfg.head
                )))
            }
            (false, None) => None,
        };
        let m = cfg.act_dim;
        let head_rows = match cfg.head {
            HeadKind::Gaussian | HeadKind::GaussianTanh => m,
            HeadKind::Beta => 2 * m,
            HeadKind::Discrete | HeadKind::Ordinal => {
                m * grid.as_ref().expect("atomic head has a grid").bins()
            }
        };
        let encoder = Mlp::init(rng, cfg.obs_dim, &cfg.hidden);
        let head_linear = Linear::init(rng, head_rows, encoder.out_dim(), HEAD_INIT_SCALE);
        let log_std = match cfg.head {
            HeadKind::Gaussian | HeadKind::GaussianTanh => vec![0.0; m],
            _ => Vec::new(),
        };
        let (tri_lower, tri_upper) = if cfg.head == HeadKind::Ordinal {
            let k = grid.as_ref().expect("ordinal head has a grid").bins();
            let mut lower = vec![0.0; k * k];
            let mut upper = vec![0.0; k * k];
            for i in 0..k {
                for j in 0..k {
                    if j <= i {
                        lower[i * k + j] = 1.0;
                    } else {
                        upper[i * k + j] = 1.0;
                    }
                }
            }
            (Some(Rc::new(lower)), Some(Rc::new(upper)))
        } else {
            (None, None)
        };
        Ok(PolicyNet {
            head: cfg.head,
            obs_dim: cfg.obs_dim,
            act_dim: m,
            encoder,
            head_linear,
            log_std,
            grid,
            tri_lower,
            tri_upper,
        })
    }

    pub fn head(&self) -> HeadKind {
        self.head
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn grid(&self) -> Option<&ActionGrid> {
        self.grid.as_ref()
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.head_linear.param_count() + self.log_std.len()
    }

    /// Parameters of the shared encoder alone; they occupy the leading
    /// block of the flat vector.
    pub fn encoder_param_count(&self) -> usize {
        self.encoder.param_count()
    }

    pub fn flatten(&self) -> ParameterVector {
        let mut out = Vec::with_capacity(self.param_count());
        self.encoder.flatten_into(&mut out);
        self.head_linear.flatten_into(&mut out);
        out.extend_from_slice(&self.log_std);
        ParameterVector(out)
    }

    pub fn set_params(&mut self, p: &ParameterVector) -> CoreResult<()> {
        if p.len() != self.param_count() {
            return Err(CoreError::contract(format!(
                "parameter vector has {} entries, policy needs {}",
                p.len(),
                self.param_count()
            )));
        }
        if !p.all_finite() {
            return Err(CoreError::numeric_at(
                "non-finite policy parameter",
                Some(self.head),
                None,
                None,
            ));
        }
        let mut pos = 0;
        self.encoder.unflatten_from(p.as_slice(), &mut pos);
        self.head_linear.unflatten_from(p.as_slice(), &mut pos);
        let n = self.log_std.len();
        self.log_std.copy_from_slice(&p.as_slice()[pos..pos + n]);
        Ok(())
    }

    /// Value-level forward pass to a joint action distribution.
    pub fn distribution(&self, obs: &[f64]) -> CoreResult<PolicyDistribution> {
        if obs.len() != self.obs_dim {
            return Err(CoreError::contract(format!(
                "observation has {} entries, policy expects {}",
                obs.len(),
                self.obs_dim
            )));
        }
        let h = self.encoder.forward(obs);
        let out = self.head_linear.forward(&h);
        let m = self.act_dim;
        let dims: Vec<DimDist> = match self.head {
            HeadKind::Gaussian => (0..m)
                .map(|i| DimDist::Gaussian { mean: out[i], log_std: self.log_std[i] })
                .collect(),
            HeadKind::GaussianTanh => (0..m)
                .map(|i| DimDist::Gaussian { mean: out[i].tanh(), log_std: self.log_std[i] })
                .collect(),
            HeadKind::Beta => (0..m)
                .map(|i| DimDist::Beta {
                    alpha: (softplus(out[i]) + 1.0).min(BETA_PARAM_CAP),
                    beta: (softplus(out[m + i]) + 1.0).min(BETA_PARAM_CAP),
                })
                .collect(),
            HeadKind::Discrete => {
                let k = self.grid.as_ref().expect("atomic head").bins();
                (0..m)
                    .map(|i| DimDist::categorical_from_logits(&out[i * k..(i + 1) * k]))
                    .collect()
            }
            HeadKind::Ordinal => {
                let k = self.grid.as_ref().expect("atomic head").bins();
                (0..m)
                    .map(|i| {
                        let prime = ordinal_transform(&out[i * k..(i + 1) * k]);
                        DimDist::categorical_from_logits(&prime)
                    })
                    .collect()
            }
        };
        PolicyDistribution::new(self.head, dims, self.grid.clone())
    }

    /// Carves the flat parameter leaf into named blocks, in flatten order.
    pub fn carve<S: Real>(&self, tape: &mut Tape<S>, flat: Var) -> PolicyNodes {
        let mut pos = 0;
        let encoder = carve_mlp(tape, flat, &mut pos, &self.encoder);
        let head = carve_linear(
            tape,
            flat,
            &mut pos,
            self.head_linear.rows,
            self.head_linear.cols,
        );
        let log_std = if self.log_std.is_empty() {
            None
        } else {
            let v = tape.slice(flat, pos, self.log_std.len());
            pos += self.log_std.len();
            Some(v)
        };
        assert_eq!(pos, self.param_count(), "carve drifted from flatten layout");
        PolicyNodes { encoder, head, log_std }
    }

    /// Raw head-layer output for one observation (pre any head mapping).
    fn head_out<S: Real>(&self, tape: &mut Tape<S>, nodes: &PolicyNodes, obs: &[f64]) -> Var {
        assert_eq!(obs.len(), self.obs_dim, "observation length");
        let x = tape.leaf_f64(obs);
        let h = mlp_forward(tape, &nodes.encoder, x);
        linear_forward(tape, nodes.head, h)
    }

    /// Per-dimension final logits (post ordinal transform when applicable).
    fn final_logits<S: Real>(&self, tape: &mut Tape<S>, out: Var, dim: usize) -> Var {
        let k = self.grid.as_ref().expect("atomic head").bins();
        let raw = tape.slice(out, dim * k, k);
        match self.head {
            HeadKind::Discrete => raw,
            HeadKind::Ordinal => {
                let ls = tape.log_sigmoid(raw);
                let nr = tape.neg(raw);
                let lc = tape.log_sigmoid(nr);
                let lower = self.tri_lower.as_ref().expect("ordinal masks").clone();
                let upper = self.tri_upper.as_ref().expect("ordinal masks").clone();
                let a = tape.const_matvec(lower, k, k, ls);
                let b = tape.const_matvec(upper, k, k, lc);
                tape.add(a, b)
            }
            _ => unreachable!("final_logits is only for atomic heads"),
        }
    }

    /// Beta shape vectors (alpha, beta) from the head output, clamped the
    /// same way the value-level forward clamps them.
    fn beta_shapes<S: Real>(&self, tape: &mut Tape<S>, out: Var) -> (Var, Var) {
        let m = self.act_dim;
        let f = tape.slice(out, 0, m);
        let g = tape.slice(out, m, m);
        let sf = tape.softplus(f);
        let sg = tape.softplus(g);
        let a1 = tape.add_const(sf, 1.0);
        let b1 = tape.add_const(sg, 1.0);
        (
            tape.clamp(a1, 1.0, BETA_PARAM_CAP),
            tape.clamp(b1, 1.0, BETA_PARAM_CAP),
        )
    }

    /// Scalar node: log π(action | obs) as a function of the carved params.
    pub fn log_prob_node<S: Real>(
        &self,
        tape: &mut Tape<S>,
        nodes: &PolicyNodes,
        obs: &[f64],
        sample: &ActionSample,
    ) -> Var {
        assert_eq!(sample.raw.len(), self.act_dim, "action length");
        let m = self.act_dim;
        let out = self.head_out(tape, nodes, obs);
        match self.head {
            HeadKind::Gaussian | HeadKind::GaussianTanh => {
                let mu = if self.head == HeadKind::GaussianTanh {
                    tape.tanh(out)
                } else {
                    out
                };
                let log_std = nodes.log_std.expect("gaussian head has log_std");
                let a = tape.leaf_f64(&sample.raw);
                let diff = tape.sub(a, mu);
                let sigma = tape.exp(log_std);
                let z = tape.div(diff, sigma);
                let zz = tape.square(z);
                let szz = tape.sum(zz);
                let t1 = tape.scale(szz, -0.5);
                let sls = tape.sum(log_std);
                let t2 = tape.sub(t1, sls);
                tape.add_const(t2, -0.5 * m as f64 * LN_2PI)
            }
            HeadKind::Beta => {
                let (alpha, beta) = self.beta_shapes(tape, out);
                let lnx: Vec<f64> = sample
                    .raw
                    .iter()
                    .map(|&a| (0.5 * (a + 1.0)).max(CE_EPS).ln())
                    .collect();
                let ln1mx: Vec<f64> = sample
                    .raw
                    .iter()
                    .map(|&a| (1.0 - 0.5 * (a + 1.0)).max(CE_EPS).ln())
                    .collect();
                let lnx_leaf = tape.leaf_f64(&lnx);
                let ln1mx_leaf = tape.leaf_f64(&ln1mx);
                let am1 = tape.add_const(alpha, -1.0);
                let bm1 = tape.add_const(beta, -1.0);
                let t1 = tape.dot(am1, lnx_leaf);
                let t2 = tape.dot(bm1, ln1mx_leaf);
                let la = tape.lgamma(alpha);
                let lb = tape.lgamma(beta);
                let s = tape.add(alpha, beta);
                let ls = tape.lgamma(s);
                let ln_b_vec = tape.add(la, lb);
                let ln_b_vec = tape.sub(ln_b_vec, ls);
                let ln_b = tape.sum(ln_b_vec);
                let t12 = tape.add(t1, t2);
                let t = tape.sub(t12, ln_b);
                tape.add_const(t, -(m as f64) * LN_2)
            }
            HeadKind::Discrete | HeadKind::Ordinal => {
                let idx = sample
                    .atom_indices
                    .as_ref()
                    .expect("atomic head sample carries indices");
                let mut per_dim = Vec::with_capacity(m);
                for i in 0..m {
                    let z = self.final_logits(tape, out, i);
                    let lp = tape.log_softmax(z);
                    per_dim.push(tape.gather(lp, idx[i]));
                }
                let stacked = tape.stack(&per_dim);
                tape.sum(stacked)
            }
        }
    }

    /// Scalar node: joint entropy of the policy at `obs`.
    pub fn entropy_node<S: Real>(
        &self,
        tape: &mut Tape<S>,
        nodes: &PolicyNodes,
        obs: &[f64],
    ) -> Var {
        let m = self.act_dim;
        match self.head {
            HeadKind::Gaussian | HeadKind::GaussianTanh => {
                let log_std = nodes.log_std.expect("gaussian head has log_std");
                let s = tape.sum(log_std);
                tape.add_const(s, 0.5 * (1.0 + LN_2PI) * m as f64)
            }
            HeadKind::Beta => {
                let out = self.head_out(tape, nodes, obs);
                let (alpha, beta) = self.beta_shapes(tape, out);
                let la = tape.lgamma(alpha);
                let lb = tape.lgamma(beta);
                let s = tape.add(alpha, beta);
                let ls = tape.lgamma(s);
                let ln_b = tape.add(la, lb);
                let ln_b = tape.sub(ln_b, ls);
                let am1 = tape.add_const(alpha, -1.0);
                let bm1 = tape.add_const(beta, -1.0);
                let da = tape.digamma(alpha);
                let db = tape.digamma(beta);
                let ds = tape.digamma(s);
                let sm2 = tape.add_const(s, -2.0);
                let ta = tape.mul(am1, da);
                let tb = tape.mul(bm1, db);
                let ts = tape.mul(sm2, ds);
                let h = tape.sub(ln_b, ta);
                let h = tape.sub(h, tb);
                let h = tape.add(h, ts);
                let hs = tape.sum(h);
                tape.add_const(hs, m as f64 * LN_2)
            }
            HeadKind::Discrete | HeadKind::Ordinal => {
                let out = self.head_out(tape, nodes, obs);
                let mut per_dim = Vec::with_capacity(m);
                for i in 0..m {
                    let z = self.final_logits(tape, out, i);
                    let p = tape.softmax(z);
                    let lp = tape.log_softmax(z);
                    let plp = tape.dot(p, lp);
                    per_dim.push(tape.neg(plp));
                }
                let stacked = tape.stack(&per_dim);
                tape.sum(stacked)
            }
        }
    }

    /// Scalar node: KL(old ‖ new) where `old` enters as constants and `new`
    /// is the policy at the carved parameters.
    pub fn kl_node<S: Real>(
        &self,
        tape: &mut Tape<S>,
        nodes: &PolicyNodes,
        obs: &[f64],
        old: &PolicyDistribution,
    ) -> Var {
        assert_eq!(old.head(), self.head, "kl across different heads");
        assert_eq!(old.act_dim(), self.act_dim, "kl across different dims");
        let m = self.act_dim;
        let out = self.head_out(tape, nodes, obs);
        match self.head {
            HeadKind::Gaussian | HeadKind::GaussianTanh => {
                let mu2 = if self.head == HeadKind::GaussianTanh {
                    tape.tanh(out)
                } else {
                    out
                };
                let log_std2 = nodes.log_std.expect("gaussian head has log_std");
                let mut mu1 = Vec::with_capacity(m);
                let mut var1 = Vec::with_capacity(m);
                let mut sum_log_std1 = 0.0;
                for d in old.dims() {
                    if let DimDist::Gaussian { mean, log_std } = d {
                        mu1.push(*mean);
                        let s = log_std.exp();
                        var1.push(s * s);
                        sum_log_std1 += log_std;
                    }
                }
                let mu1_leaf = tape.leaf_f64(&mu1);
                let var1_leaf = tape.leaf_f64(&var1);
                let d = tape.sub(mu1_leaf, mu2);
                let d2 = tape.square(d);
                let num = tape.add(var1_leaf, d2);
                let m2ls = tape.scale(log_std2, -2.0);
                let inv_var2 = tape.exp(m2ls);
                let frac = tape.mul(num, inv_var2);
                let sfrac = tape.sum(frac);
                let t = tape.scale(sfrac, 0.5);
                let sls2 = tape.sum(log_std2);
                let kl = tape.add(sls2, t);
                tape.add_const(kl, -sum_log_std1 - 0.5 * m as f64)
            }
            HeadKind::Beta => {
                let (alpha2, beta2) = self.beta_shapes(tape, out);
                let mut psi_a1 = Vec::with_capacity(m);
                let mut psi_b1 = Vec::with_capacity(m);
                let mut psi_s1 = Vec::with_capacity(m);
                let mut constant = 0.0;
                for d in old.dims() {
                    if let DimDist::Beta { alpha, beta } = d {
                        let (a1, b1) = (*alpha, *beta);
                        let da = crate::diffmath::special::digamma(a1);
                        let db = crate::diffmath::special::digamma(b1);
                        let dsum = crate::diffmath::special::digamma(a1 + b1);
                        psi_a1.push(da);
                        psi_b1.push(db);
                        psi_s1.push(dsum);
                        constant += -ln_beta_fn(a1, b1) + a1 * da + b1 * db - (a1 + b1) * dsum;
                    }
                }
                let la = tape.lgamma(alpha2);
                let lb = tape.lgamma(beta2);
                let s2 = tape.add(alpha2, beta2);
                let ls = tape.lgamma(s2);
                let ln_b2 = tape.add(la, lb);
                let ln_b2 = tape.sub(ln_b2, ls);
                let sum_ln_b2 = tape.sum(ln_b2);
                let pa = tape.leaf_f64(&psi_a1);
                let pb = tape.leaf_f64(&psi_b1);
                let ps = tape.leaf_f64(&psi_s1);
                let ta = tape.dot(alpha2, pa);
                let tb = tape.dot(beta2, pb);
                let ts = tape.dot(s2, ps);
                let kl = tape.sub(sum_ln_b2, ta);
                let kl = tape.sub(kl, tb);
                let kl = tape.add(kl, ts);
                tape.add_const(kl, constant)
            }
            HeadKind::Discrete | HeadKind::Ordinal => {
                let mut per_dim = Vec::with_capacity(m);
                for (i, d) in old.dims().iter().enumerate() {
                    if let DimDist::Categorical { probs, log_probs } = d {
                        let z = self.final_logits(tape, out, i);
                        let lq = tape.log_softmax(z);
                        let lp1 = tape.leaf_f64(log_probs);
                        let diff = tape.sub(lp1, lq);
                        let p1 = tape.leaf_f64(probs);
                        per_dim.push(tape.dot(p1, diff));
                    }
                }
                let stacked = tape.stack(&per_dim);
                tape.sum(stacked)
            }
        }
    }
}
