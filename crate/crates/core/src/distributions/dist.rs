//! Value-level distribution calculus for the five policy heads: sampling,
//! log-probability, entropy, and KL divergence, each factorized across
//! action dimensions.
//!
//! Continuous heads treat actions on the environment scale [−1, 1]. The
//! beta head lives on (0, 1) internally and maps through a = 2x − 1, so its
//! log-density carries a constant −ln 2 per dimension and its entropy the
//! matching +ln 2; KL is invariant under the shared bijection. Gaussian
//! samples are clipped to [−1, 1] only in the `continuous` field handed to
//! environments; log-probabilities are always evaluated at the unclipped
//! `raw` value.

use super::grid::ActionGrid;
use super::ordinal::CE_EPS;
use crate::diffmath::special::{digamma, lgamma, log_softmax, softmax};
use crate::error::{CoreError, CoreResult};
use crate::rngstream::Rng;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Canonical names of the five policy heads; the strings are the config
/// vocabulary used everywhere (CLI flags, manifests, error messages).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Gaussian,
    GaussianTanh,
    Beta,
    Discrete,
    Ordinal,
}

impl HeadKind {
    pub const ALL: [HeadKind; 5] = [
        HeadKind::Gaussian,
        HeadKind::GaussianTanh,
        HeadKind::Beta,
        HeadKind::Discrete,
        HeadKind::Ordinal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::Gaussian => "gaussian",
            HeadKind::GaussianTanh => "gaussian_tanh",
            HeadKind::Beta => "beta",
            HeadKind::Discrete => "discrete",
            HeadKind::Ordinal => "ordinal",
        }
    }

    /// True for the heads that act through a grid of atoms.
    pub fn is_atomic(self) -> bool {
        matches!(self, HeadKind::Discrete | HeadKind::Ordinal)
    }
}

impl fmt::Display for HeadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HeadKind {
    type Err = CoreError;

    fn from_str(s: &str) -> CoreResult<Self> {
        HeadKind::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| {
                CoreError::invalid_config(format!(
                    "unknown head '{s}' (expected gaussian, gaussian_tanh, beta, discrete, ordinal)"
                ))
            })
    }
}

/// Per-dimension marginal distribution.
#[derive(Clone, Debug)]
pub enum DimDist {
    Gaussian { mean: f64, log_std: f64 },
    Beta { alpha: f64, beta: f64 },
    Categorical { probs: Vec<f64>, log_probs: Vec<f64> },
}

impl DimDist {
    /// Builds a categorical marginal from final (post-transform) logits.
    pub fn categorical_from_logits(logits: &[f64]) -> DimDist {
        DimDist::Categorical {
            probs: softmax(logits),
            log_probs: log_softmax(logits),
        }
    }

    fn all_finite(&self) -> bool {
        match self {
            DimDist::Gaussian { mean, log_std } => {
                mean.is_finite() && log_std.is_finite() && log_std.exp() > 0.0
            }
            DimDist::Beta { alpha, beta } => alpha.is_finite() && beta.is_finite(),
            DimDist::Categorical { probs, log_probs } => {
                probs.iter().all(|p| p.is_finite()) && log_probs.iter().all(|l| l.is_finite())
            }
        }
    }
}

/// One action drawn from a [`PolicyDistribution`].
#[derive(Clone, Debug)]
pub struct ActionSample {
    /// What the environment consumes: componentwise in [−1, 1].
    pub continuous: Vec<f64>,
    /// The unclipped value the log-probability is evaluated at. Identical
    /// to `continuous` except for gaussian heads, which clip only at the
    /// environment boundary.
    pub raw: Vec<f64>,
    /// Selected atom per dimension, present for atomic heads only.
    pub atom_indices: Option<Vec<usize>>,
    /// Log-probability of this sample under the distribution that drew it.
    pub behavior_log_prob: f64,
}

/// Factorized joint action distribution produced by a policy forward pass.
#[derive(Clone, Debug)]
pub struct PolicyDistribution {
    head: HeadKind,
    dims: Vec<DimDist>,
    grid: Option<ActionGrid>,
}

impl PolicyDistribution {
    /// Validates head/marginal consistency and parameter finiteness.
    /// Non-finite parameters are a numeric error carrying the head kind and
    /// the offending dimension, so callers can record a premature
    /// termination instead of crashing.
    pub fn new(
        head: HeadKind,
        dims: Vec<DimDist>,
        grid: Option<ActionGrid>,
    ) -> CoreResult<PolicyDistribution> {
        if dims.is_empty() {
            return Err(CoreError::contract("distribution with zero dimensions"));
        }
        for (i, d) in dims.iter().enumerate() {
            let matches_head = match (head, d) {
                (HeadKind::Gaussian | HeadKind::GaussianTanh, DimDist::Gaussian { .. }) => true,
                (HeadKind::Beta, DimDist::Beta { .. }) => true,
                (HeadKind::Discrete | HeadKind::Ordinal, DimDist::Categorical { .. }) => true,
                _ => false,
            };
            if !matches_head {
                return Err(CoreError::contract(format!(
                    "dimension {i} does not match head kind {head}"
                )));
            }
            if !d.all_finite() {
                return Err(CoreError::numeric_at(
                    "non-finite distribution parameter",
                    Some(head),
                    Some(i),
                    None,
                ));
            }
            if let DimDist::Beta { alpha, beta } = d {
                if *alpha < 1.0 || *beta < 1.0 {
                    return Err(CoreError::contract(format!(
                        "beta shape below 1 in dimension {i}: alpha={alpha} beta={beta}"
                    )));
                }
            }
        }
        match (&grid, head.is_atomic()) {
            (Some(g), true) => {
                for (i, d) in dims.iter().enumerate() {
                    if let DimDist::Categorical { probs, .. } = d {
                        if probs.len() != g.bins() {
                            return Err(CoreError::contract(format!(
                                "dimension {i} has {} atoms but the grid has {}",
                                probs.len(),
                                g.bins()
                            )));
                        }
                    }
                }
            }
            (None, false) => {}
            (Some(_), false) => {
                return Err(CoreError::contract("grid supplied for a continuous head"))
            }
            (None, true) => {
                return Err(CoreError::contract("atomic head without a grid"));
            }
        }
        Ok(PolicyDistribution { head, dims, grid })
    }

    pub fn head(&self) -> HeadKind {
        self.head
    }

    pub fn act_dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[DimDist] {
        &self.dims
    }

    pub fn grid(&self) -> Option<&ActionGrid> {
        self.grid.as_ref()
    }

    /// Draws one action; deterministic given the RNG state.
    pub fn sample(&self, rng: &mut Rng) -> CoreResult<ActionSample> {
        let m = self.dims.len();
        let mut raw = Vec::with_capacity(m);
        let mut continuous = Vec::with_capacity(m);
        let mut atoms: Option<Vec<usize>> = self.head.is_atomic().then(Vec::new);
        for (i, d) in self.dims.iter().enumerate() {
            match d {
                DimDist::Gaussian { mean, log_std } => {
                    let z: f64 = rng.sample(StandardNormal);
                    let a = mean + log_std.exp() * z;
                    raw.push(a);
                    continuous.push(a.clamp(-1.0, 1.0));
                }
                DimDist::Beta { alpha, beta } => {
                    let x = beta_draw(*alpha, *beta, rng).map_err(|e| match e {
                        CoreError::Numeric { what, .. } => {
                            CoreError::numeric_at(what, Some(self.head), Some(i), None)
                        }
                        other => other,
                    })?;
                    let a = 2.0 * x - 1.0;
                    raw.push(a);
                    continuous.push(a);
                }
                DimDist::Categorical { probs, .. } => {
                    let j = inverse_cdf(probs, rng.gen::<f64>());
                    let a = self.grid.as_ref().expect("validated").atom(j);
                    raw.push(a);
                    continuous.push(a);
                    atoms.as_mut().expect("atomic head").push(j);
                }
            }
        }
        let mut sample = ActionSample {
            continuous,
            raw,
            atom_indices: atoms,
            behavior_log_prob: 0.0,
        };
        sample.behavior_log_prob = self.log_prob(&sample)?;
        Ok(sample)
    }

    /// Joint log-probability: the sum of per-dimension marginals. Gaussian
    /// heads evaluate at `sample.raw`; atomic heads at the stored indices.
    pub fn log_prob(&self, sample: &ActionSample) -> CoreResult<f64> {
        if sample.raw.len() != self.dims.len() {
            return Err(CoreError::contract(format!(
                "sample has {} dimensions, distribution has {}",
                sample.raw.len(),
                self.dims.len()
            )));
        }
        let mut total = 0.0;
        for (i, d) in self.dims.iter().enumerate() {
            match d {
                DimDist::Gaussian { mean, log_std } => {
                    let sigma = log_std.exp();
                    let z = (sample.raw[i] - mean) / sigma;
                    total += -0.5 * LN_2PI - log_std - 0.5 * z * z;
                }
                DimDist::Beta { alpha, beta } => {
                    let x = 0.5 * (sample.raw[i] + 1.0);
                    if !(0.0..=1.0).contains(&x) {
                        return Err(CoreError::contract(format!(
                            "beta action outside [-1, 1] in dimension {i}"
                        )));
                    }
                    total += (alpha - 1.0) * x.max(CE_EPS).ln()
                        + (beta - 1.0) * (1.0 - x).max(CE_EPS).ln()
                        - ln_beta_fn(*alpha, *beta)
                        - LN_2;
                }
                DimDist::Categorical { log_probs, .. } => {
                    let idx = sample
                        .atom_indices
                        .as_ref()
                        .ok_or_else(|| {
                            CoreError::contract("atomic head sample without atom indices")
                        })?
                        .get(i)
                        .copied()
                        .ok_or_else(|| CoreError::contract("missing atom index"))?;
                    if idx >= log_probs.len() {
                        return Err(CoreError::contract(format!(
                            "atom index {idx} out of range for {} atoms",
                            log_probs.len()
                        )));
                    }
                    total += log_probs[idx];
                }
            }
        }
        Ok(total)
    }

    /// Joint entropy, summed across dimensions. Differential entropy for
    /// continuous heads (beta on the [−1, 1] action scale), Shannon entropy
    /// for atomic heads.
    pub fn entropy(&self) -> f64 {
        self.dims
            .iter()
            .map(|d| match d {
                DimDist::Gaussian { log_std, .. } => 0.5 * (1.0 + LN_2PI) + log_std,
                DimDist::Beta { alpha, beta } => {
                    let a = *alpha;
                    let b = *beta;
                    ln_beta_fn(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
                        + (a + b - 2.0) * digamma(a + b)
                        + LN_2
                }
                DimDist::Categorical { probs, log_probs } => {
                    -probs.iter().zip(log_probs).map(|(p, lp)| p * lp).sum::<f64>()
                }
            })
            .sum()
    }

    /// KL(self ‖ other), summed across dimensions. Both distributions must
    /// share the head kind and dimension count.
    pub fn kl(&self, other: &PolicyDistribution) -> CoreResult<f64> {
        if self.head != other.head {
            return Err(CoreError::contract(format!(
                "kl between different heads: {} vs {}",
                self.head, other.head
            )));
        }
        if self.dims.len() != other.dims.len() {
            return Err(CoreError::contract("kl between different dimension counts"));
        }
        let mut total = 0.0;
        for (p, q) in self.dims.iter().zip(&other.dims) {
            total += match (p, q) {
                (
                    DimDist::Gaussian { mean: m1, log_std: l1 },
                    DimDist::Gaussian { mean: m2, log_std: l2 },
                ) => {
                    let s1 = l1.exp();
                    let s2 = l2.exp();
                    (l2 - l1) + (s1 * s1 + (m1 - m2) * (m1 - m2)) / (2.0 * s2 * s2) - 0.5
                }
                (
                    DimDist::Beta { alpha: a1, beta: b1 },
                    DimDist::Beta { alpha: a2, beta: b2 },
                ) => {
                    ln_beta_fn(*a2, *b2) - ln_beta_fn(*a1, *b1)
                        + (a1 - a2) * digamma(*a1)
                        + (b1 - b2) * digamma(*b1)
                        + (a2 - a1 + b2 - b1) * digamma(a1 + b1)
                }
                (
                    DimDist::Categorical { probs: p1, log_probs: lp1 },
                    DimDist::Categorical { probs: p2, log_probs: lp2 },
                ) => {
                    if p1.len() != p2.len() {
                        return Err(CoreError::contract("kl between different atom counts"));
                    }
                    let _ = p2;
                    p1.iter()
                        .zip(lp1.iter().zip(lp2))
                        .map(|(p, (l1, l2))| p * (l1 - l2))
                        .sum()
                }
                _ => return Err(CoreError::contract("kl between mismatched marginals")),
            };
        }
        Ok(total)
    }
}

pub(crate) const LN_2PI: f64 = 1.8378770664093453;
pub(crate) const LN_2: f64 = std::f64::consts::LN_2;

/// ln B(a, b) = lnΓ(a) + lnΓ(b) − lnΓ(a+b).
pub(crate) fn ln_beta_fn(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// Inverse-CDF categorical selection: the smallest index whose cumulative
/// probability reaches `u`, which breaks boundary ties toward the lower
/// index. Falls back to the last index if rounding leaves the total below u.
fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (j, &p) in probs.iter().enumerate() {
        cum += p;
        if u <= cum {
            return j;
        }
    }
    probs.len() - 1
}

/// One Gamma(shape ≥ 1, scale 1) draw by the Marsaglia–Tsang squeeze
/// method, spending from a shared rejection budget.
fn gamma_draw(shape: f64, rng: &mut Rng, budget: &mut u32) -> CoreResult<f64> {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        if *budget == 0 {
            return Err(CoreError::numeric("beta sampler exceeded its rejection cap"));
        }
        *budget -= 1;
        let x: f64 = rng.sample(StandardNormal);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u: f64 = rng.gen();
        if u < 1.0 - 0.0331 * x * x * x * x {
            return Ok(d * v);
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return Ok(d * v);
        }
    }
}

/// One Beta(alpha, beta) draw in (0, 1) from a pair of gamma draws. The
/// whole rejection loop is capped at 1000 iterations; exhaustion is a
/// numeric error rather than a hang.
pub fn beta_draw(alpha: f64, beta: f64, rng: &mut Rng) -> CoreResult<f64> {
    let mut budget = 1000u32;
    let ga = gamma_draw(alpha, rng, &mut budget)?;
    let gb = gamma_draw(beta, rng, &mut budget)?;
    Ok(ga / (ga + gb))
}
