//! On-policy policy-gradient toolkit for low-dimensional continuous control,
//! built around interchangeable policy heads over the same bounded action
//! space: factorized Gaussian (raw and tanh-squashed mean), Beta, and
//! per-dimension categorical heads over a uniform action grid, the latter
//! either with unconstrained logits or with an ordinal (stick-breaking)
//! logit transform.
//!
//! The crate is deliberately self-contained: reverse-mode differentiation,
//! the optimizers (Adam, conjugate gradient for trust-region steps), GAE,
//! and the training loops are all implemented here on plain `f64` buffers,
//! so every gradient has a finite-difference oracle test next to it.
//!
//! Layout:
//! - [`diffmath`]: tape autodiff over vector nodes, dual numbers for
//!   Hessian-vector products, MLP parameter handling.
//! - [`distributions`]: action grid, policy heads, sampling, log-probs,
//!   entropy and KL in closed form.
//! - [`environments`]: three small deterministic-given-seed tasks.
//! - [`onpolicy`]: rollout collection, GAE, PPO / TRPO / vanilla PG updates,
//!   value-function fitting.
//! - [`analysis`]: gradient-variance, capacity, compute-cost and
//!   hyperparameter-sensitivity scans.

pub mod analysis;
pub mod diffmath;
pub mod distributions;
pub mod environments;
pub mod error;
pub mod onpolicy;
pub mod parallel;
pub mod rngstream;

pub use error::CoreError;
