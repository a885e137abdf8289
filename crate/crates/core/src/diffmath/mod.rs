//! Self-contained reverse-mode differentiation for small MLP policies.
//!
//! Not a general autodiff system: the op set is exactly what the policy
//! heads and trust-region algebra need, every op carries a hand-derived
//! adjoint rule, and each rule is pinned by a finite-difference test.
//! Hessian-vector products come from running the reverse pass in dual-number
//! arithmetic (forward-over-reverse), so second-order information is exact.

pub mod grad;
pub mod net;
pub mod params;
pub mod scalar;
pub mod special;
pub mod tape;

pub use grad::{hessian_vector_product, value_and_grad, value_of, HvpResult, ParamScalarFn};
pub use net::{
    carve_linear, carve_mlp, linear_forward, mlp_forward, Linear, LinearNodes, Mlp, MlpNodes,
};
pub use params::ParameterVector;
pub use scalar::{Dual, Real};
pub use tape::{Adjoints, Tape, Var};
