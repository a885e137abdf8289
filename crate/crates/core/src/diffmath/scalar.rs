//! Scalar abstraction for the tape: plain `f64` for values and gradients,
//! [`Dual`] for forward-over-reverse Hessian-vector products.
//!
//! Running the reverse pass in `Dual` arithmetic with parameter tangents
//! seeded to a direction `v` yields gradients whose tangent parts equal
//! `H v` exactly (no finite-difference step involved).

use super::special;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Closed set of scalar operations the tape needs. Implementations must be
/// exact in the primal part: `f(Dual::constant(x)).value() == f(x)` bitwise.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_f64(v: f64) -> Self;
    /// Primal part. Branch decisions (clamp, min) are made on this.
    fn value(self) -> f64;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn mul_f64(self, c: f64) -> Self;
    fn add_f64(self, c: f64) -> Self;
    /// True only when every component (primal and tangent) is exactly zero;
    /// used to skip dead adjoint branches.
    fn is_zero(self) -> bool;

    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn sigmoid(self) -> Self;
    fn softplus(self) -> Self;
    fn lgamma(self) -> Self;
    fn digamma(self) -> Self;
    fn trigamma(self) -> Self;
}

impl Real for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
        self
    }
    fn mul_f64(self, c: f64) -> Self {
        self * c
    }
    fn add_f64(self, c: f64) -> Self {
        self + c
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn sigmoid(self) -> Self {
        special::sigmoid(self)
    }
    fn softplus(self) -> Self {
        special::softplus(self)
    }
    fn lgamma(self) -> Self {
        special::lgamma(self)
    }
    fn digamma(self) -> Self {
        special::digamma(self)
    }
    fn trigamma(self) -> Self {
        special::trigamma(self)
    }
    fn is_zero(self) -> bool {
        self == 0.0
    }
}

/// First-order dual number `re + eps * du` with `eps^2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub du: f64,
}

impl Dual {
    pub fn new(re: f64, du: f64) -> Self {
        Dual { re, du }
    }
    pub fn constant(re: f64) -> Self {
        Dual { re, du: 0.0 }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.du + o.du)
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.du - o.du)
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.du + self.du * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.re;
        Dual::new(self.re * inv, (self.du - self.re * inv * o.du) * inv)
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.du)
    }
}

impl AddAssign for Dual {
    fn add_assign(&mut self, o: Dual) {
        self.re += o.re;
        self.du += o.du;
    }
}

impl Real for Dual {
    fn from_f64(v: f64) -> Self {
        Dual::constant(v)
    }
    fn value(self) -> f64 {
        self.re
    }
    fn mul_f64(self, c: f64) -> Self {
        Dual::new(self.re * c, self.du * c)
    }
    fn add_f64(self, c: f64) -> Self {
        Dual::new(self.re + c, self.du)
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual::new(e, e * self.du)
    }
    fn ln(self) -> Self {
        Dual::new(self.re.ln(), self.du / self.re)
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        Dual::new(s, 0.5 * self.du / s)
    }
    fn tanh(self) -> Self {
        let t = self.re.tanh();
        Dual::new(t, (1.0 - t * t) * self.du)
    }
    fn sigmoid(self) -> Self {
        let s = special::sigmoid(self.re);
        Dual::new(s, s * (1.0 - s) * self.du)
    }
    fn softplus(self) -> Self {
        Dual::new(special::softplus(self.re), special::sigmoid(self.re) * self.du)
    }
    fn lgamma(self) -> Self {
        Dual::new(special::lgamma(self.re), special::digamma(self.re) * self.du)
    }
    fn digamma(self) -> Self {
        Dual::new(special::digamma(self.re), special::trigamma(self.re) * self.du)
    }
    fn trigamma(self) -> Self {
        Dual::new(special::trigamma(self.re), special::tetragamma(self.re) * self.du)
    }
    fn is_zero(self) -> bool {
        self.re == 0.0 && self.du == 0.0
    }
}
