//! Special functions and overflow-safe nonlinearities on `f64`.
//!
//! The gamma-family functions cover the Beta head: `lgamma` appears in
//! log-probabilities, `digamma` in entropy and in the reverse pass through
//! `lgamma`, `trigamma` in the reverse pass through `digamma` and in dual
//! tangents of `digamma`. All are accurate to ~1e-13 relative on the domain
//! the heads can produce (arguments in `[1, 2e4]`); `lgamma` additionally
//! handles the full positive axis via reflection for test convenience.

/// Logistic sigmoid without overflow for large `|x|`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow; exact linear behavior for large `x`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln(sigmoid(x))`, computed as `-softplus(-x)` so that large negative
/// arguments stay exact instead of saturating through a rounded probability.
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// Max-subtracted softmax. Finite for arbitrary logit magnitudes; the result
/// is a probability vector summing to 1 up to rounding.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v /= z;
    }
    out
}

/// `log softmax`, computed as `x - m - ln(sum exp(x - m))`.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse: f64 = logits.iter().map(|&l| (l - m).exp()).sum::<f64>().ln() + m;
    logits.iter().map(|&l| l - lse).collect()
}

// Lanczos approximation, g = 7, 9 coefficients (Boost/GSL standard set).
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0`.
pub fn lgamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
        let s = (std::f64::consts::PI * x).sin();
        std::f64::consts::PI.ln() - s.ln() - lgamma(1.0 - x)
    } else {
        let z = x - 1.0;
        let mut acc = LANCZOS[0];
        for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
            acc += c / (z + i as f64);
        }
        let t = z + LANCZOS_G + 0.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
    }
}

// Asymptotic series below are the standard Bernoulli-number expansions,
// applied after shifting the argument above SHIFT_MIN by recurrence.
const SHIFT_MIN: f64 = 10.0;

/// `psi(x) = d/dx ln Gamma(x)` for `x > 0`.
pub fn digamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_MIN {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// `psi'(x)` for `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_MIN {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + inv
        + inv2
            * (0.5
                + inv
                    * (1.0 / 6.0
                        - inv2
                            * (1.0 / 30.0
                                - inv2
                                    * (1.0 / 42.0
                                        - inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0))))))
}

/// `psi''(x)` for `x > 0`.
pub fn tetragamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_MIN {
        acc += 2.0 / (x * x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    -(acc
        + inv2
            * (1.0
                + inv
                    * (1.0
                        + inv
                            * (0.5
                                - inv2
                                    * (1.0 / 6.0
                                        - inv2
                                            * (1.0 / 6.0
                                                - inv2
                                                    * (3.0 / 10.0 - inv2 * (5.0 / 6.0))))))))
}
