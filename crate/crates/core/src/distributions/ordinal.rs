//! Stick-breaking ordinal transform and the cumulative-encoding cross
//! entropy that motivates it.
//!
//! The transform maps K raw logits L through per-bin sigmoids s_j = σ(L_j)
//! into K final logits
//!
//! ```text
//! L'_i = Σ_{j≤i} log s_j + Σ_{j>i} log(1 − s_j)
//! ```
//!
//! so that −L'_k equals the binary cross entropy between the cumulative
//! target t_k (first k entries one) and the sigmoid vector s. Class
//! probabilities are softmax(L'). Every raw logit touches every final
//! logit, which is what encodes the ordering of the bins.

use crate::diffmath::special::log_sigmoid;

/// Floor applied inside every log-of-probability computation.
pub const CE_EPS: f64 = 1e-8;

/// Applies the stick-breaking transform to raw logits.
pub fn ordinal_transform(raw: &[f64]) -> Vec<f64> {
    let k = raw.len();
    assert!(k >= 1, "ordinal transform needs at least one logit");
    let ls: Vec<f64> = raw.iter().map(|&x| log_sigmoid(x)).collect();
    let lc: Vec<f64> = raw.iter().map(|&x| log_sigmoid(-x)).collect();
    // suffix[i] = Σ_{j≥i} lc[j]
    let mut suffix = vec![0.0; k + 1];
    for i in (0..k).rev() {
        suffix[i] = suffix[i + 1] + lc[i];
    }
    let mut out = Vec::with_capacity(k);
    let mut prefix = 0.0;
    for i in 0..k {
        prefix += ls[i];
        out.push(prefix + suffix[i + 1]);
    }
    out
}

/// Cumulative target vector: `ones` leading ones followed by zeros.
pub fn cumulative_target(ones: usize, bins: usize) -> Vec<f64> {
    assert!(ones >= 1 && ones <= bins, "target class out of range");
    (0..bins).map(|i| if i < ones { 1.0 } else { 0.0 }).collect()
}

/// One-hot vector with a single one at `index`.
pub fn one_hot(index: usize, bins: usize) -> Vec<f64> {
    assert!(index < bins, "one-hot index out of range");
    (0..bins).map(|i| if i == index { 1.0 } else { 0.0 }).collect()
}

/// Numerically floored binary cross entropy between a target `x` and a
/// prediction `y`, both componentwise in [0, 1]:
///
/// ```text
/// CE(x, y) = −Σ_i [ x_i · ln max(y_i, ε) + (1 − x_i) · ln max(1 − y_i, ε) ]
/// ```
///
/// The floor keeps every term finite even for hard 0/1 predictions.
pub fn stable_cross_entropy(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "cross entropy length mismatch");
    let mut acc = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        acc -= xi * yi.max(CE_EPS).ln() + (1.0 - xi) * (1.0 - yi).max(CE_EPS).ln();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmath::special::{sigmoid, softmax};
    use crate::rngstream::{rng_for, stream};
    use rand::Rng;

    #[test]
    fn transformed_logits_softmax_to_probability_vector() {
        let mut rng = rng_for(9, stream::SAMPLE);
        for _ in 0..1000 {
            let k = rng.gen_range(2..=20);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-6.0..6.0)).collect();
            let probs = softmax(&ordinal_transform(&raw));
            let total: f64 = probs.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(probs.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn zero_logits_give_uniform_probabilities() {
        for k in [2usize, 3, 11, 15] {
            let probs = softmax(&ordinal_transform(&vec![0.0; k]));
            for &p in &probs {
                assert!((p - 1.0 / k as f64).abs() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn negated_final_logit_is_cross_entropy_to_cumulative_target() {
        let mut rng = rng_for(10, stream::SAMPLE);
        for _ in 0..200 {
            let k = rng.gen_range(2..=15);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let prime = ordinal_transform(&raw);
            let s: Vec<f64> = raw.iter().map(|&x| sigmoid(x)).collect();
            for class in 1..=k {
                let target = cumulative_target(class, k);
                let ce = stable_cross_entropy(&target, &s);
                assert!(
                    (ce + prime[class - 1]).abs() < 1e-10,
                    "k={k} class={class}: CE={ce} L'={}",
                    prime[class - 1]
                );
            }
        }
    }

    #[test]
    fn cumulative_targets_order_classes_strictly_but_one_hots_do_not() {
        for bins in 3..=15usize {
            for k in 1..=(bins - 2) {
                let near = stable_cross_entropy(
                    &cumulative_target(k, bins),
                    &cumulative_target(k + 1, bins),
                );
                let far = stable_cross_entropy(
                    &cumulative_target(k, bins),
                    &cumulative_target(k + 2, bins),
                );
                assert!(near < far, "bins={bins} k={k}: {near} !< {far}");
            }
            for k in 0..(bins - 2) {
                let near = stable_cross_entropy(&one_hot(k, bins), &one_hot(k + 1, bins));
                let far = stable_cross_entropy(&one_hot(k, bins), &one_hot(k + 2, bins));
                assert_eq!(near, far, "bins={bins} k={k}");
            }
        }
    }

    #[test]
    fn cross_entropy_between_nested_targets_pays_the_floor_per_extra_one() {
        // each position where the prediction has a hard one that the target
        // zeroes costs exactly −ln ε
        let unit = -CE_EPS.ln();
        let near = stable_cross_entropy(&cumulative_target(3, 8), &cumulative_target(4, 8));
        let far = stable_cross_entropy(&cumulative_target(3, 8), &cumulative_target(5, 8));
        assert!((near - unit).abs() < 1e-12);
        assert!((far - 2.0 * unit).abs() < 1e-12);
        assert!((unit - 18.420680743952367).abs() < 1e-12);
    }

    /// The first raw logit contributes log s_1 to every final logit, a
    /// uniform shift the softmax cancels, so the induced probabilities are
    /// exactly invariant to it. Every later logit moves the distribution.
    #[test]
    fn probabilities_ignore_the_first_logit_and_respond_to_all_others() {
        let mut rng = rng_for(11, stream::SAMPLE);
        for _ in 0..20 {
            let k = rng.gen_range(3..=11);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let h = 1e-6;
            for j in 0..k {
                let mut up = raw.clone();
                up[j] += h;
                let mut dn = raw.clone();
                dn[j] -= h;
                let pu = softmax(&ordinal_transform(&up));
                let pd = softmax(&ordinal_transform(&dn));
                let max_move = pu
                    .iter()
                    .zip(&pd)
                    .map(|(a, b)| ((a - b) / (2.0 * h)).abs())
                    .fold(0.0, f64::max);
                if j == 0 {
                    assert!(max_move < 1e-9, "first logit should be inert, moved {max_move}");
                } else {
                    assert!(max_move > 1e-6, "logit {j} of {k} moved nothing");
                }
            }
            // invariance to the first logit is exact, not just first order
            let mut shifted = raw.clone();
            shifted[0] += 3.0;
            let p = softmax(&ordinal_transform(&raw));
            let q = softmax(&ordinal_transform(&shifted));
            for (a, b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
