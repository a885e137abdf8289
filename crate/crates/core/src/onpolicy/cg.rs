//! Matrix-free conjugate gradient for symmetric positive-definite systems.

use crate::error::{CoreError, CoreResult};

#[derive(Debug)]
pub struct CgResult {
    pub x: Vec<f64>,
    /// Euclidean norm of `b - A x` at exit.
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Solve `A x = b` where `A` is available only as a matrix-vector product.
/// Stops when the residual norm drops to `tol * |b|` or after `max_iters`
/// iterations; hitting the cap is not an error and the residual is
/// reported either way.
pub fn conjugate_gradient(
    apply_a: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    max_iters: usize,
    tol: f64,
) -> CoreResult<CgResult> {
    let n = b.len();
    let b_norm = norm(b);
    if !b_norm.is_finite() {
        return Err(CoreError::numeric("conjugate gradient: non-finite rhs"));
    }
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgResult {
            x,
            residual_norm: 0.0,
            iterations: 0,
        });
    }
    let threshold = tol * b_norm;
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut rr = dot(&r, &r);
    let mut iterations = 0;
    for _ in 0..max_iters {
        if rr.sqrt() <= threshold {
            break;
        }
        let ap = apply_a(&p);
        let pap = dot(&p, &ap);
        if !pap.is_finite() {
            return Err(CoreError::numeric(
                "conjugate gradient: non-finite curvature",
            ));
        }
        if pap <= 0.0 {
            return Err(CoreError::numeric(format!(
                "conjugate gradient: non-positive curvature {pap:.3e} (operator not PD)"
            )));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if !rr_new.is_finite() {
            return Err(CoreError::numeric(
                "conjugate gradient: non-finite residual",
            ));
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
    }
    Ok(CgResult {
        x,
        residual_norm: rr.sqrt(),
        iterations,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_system_solves_in_one_iteration() {
        let b = [3.0, -1.0, 2.5];
        let r = conjugate_gradient(|v| v.to_vec(), &b, 10, 1e-10).unwrap();
        assert_eq!(r.iterations, 1);
        for (xi, bi) in r.x.iter().zip(b.iter()) {
            assert!((xi - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_system_recovers_componentwise_quotients() {
        let r = conjugate_gradient(|v| vec![2.0 * v[0], 4.0 * v[1]], &[2.0, 4.0], 10, 1e-12)
            .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-12);
        assert!((r.x[1] - 1.0).abs() < 1e-12);
        assert!(r.residual_norm < 1e-10);
    }

    #[test]
    fn zero_rhs_returns_zero_without_applying_the_operator() {
        let r = conjugate_gradient(|_| panic!("must not be called"), &[0.0; 4], 10, 1e-10)
            .unwrap();
        assert_eq!(r.x, vec![0.0; 4]);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn negative_curvature_is_a_numeric_error() {
        let err = conjugate_gradient(|v| vec![-v[0]], &[1.0], 10, 1e-10).unwrap_err();
        assert!(err.is_numeric(), "{err}");
    }

    #[test]
    fn iteration_cap_is_not_an_error_and_reports_the_residual() {
        // 3x3 SPD system, capped at one iteration: must return with a
        // nonzero residual rather than failing.
        let a = [[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 5.0]];
        let apply = |v: &[f64]| {
            (0..3)
                .map(|i| (0..3).map(|j| a[i][j] * v[j]).sum())
                .collect::<Vec<f64>>()
        };
        let r = conjugate_gradient(apply, &[1.0, 2.0, 3.0], 1, 1e-14).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(r.residual_norm > 0.0);
    }
}
