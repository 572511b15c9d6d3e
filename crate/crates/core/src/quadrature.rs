//! Adaptive trapezoid rule for smooth periodic integrands.
//!
//! On a full period the trapezoid rule converges geometrically, so the
//! difference between successive halvings is a sharp error estimate. Coarse
//! grids can alias a high harmonic onto a low one and agree by accident, so
//! convergence must be seen on two consecutive halvings.

use crate::error::{BrwError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Integrates `f` over one period `[a, a + period]`, doubling the node count
/// until successive estimates agree to `abs_tol` (or to rounding level, if
/// that is larger).
pub fn periodic_trapezoid(
    f: impl Fn(f64) -> f64,
    a: f64,
    period: f64,
    abs_tol: f64,
    max_levels: u32,
) -> Result<QuadratureResult> {
    let mut nodes = 8usize;
    let mut h = period / nodes as f64;
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for i in 0..nodes {
        let v = f(a + i as f64 * h);
        sum += v;
        abs_sum += v.abs();
    }
    let mut estimate = sum * h;
    let mut streak = 0;
    for _ in 0..max_levels {
        // new nodes sit at the midpoints of the current ones
        let mut added = 0.0;
        for i in 0..nodes {
            let v = f(a + (i as f64 + 0.5) * h);
            added += v;
            abs_sum += v.abs();
        }
        sum += added;
        nodes *= 2;
        h *= 0.5;
        let refined = sum * h;
        let change = (refined - estimate).abs();
        let rounding = 16.0 * f64::EPSILON * abs_sum * h;
        estimate = refined;
        if change <= abs_tol.max(rounding) {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak == 2 {
            return Ok(QuadratureResult {
                value: refined,
                error_estimate: change,
                evaluations: nodes,
            });
        }
    }
    Err(BrwError::Numerical(format!(
        "trapezoid rule did not reach {abs_tol:e} with {nodes} nodes"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_trig_polynomials_exactly() {
        let r = periodic_trapezoid(|t| 3.0 + (2.0 * t).cos() + (5.0 * t).sin(), -PI, 2.0 * PI, 1e-14, 20).unwrap();
        assert!((r.value - 6.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn aliased_harmonic_is_not_accepted_early() {
        // on 8 and 16 nodes cos(15 t) samples like cos(t)
        let r = periodic_trapezoid(|t| (15.0 * t).cos() / (8.0 - 0.2 * t.cos()), -PI, 2.0 * PI, 1e-12, 24).unwrap();
        assert!(r.value.abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn bessel_type_integral() {
        // int_0^{2 pi} exp(cos t) dt = 2 pi I_0(1)
        let i0_1 = 1.266_065_877_752_008_4;
        let r = periodic_trapezoid(|t| t.cos().exp(), 0.0, 2.0 * PI, 1e-14, 20).unwrap();
        assert!((r.value - 2.0 * PI * i0_1).abs() < 1e-13);
    }
}
