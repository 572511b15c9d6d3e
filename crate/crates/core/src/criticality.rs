//! Critical source intensities.
//!
//! With `x = kappa / b0`, the tridiagonal determinants `I_n` obey
//! `I_n = (1 + x) I_{n-1} - (x/2)^2 I_{n-2}` with `I_0 = 1`, `I_1 = 1 + x/2`,
//! and have the closed form `I_n = c1 l1^n + c2 l2^n`. A positive isolated
//! eigenvalue exists iff
//!
//! ```text
//! J_n = 2^{n+1} b0^n ((beta - kappa) I_n + kappa^2/(2 b0) I_{n-1}) > 0,
//! ```
//!
//! i.e. iff `beta > kappa - kappa^2/(2 b0) * I_{n-1}/I_n`. As `n -> inf`
//! the threshold tends to `beta* > b0 sqrt(1 + 2 kappa/b0)`.

use std::fmt;

use crate::error::{BrwError, Result};
use crate::model::ModelParams;

/// Relative slack used when comparing `beta` with the threshold.
pub const REGIME_TOL: f64 = 1e-12;

fn check_rates(kappa: f64, b0: f64) -> Result<()> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(BrwError::Domain(format!("kappa = {kappa} must be positive")));
    }
    if !(b0.is_finite() && b0 > 0.0) {
        return Err(BrwError::Domain(format!("b0 = {b0} must be positive")));
    }
    Ok(())
}

/// Roots and coefficients of the `I_n` recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceBasis {
    pub x: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub c1: f64,
    pub c2: f64,
}

impl RecurrenceBasis {
    pub fn new(kappa: f64, b0: f64) -> Result<Self> {
        check_rates(kappa, b0)?;
        let x = kappa / b0;
        let disc = (1.0 + 2.0 * x).sqrt();
        let lambda1 = 0.5 * (1.0 + x + disc);
        // product of the roots is x^2/4; avoids cancellation for small x
        let lambda2 = 0.25 * x * x / lambda1;
        let i1 = 1.0 + 0.5 * x;
        let gap = lambda1 - lambda2;
        Ok(Self {
            x,
            lambda1,
            lambda2,
            c1: (i1 - lambda2) / gap,
            c2: (lambda1 - i1) / gap,
        })
    }

    /// `I_n = c1 l1^n + c2 l2^n`.
    pub fn closed_form_i(&self, n: u32) -> f64 {
        self.c1 * self.lambda1.powi(n as i32) + self.c2 * self.lambda2.powi(n as i32)
    }

    /// `I_{n-1} / I_n` evaluated after dividing through by `c1 l1^n`, so it
    /// stays finite for any `n` and tends to `1 / l1`.
    pub fn i_ratio(&self, n: u32) -> f64 {
        assert!(n >= 1);
        let rho = self.lambda2 / self.lambda1;
        let w = self.c2 / self.c1;
        (1.0 + w * rho.powi(n as i32 - 1)) / (self.lambda1 * (1.0 + w * rho.powi(n as i32)))
    }
}

/// `I_n` by forward recurrence.
pub fn recurrence_i(n: i64, kappa: f64, b0: f64) -> Result<f64> {
    check_rates(kappa, b0)?;
    if n < 0 {
        return Err(BrwError::Domain(format!("I_n needs n >= 0, got {n}")));
    }
    let x = kappa / b0;
    let q = 0.25 * x * x;
    let (mut prev, mut cur) = (1.0, 1.0 + 0.5 * x);
    if n == 0 {
        return Ok(prev);
    }
    for _ in 1..n {
        let next = (1.0 + x) * cur - q * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `I_n` via [`RecurrenceBasis::closed_form_i`].
pub fn closed_form_i(n: u32, basis: &RecurrenceBasis) -> f64 {
    basis.closed_form_i(n)
}

/// `J_n` in its affine-in-beta form, valid for every real `beta`.
pub fn compute_j(n: u32, kappa: f64, b0: f64, beta: f64) -> Result<f64> {
    if n == 0 {
        return Err(BrwError::Domain("J_n is defined for n >= 1".into()));
    }
    let basis = RecurrenceBasis::new(kappa, b0)?;
    let i_n = basis.closed_form_i(n);
    let i_nm1 = basis.closed_form_i(n - 1);
    let scale = 2f64.powi(n as i32 + 1) * b0.powi(n as i32);
    Ok(scale * ((beta - kappa) * i_n + kappa * kappa / (2.0 * b0) * i_nm1))
}

/// Value at `zeta = 1` of the deflated determinant `Delta(zeta)/(zeta-1)^n`.
///
/// For `n >= 1` this is `2^n J_n`; with no absorbers the determinant is the
/// scalar `2 beta zeta - kappa (1 - zeta^2)`, which is `2 beta` at 1.
pub fn deflated_endpoint(n: usize, kappa: f64, b0: f64, beta: f64) -> Result<f64> {
    if n == 0 {
        return Ok(2.0 * beta);
    }
    Ok(2f64.powi(n as i32) * compute_j(n as u32, kappa, b0, beta)?)
}

/// Critical `beta` for `n >= 1` absorber pairs.
pub fn beta_critical(n: u32, kappa: f64, b0: f64) -> Result<f64> {
    if n == 0 {
        return Err(BrwError::Domain(
            "n = 0 has no absorbers; use beta_critical_no_absorbers".into(),
        ));
    }
    let basis = RecurrenceBasis::new(kappa, b0)?;
    Ok(kappa - kappa * kappa / (2.0 * b0) * basis.i_ratio(n))
}

/// With only the branching source, any `beta > 0` gives a positive eigenvalue
/// `sqrt(kappa^2 + beta^2) - kappa`.
pub fn beta_critical_no_absorbers() -> f64 {
    0.0
}

/// `b0 sqrt(1 + 2 kappa / b0)`, written as `sqrt(b0^2 + 2 kappa b0)` so the
/// `b0 -> 0` limit is exact.
pub fn beta_star_critical_inf(kappa: f64, b0: f64) -> Result<f64> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(BrwError::Domain(format!("kappa = {kappa} must be positive")));
    }
    if !(b0.is_finite() && b0 >= 0.0) {
        return Err(BrwError::Domain(format!("b0 = {b0} must be nonnegative")));
    }
    Ok((b0 * b0 + 2.0 * kappa * b0).sqrt())
}

/// Leading eigenvalue with an absorber at every site:
/// `sqrt(kappa^2 + beta*^2) - kappa - b0`.
pub fn lambda_infinite(kappa: f64, beta_star: f64, b0: f64) -> Result<f64> {
    if !(beta_star > 0.0) {
        return Err(BrwError::Domain(format!("beta* = {beta_star} must be positive")));
    }
    Ok(kappa.hypot(beta_star) - kappa - b0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        })
    }
}

pub fn regime_for(beta: f64, beta_crit: f64) -> Regime {
    let slack = REGIME_TOL * beta_crit.abs().max(1.0);
    if beta > beta_crit + slack {
        Regime::Supercritical
    } else if beta < beta_crit - slack {
        Regime::Subcritical
    } else {
        Regime::Critical
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalityReport {
    pub n: usize,
    pub beta: f64,
    /// `I_n`; 1 when `n = 0`.
    pub i_n: f64,
    /// `I_{n-1}`; absent when `n = 0`.
    pub i_nm1: Option<f64>,
    /// `J_n` for `n >= 1`; for `n = 0` the deflated endpoint `2 beta`.
    pub j_n: f64,
    pub beta_crit: f64,
    pub beta_star_crit: f64,
    pub beta_star_crit_inf: f64,
    pub regime: Regime,
}

/// Thresholds and regime for the given parameters.
pub fn classify_regime(params: &ModelParams) -> Result<CriticalityReport> {
    let (kappa, b0, n, beta) = (params.kappa(), params.b0(), params.n(), params.beta());
    let beta_star_crit_inf = beta_star_critical_inf(kappa, b0)?;
    let report = if n == 0 {
        let beta_crit = beta_critical_no_absorbers();
        CriticalityReport {
            n,
            beta,
            i_n: 1.0,
            i_nm1: None,
            j_n: deflated_endpoint(0, kappa, b0, beta)?,
            beta_crit,
            beta_star_crit: beta_crit + b0,
            beta_star_crit_inf,
            regime: regime_for(beta, beta_crit),
        }
    } else {
        let basis = RecurrenceBasis::new(kappa, b0)?;
        let beta_crit = beta_critical(n as u32, kappa, b0)?;
        CriticalityReport {
            n,
            beta,
            i_n: basis.closed_form_i(n as u32),
            i_nm1: Some(basis.closed_form_i(n as u32 - 1)),
            j_n: compute_j(n as u32, kappa, b0, beta)?,
            beta_crit,
            beta_star_crit: beta_crit + b0,
            beta_star_crit_inf,
            regime: regime_for(beta, beta_crit),
        }
    };
    Ok(report)
}
