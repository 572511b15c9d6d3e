//! Model parameters and the truncated evolution operator.
//!
//! The walk jumps to each nearest neighbour at rate `kappa / 2`. The origin
//! carries the branching law, and the sites `±1..=±n` kill particles at rate
//! `b0`. The first-moment generator is the symmetric tridiagonal operator
//!
//! ```text
//! (H f)(x) = kappa/2 (f(x-1) + f(x+1)) - kappa f(x) + beta [x = 0] f(x) - b0 [1 <= |x| <= n] f(x)
//! ```
//!
//! Restricting it to `[-L, L]` with zero boundary values yields the
//! brute-force spectral oracle used to cross-check every closed form.

use crate::error::{BrwError, Result};
use crate::linalg;

/// Relative slack on `sum_k b_k = 0`.
const RATE_SUM_TOL: f64 = 1e-12;

/// Finite-support infinitesimal generating function `f(u) = sum_k b_k u^k`
/// of the branching source. `b_1` is implied by `sum_k b_k = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    /// `(k, b_k)` for `k != 1`, sorted by `k`, zero rates dropped.
    rates: Vec<(u32, f64)>,
    b1: f64,
    beta: f64,
    beta_star: f64,
}

impl OffspringLaw {
    /// Builds the law from the `(k, b_k)` pairs with `k != 1`.
    pub fn new(pairs: &[(u32, f64)]) -> Result<Self> {
        let mut rates: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for &(k, b) in pairs {
            if k == 1 {
                return Err(BrwError::Validation(
                    "b_1 is implied by the other rates and may not be given".into(),
                ));
            }
            if !b.is_finite() || b < 0.0 {
                return Err(BrwError::Validation(format!("rate b_{k} = {b} must be finite and nonnegative")));
            }
            if rates.iter().any(|&(j, _)| j == k) {
                return Err(BrwError::Validation(format!("rate b_{k} given twice")));
            }
            if b > 0.0 {
                rates.push((k, b));
            }
        }
        rates.sort_by_key(|&(k, _)| k);

        let b1 = -rates.iter().map(|&(_, b)| b).sum::<f64>();
        let beta_star: f64 = rates
            .iter()
            .filter(|&&(k, _)| k > 1)
            .map(|&(k, b)| (k - 1) as f64 * b)
            .sum();
        if beta_star <= 0.0 {
            return Err(BrwError::Validation(
                "the law has no reproduction term (beta* = 0)".into(),
            ));
        }
        let beta: f64 = b1 + rates.iter().map(|&(k, b)| k as f64 * b).sum::<f64>();

        let law = Self {
            rates,
            b1,
            beta,
            beta_star,
        };
        let total = law.b1 + law.total_rate();
        if total.abs() > RATE_SUM_TOL * law.total_rate() {
            return Err(BrwError::Numerical(format!("rates sum to {total:e}, expected 0")));
        }
        Ok(law)
    }

    /// Pure binary splitting at rate `rate`: `beta = beta* = rate`.
    pub fn binary_splitting(rate: f64) -> Result<Self> {
        Self::new(&[(2, rate)])
    }

    /// A law with the given `beta`: pure binary splitting for `beta > 0`,
    /// otherwise unit-rate splitting plus death at rate `1 - beta`.
    pub fn with_beta(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(BrwError::Validation(format!("beta = {beta} must be finite")));
        }
        if beta > 0.0 {
            Self::binary_splitting(beta)
        } else {
            Self::new(&[(0, 1.0 - beta), (2, 1.0)])
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn beta_star(&self) -> f64 {
        self.beta_star
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    /// Death rate `b_0` of the law itself.
    pub fn death_rate(&self) -> f64 {
        self.rate(0)
    }

    pub fn rate(&self, k: u32) -> f64 {
        if k == 1 {
            return self.b1;
        }
        self.rates
            .iter()
            .find(|&&(j, _)| j == k)
            .map_or(0.0, |&(_, b)| b)
    }

    /// Nonzero `(k, b_k)` pairs with `k != 1`.
    pub fn rates(&self) -> &[(u32, f64)] {
        &self.rates
    }

    /// Rate at which a particle at the source leaves its current state
    /// through branching or death, `sum_{k != 1} b_k = -b_1`.
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().map(|&(_, b)| b).sum()
    }

    pub fn generating_function(&self, u: f64) -> f64 {
        self.b1 * u + self.rates.iter().map(|&(k, b)| b * u.powi(k as i32)).sum::<f64>()
    }

    /// The moment growth condition `b^(r) = O(r! r^{r-1})` needed for the
    /// limit theorem holds trivially for finite support. Not verified.
    pub fn satisfies_moment_growth_assumption(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    kappa: f64,
    b0: f64,
    n: usize,
    offspring: OffspringLaw,
}

impl ModelParams {
    pub fn new(kappa: f64, b0: f64, n: usize, offspring: OffspringLaw) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(BrwError::Validation(format!("kappa = {kappa} must be positive")));
        }
        if !(b0.is_finite() && b0 >= 0.0) {
            return Err(BrwError::Validation(format!("b0 = {b0} must be nonnegative")));
        }
        if n >= 1 && b0 == 0.0 {
            return Err(BrwError::Validation(
                "b0 must be positive when absorbing sources are present (n >= 1)".into(),
            ));
        }
        Ok(Self {
            kappa,
            b0,
            n,
            offspring,
        })
    }

    /// Convenience constructor using [`OffspringLaw::with_beta`].
    pub fn with_beta(kappa: f64, b0: f64, n: usize, beta: f64) -> Result<Self> {
        Self::new(kappa, b0, n, OffspringLaw::with_beta(beta)?)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offspring(&self) -> &OffspringLaw {
        &self.offspring
    }

    pub fn beta(&self) -> f64 {
        self.offspring.beta
    }

    pub fn is_absorber(&self, site: i64) -> bool {
        let d = site.unsigned_abs();
        d >= 1 && d <= self.n as u64
    }

    /// Diagonal entry of the evolution operator at `site`.
    pub fn potential(&self, site: i64) -> f64 {
        let mut v = -self.kappa;
        if site == 0 {
            v += self.beta();
        }
        if self.is_absorber(site) {
            v -= self.b0;
        }
        v
    }

    /// `(H f)(x)` for a function given on all of Z.
    pub fn apply_operator(&self, f: impl Fn(i64) -> f64, site: i64) -> f64 {
        0.5 * self.kappa * (f(site - 1) + f(site + 1)) + self.potential(site) * f(site)
    }

    /// Default truncation half-width, `max(200, 10 n)`.
    pub fn default_half_width(&self) -> usize {
        200.max(10 * self.n)
    }
}

/// Top eigenvalue and unit eigenvector of a truncated operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// Indexed by `site + L`.
    pub vector: Vec<f64>,
}

/// Evolution operator restricted to `[-L, L]` with Dirichlet boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    half_width: usize,
    diagonal: Vec<f64>,
    off_diagonal: f64,
}

impl TruncatedOperator {
    pub fn new(params: &ModelParams, half_width: usize) -> Result<Self> {
        if half_width <= params.n || half_width == 0 {
            return Err(BrwError::WindowTooSmall {
                half_width,
                n: params.n,
            });
        }
        let l = half_width as i64;
        let diagonal = (-l..=l).map(|x| params.potential(x)).collect();
        Ok(Self {
            half_width,
            diagonal,
            off_diagonal: 0.5 * params.kappa,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn off_diagonal(&self) -> f64 {
        self.off_diagonal
    }

    pub fn site(&self, index: usize) -> i64 {
        index as i64 - self.half_width as i64
    }

    pub fn index(&self, site: i64) -> Option<usize> {
        let i = site + self.half_width as i64;
        (0..self.len() as i64).contains(&i).then_some(i as usize)
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        let c = self.off_diagonal;
        (0..n)
            .map(|i| {
                let mut s = self.diagonal[i] * v[i];
                if i > 0 {
                    s += c * v[i - 1];
                }
                if i + 1 < n {
                    s += c * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Largest eigenvalue to absolute accuracy `tol` (Sturm bisection) and a
    /// unit eigenvector (inverse iteration), sign-fixed so its largest
    /// component is positive.
    pub fn top_eigenpair(&self, tol: f64) -> Result<Eigenpair> {
        if !(tol > 0.0) {
            return Err(BrwError::Domain(format!("tolerance {tol} must be positive")));
        }
        let off = vec![self.off_diagonal; self.len() - 1];
        let value = linalg::largest_eigenvalue(&self.diagonal, &off, tol);
        let mut vector = linalg::inverse_iteration(&self.diagonal, &off, value, tol, 3)?;
        let (imax, _) = vector
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        if vector[imax] < 0.0 {
            vector.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(Eigenpair { value, vector })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offspring_examples() {
        let law = OffspringLaw::new(&[(0, 1.0), (2, 1.0)]).unwrap();
        assert_eq!(law.b1(), -2.0);
        assert_eq!(law.beta_star(), 1.0);
        assert_eq!(law.beta(), 0.0);

        let law = OffspringLaw::new(&[(2, 0.7)]).unwrap();
        assert_eq!(law.b1(), -0.7);
        assert_eq!(law.beta(), 0.7);
        assert_eq!(law.beta_star(), 0.7);

        let law = OffspringLaw::new(&[(0, 1.0), (3, 0.5)]).unwrap();
        assert_eq!(law.beta_star(), 1.0);
        assert_eq!(law.beta(), 0.0);
        assert_eq!(law.beta(), law.beta_star() - law.death_rate());
    }

    #[test]
    fn offspring_validation() {
        assert!(matches!(OffspringLaw::new(&[(0, -1.0), (2, 1.0)]), Err(BrwError::Validation(_))));
        assert!(matches!(OffspringLaw::new(&[(0, 1.0)]), Err(BrwError::Validation(_))));
        assert!(matches!(OffspringLaw::new(&[(2, 0.0)]), Err(BrwError::Validation(_))));
        assert!(matches!(OffspringLaw::new(&[(1, 1.0), (2, 1.0)]), Err(BrwError::Validation(_))));
        assert!(matches!(OffspringLaw::new(&[(2, 1.0), (2, 1.0)]), Err(BrwError::Validation(_))));
    }

    #[test]
    fn generating_function_slope_is_beta() {
        let law = OffspringLaw::new(&[(0, 0.4), (2, 0.3), (5, 0.1)]).unwrap();
        assert!(law.generating_function(1.0).abs() < 1e-15);
        let h = 1e-6;
        let slope = (law.generating_function(1.0 + h) - law.generating_function(1.0 - h)) / (2.0 * h);
        assert!((slope - law.beta()).abs() < 1e-8);
    }

    #[test]
    fn with_beta_hits_target() {
        for beta in [-3.0, -0.5, 0.0, 0.25, 4.0] {
            let law = OffspringLaw::with_beta(beta).unwrap();
            assert_eq!(law.beta(), beta);
            assert!(law.beta_star() > 0.0);
        }
    }

    #[test]
    fn params_validation() {
        let law = OffspringLaw::binary_splitting(1.0).unwrap();
        assert!(ModelParams::new(0.0, 1.0, 1, law.clone()).is_err());
        assert!(ModelParams::new(1.0, 0.0, 1, law.clone()).is_err());
        assert!(ModelParams::new(1.0, 0.0, 0, law).is_ok());
    }

    #[test]
    fn truncated_operator_diagonals() {
        let p = ModelParams::new(1.0, 1.0, 0, OffspringLaw::new(&[(0, 1.0), (2, 1.0)]).unwrap()).unwrap();
        let op = TruncatedOperator::new(&p, 2).unwrap();
        assert_eq!(op.diagonal(), &[-1.0; 5]);
        assert_eq!(op.off_diagonal(), 0.5);

        let p = ModelParams::with_beta(1.0, 1.0, 1, 2.0).unwrap();
        let op = TruncatedOperator::new(&p, 2).unwrap();
        assert_eq!(op.diagonal(), &[-1.0, -2.0, 1.0, -2.0, -1.0]);

        let p = ModelParams::with_beta(2.0, 0.3, 2, 0.5).unwrap();
        let op = TruncatedOperator::new(&p, 3).unwrap();
        let expected = [-2.0, -2.3, -2.3, -1.5, -2.3, -2.3, -2.0];
        for (a, b) in op.diagonal().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn window_must_exceed_n() {
        let p = ModelParams::with_beta(1.0, 1.0, 3, 1.0).unwrap();
        assert_eq!(
            TruncatedOperator::new(&p, 3),
            Err(BrwError::WindowTooSmall { half_width: 3, n: 3 })
        );
        assert!(TruncatedOperator::new(&p, 4).is_ok());
    }

    #[test]
    fn free_walk_top_eigenvalue_is_slightly_negative() {
        let p = ModelParams::new(1.0, 0.0, 0, OffspringLaw::new(&[(0, 1.0), (2, 1.0)]).unwrap()).unwrap();
        let l = 100;
        let op = TruncatedOperator::new(&p, l).unwrap();
        let top = op.top_eigenpair(1e-13).unwrap();
        let gap = 1.0 - (std::f64::consts::PI / (2 * l + 2) as f64).cos();
        assert!(top.value < 0.0 && top.value > -gap * 1.01, "{}", top.value);
    }

    #[test]
    fn eigenvector_residual_and_symmetry() {
        let p = ModelParams::with_beta(1.0, 0.7, 2, 1.5).unwrap();
        let op = TruncatedOperator::new(&p, 60).unwrap();
        let tol = 1e-12;
        let pair = op.top_eigenpair(tol).unwrap();
        let hv = op.apply(&pair.vector);
        let res = hv
            .iter()
            .zip(&pair.vector)
            .map(|(h, v)| (h - pair.value * v).abs())
            .fold(0.0_f64, f64::max);
        assert!(res <= 10.0 * tol, "residual {res:e}");
        let m = op.len();
        for i in 0..m / 2 {
            assert!((pair.vector[i] - pair.vector[m - 1 - i]).abs() < 1e-10);
        }
    }
}
