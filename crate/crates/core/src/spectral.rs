//! Fourier-side description of the isolated eigenvalue.
//!
//! A positive eigenvalue `lambda` is traded for `zeta in (0, 1)` through
//! `r = kappa (1 - zeta^2) / (2 zeta)`, `lambda = sqrt(kappa^2 + r^2) - kappa`.
//! The eigenfunction values on the sources, `f(0..=n)`, then solve an
//! `(n+1) x (n+1)` linear system whose determinant `Delta(zeta)` carries a
//! root of multiplicity `n` at `zeta = 1`. We work with the deflated
//! determinant `Delta_1(zeta) = Delta(zeta) / (zeta - 1)^n`, which runs from
//! `-kappa^{n+1}` at 0 to `2^n J_n` at 1.

use rayon::prelude::*;

use crate::criticality;
use crate::error::{BrwError, Result};
use crate::linalg::{self, DenseMatrix};
use crate::model::ModelParams;

fn check_kappa(kappa: f64) -> Result<()> {
    if kappa.is_finite() && kappa > 0.0 {
        Ok(())
    } else {
        Err(BrwError::Domain(format!("kappa = {kappa} must be positive")))
    }
}

/// A point of the `zeta` parametrisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZetaParam {
    zeta: f64,
    kappa: f64,
}

impl ZetaParam {
    pub fn new(zeta: f64, kappa: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !(zeta > 0.0 && zeta <= 1.0) {
            return Err(BrwError::Domain(format!("zeta = {zeta} must lie in (0, 1]")));
        }
        Ok(Self { zeta, kappa })
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn r(&self) -> f64 {
        self.kappa * (1.0 - self.zeta) * (1.0 + self.zeta) / (2.0 * self.zeta)
    }

    pub fn lambda(&self) -> f64 {
        let r = self.r();
        // sqrt(kappa^2 + r^2) - kappa without cancellation
        r * r / (self.kappa.hypot(r) + self.kappa)
    }
}

pub fn zeta_to_lambda(zeta: f64, kappa: f64) -> Result<f64> {
    Ok(ZetaParam::new(zeta, kappa)?.lambda())
}

/// Inverse of [`zeta_to_lambda`] on `lambda > 0`:
/// `zeta = (lambda + kappa - sqrt(lambda (lambda + 2 kappa))) / kappa`.
pub fn lambda_to_zeta(lambda: f64, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(BrwError::Domain(format!("lambda = {lambda} must be positive")));
    }
    // the two roots multiply to 1; take the small one via the large one
    Ok(kappa / (lambda + kappa + (lambda * (lambda + 2.0 * kappa)).sqrt()))
}

/// `int_{-pi}^{pi} cos(n t) / (a - b cos t) dt = 2 pi z^{|n|} / sqrt(a^2 - b^2)`
/// with `z = (a - sqrt(a^2 - b^2)) / b`, for `a > b > 0`.
pub fn cosine_poisson_integral(n: i64, a: f64, b: f64) -> Result<f64> {
    if !(b > 0.0 && a > b && a.is_finite()) {
        return Err(BrwError::Domain(format!("need a > b > 0, got a = {a}, b = {b}")));
    }
    let root = ((a - b) * (a + b)).sqrt();
    let z = b / (a + root);
    Ok(2.0 * std::f64::consts::PI * z.powi(n.unsigned_abs() as i32) / root)
}

/// The source system `Delta(zeta) f = 0` for `f(0..=n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSystem {
    pub n: usize,
    pub kappa: f64,
    pub beta: f64,
    pub b0: f64,
}

impl DeltaSystem {
    pub fn new(n: usize, kappa: f64, beta: f64, b0: f64) -> Result<Self> {
        check_kappa(kappa)?;
        if !beta.is_finite() {
            return Err(BrwError::Domain(format!("beta = {beta} must be finite")));
        }
        if n >= 1 && !(b0 > 0.0 && b0.is_finite()) {
            return Err(BrwError::Domain(format!("b0 = {b0} must be positive when n >= 1")));
        }
        Ok(Self { n, kappa, beta, b0 })
    }

    pub fn from_params(params: &ModelParams) -> Self {
        Self {
            n: params.n(),
            kappa: params.kappa(),
            beta: params.beta(),
            b0: params.b0(),
        }
    }

    fn powers(&self, zeta: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(2 * self.n + 3);
        let mut v = 1.0;
        for _ in 0..2 * self.n + 3 {
            p.push(v);
            v *= zeta;
        }
        p
    }

    /// The `(n+1) x (n+1)` system matrix at `zeta`.
    pub fn matrix(&self, zeta: f64) -> DenseMatrix {
        let p = self.powers(zeta);
        let diag = self.kappa * (1.0 - zeta * zeta);
        DenseMatrix::from_fn(self.n + 1, |l, k| {
            let own = if l == k { diag } else { 0.0 };
            if k == 0 {
                2.0 * self.beta * p[l + 1] - own
            } else {
                -2.0 * self.b0 * (p[k.abs_diff(l) + 1] + p[k + l + 1]) - own
            }
        })
    }

    /// `Delta(zeta)`.
    pub fn det(&self, zeta: f64) -> f64 {
        self.matrix(zeta).determinant()
    }

    /// Row-differenced form of the system: row 0 is kept, and row `l >= 1`
    /// is `(R_l - R_{l-1}) / (1 - zeta)`, written with the divided
    /// differences of powers so nothing is divided at evaluation time. Its
    /// determinant is `(-1)^n Delta_1(zeta)` on all of `[0, 1]` and its null
    /// space equals that of [`DeltaSystem::matrix`] for `zeta < 1`.
    pub fn deflated_matrix(&self, zeta: f64) -> DenseMatrix {
        let p = self.powers(zeta);
        // q[m] = (1 - zeta^m) / (1 - zeta) = 1 + zeta + ... + zeta^{m-1}
        let mut q = vec![0.0; p.len()];
        for m in 1..p.len() {
            q[m] = q[m - 1] + p[m - 1];
        }
        // (zeta^a - zeta^b) / (1 - zeta)
        let dd = |a: usize, b: usize| -> f64 {
            if a >= b {
                -p[b] * q[a - b]
            } else {
                p[a] * q[b - a]
            }
        };
        let diag = self.kappa * (1.0 - zeta * zeta);
        let diag_div = self.kappa * (1.0 + zeta);
        DenseMatrix::from_fn(self.n + 1, |l, k| {
            if l == 0 {
                let own = if k == 0 { diag } else { 0.0 };
                return if k == 0 {
                    2.0 * self.beta * p[1] - own
                } else {
                    -2.0 * self.b0 * (p[k + 1] + p[k + 1]) - own
                };
            }
            let own = if l == k {
                diag_div
            } else if l == k + 1 {
                -diag_div
            } else {
                0.0
            };
            if k == 0 {
                -2.0 * self.beta * p[l] - own
            } else {
                let near = dd(k.abs_diff(l) + 1, k.abs_diff(l - 1) + 1);
                let far = -p[k + l];
                -2.0 * self.b0 * (near + far) - own
            }
        })
    }

    /// `Delta_1(zeta) = Delta(zeta) / (zeta - 1)^n` for `zeta in [0, 1]`.
    pub fn deflated(&self, zeta: f64) -> f64 {
        let d = self.deflated_matrix(zeta).determinant();
        if self.n % 2 == 1 {
            -d
        } else {
            d
        }
    }

    /// `Delta_1(1)` from the closed form, `2^n J_n` (or `2 beta` for `n = 0`).
    pub fn endpoint(&self) -> f64 {
        criticality::deflated_endpoint(self.n, self.kappa, self.b0, self.beta)
            .expect("validated system")
    }

    /// Sign sequence of `Delta_1` on `0, grid..., 1`, with the interior grid
    /// `zeta_i = i (1 - eps) / points`, `i = 1..=points`, and the analytic
    /// endpoint at 1.
    pub fn scan(&self, points: usize, eps: f64) -> Vec<(f64, f64)> {
        let top = 1.0 - eps;
        let mut values: Vec<(f64, f64)> = (1..=points)
            .into_par_iter()
            .map(|i| {
                let z = top * i as f64 / points as f64;
                (z, self.deflated(z))
            })
            .collect();
        values.insert(0, (0.0, -self.kappa.powi(self.n as i32 + 1)));
        values.push((1.0, self.endpoint()));
        values
    }
}

/// Number of strict sign changes in a sequence, ignoring exact zeros.
pub fn count_sign_changes(values: impl IntoIterator<Item = f64>) -> usize {
    let mut last = 0.0_f64;
    let mut changes = 0;
    for v in values {
        if v == 0.0 || v.is_nan() {
            continue;
        }
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            changes += 1;
        }
        last = v;
    }
    changes
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralOptions {
    /// Bracket width in `zeta` at which bisection stops.
    pub tol: f64,
    /// The interior scan stops at `1 - eps`.
    pub eps: f64,
    /// Interior grid size for the uniqueness scan; 0 skips the scan.
    pub scan_points: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-15,
            eps: 1e-6,
            scan_points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSolution {
    pub zeta_root: f64,
    pub lambda: f64,
    /// `f(0..=n)` normalised to `f(0) = 1`.
    pub f_sources: Vec<f64>,
    /// Geometric decay ratio of the eigenfunction beyond the sources.
    pub decay_ratio: f64,
    pub system: DeltaSystem,
}

impl SpectralSolution {
    /// Eigenfunction at any lattice site, from the source values:
    /// `f(l) = [beta f(0) zeta^|l| - b0 sum_k f(k) (zeta^|k-|l|| + zeta^{k+|l|})] / r`.
    pub fn eigenfunction(&self, l: i64) -> f64 {
        let s = &self.system;
        let z = self.zeta_root;
        let l = l.unsigned_abs() as i64;
        let r = s.kappa * (1.0 - z) * (1.0 + z) / (2.0 * z);
        let zp = |m: i64| z.powi(m as i32);
        let mut acc = s.beta * self.f_sources[0] * zp(l);
        for k in 1..=s.n as i64 {
            acc -= s.b0 * self.f_sources[k as usize] * (zp((k - l).abs()) + zp(k + l));
        }
        acc / r
    }
}

/// Locates the isolated positive eigenvalue, if any.
///
/// Returns `Ok(None)` exactly when `Delta_1(1) <= 0`. The interior scan
/// enforces that `Delta_1` changes sign at most once on `(0, 1)`; a second
/// change would contradict uniqueness of the positive eigenvalue and is
/// reported as an error.
pub fn find_spectral_solution(params: &ModelParams, opts: &SpectralOptions) -> Result<Option<SpectralSolution>> {
    solve_system(&DeltaSystem::from_params(params), opts)
}

pub fn solve_system(system: &DeltaSystem, opts: &SpectralOptions) -> Result<Option<SpectralSolution>> {
    if !(opts.tol > 0.0) {
        return Err(BrwError::Domain(format!("tolerance {} must be positive", opts.tol)));
    }
    let endpoint = system.endpoint();
    let (mut lo, mut hi) = (0.0, 1.0);
    if opts.scan_points > 0 {
        let scan = system.scan(opts.scan_points, opts.eps);
        let changes = count_sign_changes(scan.iter().map(|&(_, v)| v));
        if changes > 1 {
            return Err(BrwError::Contradiction(format!(
                "Delta_1 changes sign {changes} times on (0, 1) for {system:?}"
            )));
        }
        if endpoint > 0.0 {
            let j = scan
                .windows(2)
                .position(|w| w[0].1 <= 0.0 && w[1].1 > 0.0)
                .ok_or_else(|| BrwError::Numerical("no sign change found despite Delta_1(1) > 0".into()))?;
            lo = scan[j].0;
            hi = scan[j + 1].0;
        }
    }
    if endpoint <= 0.0 {
        return Ok(None);
    }
    // Delta_1(lo) <= 0 < Delta_1(hi)
    while hi - lo > opts.tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if system.deflated(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if !(root > 0.0 && root < 1.0) {
        return Err(BrwError::Numerical(format!("root {root} fell outside (0, 1)")));
    }
    let lambda = zeta_to_lambda(root, system.kappa)?;
    let v = linalg::smallest_singular_direction(&system.deflated_matrix(root), 4);
    if !(v[0].abs() > 1e-300) {
        return Err(BrwError::Numerical("null vector has f(0) = 0".into()));
    }
    let f_sources = v.iter().map(|x| x / v[0]).collect();
    Ok(Some(SpectralSolution {
        zeta_root: root,
        lambda,
        f_sources,
        decay_ratio: root,
        system: *system,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::quadrature::periodic_trapezoid;
    use std::f64::consts::PI;

    #[test]
    fn zeta_lambda_examples() {
        assert_eq!(zeta_to_lambda(1.0, 3.0).unwrap(), 0.0);
        assert_eq!(zeta_to_lambda(0.5, 2.0).unwrap(), 0.5);
        assert_eq!(lambda_to_zeta(0.5, 2.0).unwrap(), 0.5);
        let l = zeta_to_lambda(0.9, 1.0).unwrap();
        assert!((lambda_to_zeta(l, 1.0).unwrap() - 0.9).abs() < 1e-14);
        let z = lambda_to_zeta(3.0, 1.0).unwrap();
        assert!((zeta_to_lambda(z, 1.0).unwrap() - 3.0).abs() < 1e-12 * 3.0);
        assert!(zeta_to_lambda(0.0, 1.0).is_err());
        assert!(zeta_to_lambda(1.1, 1.0).is_err());
        assert!(lambda_to_zeta(0.0, 1.0).is_err());
        let mut prev = 0.0;
        for e in 1..12 {
            let z = lambda_to_zeta(10f64.powi(-e), 1.0).unwrap();
            assert!(z > prev && z < 1.0);
            prev = z;
        }
    }

    #[test]
    fn poisson_integral_examples() {
        let q = |n: i64, a: f64, b: f64| {
            periodic_trapezoid(|t| (n as f64 * t).cos() / (a - b * t.cos()), -PI, 2.0 * PI, 1e-13, 24)
                .unwrap()
                .value
        };
        let v0 = cosine_poisson_integral(0, 2.0, 1.0).unwrap();
        assert!((v0 - 2.0 * PI / 3f64.sqrt()).abs() < 1e-15);
        let v1 = cosine_poisson_integral(1, 2.0, 1.0).unwrap();
        assert!((v1 - 2.0 * PI * (2.0 - 3f64.sqrt()) / 3f64.sqrt()).abs() < 1e-14);
        assert!((v1 - q(1, 2.0, 1.0)).abs() < 1e-10);
        assert_eq!(cosine_poisson_integral(-3, 2.0, 1.0).unwrap(), cosine_poisson_integral(3, 2.0, 1.0).unwrap());
        assert!(cosine_poisson_integral(0, 1.0, 1.0).is_err());
    }

    #[test]
    fn det_at_zero_and_one() {
        for n in 0..6 {
            let s = DeltaSystem::new(n, 1.7, -0.4, 0.6).unwrap();
            let expected = (-1.7f64).powi(n as i32 + 1);
            assert!((s.det(0.0) - expected).abs() < 1e-12 * expected.abs());
            if n >= 1 {
                assert_eq!(s.det(1.0), 0.0);
            }
        }
    }

    #[test]
    fn det_two_by_two_expansion() {
        let (k, b, b0, z) = (1.0, 1.0, 1.0, 0.5);
        let s = DeltaSystem::new(1, k, b, b0).unwrap();
        let a00 = 2.0 * b * z - k * (1.0 - z * z);
        let a11 = -2.0 * b0 * z * (1.0 + z * z) - k * (1.0 - z * z);
        let expected = a00 * a11 - (-4.0 * b0 * z * z) * (2.0 * b * z * z);
        assert!((s.det(z) - expected).abs() < 1e-15);
    }

    #[test]
    fn deflated_matches_division_and_endpoints() {
        for n in 0..7 {
            let s = DeltaSystem::new(n, 0.9, 1.3, 0.8).unwrap();
            assert!((s.deflated(0.0) + 0.9f64.powi(n as i32 + 1)).abs() < 1e-14);
            for &z in &[0.1, 0.35, 0.6, 0.8] {
                let divided = s.det(z) / (z - 1.0).powi(n as i32);
                let d = s.deflated(z);
                assert!((d - divided).abs() <= 1e-9 * d.abs().max(1e-3), "n={n} z={z}: {d} vs {divided}");
            }
            let at_one = s.deflated(1.0);
            let end = s.endpoint();
            assert!((at_one - end).abs() <= 1e-10 * end.abs(), "n={n}: {at_one} vs {end}");
            let near = s.deflated(1.0 - 1e-4);
            assert!((near - end).abs() <= 1e-3 * end.abs());
        }
        let s = DeltaSystem::new(0, 2.0, 0.3, 0.0).unwrap();
        let z = 0.4;
        assert!((s.deflated(z) - (2.0 * 0.3 * z - 2.0 * (1.0 - z * z))).abs() < 1e-15);
    }

    #[test]
    fn single_source_closed_form() {
        for &beta in &[0.1, 1.0, 3.5] {
            let p = ModelParams::with_beta(1.0, 0.0, 0, beta).unwrap();
            let sol = find_spectral_solution(&p, &SpectralOptions::default()).unwrap().unwrap();
            let expected = (1.0 + beta * beta).sqrt() - 1.0;
            assert!((sol.lambda - expected).abs() < 1e-13, "{} vs {expected}", sol.lambda);
        }
    }

    #[test]
    fn threshold_case_has_no_solution() {
        let p = ModelParams::with_beta(1.0, 1.0, 1, 2.0 / 3.0).unwrap();
        assert!(find_spectral_solution(&p, &SpectralOptions::default()).unwrap().is_none());
        let p = ModelParams::with_beta(1.0, 1.0, 1, 0.5).unwrap();
        assert!(find_spectral_solution(&p, &SpectralOptions::default()).unwrap().is_none());
    }

    #[test]
    fn eigenfunction_self_consistency_and_decay() {
        let p = ModelParams::with_beta(1.2, 0.7, 3, 2.5).unwrap();
        let sol = find_spectral_solution(&p, &SpectralOptions::default()).unwrap().unwrap();
        for l in 0..=3 {
            let f = sol.eigenfunction(l);
            assert!((f - sol.f_sources[l as usize]).abs() <= 1e-9 * f.abs().max(1e-12));
            assert_eq!(f, sol.eigenfunction(-l));
        }
        let ratio = sol.eigenfunction(51) / sol.eigenfunction(50);
        assert!((ratio - sol.decay_ratio).abs() < 1e-6);
    }

    #[test]
    fn sign_change_counter() {
        assert_eq!(count_sign_changes([-1.0, -2.0, 0.0, 3.0, 1.0]), 1);
        assert_eq!(count_sign_changes([-1.0, 2.0, -3.0]), 2);
        assert_eq!(count_sign_changes([1.0, 0.0, 0.0]), 0);
    }
}
