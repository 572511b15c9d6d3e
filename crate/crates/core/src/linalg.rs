//! Small dense and tridiagonal kernels.
//!
//! Dense routines serve the `(n+1) x (n+1)` source systems, which stay tiny
//! (n rarely exceeds a few dozen). Tridiagonal routines serve the truncated
//! lattice operator, where everything must stay O(L) per sweep.

use crate::error::{BrwError, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Determinant by row-pivoted Gaussian elimination.
    pub fn determinant(&self) -> f64 {
        let lu = Lu::factor(self);
        lu.determinant()
    }
}

/// LU factorisation with partial (row) pivoting: `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    dim: usize,
    factors: Vec<f64>,
    perm: Vec<usize>,
    swaps: usize,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Self {
        let n = a.dim;
        let mut f = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut swaps = 0;
        for k in 0..n {
            let (p, _) = (k..n).fold((k, -1.0), |(bi, bv), i| {
                let v = f[i * n + k].abs();
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
            if p != k {
                for j in 0..n {
                    f.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                swaps += 1;
            }
            let pivot = f[k * n + k];
            if pivot == 0.0 {
                continue;
            }
            for i in k + 1..n {
                let m = f[i * n + k] / pivot;
                f[i * n + k] = m;
                if m != 0.0 {
                    for j in k + 1..n {
                        f[i * n + j] -= m * f[k * n + j];
                    }
                }
            }
        }
        Self {
            dim: n,
            factors: f,
            perm,
            swaps,
        }
    }

    pub fn determinant(&self) -> f64 {
        let n = self.dim;
        let prod: f64 = (0..n).map(|i| self.factors[i * n + i]).product();
        if self.swaps % 2 == 1 {
            -prod
        } else {
            prod
        }
    }

    fn pivot(&self, i: usize, floor: f64) -> f64 {
        let p = self.factors[i * self.dim + i];
        if p.abs() < floor {
            if p < 0.0 {
                -floor
            } else {
                floor
            }
        } else {
            p
        }
    }

    /// Solves `A x = b`; pivots smaller than `floor` are clamped to it, which
    /// is what inverse iteration on a singular matrix needs.
    pub fn solve(&self, b: &[f64], floor: f64) -> Vec<f64> {
        let n = self.dim;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.factors[i * n + j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                y[i] -= self.factors[i * n + j] * y[j];
            }
            y[i] /= self.pivot(i, floor);
        }
        y
    }

    /// Solves `A^T x = b`.
    pub fn solve_transposed(&self, b: &[f64], floor: f64) -> Vec<f64> {
        let n = self.dim;
        // A^T = U^T L^T P, so solve U^T z = b, L^T w = z, x = P^T w.
        let mut z = b.to_vec();
        for i in 0..n {
            for j in 0..i {
                z[i] -= self.factors[j * n + i] * z[j];
            }
            z[i] /= self.pivot(i, floor);
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                z[i] -= self.factors[j * n + i] * z[j];
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }
}

/// Direction of the smallest singular value of `a`, found by inverse
/// iteration on `A^T A` (applied as two triangular solves, never formed).
pub fn smallest_singular_direction(a: &DenseMatrix, iterations: usize) -> Vec<f64> {
    let n = a.dim();
    let lu = Lu::factor(a);
    let floor = f64::EPSILON * a.max_abs().max(f64::MIN_POSITIVE) * n as f64;
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..iterations {
        let y = lu.solve_transposed(&x, floor);
        let z = lu.solve(&y, floor);
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            break;
        }
        x = z.into_iter().map(|v| v / norm).collect();
    }
    x
}

/// Number of eigenvalues of the symmetric tridiagonal matrix strictly below
/// `shift` (Sturm sequence count via the LDL^T pivots).
pub fn sturm_count(diag: &[f64], off: &[f64], shift: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = (a - shift) - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (a.abs() + shift.abs()).max(f64::MIN_POSITIVE);
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval enclosing the spectrum.
pub fn gershgorin_bounds(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// Largest eigenvalue by bisection on the Sturm count, to absolute width `tol`.
pub fn largest_eigenvalue(diag: &[f64], off: &[f64], tol: f64) -> f64 {
    let n = diag.len();
    let (mut lo, mut hi) = gershgorin_bounds(diag, off);
    let pad = f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) * 4.0;
    lo -= pad;
    hi += pad;
    // invariant: count(lo) <= n - 1 < count(hi) = n
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the tridiagonal system `(T - shift I) x = b` by Gaussian
/// elimination with partial pivoting; tiny pivots are clamped so the solve
/// stays finite at an eigenvalue.
pub fn shifted_tridiagonal_solve(diag: &[f64], off: &[f64], shift: f64, b: &[f64]) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        let p = clamp_pivot(diag[0] - shift, diag[0].abs() + shift.abs());
        return vec![b[0] / p];
    }
    let scale = diag.iter().map(|d| d.abs()).fold(0.0_f64, f64::max)
        + off.iter().map(|o| o.abs()).fold(0.0_f64, f64::max)
        + shift.abs();
    // Row i of U holds (u0, u1, u2) at columns (i, i+1, i+2).
    let mut u = vec![[0.0_f64; 3]; n];
    let mut rhs = b.to_vec();
    // current working row i: entries at columns i, i+1 (and i+2 after a swap)
    let mut cur = [diag[0] - shift, off[0], 0.0];
    let mut cur_rhs = rhs[0];
    for i in 0..n - 1 {
        let below = [off[i], diag[i + 1] - shift, if i + 2 < n { off[i + 1] } else { 0.0 }];
        let below_rhs = rhs[i + 1];
        // `below` spans columns i, i+1, i+2
        let (top, top_rhs, other, other_rhs) = if below[0].abs() > cur[0].abs() {
            (below, below_rhs, [cur[0], cur[1], cur[2]], cur_rhs)
        } else {
            (cur, cur_rhs, below, below_rhs)
        };
        let p = clamp_pivot(top[0], scale);
        let m = other[0] / p;
        u[i] = [p, top[1], top[2]];
        rhs[i] = top_rhs;
        cur = [other[1] - m * top[1], other[2] - m * top[2], 0.0];
        cur_rhs = other_rhs - m * top_rhs;
    }
    u[n - 1] = [clamp_pivot(cur[0], scale), 0.0, 0.0];
    rhs[n - 1] = cur_rhs;
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s -= u[i][1] * x[i + 1];
        }
        if i + 2 < n {
            s -= u[i][2] * x[i + 2];
        }
        x[i] = s / u[i][0];
    }
    x
}

fn clamp_pivot(p: f64, scale: f64) -> f64 {
    let floor = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    if p.abs() < floor {
        if p < 0.0 {
            -floor
        } else {
            floor
        }
    } else {
        p
    }
}

/// Unit eigenvector for an (approximate) eigenvalue by inverse iteration.
pub fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    eigenvalue: f64,
    residual_tol: f64,
    max_restarts: usize,
) -> Result<Vec<f64>> {
    let n = diag.len();
    let apply = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut s = diag[i] * v[i];
                if i > 0 {
                    s += off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += off[i] * v[i + 1];
                }
                s
            })
            .collect()
    };
    let mut best = f64::INFINITY;
    for restart in 0..=max_restarts {
        // Deterministic start vectors that differ between restarts.
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * (((i + 7 * restart) as f64) * 0.618_033_988_749_895).fract())
            .collect();
        for _ in 0..6 {
            let y = shifted_tridiagonal_solve(diag, off, eigenvalue, &x);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 {
                break;
            }
            x = y.into_iter().map(|v| v / norm).collect();
            let hx = apply(&x);
            let res = hx
                .iter()
                .zip(&x)
                .map(|(h, v)| (h - eigenvalue * v).abs())
                .fold(0.0_f64, f64::max);
            best = best.min(res);
            if res <= residual_tol {
                return Ok(x);
            }
        }
    }
    Err(BrwError::Numerical(format!(
        "inverse iteration did not converge: best residual {best:e}, target {residual_tol:e}"
    )))
}
