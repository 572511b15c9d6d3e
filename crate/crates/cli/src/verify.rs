//! Cross-checks of the closed forms against independent numerics.
//!
//! Each check stops at its first failing case and reports it with inputs.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use brw_core::criticality::{self, RecurrenceBasis};
use brw_core::dynamics::{self, MomentConfig, SimulationConfig};
use brw_core::quadrature::periodic_trapezoid;
use brw_core::spectral;
use brw_core::{find_spectral_solution, ModelParams, SpectralOptions, TruncatedOperator};

use crate::config::Suite;
use crate::error::CliError;

/// Outcome of one check: `Err` carries the first failing case.
type Check = Result<String, String>;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn recurrence_vs_closed_form() -> Result<Check, CliError> {
    let mut worst = 0.0_f64;
    for i in 0..50 {
        let x = (0.01f64.ln() + (100f64.ln() - 0.01f64.ln()) * i as f64 / 49.0).exp();
        let basis = RecurrenceBasis::new(x, 1.0)?;
        for n in 0..=60u32 {
            let r = criticality::recurrence_i(n as i64, x, 1.0)?;
            let c = basis.closed_form_i(n);
            let rel = (r - c).abs() / r.abs();
            if !(rel <= 1e-9) {
                return Ok(Err(format!("kappa/b0 = {x}, n = {n}: recurrence {r} vs closed form {c}")));
            }
            worst = worst.max(rel);
        }
    }
    Ok(Ok(format!("max rel err {worst:.3e}")))
}

fn poisson_quadrature(rng: &mut ChaCha8Rng, cases: usize) -> Result<Check, CliError> {
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let n = rng.random_range(-20..=20i64);
        let b = log_uniform(rng, 0.1, 5.0);
        let a = b * log_uniform(rng, 1.001, 100.0);
        let closed = spectral::cosine_poisson_integral(n, a, b)?;
        let quad = periodic_trapezoid(|t| (n as f64 * t).cos() / (a - b * t.cos()), -PI, 2.0 * PI, 1e-12, 30)?.value;
        let diff = (closed - quad).abs();
        if !(diff <= 1e-10) {
            return Ok(Err(format!("n = {n}, a = {a}, b = {b}: closed {closed} vs quadrature {quad}")));
        }
        worst = worst.max(diff);
    }
    Ok(Ok(format!("{cases} triples, max |diff| {worst:.3e}")))
}

fn three_way_threshold(rng: &mut ChaCha8Rng, cases: usize) -> Result<Check, CliError> {
    let opts = SpectralOptions::default();
    for _ in 0..cases {
        let kappa = rng.random_range(0.5..=2.0);
        let b0 = rng.random_range(0.5..=2.0);
        let n = rng.random_range(1..=6usize);
        let bc = criticality::beta_critical(n as u32, kappa, b0)?;
        for delta in [-0.1, -0.01, 0.01, 0.1] {
            let beta = bc + delta;
            let p = ModelParams::with_beta(kappa, b0, n, beta)?;
            let j = criticality::compute_j(n as u32, kappa, b0, beta)?;
            let root = find_spectral_solution(&p, &opts)?.is_some();
            let top = TruncatedOperator::new(&p, 300)?.top_eigenpair(1e-13)?.value;
            let above = delta > 0.0;
            if (j > 0.0) != above || root != above || (top > 0.0) != above {
                return Ok(Err(format!(
                    "kappa = {kappa}, b0 = {b0}, n = {n}, beta = {beta}: J_n = {j}, root = {root}, top eigenvalue = {top}"
                )));
            }
        }
    }
    Ok(Ok(format!("{cases} parameter sets x 4 offsets agree")))
}

fn infinite_limit() -> Result<Check, CliError> {
    let grid = [0.5, 1.0, 2.0];
    let mut worst = 0.0_f64;
    for &kappa in &grid {
        for &b0 in &grid {
            let finite = criticality::beta_critical(200, kappa, b0)? + b0;
            let limit = criticality::beta_star_critical_inf(kappa, b0)?;
            let gap = (finite - limit).abs();
            if !(gap <= 1e-9) {
                return Ok(Err(format!("kappa = {kappa}, b0 = {b0}: n = 200 gives {finite}, limit {limit}")));
            }
            worst = worst.max(gap);
        }
    }
    Ok(Ok(format!("max gap {worst:.3e}")))
}

/// Mean population at `t = 5` for kappa = b0 = 1, n = 1, beta = 1 against the
/// first-moment equation, within three standard errors.
fn monte_carlo_vs_moments(seed: u64, replicas: usize) -> Result<Check, CliError> {
    let p = ModelParams::with_beta(1.0, 1.0, 1, 1.0)?;
    let ode = dynamics::integrate_moments(&p, &MomentConfig::new(0, 5.0, 0.01))?.last().total();
    let runs = dynamics::simulate_replicas(&p, &SimulationConfig::new(0, 5.0), seed, replicas)?;
    let s = dynamics::summarize(&runs)?;
    let (mean, se) = (s.mean[s.mean.len() - 1], s.stderr[s.stderr.len() - 1]);
    let detail = format!("seed {seed}, {replicas} replicas: MC {mean} +- {se}, moment equation {ode}");
    Ok(if (mean - ode).abs() <= 3.0 * se && s.truncated == 0 {
        Ok(detail)
    } else {
        Err(detail)
    })
}

/// Runs the requested suites and writes one line per check.
pub fn run(suite: Suite, seed: u64, cases: usize, replicas: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let mut checks: Vec<(&str, Check)> = Vec::new();
    if matches!(suite, Suite::Analytic | Suite::All) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        checks.push(("recurrence_vs_closed_form", recurrence_vs_closed_form()?));
        checks.push(("poisson_integral_quadrature", poisson_quadrature(&mut rng, cases)?));
        checks.push(("three_way_threshold", three_way_threshold(&mut rng, cases.div_ceil(10))?));
        checks.push(("infinite_absorber_limit", infinite_limit()?));
    }
    if matches!(suite, Suite::Stochastic | Suite::All) {
        checks.push(("monte_carlo_vs_moments", monte_carlo_vs_moments(seed, replicas)?));
    }
    writeln!(out, "status\tcheck\tdetail")?;
    let mut first_failure = None;
    for (name, check) in &checks {
        match check {
            Ok(detail) => writeln!(out, "PASS\t{name}\t{detail}")?,
            Err(case) => {
                writeln!(out, "FAIL\t{name}\t{case}")?;
                first_failure.get_or_insert_with(|| format!("{name}: {case}"));
            }
        }
    }
    match first_failure {
        Some(msg) => Err(CliError::Invariant(msg)),
        None => Ok(()),
    }
}
