//! Execution of resolved commands. Every command writes tab-separated rows
//! after the config header; trailing `#` lines carry derived summaries.

use std::io::Write;

use brw_core::criticality::{self, RecurrenceBasis};
use brw_core::dynamics::{self, MomentConfig, SimulationConfig};
use brw_core::{classify_regime, find_spectral_solution, SpectralOptions, TruncatedOperator};

use crate::config::{Command, ModelSpec, RunConfig};
use crate::error::CliError;
use crate::verify;

/// Runs `cfg`, writing header and data to `out`.
pub fn execute(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    out.write_all(cfg.header().as_bytes())?;
    match &cfg.command {
        Command::CriticalBeta { model } => critical_beta(model, out),
        Command::Spectrum {
            model,
            tol,
            eps,
            scan_points,
            half_width,
            eig_tol,
        } => spectrum(model, &spectral_opts(*tol, *eps, *scan_points), *half_width, *eig_tol, out),
        Command::Eigenfunction {
            model,
            tol,
            eps,
            scan_points,
            radius,
        } => eigenfunction(model, &spectral_opts(*tol, *eps, *scan_points), *radius, out),
        Command::Sweep { kappa, b0, n_max } => sweep(kappa, b0, *n_max, out),
        Command::Moments {
            model,
            x0,
            t_end,
            dt,
            half_width,
            sample_interval,
            fit_from,
        } => {
            let mut mc = MomentConfig::new(*x0, *t_end, *dt).sample_every(*sample_interval);
            mc.half_width = Some(*half_width);
            moments(model, &mc, *fit_from, out)
        }
        Command::Simulate {
            model,
            x0,
            t_end,
            sample_interval,
            replicas,
            seed,
            population_cap,
        } => {
            let mut sc = SimulationConfig::new(*x0, *t_end).sample_every(*sample_interval);
            sc.population_cap = *population_cap;
            simulate(model, &sc, *seed, *replicas, out)
        }
        Command::Verify {
            suite,
            seed,
            cases,
            replicas,
        } => verify::run(*suite, *seed, *cases, *replicas, out),
    }
}

fn spectral_opts(tol: f64, eps: f64, scan_points: usize) -> SpectralOptions {
    SpectralOptions { tol, eps, scan_points }
}

fn kv(out: &mut dyn Write, key: &str, value: impl std::fmt::Display) -> std::io::Result<()> {
    writeln!(out, "{key}\t{value}")
}

fn critical_beta(model: &ModelSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let (kappa, b0, n) = (model.kappa, model.b0, model.n);
    let beta_crit = if n == 0 {
        criticality::beta_critical_no_absorbers()
    } else {
        criticality::beta_critical(n as u32, kappa, b0)?
    };
    let limit = criticality::beta_star_critical_inf(kappa, b0)?;
    writeln!(out, "quantity\tvalue")?;
    kv(out, "kappa", kappa)?;
    kv(out, "b0", b0)?;
    kv(out, "n", n)?;
    kv(out, "beta_crit", beta_crit)?;
    kv(out, "beta_star_crit", beta_crit + b0)?;
    kv(out, "beta_star_crit_inf", limit)?;
    if n >= 1 {
        // J_n = slope * beta + intercept
        let basis = RecurrenceBasis::new(kappa, b0)?;
        let (i_n, i_nm1) = (basis.closed_form_i(n as u32), basis.closed_form_i(n as u32 - 1));
        let scale = 2f64.powi(n as i32 + 1) * b0.powi(n as i32);
        kv(out, "lambda1", basis.lambda1)?;
        kv(out, "lambda2", basis.lambda2)?;
        kv(out, "i_n", i_n)?;
        kv(out, "i_n_minus_1", i_nm1)?;
        kv(out, "j_slope", scale * i_n)?;
        kv(out, "j_intercept", scale * (-kappa * i_n + kappa * kappa / (2.0 * b0) * i_nm1))?;
    }
    if model.offspring.is_some() {
        let params = model.params()?;
        let report = classify_regime(&params)?;
        kv(out, "beta", report.beta)?;
        kv(out, if n == 0 { "endpoint" } else { "j_n" }, report.j_n)?;
        kv(out, "regime", report.regime)?;
        kv(
            out,
            "lambda_inf",
            criticality::lambda_infinite(kappa, params.offspring().beta_star(), b0)?,
        )?;
    }
    Ok(())
}

fn spectrum(
    model: &ModelSpec,
    opts: &SpectralOptions,
    half_width: usize,
    eig_tol: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let params = model.params()?;
    let report = classify_regime(&params)?;
    let sol = find_spectral_solution(&params, opts)?;
    let top = TruncatedOperator::new(&params, half_width)?.top_eigenpair(eig_tol)?;
    writeln!(out, "quantity\tvalue")?;
    kv(out, "beta", report.beta)?;
    kv(out, "beta_crit", report.beta_crit)?;
    kv(out, "regime", report.regime)?;
    kv(out, "lambda_truncated", top.value)?;
    match sol {
        Some(sol) => {
            kv(out, "zeta", sol.zeta_root)?;
            kv(out, "lambda", sol.lambda)?;
            kv(out, "decay_ratio", sol.decay_ratio)?;
            for (k, v) in sol.f_sources.iter().enumerate() {
                kv(out, &format!("f({k})"), v)?;
            }
        }
        None => writeln!(out, "# no isolated positive eigenvalue")?,
    }
    Ok(())
}

fn eigenfunction(model: &ModelSpec, opts: &SpectralOptions, radius: u32, out: &mut dyn Write) -> Result<(), CliError> {
    let params = model.params()?;
    let sol = find_spectral_solution(&params, opts)?.ok_or_else(|| {
        CliError::Usage(format!(
            "no isolated positive eigenvalue for beta = {} (needs beta > beta_crit)",
            params.beta()
        ))
    })?;
    writeln!(out, "# lambda {}", sol.lambda)?;
    writeln!(out, "site\tf")?;
    let r = radius as i64;
    for x in -r..=r {
        // solved values at the sources, extension formula elsewhere
        let f = match sol.f_sources.get(x.unsigned_abs() as usize) {
            Some(&v) => v,
            None => sol.eigenfunction(x),
        };
        writeln!(out, "{x}\t{f}")?;
    }
    Ok(())
}

fn sweep(kappa: &[f64], b0: &[f64], n_max: u32, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "kappa\tb0\tn\tbeta_star_crit\tbeta_star_crit_inf")?;
    for &k in kappa {
        for &b in b0 {
            let limit = criticality::beta_star_critical_inf(k, b)?;
            for n in 1..=n_max {
                let finite = criticality::beta_critical(n, k, b)? + b;
                writeln!(out, "{k}\t{b}\t{n}\t{finite}\t{limit}")?;
            }
        }
    }
    Ok(())
}

fn moments(model: &ModelSpec, mc: &MomentConfig, fit_from: f64, out: &mut dyn Write) -> Result<(), CliError> {
    let params = model.params()?;
    let traj = dynamics::integrate_moments(&params, mc)?;
    writeln!(out, "t\ttotal\tlog_total")?;
    let totals = traj.totals();
    for &(t, total) in &totals {
        writeln!(out, "{t}\t{total}\t{}", total.ln())?;
    }
    writeln!(out, "# clipped {}", traj.clipped)?;
    match dynamics::estimate_growth_rate(&totals, fit_from) {
        Ok(fit) => writeln!(
            out,
            "# fit rate {} stderr {} residual_rms {} points {}",
            fit.rate, fit.stderr, fit.residual_rms, fit.points
        )?,
        Err(e) => writeln!(out, "# fit unavailable: {e}")?,
    }
    if let Some(sol) = find_spectral_solution(&params, &SpectralOptions::default())? {
        writeln!(out, "# lambda {}", sol.lambda)?;
    }
    Ok(())
}

fn simulate(
    model: &ModelSpec,
    sc: &SimulationConfig,
    seed: u64,
    replicas: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let params = model.params()?;
    let runs = dynamics::simulate_replicas(&params, sc, seed, replicas)?;
    dynamics::write_trajectory_dump(&mut *out, &runs, '\t')?;
    match dynamics::summarize(&runs) {
        Ok(s) => {
            writeln!(out, "# replicas {} extinct {} truncated {}", s.replicas, s.extinct, s.truncated)?;
            for i in 0..s.t.len() {
                writeln!(out, "# mean t {} total {} stderr {}", s.t[i], s.mean[i], s.stderr[i])?;
            }
        }
        Err(e) => writeln!(out, "# summary unavailable: {e}")?,
    }
    match dynamics::survivor_growth_rate(&runs, sc.t_end / 2.0) {
        Ok(g) => writeln!(
            out,
            "# survivor growth rate {} stderr {} survivors {}",
            g.fit.rate, g.fit.stderr, g.survivors
        )?,
        Err(e) => writeln!(out, "# survivor growth unavailable: {e}")?,
    }
    Ok(())
}
