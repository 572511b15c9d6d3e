//! Monte Carlo checks of the particle simulator against the first moment.

use brw_core::dynamics::{self, MomentConfig, SimulationConfig};
use brw_core::{find_spectral_solution, ModelParams, OffspringLaw, SpectralOptions};

fn ode_total(p: &ModelParams, t: f64) -> f64 {
    dynamics::integrate_moments(p, &MomentConfig::new(0, t, 0.005)).unwrap().last().total()
}

#[test]
fn single_source_mean_matches_first_moment() {
    let p = ModelParams::new(1.0, 0.0, 0, OffspringLaw::binary_splitting(1.0).unwrap()).unwrap();
    let runs = dynamics::simulate_replicas(&p, &SimulationConfig::new(0, 2.0), 17, 10_000).unwrap();
    let s = dynamics::summarize(&runs).unwrap();
    let (mean, se) = (s.mean[s.mean.len() - 1], s.stderr[s.stderr.len() - 1]);
    let expected = ode_total(&p, 2.0);
    assert!((mean - expected).abs() <= 3.0 * se, "{mean} +- {se} vs {expected}");
    // particles leave the source, so the total grows slower than e^{beta* t}
    assert!(expected < 2f64.exp());
}

#[test]
fn death_at_source_enters_the_mean() {
    let law = OffspringLaw::new(&[(0, 0.5), (3, 0.75)]).unwrap();
    let p = ModelParams::new(1.5, 0.8, 2, law).unwrap();
    let runs = dynamics::simulate_replicas(&p, &SimulationConfig::new(1, 3.0), 23, 10_000).unwrap();
    let s = dynamics::summarize(&runs).unwrap();
    let expected = dynamics::integrate_moments(&p, &MomentConfig::new(1, 3.0, 0.005)).unwrap().last().total();
    let (mean, se) = (s.mean[s.mean.len() - 1], s.stderr[s.stderr.len() - 1]);
    assert!((mean - expected).abs() <= 3.0 * se, "{mean} +- {se} vs {expected}");
}

#[test]
fn survivor_growth_exponent_tracks_eigenvalue() {
    let p = ModelParams::new(1.0, 1.0, 1, OffspringLaw::binary_splitting(1.0).unwrap()).unwrap();
    let lambda = find_spectral_solution(&p, &SpectralOptions::default()).unwrap().unwrap().lambda;
    let cfg = SimulationConfig::new(0, 30.0).sample_every(1.0);
    let runs = dynamics::simulate_replicas(&p, &cfg, 2024, 400).unwrap();
    let g = dynamics::survivor_growth_rate(&runs, 15.0).unwrap();
    assert!(g.survivors > 50 && g.extinct > 0);
    assert!((g.fit.rate - lambda).abs() <= 0.1 * lambda, "{:?} vs {lambda}", g.fit);
}

#[test]
fn moment_slope_and_subcritical_boundedness() {
    let p = ModelParams::with_beta(0.8, 0.5, 2, 1.6).unwrap();
    let sol = find_spectral_solution(&p, &SpectralOptions::default()).unwrap().unwrap();
    let tr = dynamics::integrate_moments(&p, &MomentConfig::new(0, 40.0, 0.01).sample_every(0.5)).unwrap();
    let fit = dynamics::estimate_growth_rate(&tr.totals(), 20.0).unwrap();
    assert!((fit.rate - sol.lambda).abs() <= 1e-3, "{} vs {}", fit.rate, sol.lambda);
    assert_eq!(tr.clipped, 0);

    let sub = ModelParams::with_beta(0.8, 0.5, 2, 0.1).unwrap();
    let tr = dynamics::integrate_moments(&sub, &MomentConfig::new(0, 40.0, 0.01).sample_every(1.0)).unwrap();
    assert!(tr.totals().iter().all(|&(_, m)| m <= 1.0 + 1e-9));
}
