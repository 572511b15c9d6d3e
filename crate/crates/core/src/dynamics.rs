//! Time-domain checks of exponential growth.
//!
//! Two independent routes: the first-moment equation `dm/dt = H m` integrated
//! with classical RK4 on a truncated window, and an exact event-driven
//! simulation of the particle system itself.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{BrwError, Result};
use crate::model::ModelParams;

/// Negative values smaller in magnitude than this are rounding noise.
const NEGATIVE_SLACK: f64 = 1e-12;

/// `m_1(t, x0, .)` on `[-L, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentField {
    pub half_width: usize,
    pub t: f64,
    pub values: Vec<f64>,
}

impl MomentField {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn at(&self, site: i64) -> f64 {
        let i = site + self.half_width as i64;
        if i < 0 || i as usize >= self.values.len() {
            0.0
        } else {
            self.values[i as usize]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentConfig {
    pub x0: i64,
    pub t_end: f64,
    pub dt: f64,
    /// Defaults to `n + ceil(kappa T) + 50`.
    pub half_width: Option<usize>,
    /// Times at which fields are recorded; `t_end` is always recorded.
    pub sample_times: Vec<f64>,
}

impl MomentConfig {
    pub fn new(x0: i64, t_end: f64, dt: f64) -> Self {
        Self {
            x0,
            t_end,
            dt,
            half_width: None,
            sample_times: Vec::new(),
        }
    }

    /// Records a field every `interval` time units.
    pub fn sample_every(mut self, interval: f64) -> Self {
        let steps = (self.t_end / interval).round() as usize;
        self.sample_times = (0..=steps).map(|i| (i as f64 * interval).min(self.t_end)).collect();
        self
    }
}

pub fn default_moment_half_width(params: &ModelParams, t_end: f64, x0: i64) -> usize {
    params.n() + (params.kappa() * t_end).ceil() as usize + 50 + x0.unsigned_abs() as usize
}

/// Largest step accepted by [`integrate_moments`].
pub fn moment_step_bound(params: &ModelParams) -> f64 {
    0.5 / (params.kappa() + params.beta().abs() + params.b0())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentTrajectory {
    pub samples: Vec<MomentField>,
    /// Entries that went below `-1e-12` and were clipped to zero.
    pub clipped: usize,
}

impl MomentTrajectory {
    pub fn totals(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.total())).collect()
    }

    pub fn last(&self) -> &MomentField {
        self.samples.last().expect("trajectory always holds the final field")
    }
}

/// Integrates `dm/dt = H_n m` from `m(0) = delta_{x0}` with RK4.
pub fn integrate_moments(params: &ModelParams, cfg: &MomentConfig) -> Result<MomentTrajectory> {
    if !(cfg.t_end > 0.0 && cfg.t_end.is_finite()) {
        return Err(BrwError::Domain(format!("horizon T = {} must be positive", cfg.t_end)));
    }
    if !(cfg.dt > 0.0) {
        return Err(BrwError::Domain(format!("step dt = {} must be positive", cfg.dt)));
    }
    let bound = moment_step_bound(params);
    if cfg.dt > bound {
        return Err(BrwError::StepTooLarge { dt: cfg.dt, bound });
    }
    let half_width = cfg
        .half_width
        .unwrap_or_else(|| default_moment_half_width(params, cfg.t_end, cfg.x0));
    if half_width <= params.n() || cfg.x0.unsigned_abs() as usize > half_width {
        return Err(BrwError::WindowTooSmall {
            half_width,
            n: params.n(),
        });
    }
    let l = half_width as i64;
    let diag: Vec<f64> = (-l..=l).map(|x| params.potential(x)).collect();
    let c = 0.5 * params.kappa();
    let m = diag.len();
    let apply = |v: &[f64], out: &mut [f64]| {
        for i in 0..m {
            let mut s = diag[i] * v[i];
            if i > 0 {
                s += c * v[i - 1];
            }
            if i + 1 < m {
                s += c * v[i + 1];
            }
            out[i] = s;
        }
    };

    let mut targets: Vec<f64> = cfg
        .sample_times
        .iter()
        .copied()
        .filter(|&t| (0.0..=cfg.t_end).contains(&t))
        .collect();
    targets.push(cfg.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut u = vec![0.0; m];
    u[(cfg.x0 + l) as usize] = 1.0;
    let mut t = 0.0;
    let mut clipped = 0;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut samples = Vec::with_capacity(targets.len());
    for &target in &targets {
        while target - t > 1e-12 * target.max(1.0) {
            let h = cfg.dt.min(target - t);
            apply(&u, &mut k1);
            for i in 0..m {
                tmp[i] = u[i] + 0.5 * h * k1[i];
            }
            apply(&tmp, &mut k2);
            for i in 0..m {
                tmp[i] = u[i] + 0.5 * h * k2[i];
            }
            apply(&tmp, &mut k3);
            for i in 0..m {
                tmp[i] = u[i] + h * k3[i];
            }
            apply(&tmp, &mut k4);
            for i in 0..m {
                u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                if u[i] < 0.0 {
                    if u[i] < -NEGATIVE_SLACK {
                        clipped += 1;
                    }
                    u[i] = 0.0;
                }
            }
            t += h;
        }
        t = target;
        samples.push(MomentField {
            half_width,
            t,
            values: u.clone(),
        });
    }
    if clipped > 0 {
        log::warn!("moment integration clipped {clipped} entries below -{NEGATIVE_SLACK:e}");
    }
    Ok(MomentTrajectory { samples, clipped })
}

/// Occupation numbers of the particle system.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleState {
    pub counts: BTreeMap<i64, u64>,
    pub t: f64,
    pub total: u64,
    pub rng_seed: u64,
    pub event_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationSample {
    pub t: f64,
    pub total: u64,
    pub occupied_sites: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub x0: i64,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub population_cap: u64,
}

impl SimulationConfig {
    pub const DEFAULT_CAP: u64 = 10_000_000;

    pub fn new(x0: i64, t_end: f64) -> Self {
        Self {
            x0,
            t_end,
            sample_times: vec![t_end],
            population_cap: Self::DEFAULT_CAP,
        }
    }

    pub fn sample_every(mut self, interval: f64) -> Self {
        let steps = (self.t_end / interval).round() as usize;
        self.sample_times = (0..=steps).map(|i| (i as f64 * interval).min(self.t_end)).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrajectory {
    pub samples: Vec<PopulationSample>,
    pub final_state: ParticleState,
    /// The population cap was hit; samples stop at that time.
    pub truncated: bool,
}

impl SimulationTrajectory {
    pub fn extinct(&self) -> bool {
        self.final_state.total == 0
    }

    pub fn total_at(&self, t: f64) -> Option<u64> {
        self.samples.iter().find(|s| (s.t - t).abs() < 1e-12).map(|s| s.total)
    }
}

/// Per-site event channels.
struct SiteRates<'a> {
    params: &'a ModelParams,
    kappa: f64,
    source_total: f64,
}

impl SiteRates<'_> {
    fn per_particle(&self, site: i64) -> f64 {
        let mut r = self.kappa;
        if site == 0 {
            r += self.source_total;
        }
        if self.params.is_absorber(site) {
            r += self.params.b0();
        }
        r
    }
}

fn sample_state(state: &ParticleState) -> PopulationSample {
    PopulationSample {
        t: state.t,
        total: state.total,
        occupied_sites: state.counts.len(),
    }
}

/// Exact event-driven simulation from a single particle at `x0`.
///
/// Events at a site occur at rate `count * (kappa + death + branching)`:
/// a jump moves one particle to a uniformly chosen neighbour, a death
/// removes it, and a branching event with `k` descendants adds `k - 1`
/// particles at the origin.
pub fn simulate(params: &ModelParams, cfg: &SimulationConfig, seed: u64) -> Result<SimulationTrajectory> {
    let rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_with_rng(params, cfg, rng, seed)
}

fn simulate_with_rng(
    params: &ModelParams,
    cfg: &SimulationConfig,
    mut rng: ChaCha8Rng,
    seed: u64,
) -> Result<SimulationTrajectory> {
    if !(cfg.t_end > 0.0 && cfg.t_end.is_finite()) {
        return Err(BrwError::Domain(format!("horizon T = {} must be positive", cfg.t_end)));
    }
    let rates = SiteRates {
        params,
        kappa: params.kappa(),
        source_total: params.offspring().total_rate(),
    };
    let law = params.offspring().rates();

    let mut targets: Vec<f64> = cfg
        .sample_times
        .iter()
        .copied()
        .filter(|&t| (0.0..=cfg.t_end).contains(&t))
        .collect();
    targets.push(cfg.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut state = ParticleState {
        counts: BTreeMap::from([(cfg.x0, 1)]),
        t: 0.0,
        total: 1,
        rng_seed: seed,
        event_count: 0,
    };
    let mut samples = Vec::with_capacity(targets.len());
    let mut next_target = 0;
    let mut truncated = false;

    loop {
        let total_rate: f64 = state
            .counts
            .iter()
            .map(|(&site, &c)| c as f64 * rates.per_particle(site))
            .sum();
        let wait = if total_rate > 0.0 {
            let e: f64 = Exp1.sample(&mut rng);
            e / total_rate
        } else {
            f64::INFINITY
        };
        let t_next = state.t + wait;
        while next_target < targets.len() && targets[next_target] < t_next {
            let snapshot = sample_state(&state);
            samples.push(PopulationSample {
                t: targets[next_target],
                ..snapshot
            });
            next_target += 1;
        }
        if next_target == targets.len() {
            state.t = cfg.t_end;
            break;
        }
        state.t = t_next;
        state.event_count += 1;

        // pick the site, then the channel
        let mut u = rng.random::<f64>() * total_rate;
        let mut chosen = *state.counts.keys().next_back().expect("nonempty population");
        for (&site, &c) in &state.counts {
            let w = c as f64 * rates.per_particle(site);
            if u < w {
                chosen = site;
                break;
            }
            u -= w;
        }
        let mut v = rng.random::<f64>() * rates.per_particle(chosen);
        if v < rates.kappa {
            let to = if rng.random::<bool>() { chosen + 1 } else { chosen - 1 };
            remove_one(&mut state, chosen);
            *state.counts.entry(to).or_insert(0) += 1;
            state.total += 1;
            continue;
        }
        v -= rates.kappa;
        if params.is_absorber(chosen) {
            // the only other channel at an absorber
            remove_one(&mut state, chosen);
            continue;
        }
        // chosen == 0: walk the offspring law
        let mut k_chosen = law.last().map_or(0, |&(k, _)| k);
        for &(k, b) in law {
            if v < b {
                k_chosen = k;
                break;
            }
            v -= b;
        }
        if k_chosen == 0 {
            remove_one(&mut state, chosen);
        } else {
            let added = u64::from(k_chosen - 1);
            *state.counts.entry(chosen).or_insert(0) += added;
            state.total += added;
        }
        if state.total > cfg.population_cap {
            truncated = true;
            samples.push(sample_state(&state));
            break;
        }
    }
    if truncated {
        log::warn!(
            "population cap {} exceeded at t = {:.4} (seed {seed})",
            cfg.population_cap,
            state.t
        );
    }
    Ok(SimulationTrajectory {
        samples,
        final_state: state,
        truncated,
    })
}

fn remove_one(state: &mut ParticleState, site: i64) {
    let c = state.counts.get_mut(&site).expect("occupied site");
    *c -= 1;
    if *c == 0 {
        state.counts.remove(&site);
    }
    state.total -= 1;
}

/// Stream-separated generator for one replica of a master seed.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

/// Runs `replicas` independent simulations in parallel. Results come back in
/// replica order regardless of scheduling.
pub fn simulate_replicas(
    params: &ModelParams,
    cfg: &SimulationConfig,
    master_seed: u64,
    replicas: usize,
) -> Result<Vec<SimulationTrajectory>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|id| simulate_with_rng(params, cfg, replica_rng(master_seed, id), master_seed))
        .collect()
}

/// Mean and standard error of the total population at each sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub replicas: usize,
    pub extinct: usize,
    pub truncated: usize,
}

/// Aggregates in replica order, so the result is bit-reproducible.
pub fn summarize(trajectories: &[SimulationTrajectory]) -> Result<EnsembleSummary> {
    let complete: Vec<&SimulationTrajectory> = trajectories.iter().filter(|t| !t.truncated).collect();
    let first = complete
        .first()
        .ok_or_else(|| BrwError::Estimation("no complete trajectories".into()))?;
    let times: Vec<f64> = first.samples.iter().map(|s| s.t).collect();
    let k = complete.len() as f64;
    let mut mean = vec![0.0; times.len()];
    let mut sq = vec![0.0; times.len()];
    for tr in &complete {
        for (i, s) in tr.samples.iter().enumerate() {
            let v = s.total as f64;
            mean[i] += v;
            sq[i] += v * v;
        }
    }
    let mut stderr = vec![0.0; times.len()];
    for i in 0..times.len() {
        mean[i] /= k;
        let var = if k > 1.0 { (sq[i] / k - mean[i] * mean[i]).max(0.0) * k / (k - 1.0) } else { 0.0 };
        stderr[i] = (var / k).sqrt();
    }
    Ok(EnsembleSummary {
        t: times,
        mean,
        stderr,
        replicas: trajectories.len(),
        extinct: trajectories.iter().filter(|t| t.extinct()).count(),
        truncated: trajectories.len() - complete.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    pub rate: f64,
    pub stderr: f64,
    /// Root-mean-square residual of `log(total)` about the fitted line.
    pub residual_rms: f64,
    pub points: usize,
}

/// Least-squares slope of `log(total)` against `t` over `t >= t_min`.
pub fn estimate_growth_rate(samples: &[(f64, f64)], t_min: f64) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(t, v)| t >= t_min && v > 0.0)
        .map(|&(t, v)| (t, v.ln()))
        .collect();
    if pts.is_empty() {
        return Err(BrwError::Estimation("every sample past t_min is extinct".into()));
    }
    if pts.len() < 5 {
        return Err(BrwError::Estimation(format!(
            "need at least 5 positive samples past t_min, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    if sxx == 0.0 {
        return Err(BrwError::Estimation("samples share a single time".into()));
    }
    let rate = sxy / sxx;
    let intercept = ym - rate * tm;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - rate * p.0).powi(2)).sum();
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    Ok(GrowthFit {
        rate,
        stderr,
        residual_rms: (ss_res / n).sqrt(),
        points: pts.len(),
    })
}

/// Growth exponent of the mean population over surviving replicas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivorGrowth {
    pub fit: GrowthFit,
    pub survivors: usize,
    pub extinct: usize,
}

pub fn survivor_growth_rate(trajectories: &[SimulationTrajectory], t_min: f64) -> Result<SurvivorGrowth> {
    let survivors: Vec<&SimulationTrajectory> =
        trajectories.iter().filter(|t| !t.extinct() && !t.truncated).collect();
    let extinct = trajectories.iter().filter(|t| t.extinct()).count();
    let first = survivors
        .first()
        .ok_or_else(|| BrwError::Estimation("all replicas went extinct".into()))?;
    let series: Vec<(f64, f64)> = first
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let sum: f64 = survivors.iter().map(|tr| tr.samples[i].total as f64).sum();
            (s.t, sum / survivors.len() as f64)
        })
        .collect();
    Ok(SurvivorGrowth {
        fit: estimate_growth_rate(&series, t_min)?,
        survivors: survivors.len(),
        extinct,
    })
}

/// Writes `replica_id, t, total, occupied_sites` records, one per sample,
/// separated by `delim`, after a column-name line.
pub fn write_trajectory_dump<W: Write>(
    mut out: W,
    trajectories: &[SimulationTrajectory],
    delim: char,
) -> io::Result<()> {
    writeln!(out, "replica_id{delim}t{delim}total{delim}occupied_sites")?;
    for (id, tr) in trajectories.iter().enumerate() {
        for s in &tr.samples {
            writeln!(out, "{id}{delim}{}{delim}{}{delim}{}", s.t, s.total, s.occupied_sites)?;
        }
    }
    Ok(())
}
