//! Command-line syntax and its resolution into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use brw_core::dynamics;
use brw_core::{OffspringLaw, SpectralOptions};

use crate::config::{Command, ModelSpec, RunConfig, Suite};
use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BRW_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "brw", version, about = "Criticality, spectrum and growth of a branching random walk with absorbing sources")]
pub struct Cli {
    /// Output file. Defaults to `$BRW_OUTPUT_DIR/<command>.tsv` when that
    /// variable is set, else standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub b0: f64,
    /// Absorbers sit at 1..=n and -n..=-1.
    #[arg(long)]
    pub n: usize,
    /// Net source intensity; builds a binary-splitting (or death) law.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "offspring")]
    pub beta: Option<f64>,
    /// Offspring law as `k:rate` pairs, e.g. `0:1,2:1`.
    #[arg(long)]
    pub offspring: Option<String>,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[arg(long, default_value_t = SpectralOptions::default().tol)]
    pub tol: f64,
    #[arg(long, default_value_t = SpectralOptions::default().eps)]
    pub eps: f64,
    #[arg(long, default_value_t = SpectralOptions::default().scan_points)]
    pub scan_points: usize,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Critical thresholds and the components of J_n.
    CriticalBeta {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Isolated positive eigenvalue and source values of the eigenfunction.
    Spectrum {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        spectral: SpectralArgs,
        /// Half-width of the truncated operator used as a cross-check.
        #[arg(long)]
        half_width: Option<usize>,
        #[arg(long, default_value_t = 1e-12)]
        eig_tol: f64,
    },
    /// Eigenfunction values on -radius..=radius, normalised to f(0) = 1.
    Eigenfunction {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        spectral: SpectralArgs,
        #[arg(long, default_value_t = 30)]
        radius: u32,
    },
    /// Finite-n and limiting thresholds over a kappa x b0 grid.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        kappa: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        b0: Vec<f64>,
        #[arg(long, default_value_t = 20)]
        n_max: u32,
    },
    /// First-moment equation integrated in time.
    Moments {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        x0: i64,
        #[arg(long, default_value_t = 20.0)]
        t_end: f64,
        /// Defaults to min(0.01, stability bound).
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        half_width: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        sample_interval: f64,
        /// Start of the log-linear fit window; defaults to t_end / 2.
        #[arg(long)]
        fit_from: Option<f64>,
    },
    /// Monte Carlo replicas of the particle system.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        x0: i64,
        #[arg(long, default_value_t = 5.0)]
        t_end: f64,
        #[arg(long, default_value_t = 0.5)]
        sample_interval: f64,
        #[arg(long, default_value_t = 100)]
        replicas: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = dynamics::SimulationConfig::DEFAULT_CAP)]
        population_cap: u64,
    },
    /// Cross-checks of the closed forms.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::Analytic)]
        suite: Suite,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Randomized cases per analytic check.
        #[arg(long, default_value_t = 200)]
        cases: usize,
        /// Replicas for the Monte Carlo check.
        #[arg(long, default_value_t = 10_000)]
        replicas: usize,
    },
}

fn parse_offspring(text: &str) -> Result<Vec<(u32, f64)>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|item| {
            let (k, r) = item
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("offspring entry `{item}` is not `k:rate`")))?;
            let k = k
                .trim()
                .parse::<u32>()
                .map_err(|e| CliError::Usage(format!("offspring count `{k}`: {e}")))?;
            let r = r
                .trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("offspring rate `{r}`: {e}")))?;
            Ok((k, r))
        })
        .collect()
}

impl ModelArgs {
    fn resolve(&self) -> Result<ModelSpec, CliError> {
        let law = match (&self.beta, &self.offspring) {
            (Some(beta), _) => Some(OffspringLaw::with_beta(*beta)?),
            (None, Some(text)) => Some(OffspringLaw::new(&parse_offspring(text)?)?),
            (None, None) => None,
        };
        let spec = ModelSpec {
            kappa: self.kappa,
            b0: self.b0,
            n: self.n,
            offspring: law.map(|l| l.rates().to_vec()),
        };
        // validates kappa, b0 and n even when no law was given
        let law = OffspringLaw::binary_splitting(1.0)?;
        brw_core::ModelParams::new(spec.kappa, spec.b0, spec.n, law)?;
        Ok(spec)
    }
}

fn need_law(spec: ModelSpec) -> Result<ModelSpec, CliError> {
    if spec.offspring.is_none() {
        return Err(CliError::Usage("this command needs --beta or --offspring".into()));
    }
    Ok(spec)
}

/// Materialises every default so the config fully describes the run.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let command = match &cli.command {
        CliCommand::CriticalBeta { model } => Command::CriticalBeta {
            model: model.resolve()?,
        },
        CliCommand::Spectrum {
            model,
            spectral,
            half_width,
            eig_tol,
        } => {
            let model = need_law(model.resolve()?)?;
            let params = model.params()?;
            Command::Spectrum {
                half_width: half_width.unwrap_or_else(|| params.default_half_width()),
                model,
                tol: spectral.tol,
                eps: spectral.eps,
                scan_points: spectral.scan_points,
                eig_tol: *eig_tol,
            }
        }
        CliCommand::Eigenfunction { model, spectral, radius } => Command::Eigenfunction {
            model: need_law(model.resolve()?)?,
            tol: spectral.tol,
            eps: spectral.eps,
            scan_points: spectral.scan_points,
            radius: *radius,
        },
        CliCommand::Sweep { kappa, b0, n_max } => {
            if kappa.is_empty() || b0.is_empty() {
                return Err(CliError::Usage("sweep needs non-empty --kappa and --b0 lists".into()));
            }
            if *n_max < 1 {
                return Err(CliError::Usage("--n-max must be at least 1".into()));
            }
            if let Some(bad) = kappa.iter().chain(b0).find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(CliError::Usage(format!("sweep values must be positive, got {bad}")));
            }
            Command::Sweep {
                kappa: kappa.clone(),
                b0: b0.clone(),
                n_max: *n_max,
            }
        }
        CliCommand::Moments {
            model,
            x0,
            t_end,
            dt,
            half_width,
            sample_interval,
            fit_from,
        } => {
            let model = need_law(model.resolve()?)?;
            let params = model.params()?;
            if !(*sample_interval > 0.0) {
                return Err(CliError::Usage("--sample-interval must be positive".into()));
            }
            Command::Moments {
                x0: *x0,
                t_end: *t_end,
                dt: dt.unwrap_or_else(|| 0.01f64.min(dynamics::moment_step_bound(&params))),
                half_width: half_width.unwrap_or_else(|| dynamics::default_moment_half_width(&params, *t_end, *x0)),
                sample_interval: *sample_interval,
                fit_from: fit_from.unwrap_or(t_end / 2.0),
                model,
            }
        }
        CliCommand::Simulate {
            model,
            x0,
            t_end,
            sample_interval,
            replicas,
            seed,
            population_cap,
        } => {
            if !(*sample_interval > 0.0) {
                return Err(CliError::Usage("--sample-interval must be positive".into()));
            }
            if *replicas == 0 {
                return Err(CliError::Usage("--replicas must be at least 1".into()));
            }
            Command::Simulate {
                model: need_law(model.resolve()?)?,
                x0: *x0,
                t_end: *t_end,
                sample_interval: *sample_interval,
                replicas: *replicas,
                seed: *seed,
                population_cap: *population_cap,
            }
        }
        CliCommand::Verify {
            suite,
            seed,
            cases,
            replicas,
        } => {
            if *cases == 0 || *replicas < 2 {
                return Err(CliError::Usage("--cases must be >= 1 and --replicas >= 2".into()));
            }
            Command::Verify {
                suite: *suite,
                seed: *seed,
                cases: *cases,
                replicas: *replicas,
            }
        }
    };
    let output_path = cli.output.clone().or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{}.tsv", command.name())))
    });
    Ok(RunConfig { command, output_path })
}
