//! Fully resolved run description, written as the header of every output.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use brw_core::{ModelParams, OffspringLaw};

use crate::error::CliError;

/// Prefix of the header line that carries the serialized config.
pub const CONFIG_PREFIX: &str = "# config ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kappa: f64,
    pub b0: f64,
    pub n: usize,
    /// `(k, b_k)` pairs; absent when no branching law was given.
    pub offspring: Option<Vec<(u32, f64)>>,
}

impl ModelSpec {
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let pairs = self
            .offspring
            .as_ref()
            .ok_or_else(|| CliError::Usage("this command needs --beta or --offspring".into()))?;
        let law = OffspringLaw::new(pairs)?;
        Ok(ModelParams::new(self.kappa, self.b0, self.n, law)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Analytic,
    Stochastic,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CriticalBeta {
        model: ModelSpec,
    },
    Spectrum {
        model: ModelSpec,
        tol: f64,
        eps: f64,
        scan_points: usize,
        half_width: usize,
        eig_tol: f64,
    },
    Eigenfunction {
        model: ModelSpec,
        tol: f64,
        eps: f64,
        scan_points: usize,
        radius: u32,
    },
    Sweep {
        kappa: Vec<f64>,
        b0: Vec<f64>,
        n_max: u32,
    },
    Moments {
        model: ModelSpec,
        x0: i64,
        t_end: f64,
        dt: f64,
        half_width: usize,
        sample_interval: f64,
        fit_from: f64,
    },
    Simulate {
        model: ModelSpec,
        x0: i64,
        t_end: f64,
        sample_interval: f64,
        replicas: usize,
        seed: u64,
        population_cap: u64,
    },
    Verify {
        suite: Suite,
        seed: u64,
        cases: usize,
        replicas: usize,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::CriticalBeta { .. } => "critical-beta",
            Command::Spectrum { .. } => "spectrum",
            Command::Eigenfunction { .. } => "eigenfunction",
            Command::Sweep { .. } => "sweep",
            Command::Moments { .. } => "moments",
            Command::Simulate { .. } => "simulate",
            Command::Verify { .. } => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// Destination file; `None` means standard output.
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn header(&self) -> String {
        let json = serde_json::to_string(self).expect("config is always serializable");
        format!("# brw {}\n{CONFIG_PREFIX}{json}\n", self.command.name())
    }

    /// Recovers the config from the header of an output file.
    pub fn from_header(text: &str) -> Result<Self, CliError> {
        let line = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix(CONFIG_PREFIX))
            .ok_or_else(|| CliError::Usage("no config line in header".into()))?;
        serde_json::from_str(line).map_err(|e| CliError::Usage(format!("bad config header: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trips_awkward_floats() {
        let cfg = RunConfig {
            command: Command::Sweep {
                kappa: vec![0.1 + 0.2, 1.0 / 3.0, 5e-324],
                b0: vec![std::f64::consts::PI],
                n_max: 7,
            },
            output_path: Some(PathBuf::from("out/sweep.tsv")),
        };
        let text = format!("{}kappa\tb0\n1\t2\n", cfg.header());
        assert_eq!(RunConfig::from_header(&text).unwrap(), cfg);
    }

    #[test]
    fn missing_header_is_rejected() {
        assert!(RunConfig::from_header("a\tb\n").is_err());
    }
}
