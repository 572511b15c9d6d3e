//! Continuous-time branching random walk on the integer lattice with one
//! branching source at the origin and `2n` absorbing sources at
//! `±1, ..., ±n`.
//!
//! - [`criticality`]: closed-form critical intensities for finite and
//!   infinite absorber counts.
//! - [`spectral`]: the isolated positive eigenvalue and its eigenfunction
//!   via the `zeta` parametrisation of the resolvent.
//! - [`model`]: parameters and the truncated evolution operator used as a
//!   brute-force spectral oracle.
//! - [`dynamics`]: first-moment integration and exact particle simulation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criticality;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod spectral;

pub use criticality::{classify_regime, CriticalityReport, RecurrenceBasis, Regime};
pub use error::{BrwError, Result};
pub use model::{Eigenpair, ModelParams, OffspringLaw, TruncatedOperator};
pub use spectral::{find_spectral_solution, DeltaSystem, SpectralOptions, SpectralSolution};
