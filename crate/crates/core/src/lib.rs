//! Marginal-correlation variable screening for ultrahigh-dimensional linear
//! models `y = Xβ + η` with `p ≫ n`.
//!
//! The crate is organised around the life of a screening problem:
//!
//! * [`model`] holds the design matrix, sparse ground truth, response
//!   simulation and the signal/noise diagnostics of marginal correlations.
//! * [`coherence`] certifies designs through worst-case and average coherence.
//! * [`screening`] performs top-`d` selection and the oracle metrics.
//! * [`bounds`] evaluates closed-form screened-model sizes.
//! * [`synth`] generates synthetic designs and coefficients.
//! * [`baselines`] provides LASSO / elastic-net solvers and SAFE / strong rules.
//! * [`text`] turns a labelled text corpus into TF-IDF features.
//! * [`experiments`] reproduces the simulation and text studies.
//! * [`cli`] backs the `exsis` binary.

pub mod baselines;
pub mod bounds;
pub mod cli;
pub mod coherence;
pub mod error;
pub mod experiments;
pub mod io;
pub mod model;
pub mod rng;
pub mod screening;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
pub use model::{DesignMatrix, ResponseVector, ScreeningDiagnostics, SparseModel};
