//! Missing-value imputation for compositional data with k nearest neighbours
//! ranked by the Jensen-Shannon divergence.
//!
//! The pipeline for one incomplete row:
//!
//! 1. close its observed parts, and the same parts of every complete row;
//! 2. rank complete rows by JSD between those closed sub-vectors;
//! 3. average the `k` nearest full rows with a power Fréchet mean;
//! 4. close the average over the missing columns and scale it by the mass
//!    the observed parts leave free.
//!
//! Observed cells are never modified and zero parts need no special
//! treatment. [`tune`] picks `(alpha, k)` by repeated leave-N-out
//! cross-validation, globally or per missingness pattern, and
//! [`simulation`] holds the missingness injectors and benchmark harness.

pub mod distance;
pub mod error;
pub mod frechet;
pub mod impute;
pub mod io;
pub mod rng;
pub mod simplex;
pub mod simulation;
pub mod tune;
pub mod warning;

pub use distance::{aitchison_distance, contour_grid, distances_to_set, jsd, jsd_via_kld, ContourGrid, DistanceKind, JSD_MAX};
pub use error::{Error, Result};
pub use frechet::{frechet_mean, frechet_trajectory, Alpha};
pub use impute::{impute, impute_adaptive, impute_baseline_aitchison, Aggregation, ImputationResult, ImputerConfig};
pub use simplex::{closure, partition, Composition, CompositionalTable, MissingnessPattern, Partition};
pub use tune::{tune, tune_per_pattern, CvSettings, TuningReport};
pub use warning::Warning;
