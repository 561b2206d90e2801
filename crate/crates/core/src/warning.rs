//! Structured, non-fatal diagnostics.
//!
//! Operations that make a decision on the caller's behalf (re-closing a noisy
//! row, dropping a donor, falling back to global parameters) return a
//! [`Warning`] alongside their result instead of logging it.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// A complete row did not sum to one and was re-closed at ingestion.
    Reclosed { row: usize, sum: f64 },
    /// A donor row sums to zero over the target's observed columns.
    DonorExcluded { row: usize, donor: usize },
    /// The incomplete row leaves no mass for its missing parts; they are set to zero.
    ZeroMissingTotal { row: usize },
    /// Observed parts exceed one by less than the tolerance; the missing total was clamped to zero.
    MissingTotalClamped { row: usize, observed_sum: f64 },
    /// The donors' aggregate is zero on every missing column; the missing total
    /// was split evenly across the missing parts.
    DonorMassZero { row: usize },
    /// The geometric mean (alpha = 0) met zero parts; those parts were set to zero.
    GeometricZeroParts { row: usize, columns: Vec<usize> },
    /// A pattern could not be tuned on its own and uses the global parameters.
    PatternFallback { pattern: Vec<usize>, reason: String },
    /// A grid pair failed in some cross-validation repetition and was dropped.
    GridPairFailed { alpha: f64, k: usize },
    /// A pattern was left out of the global tuning allocation.
    PatternSkipped { pattern: Vec<usize>, reason: String },
}
