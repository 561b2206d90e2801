//! Shared fixtures for the criterion benches.

use jsdknn_core::simulation::{generate_dirichlet, inject_mcar, InjectionSpec};
use jsdknn_core::CompositionalTable;

/// Dirichlet table of size `n × d` with 10% of rows missing 30% of their parts,
/// the layout of the timing study.
pub fn timing_fixture(n: usize, d: usize, seed: u64) -> CompositionalTable {
    let table = generate_dirichlet(n, d, seed).expect("valid dimensions");
    let spec = InjectionSpec::mcar(0.10, 0.30, seed);
    inject_mcar(&table, &spec).expect("fixture injection").masked
}
