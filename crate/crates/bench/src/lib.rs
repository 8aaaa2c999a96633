//! Fixtures shared by the benchmarks.

use slocc_core::catalog;
use slocc_core::{PureState, SearchOptions};

/// Single-threaded options with a reduced number of starts.
pub fn bench_options() -> SearchOptions {
    SearchOptions { starts: 8, parallel: false, ..SearchOptions::default() }
}

/// Every catalogued critical point with its name.
pub fn catalogued_states() -> Vec<(&'static str, PureState)> {
    catalog::example_critical_points().into_iter().map(|(name, psi, _)| (name, psi)).collect()
}
