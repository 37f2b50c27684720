//! One module per subcommand; each builds a [`Report`](crate::report::Report)
//! from a resolved [`RunConfig`](crate::config::RunConfig).

pub mod dyson;
pub mod equilibrium;
pub mod mclennan;
pub mod profile;
pub mod simulate;
pub mod solve;
pub mod verify;

use crate::report::{Cell, Table};

/// The shared cross-comparison table schema: one row per site, empty cells
/// for routes that did not run.
pub fn profile_table() -> Table {
    Table::new(
        "profile",
        &[
            "site",
            "analytic_density",
            "exact_density",
            "kmc_density",
            "kmc_stderr",
            "coefficient",
        ],
    )
}

/// Builds one row of the cross-comparison table.
pub fn profile_row(
    site: usize,
    analytic: Option<f64>,
    exact: Option<f64>,
    kmc: Option<(f64, f64)>,
    coefficient: Option<f64>,
) -> Vec<Cell> {
    let opt = |v: Option<f64>| v.map(Cell::from).unwrap_or_else(Cell::empty);
    vec![
        site.into(),
        opt(analytic),
        opt(exact),
        opt(kmc.map(|(v, _)| v)),
        opt(kmc.map(|(_, se)| se)),
        opt(coefficient),
    ]
}
