//! `sip simulate`: kinetic Monte Carlo estimates with batch-means errors.

use crate::commands::{profile_row, profile_table};
use crate::config::RunConfig;
use crate::report::{Report, Table};
use anyhow::Result;
use sip::kmc::{run_simulation, RngStream};

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let burn_in = cfg.burn_in();
    let est = run_simulation(
        &cfg.params,
        cfg.time,
        burn_in,
        cfg.replicas,
        RngStream::new(cfg.seed, 0),
    )?;

    let mut report = Report::new("simulate", cfg);
    report.scalar("total_time", est.total_time, "simulated time per replica");
    report.scalar("burn_in", est.burn_in, "discarded relaxation time");
    report.scalar("replicas", f64::from(est.replicas), "independent streams");
    report.scalar("batches", est.batches as f64, "pooled batch count");
    report.scalar("w1_mean", est.w1_mean, "time-averaged entropy production rate");
    report.scalar("w1_stderr", est.w1_stderr, "batch-means standard error");

    let mut sites = profile_table();
    for (site, (density, se)) in est
        .site_density
        .iter()
        .zip(&est.site_density_stderr)
        .enumerate()
    {
        sites.push(profile_row(site + 1, None, None, Some((*density, *se)), None));
    }
    report.tables.push(sites);

    let mut bonds = Table::new("bond_current", &["bond", "current", "stderr"]);
    for (bond, (j, se)) in est
        .bond_current
        .iter()
        .zip(&est.bond_current_stderr)
        .enumerate()
    {
        bonds.push(vec![(bond + 1).into(), (*j).into(), (*se).into()]);
    }
    report.tables.push(bonds);
    Ok(report)
}
