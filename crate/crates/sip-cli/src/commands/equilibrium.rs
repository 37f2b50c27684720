//! `sip equilibrium`: reversible-measure quantities at the base rates.

use crate::config::RunConfig;
use crate::report::{Report, Table};
use anyhow::{bail, Result};
use sip::analytic::{
    marginal_pmf, mean_occupancy, partition_function, single_site_potential, theta_from_density,
};

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let p = &cfg.params;
    let (b, d) = match cfg.weak_rates() {
        Some((b, d, _)) => (b, d),
        None => {
            if !p.is_equilibrium() {
                bail!("equilibrium output needs equal fugacities; got b1/d1 != bN/dN");
            }
            (p.b1(), p.d1())
        }
    };
    let theta0 = b / d;
    if !(theta0 < 1.0) {
        bail!("finite density requires b < d (theta_0 = {theta0})");
    }
    let m = p.m();
    let mut report = Report::new("equilibrium", cfg);
    report.scalar("theta0", theta0, "reservoir fugacity b/d");
    report.scalar("partition_function", partition_function(theta0, m), "(1-theta)^-m");
    let rho = mean_occupancy(theta0, m)?;
    report.scalar("mean_occupancy", rho, "m theta/(1-theta)");
    report.scalar(
        "theta_round_trip",
        theta_from_density(rho, m)?,
        "theta(rho(theta)); equals theta0",
    );

    let levels = cfg.n_max.unwrap_or(30);
    let mut table = Table::new("marginal", &["n", "pmf", "potential"]);
    for n in 0..=levels {
        table.push(vec![
            (n as usize).into(),
            marginal_pmf(theta0, m, n)?.into(),
            single_site_potential(theta0, m, n)?.into(),
        ]);
    }
    report.tables.push(table);
    Ok(report)
}
