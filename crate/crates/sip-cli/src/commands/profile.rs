//! `sip profile`: closed-form stationary density profile.

use crate::commands::{profile_row, profile_table};
use crate::config::RunConfig;
use crate::report::{Report, Table};
use anyhow::Result;
use sip::analytic::{density_profile_general, density_profile_weak, stationary_current};

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let mut report = Report::new("profile", cfg);
    let general = density_profile_general(&cfg.params)?;
    report.scalar("alpha", general.alpha, "profile intercept, rho_i = alpha + beta i");
    report.scalar("beta", general.beta, "profile slope = J = <eta_{i+1} - eta_i>");
    report.scalar(
        "current",
        stationary_current(&cfg.params)?,
        "bond observable convention; positive toward higher site index",
    );
    report.scalar(
        "left_to_right_flux",
        -general.beta,
        "physical particle flux, the negative of the slope",
    );

    let n = cfg.params.n_sites();
    let mut table = profile_table();
    for site in 1..=n {
        table.push(profile_row(site, Some(general.density(site)), None, None, None));
    }
    report.tables.push(table);

    if let Some((b, d, eps)) = cfg.weak_rates() {
        let weak = density_profile_weak(b, d, cfg.params.m(), n, eps)?;
        report.scalar("alpha_weak", weak.alpha, "first order in eps");
        report.scalar("beta_weak", weak.beta, "first order in eps");
        let mut table = Table::new("weak_profile", &["site", "density"]);
        for site in 1..=n {
            table.push(vec![site.into(), weak.density(site).into()]);
        }
        report.tables.push(table);
    }
    Ok(report)
}
