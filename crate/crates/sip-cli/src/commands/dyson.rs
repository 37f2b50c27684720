//! `sip dyson`: the expansion orders of the driven stationary measure, with
//! the operator identity and finite-difference convergence verification.

use crate::config::RunConfig;
use crate::report::{CheckResult, Report, Table};
use anyhow::{bail, Result};
use sip::exactsolve::{
    build_generator, build_perturbation, build_space, dyson_first_order_with, dyson_higher_order,
    equilibrium_product_distribution, gamma_identity_rel_error, stationary_distribution,
    w1_vector, MasterSolver,
};
use sip::model::ModelParams;

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let Some((b, d, eps_in)) = cfg.weak_rates() else {
        bail!("the Dyson expansion needs the weak-drive form; pass --b/--d/--eps");
    };
    if !(b < d) {
        bail!("the expansion is taken around a finite-density equilibrium; needs b < d");
    }
    let (n, m) = (cfg.params.n_sites(), cfg.params.m());
    // base step of the finite-difference verification; 2*eps must stay well
    // inside the admissible drive
    let eps = if eps_in != 0.0 && eps_in.abs() <= 0.1 {
        eps_in.abs()
    } else {
        0.01
    };
    let n_max = cfg.resolve_n_max(crate::commands::solve::MAX_STATES)?;

    let space = build_space(n, n_max)?;
    let p0 = ModelParams::equilibrium(n, m, b, d)?;
    let g0 = build_generator(&space, &p0)?;
    let solver = MasterSolver::new(&g0)?;
    let nu0 = equilibrium_product_distribution(&space, b / d, m)?;
    let gamma = build_perturbation(&space, b, m);

    let mut report = Report::new("dyson", cfg);
    report.scalar("n_max", f64::from(n_max), "per-site occupation cap");
    report.scalar("fd_eps", eps, "finite-difference base step");

    let identity = gamma_identity_rel_error(&gamma, &nu0, b, d);
    report.checks.push(CheckResult {
        name: "gamma_star_identity".into(),
        passed: identity < 1e-10,
        value: identity,
        threshold: 1e-10,
        detail: "Gamma* rho0 = (b-d)(eta_N - eta_1) rho0 on interior states".into(),
    });

    let h1 = dyson_first_order_with(&solver, &gamma, &nu0, b, d)?;
    let h2 = dyson_higher_order(&solver, &gamma, &h1.h, &nu0)?;
    let mut orders = Table::new("orders", &["order", "projection", "residual_inf"]);
    orders.push(vec![1usize.into(), h1.projection_magnitude.into(), h1.residual_inf.into()]);
    orders.push(vec![2usize.into(), h2.projection_magnitude.into(), h2.residual_inf.into()]);
    report.tables.push(orders);

    // cross-route gap against the Poisson solve of w1 (informational: the
    // box ceiling leaves a boundary layer that shrinks with n_max)
    let poisson = solver.solve_poisson(&w1_vector(&space, b, d), &nu0)?;
    let mut weighted = 0.0f64;
    let mut interior = 0.0f64;
    for s in space.indices() {
        let diff = (h1.h[s] - poisson.phi[s]).abs();
        weighted = weighted.max(diff * nu0.probabilities()[s]);
        if space.config_at(s).occupations().iter().all(|&o| o <= 4) {
            interior = interior.max(diff);
        }
    }
    report.scalar(
        "h1_vs_poisson_weighted",
        weighted,
        "sup_x nu0(x) |h1 - Poisson(w1)|; truncation-limited",
    );
    report.scalar(
        "h1_vs_poisson_low_occupancy",
        interior,
        "sup over states with occupations <= 4",
    );

    // finite differences of exact stationary solves at eps and 2 eps
    let fd = |e: f64| -> Result<Vec<f64>> {
        let p = ModelParams::perturbed(b, d, e, n, m)?;
        let g = build_generator(&space, &p)?;
        let nu = stationary_distribution(&g)?;
        Ok(nu
            .distribution
            .probabilities()
            .iter()
            .zip(nu0.probabilities())
            .map(|(ne, n0)| (ne - n0) / (e * n0))
            .collect())
    };
    let fd1 = fd(eps)?;
    let fd2 = fd(2.0 * eps)?;
    let weighted_err = |fdv: &[f64], model: &dyn Fn(usize) -> f64| -> f64 {
        fdv.iter().enumerate().fold(0.0f64, |acc, (s, &v)| {
            acc.max(nu0.probabilities()[s] * (v - model(s)).abs())
        })
    };
    let e1 = weighted_err(&fd1, &|s| h1.h[s]);
    let e2 = weighted_err(&fd2, &|s| h1.h[s]);
    let f1 = weighted_err(&fd1, &|s| h1.h[s] + eps * h2.h[s]);
    let f2 = weighted_err(&fd2, &|s| h1.h[s] + 2.0 * eps * h2.h[s]);
    let mut fd_table = Table::new("finite_difference", &["eps", "error_h1", "error_h1_h2"]);
    fd_table.push(vec![eps.into(), e1.into(), f1.into()]);
    fd_table.push(vec![(2.0 * eps).into(), e2.into(), f2.into()]);
    report.tables.push(fd_table);

    let ratio1 = e2 / e1;
    report.checks.push(CheckResult {
        name: "first_order_convergence".into(),
        passed: (1.7..=2.4).contains(&ratio1),
        value: ratio1,
        threshold: 2.0,
        detail: "error ratio of (nu_eps - nu_0)/(eps nu_0) vs h1 between 2eps and eps".into(),
    });
    let ratio2 = f2 / f1;
    report.checks.push(CheckResult {
        name: "second_order_convergence".into(),
        passed: (3.3..=4.8).contains(&ratio2),
        value: ratio2,
        threshold: 4.0,
        detail: "error ratio once eps h2 is included".into(),
    });
    Ok(report)
}
