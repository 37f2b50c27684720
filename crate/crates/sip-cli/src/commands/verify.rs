//! `sip verify`: the consolidated invariant battery. Exit code 0 only when
//! every check passes; the report is machine-readable in both formats.

use crate::commands::{profile_row, profile_table};
use crate::config::RunConfig;
use crate::report::{CheckResult, Report};
use anyhow::{bail, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sip::analytic::{
    density_profile_general, leq_first_order_coefficients, mclennan_coefficients,
};
use sip::exactsolve::{
    build_generator, build_perturbation, build_space, dyson_first_order_with,
    equilibrium_product_distribution, expectation, gamma_identity_rel_error, w1_vector,
    MasterSolver,
};
use sip::kmc::{run_simulation, RngStream};
use sip::model::{entropy_production_w1, generator_apply, Configuration, ModelParams};

pub fn run(cfg: &RunConfig, corrupt_coefficients: bool) -> Result<Report> {
    let Some((b, d, eps_in)) = cfg.weak_rates() else {
        bail!("the verification battery needs the weak-drive form; pass --b/--d/--eps");
    };
    if !(b < d) {
        bail!("the battery is built around a finite-density equilibrium; needs b < d");
    }
    let m = cfg.params.m();
    let n = cfg.params.n_sites();
    let eps = if eps_in != 0.0 { eps_in } else { 0.05 };
    let mut report = Report::new("verify", cfg);

    // 1. detailed balance of the truncated equilibrium chain
    {
        let space = build_space(3, 6)?;
        let p = ModelParams::equilibrium(3, m, b, d)?;
        let g = build_generator(&space, &p)?;
        let nu = MasterSolver::new(&g)?.stationary()?.distribution;
        let probs = nu.probabilities();
        let mut worst = 0.0f64;
        for x in space.indices() {
            let (cols, vals) = g.matrix().row(x);
            for (&c, &rate_xy) in cols.iter().zip(vals) {
                let y = c as usize;
                if y == x {
                    continue;
                }
                let (ycols, yvals) = g.matrix().row(y);
                let rate_yx = ycols
                    .iter()
                    .zip(yvals)
                    .find(|&(&cc, _)| cc as usize == x)
                    .map(|(_, &v)| v)
                    .expect("reverse edge");
                let (lhs, rhs) = (probs[x] * rate_xy, probs[y] * rate_yx);
                worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
            }
        }
        report.checks.push(CheckResult {
            name: "detailed_balance".into(),
            passed: worst < 1e-10,
            value: worst,
            threshold: 1e-10,
            detail: "relative flux gap over all retained edges, N=3, n_max=6".into(),
        });
    }

    // 2. pointwise generator identity, with the negative-control hook
    {
        let mut coefficients = mclennan_coefficients(b, d, m, n)?;
        if corrupt_coefficients {
            let mut raw = coefficients.coefficients().to_vec();
            raw[0] += 1e-3;
            coefficients = sip::analytic::LinearCorrection::new(raw);
        }
        let p = ModelParams::equilibrium(n, m, b, d)?;
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let occ: Vec<u32> = (0..n).map(|_| rng.random_range(0..=20u32)).collect();
            let x = Configuration::new(occ);
            let lhs = generator_apply(|y| coefficients.dot_occupations(y), &x, &p)?;
            let w1 = entropy_production_w1(&x, b, d);
            let scale =
                w1.abs() + (b + d) * (1.0 + f64::from(x.left()) + f64::from(x.right()));
            worst = worst.max((lhs - w1).abs() / scale);
        }
        report.checks.push(CheckResult {
            name: "generator_identity".into(),
            passed: worst < 1e-12,
            value: worst,
            threshold: 1e-12,
            detail: "L(sum c_i eta_i) = w1 on 200 random configurations".into(),
        });
    }

    // 3. McLennan == LEQ across the parameter grid
    {
        let mut worst = 0.0f64;
        for n_grid in 2..=10usize {
            for m_grid in [0.5, 1.0, 2.0] {
                for (bg, dg) in [(1.0, 2.0), (1.0, 3.0), (2.0, 5.0)] {
                    let mcl = mclennan_coefficients(bg, dg, m_grid, n_grid)?;
                    let leq = leq_first_order_coefficients(bg, dg, m_grid, n_grid)?;
                    for (x, y) in mcl.coefficients().iter().zip(leq.coefficients()) {
                        worst = worst.max((x - y).abs());
                    }
                }
            }
        }
        report.checks.push(CheckResult {
            name: "mclennan_equals_leq".into(),
            passed: worst < 1e-12,
            value: worst,
            threshold: 1e-12,
            detail: "coefficient gap over N=2..10, m in {0.5,1,2}, three rate pairs".into(),
        });
    }

    // 4. Dyson leg: Gamma* identity and the weighted route agreement
    {
        let n_max = 24u32.min(cfg.resolve_n_max(50_000)?);
        let space = build_space(n, n_max)?;
        let p0 = ModelParams::equilibrium(n, m, b, d)?;
        let g0 = build_generator(&space, &p0)?;
        let solver = MasterSolver::new(&g0)?;
        let nu0 = equilibrium_product_distribution(&space, b / d, m)?;
        let gamma = build_perturbation(&space, b, m);
        let identity = gamma_identity_rel_error(&gamma, &nu0, b, d);
        report.checks.push(CheckResult {
            name: "gamma_star_identity".into(),
            passed: identity < 1e-10,
            value: identity,
            threshold: 1e-10,
            detail: format!("interior states of the n_max={n_max} box"),
        });
        let h1 = dyson_first_order_with(&solver, &gamma, &nu0, b, d)?;
        let poisson = solver.solve_poisson(&w1_vector(&space, b, d), &nu0)?;
        let mut weighted = 0.0f64;
        for s in space.indices() {
            weighted = weighted
                .max((h1.h[s] - poisson.phi[s]).abs() * nu0.probabilities()[s]);
        }
        report.checks.push(CheckResult {
            name: "dyson_equals_mclennan_route".into(),
            passed: weighted < 1e-7,
            value: weighted,
            threshold: 1e-7,
            detail: "weighted gap between the measure-space order 1 and Poisson(w1)".into(),
        });
    }

    // 5. cross-validation triangle: analytic vs exact vs KMC at the drive
    {
        let p = ModelParams::perturbed(b, d, eps, n, m)?;
        let n_max = cfg.resolve_n_max(80_000)?;
        let space = build_space(n, n_max)?;
        let g = build_generator(&space, &p)?;
        let solution = MasterSolver::new(&g)?.stationary()?;
        let exact_means = solution.distribution.site_means(&space);
        let weighted_dropped = g.weighted_dropped_rate(&solution.distribution);
        let profile = density_profile_general(&p)?;
        let mut worst = 0.0f64;
        for (site, mean) in exact_means.iter().enumerate() {
            worst = worst.max((mean - profile.density(site + 1)).abs());
        }
        let threshold = 1e-6f64.max(100.0 * weighted_dropped);
        report.checks.push(CheckResult {
            name: "exact_matches_analytic_profile".into(),
            passed: worst < threshold,
            value: worst,
            threshold,
            detail: format!("site means on the n_max={n_max} box vs closed form"),
        });

        let est = run_simulation(
            &p,
            cfg.time,
            cfg.burn_in(),
            cfg.replicas,
            RngStream::new(cfg.seed, 0),
        )?;
        let mut worst_z = 0.0f64;
        for (mean, (kmc, se)) in exact_means
            .iter()
            .zip(est.site_density.iter().zip(&est.site_density_stderr))
        {
            worst_z = worst_z.max(((kmc - mean) / se).abs());
        }
        report.checks.push(CheckResult {
            name: "kmc_matches_exact_densities".into(),
            passed: worst_z < 3.0,
            value: worst_z,
            threshold: 3.0,
            detail: "worst |z| of simulated site densities vs exact means".into(),
        });
        let mut worst_jz = 0.0f64;
        for (j, se) in est.bond_current.iter().zip(&est.bond_current_stderr) {
            worst_jz = worst_jz.max(((j - (-profile.beta)) / se).abs());
        }
        report.checks.push(CheckResult {
            name: "kmc_matches_analytic_current".into(),
            passed: worst_jz < 3.0,
            value: worst_jz,
            threshold: 3.0,
            detail: "worst |z| of bond currents vs the closed-form flux -beta".into(),
        });

        let coefficients = mclennan_coefficients(b, d, m, n)?;
        let mut table = profile_table();
        for site in 1..=n {
            table.push(profile_row(
                site,
                Some(profile.density(site)),
                Some(exact_means[site - 1]),
                Some((est.site_density[site - 1], est.site_density_stderr[site - 1])),
                Some(coefficients.coefficients()[site - 1]),
            ));
        }
        report.tables.push(table);
    }

    // 6. undriven control: zero current and zero entropy production
    {
        let p0 = ModelParams::equilibrium(n, m, b, d)?;
        let space = build_space(n, 20.min(cfg.resolve_n_max(50_000)?))?;
        let g0 = build_generator(&space, &p0)?;
        let nu = MasterSolver::new(&g0)?.stationary()?.distribution;
        let w1_exact = expectation(&space, |x| entropy_production_w1(x, b, d), &nu);
        report.checks.push(CheckResult {
            name: "equilibrium_entropy_production_exact".into(),
            passed: w1_exact.abs() < 1e-10,
            value: w1_exact.abs(),
            threshold: 1e-10,
            detail: "<w1> under the exact equilibrium distribution".into(),
        });
        let est = run_simulation(
            &p0,
            cfg.time,
            cfg.burn_in(),
            cfg.replicas,
            RngStream::new(cfg.seed, 1000),
        )?;
        let mut worst_z: f64 = (est.w1_mean / est.w1_stderr).abs();
        for (j, se) in est.bond_current.iter().zip(&est.bond_current_stderr) {
            worst_z = worst_z.max((j / se).abs());
        }
        report.checks.push(CheckResult {
            name: "equilibrium_kmc_zero_flux".into(),
            passed: worst_z < 3.0,
            value: worst_z,
            threshold: 3.0,
            detail: "worst |z| of simulated currents and <w1> against zero".into(),
        });
    }

    Ok(report)
}
