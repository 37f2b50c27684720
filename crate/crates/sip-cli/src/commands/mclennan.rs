//! `sip mclennan`: first-order correction coefficients and their
//! verification (pointwise generator identity, equality with the LEQ
//! exponent, and the d = b + m simplification when it applies).

use crate::config::RunConfig;
use crate::report::{CheckResult, Report, Table};
use anyhow::{bail, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sip::analytic::{leq_first_order_coefficients, mclennan_ab, mclennan_coefficients, LinearCorrection};
use sip::model::{entropy_production_w1, generator_apply, Configuration, ModelParams};

pub fn run(cfg: &RunConfig) -> Result<Report> {
    run_with_coefficients(cfg, None)
}

/// As [`run`], optionally replacing the coefficients before verification;
/// the hook exists so tests can confirm the identity check rejects wrong
/// coefficients.
pub fn run_with_coefficients(
    cfg: &RunConfig,
    override_coefficients: Option<LinearCorrection>,
) -> Result<Report> {
    let Some((b, d, _)) = cfg.weak_rates() else {
        bail!("McLennan coefficients are defined for the weak-drive form; pass --b/--d");
    };
    let (n, m) = (cfg.params.n_sites(), cfg.params.m());
    let mut report = Report::new("mclennan", cfg);
    let (a, slope) = mclennan_ab(b, d, m, n)?;
    report.scalar("A", a, "intercept of c_i = A + B i");
    report.scalar("B", slope, "slope of c_i = A + B i");
    report.scalar(
        "exponent_sign",
        1.0,
        "stationary correction is nu0 * exp(+eps sum_i c_i eta_i)",
    );

    let exact = mclennan_coefficients(b, d, m, n)?;
    let c = override_coefficients.unwrap_or_else(|| exact.clone());
    let leq = leq_first_order_coefficients(b, d, m, n)?;

    let special = (d - b - m).abs() < 1e-12 * d.abs().max(m);
    let mut table = Table::new(
        "coefficients",
        &["site", "mclennan", "leq", "special_case"],
    );
    for site in 1..=n {
        let simplified = if special {
            (1.0 - 2.0 * site as f64 / (n as f64 + 1.0)).into()
        } else {
            crate::report::Cell::empty()
        };
        table.push(vec![
            site.into(),
            c.coefficients()[site - 1].into(),
            leq.coefficients()[site - 1].into(),
            simplified,
        ]);
    }
    report.tables.push(table);

    // pointwise generator identity on random configurations
    let p = ModelParams::equilibrium(n, m, b, d)?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let occ: Vec<u32> = (0..n).map(|_| rng.random_range(0..=20u32)).collect();
        let x = Configuration::new(occ);
        let lhs = generator_apply(|y| c.dot_occupations(y), &x, &p)?;
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
        detail: "max relative |L(sum c_i eta_i) - w1| over 200 random states".into(),
    });

    let mut gap = 0.0f64;
    for (x, y) in c.coefficients().iter().zip(leq.coefficients()) {
        gap = gap.max((x - y).abs());
    }
    report.checks.push(CheckResult {
        name: "mclennan_equals_leq".into(),
        passed: gap < 1e-12,
        value: gap,
        threshold: 1e-12,
        detail: "component-wise gap between the two coefficient routes".into(),
    });

    if special {
        let mut sgap = 0.0f64;
        for (site, x) in c.coefficients().iter().enumerate() {
            let simplified = 1.0 - 2.0 * (site + 1) as f64 / (n as f64 + 1.0);
            sgap = sgap.max((x - simplified).abs());
        }
        report.checks.push(CheckResult {
            name: "special_case_d_eq_b_plus_m".into(),
            passed: sgap < 1e-12,
            value: sgap,
            threshold: 1e-12,
            detail: "coefficients reduce to 1 - 2i/(N+1)".into(),
        });
    }
    Ok(report)
}
