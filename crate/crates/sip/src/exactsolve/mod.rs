//! Finite-truncation master-equation machinery: exact stationary
//! distributions, Poisson-equation solves, and the Dyson expansion of the
//! weakly driven steady state. This is the numerical oracle the analytic
//! formulas and the Monte Carlo estimates are checked against.

mod dyson;
mod generator;
pub(crate) mod linalg;
mod solver;
mod space;

pub use dyson::{
    dyson_first_order, dyson_first_order_with, dyson_higher_order, gamma_identity_rel_error,
    w1_vector, DysonSolution,
};
pub use generator::{
    build_generator, build_perturbation, equilibrium_product_distribution, expectation,
    expectation_vector, Distribution, GeneratorMatrix, PerturbationMatrix,
};
pub use linalg::Csr;
pub use solver::{
    nested_dissection_order, solve_poisson, stationary_distribution, MasterSolver,
    PoissonSolution, StationarySolution, SOLVABILITY_TOL, STATIONARY_RESIDUAL_TOL,
};
pub use space::{build_space, TruncatedSpace};

/// Smallest per-site cap whose equilibrium tail mass stays below `1e-12`,
/// doubled when the run is driven so the perturbed profile keeps headroom.
///
/// This is the default cap used by front ends when none is given; explicit
/// caps always win.
pub fn suggested_n_max(theta0: f64, m: f64, perturbed: bool) -> crate::error::Result<u32> {
    crate::analytic::marginal_pmf(theta0, m, 0)?; // validates theta0
    // walk the pmf recursion gamma(n+1) = gamma(n) * theta (m + n)/(n + 1)
    let mut gamma = crate::analytic::marginal_pmf(theta0, m, 0)?;
    let mut cumulative = gamma;
    let mut n = 0u32;
    while 1.0 - cumulative >= 1e-12 {
        gamma *= theta0 * (m + f64::from(n)) / (f64::from(n) + 1.0);
        cumulative += gamma;
        n += 1;
        if n > 1_000_000 {
            return Err(crate::error::SipError::InvalidParameter(format!(
                "tail mass does not reach 1e-12 below n = {n} (theta0 = {theta0})"
            )));
        }
    }
    Ok(if perturbed { 2 * n } else { n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suggested_cap_bounds_tail_mass() {
        let n = suggested_n_max(0.5, 1.0, false).unwrap();
        // geometric(1/2): tail below 1e-12 needs ~40 states
        assert!((38..=42).contains(&n), "n_max = {n}");
        let tail: f64 = 1.0
            - (0..=n)
                .map(|k| crate::analytic::marginal_pmf(0.5, 1.0, k).unwrap())
                .sum::<f64>();
        assert!(tail < 1e-12);
        assert_eq!(suggested_n_max(0.5, 1.0, true).unwrap(), 2 * n);
    }
}
