//! Closed-form stationary-state quantities: equilibrium marginals and
//! potential, density profiles, the local-equilibrium (LEQ) measure with its
//! weak-drive expansion, and the first-order correction coefficients.
//!
//! Everything here is a pure function of the parameters. Gamma-function
//! ratios are evaluated in log space (`ln_gamma`) so occupation numbers in
//! the hundreds stay finite; probabilities are exponentiated last.

use crate::error::{Result, SipError};
use crate::model::{Configuration, ModelParams};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

/// Relative threshold below which a formula denominator counts as degenerate.
const DEGENERATE_REL: f64 = 1e-13;

/// Normalization `Z_theta = (1 - theta)^(-m)` of the single-site marginal.
pub fn partition_function(theta: f64, m: f64) -> f64 {
    (1.0 - theta).powf(-m)
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(SipError::InvalidParameter(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    Ok(())
}

/// Log of the equilibrium marginal `gamma(n) = theta^n Gamma(m+n) / (Z n! Gamma(m))`.
pub fn log_marginal_pmf(theta: f64, m: f64, n: u32) -> Result<f64> {
    check_theta(theta)?;
    let nf = f64::from(n);
    Ok(nf * theta.ln() + ln_gamma(m + nf) - ln_gamma(m) - ln_gamma(nf + 1.0)
        + m * (1.0 - theta).ln())
}

/// Equilibrium single-site marginal `gamma(n)`.
pub fn marginal_pmf(theta: f64, m: f64, n: u32) -> Result<f64> {
    Ok(log_marginal_pmf(theta, m, n)?.exp())
}

/// Single-site potential `V(n) = -ln gamma(n)`.
///
/// Differences `V(n) - V(n-1) = ln(n / (m + n - 1)) - ln theta` reproduce the
/// detailed-balance rate ratios; the additive constant is fixed by the
/// normalized marginal.
pub fn single_site_potential(theta: f64, m: f64, n: u32) -> Result<f64> {
    Ok(-log_marginal_pmf(theta, m, n)?)
}

/// Total potential `U(x) = sum_i V(eta_i)` of a configuration under the
/// homogeneous equilibrium measure.
pub fn thermodynamic_potential(cfg: &Configuration, theta: f64, m: f64) -> Result<f64> {
    let mut u = 0.0;
    for &n in cfg.occupations() {
        u += single_site_potential(theta, m, n)?;
    }
    Ok(u)
}

/// Mean occupancy of the equilibrium marginal: `m theta / (1 - theta)`.
pub fn mean_occupancy(theta: f64, m: f64) -> Result<f64> {
    check_theta(theta)?;
    Ok(m * theta / (1.0 - theta))
}

/// Inverse of [`mean_occupancy`]: the fugacity reproducing density `rho`,
/// `theta = rho / (m + rho)`.
pub fn theta_from_density(rho: f64, m: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(SipError::InvalidParameter(format!(
            "density must be > 0, got {rho}"
        )));
    }
    Ok(rho / (m + rho))
}

/// Linear stationary density profile `rho_i = alpha + beta * i` (sites
/// `i = 1..=N`). The slope equals the stationary current `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    /// Intercept (particles per site).
    pub alpha: f64,
    /// Slope per site index; equals the mean bond current `J = <eta_{i+1} - eta_i>`.
    pub beta: f64,
}

impl DensityProfile {
    /// Density at site `i` (1-based).
    pub fn density(&self, site: usize) -> f64 {
        self.alpha + self.beta * site as f64
    }

    /// All site densities for a chain of `n_sites`.
    pub fn densities(&self, n_sites: usize) -> Vec<f64> {
        (1..=n_sites).map(|i| self.density(i)).collect()
    }
}

/// Exact stationary profile for arbitrary reservoir rates, obtained from the
/// first-moment stationarity equations with the linear ansatz.
pub fn density_profile_general(p: &ModelParams) -> Result<DensityProfile> {
    let n = p.n_sites() as f64;
    let m = p.m();
    let (b1, d1, bn, dn) = (p.b1(), p.d1(), p.b_n(), p.d_n());
    let den_terms = [
        (bn - dn) * (b1 - d1) * n,
        (dn + d1 - bn - b1) * m,
        (b1 - d1) * (dn - bn),
    ];
    let den: f64 = den_terms.iter().sum();
    let scale: f64 = den_terms.iter().map(|t| t.abs()).sum::<f64>().max(1.0);
    if den.abs() <= DEGENERATE_REL * scale {
        return Err(SipError::DegenerateDenominator {
            context: "density_profile_general",
            value: den,
        });
    }
    let alpha = (b1 * (dn - bn) * m * n + (bn + b1) * m * m + bn * (b1 - d1) * m) / den;
    let beta = (bn * d1 - b1 * dn) * m / den;
    Ok(DensityProfile { alpha, beta })
}

/// First-order (in `eps`) stationary profile for the weakly driven rates
/// `b1 = b(1 + eps)`, `bN = b(1 - eps)`, `d1 = dN = d`:
/// `alpha(eps) = bm/(d-b) + bdm(N+1) eps / D`, `beta(eps) = -2bdm eps / D`
/// with `D = (d-b)^2 N + 2(d-b)m - (d-b)^2`.
pub fn density_profile_weak(
    b: f64,
    d: f64,
    m: f64,
    n_sites: usize,
    eps: f64,
) -> Result<DensityProfile> {
    if !(b < d) {
        return Err(SipError::InvalidParameter(format!(
            "weak-drive expansion requires b < d, got b = {b}, d = {d}"
        )));
    }
    let n = n_sites as f64;
    let big_d = (d - b).powi(2) * n + 2.0 * (d - b) * m - (d - b).powi(2);
    let alpha = b * m / (d - b) + b * d * m * (n + 1.0) * eps / big_d;
    let beta = -2.0 * b * d * m * eps / big_d;
    Ok(DensityProfile { alpha, beta })
}

/// Stationary particle current `J = <eta_{i+1} - eta_i> = beta`.
///
/// Sign convention: with the bond observable `J_i = eta_{i+1} - eta_i`, a
/// left-to-right particle flow (driving `b1 > bN`) gives a decreasing profile
/// and hence `beta < 0`; the physical left-to-right flux is `-beta`.
pub fn stationary_current(p: &ModelParams) -> Result<f64> {
    Ok(density_profile_general(p)?.beta)
}

/// Log-weight of a configuration under the LEQ product measure with site
/// fugacities `theta_profile`.
pub fn leq_log_weight(theta_profile: &[f64], m: f64, cfg: &Configuration) -> Result<f64> {
    if theta_profile.len() != cfg.n_sites() {
        return Err(SipError::DimensionMismatch {
            expected: theta_profile.len(),
            found: cfg.n_sites(),
        });
    }
    let mut acc = 0.0;
    for (&theta, &n) in theta_profile.iter().zip(cfg.occupations()) {
        acc += log_marginal_pmf(theta, m, n)?;
    }
    Ok(acc)
}

/// Per-site coefficients of a first-order exponent correction
/// `nu = nu_eq * exp(eps * sum_i c_i eta_i) + O(eps^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearCorrection {
    coefficients: Vec<f64>,
}

impl LinearCorrection {
    /// Builds from explicit per-site coefficients.
    pub fn new(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    /// Per-site coefficients `c_1..c_N` (index 0 is site 1).
    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// The exponent observable `sum_i c_i eta_i` evaluated on a configuration.
    pub fn dot_occupations(&self, cfg: &Configuration) -> f64 {
        self.coefficients
            .iter()
            .zip(cfg.occupations())
            .map(|(&c, &n)| c * f64::from(n))
            .sum()
    }
}

/// First-order expansion pieces of the LEQ measure: per-site density and
/// fugacity split as `rho_i = rho0 + eps rho1_i`, `theta_i = theta0 + eps theta1_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeqExpansion {
    /// Zeroth-order density `b m / (d - b)` (site independent).
    pub rho0: f64,
    /// First-order density coefficients per site.
    pub rho1: Vec<f64>,
    /// Zeroth-order fugacity `b / d`.
    pub theta0: f64,
    /// First-order fugacity coefficients `m rho1_i / (m + rho0)^2`.
    pub theta1: Vec<f64>,
}

fn weak_drive_denominator(b: f64, d: f64, m: f64, n: f64) -> f64 {
    (d - b).powi(2) * n + 2.0 * (d - b) * m - (d - b).powi(2)
}

/// Expansion of the stationary density and fugacity profiles in `eps`.
pub fn leq_expansion(b: f64, d: f64, m: f64, n_sites: usize) -> Result<LeqExpansion> {
    if !(b < d) {
        return Err(SipError::InvalidParameter(format!(
            "LEQ expansion requires b < d, got b = {b}, d = {d}"
        )));
    }
    let n = n_sites as f64;
    let big_d = weak_drive_denominator(b, d, m, n);
    let rho0 = b * m / (d - b);
    let theta0 = b / d;
    let rho1: Vec<f64> = (1..=n_sites)
        .map(|i| b * d * m * (n + 1.0 - 2.0 * i as f64) / big_d)
        .collect();
    let theta1 = rho1
        .iter()
        .map(|&r1| m * r1 / (m + rho0).powi(2))
        .collect();
    Ok(LeqExpansion {
        rho0,
        rho1,
        theta0,
        theta1,
    })
}

/// Exponent coefficients of the LEQ measure at first order in `eps`:
/// `c_i = (N + 1 - 2i) / (N - 1 + 2m/(d-b))`.
pub fn leq_first_order_coefficients(
    b: f64,
    d: f64,
    m: f64,
    n_sites: usize,
) -> Result<LinearCorrection> {
    let exp = leq_expansion(b, d, m, n_sites)?;
    let coefficients = exp.theta1.iter().map(|&t1| t1 / exp.theta0).collect();
    Ok(LinearCorrection { coefficients })
}

/// Slope/intercept of the first-order correction from the transient entropy
/// production: `A = (N+1)/(N - 1 - 2m/(b-d))`, `B = -2/(N - 1 - 2m/(b-d))`.
pub fn mclennan_ab(b: f64, d: f64, m: f64, n_sites: usize) -> Result<(f64, f64)> {
    if b == d {
        return Err(SipError::InvalidParameter(
            "McLennan coefficients require b != d".into(),
        ));
    }
    let n = n_sites as f64;
    let den = n - 1.0 - 2.0 * m / (b - d);
    if den.abs() <= DEGENERATE_REL * (n + 2.0 * (m / (b - d)).abs()).max(1.0) {
        return Err(SipError::DegenerateDenominator {
            context: "mclennan_ab",
            value: den,
        });
    }
    Ok(((n + 1.0) / den, -2.0 / den))
}

/// Per-site first-order correction coefficients `c_i = A + B i` from the
/// McLennan formula.
///
/// Sign bookkeeping: the stationary measure is
/// `rho_eps = rho_0 exp(-eps * integral of <w_1>) + O(eps^2)` and the
/// transient integral equals `-sum_i c_i eta_i`, so the correction exponent
/// is `+eps * sum_i c_i eta_i`, matching the LEQ exponent.
pub fn mclennan_coefficients(b: f64, d: f64, m: f64, n_sites: usize) -> Result<LinearCorrection> {
    let (a, slope) = mclennan_ab(b, d, m, n_sites)?;
    let coefficients = (1..=n_sites).map(|i| a + slope * i as f64).collect();
    Ok(LinearCorrection { coefficients })
}
