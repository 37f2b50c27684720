//! Rate-matrix assembly on the truncated box, probability vectors, and the
//! boundary perturbation operator of the weak-drive expansion.

use crate::analytic::log_marginal_pmf;
use crate::error::{Result, SipError};
use crate::exactsolve::linalg::Csr;
use crate::exactsolve::space::TruncatedSpace;
use crate::model::{enumerate_transitions, ModelParams};

/// Forward generator on the truncated box, stored row-wise: entry `(x, y)`
/// is the rate `x -> y`, the diagonal is minus the retained escape rate, so
/// every row sums to zero exactly.
///
/// Transitions leaving the box are dropped entirely (off-diagonal and its
/// diagonal compensation), which keeps the matrix a proper generator of an
/// irreducible chain on the box. The total dropped rate per state is kept as
/// a truncation diagnostic.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    space: TruncatedSpace,
    params: ModelParams,
    matrix: Csr,
    dropped: Vec<(usize, f64)>,
}

impl GeneratorMatrix {
    /// The truncated space this generator acts on.
    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    /// The model parameters the rates were built from.
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// The assembled rate matrix.
    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    /// True when at least one boundary-exceeding transition was dropped.
    pub fn truncation_dropped(&self) -> bool {
        !self.dropped.is_empty()
    }

    /// Sum of all dropped rates (unweighted).
    pub fn total_dropped_rate(&self) -> f64 {
        self.dropped.iter().map(|&(_, r)| r).sum()
    }

    /// Dropped escape rate weighted by a probability vector; the natural
    /// truncation-error scale for expectations under that distribution.
    pub fn weighted_dropped_rate(&self, nu: &Distribution) -> f64 {
        self.dropped
            .iter()
            .map(|&(s, r)| nu.probabilities()[s] * r)
            .sum()
    }

    /// Applies the generator to an observable vector: `(L f)(x)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        self.matrix.matvec(f, &mut out);
        out
    }

    /// Applies the adjoint (master-equation operator) to a measure vector:
    /// `(L* mu)(y) = sum_x mu(x) rate(x -> y) - mu(y) * escape(y)`.
    pub fn apply_adjoint(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        self.matrix.matvec_transpose(mu, &mut out);
        out
    }
}

/// Assembles the truncated generator from the model's transition enumeration.
pub fn build_generator(space: &TruncatedSpace, params: &ModelParams) -> Result<GeneratorMatrix> {
    if space.n_sites() != params.n_sites() {
        return Err(SipError::DimensionMismatch {
            expected: params.n_sites(),
            found: space.n_sites(),
        });
    }
    let n = space.len();
    let cap = space.n_max();
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    let mut dropped = Vec::new();
    for s in space.indices() {
        let cfg = space.config_at(s);
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(2 * space.n_sites() + 3);
        let mut retained = 0.0;
        let mut lost = 0.0;
        for t in enumerate_transitions(&cfg, params)? {
            if t.target.occupations().iter().any(|&o| o > cap) {
                lost += t.rate;
                continue;
            }
            let target = space.index_of(&t.target)?;
            row.push((target as u32, t.rate));
            retained += t.rate;
        }
        row.push((s as u32, -retained));
        rows.push(row);
        if lost > 0.0 {
            dropped.push((s, lost));
        }
    }
    Ok(GeneratorMatrix {
        space: *space,
        params: *params,
        matrix: Csr::from_rows(n, rows),
        dropped,
    })
}

/// Probability vector over a truncated space.
#[derive(Debug, Clone)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Normalizes a nonnegative weight vector into a probability vector.
    ///
    /// Entries more negative than `-1e-12` of the maximum are rejected;
    /// smaller negative noise (solver round-off) is clamped to zero.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        let max = weights.iter().fold(0.0f64, |m, &w| m.max(w));
        if !(max > 0.0) || !max.is_finite() {
            return Err(SipError::InvalidParameter(
                "distribution weights must contain a positive entry".into(),
            ));
        }
        for w in weights.iter_mut() {
            if *w < 0.0 {
                if *w < -1e-12 * max {
                    return Err(SipError::InvalidParameter(format!(
                        "distribution weight {w:e} is significantly negative"
                    )));
                }
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(Self { probs: weights })
    }

    /// Probabilities indexed by state.
    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    /// True when the vector is empty (never for a valid space).
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Mean occupancy of each site under this distribution.
    pub fn site_means(&self, space: &TruncatedSpace) -> Vec<f64> {
        let mut means = vec![0.0; space.n_sites()];
        let mut digits = vec![0u32; space.n_sites()];
        for s in space.indices() {
            space.decode_into(s, &mut digits);
            let p = self.probs[s];
            for (mean, &d) in means.iter_mut().zip(&digits) {
                *mean += p * f64::from(d);
            }
        }
        means
    }
}

/// Expectation `sum_x f(x) nu(x)` of an observable given as a closure.
pub fn expectation<F>(space: &TruncatedSpace, f: F, nu: &Distribution) -> f64
where
    F: Fn(&crate::model::Configuration) -> f64,
{
    space
        .indices()
        .map(|s| f(&space.config_at(s)) * nu.probabilities()[s])
        .sum()
}

/// Expectation of an observable given as a state-indexed vector.
pub fn expectation_vector(values: &[f64], nu: &Distribution) -> f64 {
    crate::exactsolve::linalg::dot(values, nu.probabilities())
}

/// The reversible product measure restricted to the box and renormalized.
///
/// By detailed balance this is exactly the stationary distribution of the
/// truncated chain at equilibrium parameters.
pub fn equilibrium_product_distribution(
    space: &TruncatedSpace,
    theta: f64,
    m: f64,
) -> Result<Distribution> {
    let width = space.n_max() as usize + 1;
    let mut site_log: Vec<f64> = Vec::with_capacity(width);
    for n in 0..width {
        site_log.push(log_marginal_pmf(theta, m, n as u32)?);
    }
    let mut weights = vec![0.0f64; space.len()];
    let mut digits = vec![0u32; space.n_sites()];
    for s in space.indices() {
        space.decode_into(s, &mut digits);
        let lw: f64 = digits.iter().map(|&d| site_log[d as usize]).sum();
        weights[s] = lw.exp();
    }
    Distribution::from_weights(weights)
}

/// The boundary perturbation operator of the weak drive,
/// `Gamma f = b (m + eta_1)(f(x^{1+}) - f(x)) - b (m + eta_N)(f(x^{N+}) - f(x))`,
/// assembled on the box with the same transition-dropping convention as the
/// generator, so that `L_eps = L_0 + eps * Gamma` holds exactly entry-wise.
#[derive(Debug, Clone)]
pub struct PerturbationMatrix {
    space: TruncatedSpace,
    matrix: Csr,
}

impl PerturbationMatrix {
    /// The underlying matrix (row-wise, function-space convention).
    pub fn matrix(&self) -> &Csr {
        &self.matrix
    }

    /// The space this operator acts on.
    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    /// Applies `Gamma` to an observable vector.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        self.matrix.matvec(f, &mut out);
        out
    }

    /// Applies the adjoint `Gamma*` to a measure vector.
    pub fn apply_adjoint(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        self.matrix.matvec_transpose(mu, &mut out);
        out
    }
}

/// Builds the perturbation operator for base birth rate `b` and diffusion `m`.
pub fn build_perturbation(space: &TruncatedSpace, b: f64, m: f64) -> PerturbationMatrix {
    let n = space.len();
    let cap = space.n_max() as usize;
    let width = cap + 1;
    let left_stride = 1usize;
    let right_stride = width.pow(space.n_sites() as u32 - 1);
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(n);
    let mut digits = vec![0u32; space.n_sites()];
    for s in space.indices() {
        space.decode_into(s, &mut digits);
        let eta1 = digits[0] as usize;
        let eta_n = digits[space.n_sites() - 1] as usize;
        let mut row: Vec<(u32, f64)> = Vec::with_capacity(4);
        if eta1 < cap {
            let rate = b * (m + eta1 as f64);
            row.push(((s + left_stride) as u32, rate));
            row.push((s as u32, -rate));
        }
        if eta_n < cap {
            let rate = b * (m + eta_n as f64);
            row.push(((s + right_stride) as u32, -rate));
            row.push((s as u32, rate));
        }
        rows.push(row);
    }
    PerturbationMatrix {
        space: *space,
        matrix: Csr::from_rows(n, rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactsolve::space::build_space;
    use crate::model::Configuration;

    #[test]
    fn generator_rows_sum_to_zero_exactly() {
        let space = build_space(3, 4).unwrap();
        let p = ModelParams::perturbed(1.0, 2.0, 0.2, 3, 1.5).unwrap();
        let g = build_generator(&space, &p).unwrap();
        for (i, s) in g.matrix().row_sums().iter().enumerate() {
            assert_eq!(*s, 0.0, "row {i} sums to {s}");
        }
        assert!(g.truncation_dropped());
    }

    #[test]
    fn small_space_rates() {
        let space = build_space(2, 1).unwrap();
        let p = ModelParams::equilibrium(2, 1.0, 1.0, 1.0).unwrap();
        let g = build_generator(&space, &p).unwrap();
        let origin = space
            .index_of(&Configuration::new(vec![0, 0]))
            .unwrap();
        let (cols, vals) = g.matrix().row(origin);
        // states (1,0) and (0,1), each at rate b*(m+0) = 1
        let mut off: Vec<(u32, f64)> = cols
            .iter()
            .zip(vals)
            .filter(|&(&c, _)| c as usize != origin)
            .map(|(&c, &v)| (c, v))
            .collect();
        off.sort_unstable_by_key(|&(c, _)| c);
        assert_eq!(off.len(), 2);
        assert_eq!(off[0].1, 1.0);
        assert_eq!(off[1].1, 1.0);
    }

    #[test]
    fn equilibrium_weighted_dropped_rate_is_tiny() {
        let space = build_space(3, 40).unwrap();
        let p = ModelParams::equilibrium(3, 1.0, 1.0, 2.0).unwrap();
        let g = build_generator(&space, &p).unwrap();
        let nu = equilibrium_product_distribution(&space, 0.5, 1.0).unwrap();
        let w = g.weighted_dropped_rate(&nu);
        assert!(w > 0.0);
        // boundary births contribute 2 b (m + 40) gamma(40) ~ 3.7e-11; the
        // bulk edges into full sites roughly triple that
        assert!(w < 2e-10, "weighted dropped rate {w:e}");
        let boundary_only = 2.0 * 1.0 * 41.0 * crate::analytic::marginal_pmf(0.5, 1.0, 40).unwrap();
        assert!(boundary_only < 1e-10);
        assert!(w > boundary_only);
    }

    #[test]
    fn distribution_normalizes_and_rejects_negatives() {
        let d = Distribution::from_weights(vec![1.0, 3.0]).unwrap();
        assert_eq!(d.probabilities(), &[0.25, 0.75]);
        assert!(Distribution::from_weights(vec![1.0, -0.1]).is_err());
        // round-off level negatives are clamped
        let d = Distribution::from_weights(vec![1.0, -1e-15]).unwrap();
        assert_eq!(d.probabilities()[1], 0.0);
    }

    #[test]
    fn expectation_of_one_is_one() {
        let space = build_space(2, 5).unwrap();
        let nu = equilibrium_product_distribution(&space, 0.4, 2.0).unwrap();
        let e = expectation(&space, |_| 1.0, &nu);
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perturbation_rows_sum_to_zero() {
        let space = build_space(3, 5).unwrap();
        let gamma = build_perturbation(&space, 1.0, 1.0);
        for s in gamma.matrix().row_sums() {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn generator_splits_into_equilibrium_plus_perturbation() {
        // L_eps = L_0 + eps * Gamma, entry for entry
        let space = build_space(3, 4).unwrap();
        let (b, d, m, eps) = (1.0, 2.0, 1.5, 0.1);
        let p0 = ModelParams::equilibrium(3, m, b, d).unwrap();
        let peps = ModelParams::perturbed(b, d, eps, 3, m).unwrap();
        let g0 = build_generator(&space, &p0).unwrap();
        let geps = build_generator(&space, &peps).unwrap();
        let gamma = build_perturbation(&space, b, m);
        for f_idx in 0..space.len().min(64) {
            let mut f = vec![0.0; space.len()];
            f[f_idx] = 1.0;
            let lhs = geps.apply(&f);
            let l0f = g0.apply(&f);
            let gf = gamma.apply(&f);
            for s in space.indices() {
                let rhs = l0f[s] + eps * gf[s];
                assert!(
                    (lhs[s] - rhs).abs() < 1e-12 * lhs[s].abs().max(1.0),
                    "state {s}: {} vs {rhs}",
                    lhs[s]
                );
            }
        }
    }
}
