//! State space, parameters, and transition structure of the boundary-driven
//! symmetric inclusion process.
//!
//! The process lives on a chain of `N` sites. A particle at site `i` hops to a
//! nearest neighbour `j` at rate `eta_i * (m + eta_j)`; the `m + eta_j` factor
//! makes occupied sites attractive. Two reservoirs act on the end sites:
//! births at rate `b * (m + eta)` and deaths at rate `d * eta`, with
//! independent rate pairs on the left and right.

use crate::error::{Result, SipError};
use serde::{Deserialize, Serialize};

/// Occupation-number configuration: `occupations[k]` is the particle count at
/// site `k + 1` (sites are numbered `1..=N` in formulas).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    occupations: Vec<u32>,
}

impl Configuration {
    /// Builds a configuration from per-site particle counts.
    pub fn new(occupations: Vec<u32>) -> Self {
        Self { occupations }
    }

    /// All-empty configuration on `n_sites` sites.
    pub fn empty(n_sites: usize) -> Self {
        Self {
            occupations: vec![0; n_sites],
        }
    }

    /// Number of sites.
    pub fn n_sites(&self) -> usize {
        self.occupations.len()
    }

    /// Particle counts, indexed `0..N` (site `i` of the formulas is index `i - 1`).
    pub fn occupations(&self) -> &[u32] {
        &self.occupations
    }

    /// Occupancy of the leftmost site.
    pub fn left(&self) -> u32 {
        self.occupations[0]
    }

    /// Occupancy of the rightmost site.
    pub fn right(&self) -> u32 {
        *self.occupations.last().expect("non-empty configuration")
    }

    /// Copy with one particle moved `from -> to` (0-based adjacent sites).
    pub(crate) fn with_move(&self, from: usize, to: usize) -> Self {
        let mut occ = self.occupations.clone();
        debug_assert!(occ[from] > 0);
        occ[from] -= 1;
        occ[to] = occ[to].checked_add(1).expect("occupation overflow");
        Self { occupations: occ }
    }

    /// Copy with one particle added at `site` (0-based).
    pub(crate) fn with_birth(&self, site: usize) -> Self {
        let mut occ = self.occupations.clone();
        occ[site] = occ[site].checked_add(1).expect("occupation overflow");
        Self { occupations: occ }
    }

    /// Copy with one particle removed at `site` (0-based).
    pub(crate) fn with_death(&self, site: usize) -> Self {
        let mut occ = self.occupations.clone();
        debug_assert!(occ[site] > 0);
        occ[site] -= 1;
        Self { occupations: occ }
    }
}

impl From<&[u32]> for Configuration {
    fn from(occ: &[u32]) -> Self {
        Self::new(occ.to_vec())
    }
}

/// Model parameters: chain length, diffusion strength, and the four reservoir
/// rates.
///
/// `m` controls the strength of the inclusion interaction (large `m`
/// approaches independent walkers). The reservoir at site 1 injects at rate
/// `b1 * (m + eta_1)` and removes at rate `d1 * eta_1`; the reservoir at site
/// `N` uses `bN`, `dN`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n_sites: usize,
    m: f64,
    b1: f64,
    d1: f64,
    b_n: f64,
    d_n: f64,
}

impl ModelParams {
    /// Validates and builds a parameter set with explicit reservoir rates.
    pub fn new(n_sites: usize, m: f64, b1: f64, d1: f64, b_n: f64, d_n: f64) -> Result<Self> {
        if n_sites < 2 {
            return Err(SipError::InvalidParameter(format!(
                "N must be >= 2, got {n_sites}"
            )));
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(SipError::InvalidParameter(format!("m must be > 0, got {m}")));
        }
        for (name, v) in [("b1", b1), ("d1", d1), ("bN", b_n), ("dN", d_n)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SipError::InvalidParameter(format!(
                    "rate {name} must be > 0, got {v}"
                )));
            }
        }
        Ok(Self {
            n_sites,
            m,
            b1,
            d1,
            b_n,
            d_n,
        })
    }

    /// Equal reservoirs with birth rate `b` and death rate `d` on both ends.
    pub fn equilibrium(n_sites: usize, m: f64, b: f64, d: f64) -> Result<Self> {
        Self::new(n_sites, m, b, d, b, d)
    }

    /// The weakly driven parameter set `b1 = b(1 + eps)`, `bN = b(1 - eps)`,
    /// `d1 = dN = d`.
    ///
    /// Rejects `|eps| >= 1`, which would produce a non-positive birth rate.
    pub fn perturbed(b: f64, d: f64, eps: f64, n_sites: usize, m: f64) -> Result<Self> {
        if !(eps > -1.0 && eps < 1.0) {
            return Err(SipError::InvalidParameter(format!(
                "eps must lie in (-1, 1), got {eps}"
            )));
        }
        Self::new(n_sites, m, b * (1.0 + eps), d, b * (1.0 - eps), d)
    }

    /// Number of sites `N`.
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Diffusion-strength parameter `m`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Left-reservoir birth rate.
    pub fn b1(&self) -> f64 {
        self.b1
    }

    /// Left-reservoir death rate.
    pub fn d1(&self) -> f64 {
        self.d1
    }

    /// Right-reservoir birth rate.
    pub fn b_n(&self) -> f64 {
        self.b_n
    }

    /// Right-reservoir death rate.
    pub fn d_n(&self) -> f64 {
        self.d_n
    }

    /// True when both reservoirs impose the same fugacity `b1/d1 == bN/dN`,
    /// so the process is reversible.
    pub fn is_equilibrium(&self) -> bool {
        self.b1 * self.d_n == self.b_n * self.d1
    }

    /// Reservoir fugacity `theta_0 = b1/d1` (meaningful at equilibrium).
    pub fn theta0(&self) -> f64 {
        self.b1 / self.d1
    }

    /// True when equilibrium marginals are normalizable, i.e. `b1/d1 < 1`.
    pub fn has_finite_density(&self) -> bool {
        self.b1 < self.d1
    }

    /// Checks a configuration against the model dimensions.
    pub fn check_dimensions(&self, cfg: &Configuration) -> Result<()> {
        if cfg.n_sites() != self.n_sites {
            return Err(SipError::DimensionMismatch {
                expected: self.n_sites,
                found: cfg.n_sites(),
            });
        }
        Ok(())
    }
}

/// The kind of a single jump. Bulk kinds carry the 0-based source site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransitionKind {
    /// Particle hops from `from` to `from + 1`.
    BulkRight { from: usize },
    /// Particle hops from `from` to `from - 1`.
    BulkLeft { from: usize },
    /// Birth at site 1.
    BirthLeft,
    /// Death at site 1.
    DeathLeft,
    /// Birth at site N.
    BirthRight,
    /// Death at site N.
    DeathRight,
}

impl TransitionKind {
    /// The kind of the reversed jump (same edge, opposite direction).
    pub fn reverse(self) -> Self {
        match self {
            TransitionKind::BulkRight { from } => TransitionKind::BulkLeft { from: from + 1 },
            TransitionKind::BulkLeft { from } => TransitionKind::BulkRight { from: from - 1 },
            TransitionKind::BirthLeft => TransitionKind::DeathLeft,
            TransitionKind::DeathLeft => TransitionKind::BirthLeft,
            TransitionKind::BirthRight => TransitionKind::DeathRight,
            TransitionKind::DeathRight => TransitionKind::BirthRight,
        }
    }

    /// True for reservoir (birth/death) kinds.
    pub fn is_boundary(self) -> bool {
        !matches!(
            self,
            TransitionKind::BulkRight { .. } | TransitionKind::BulkLeft { .. }
        )
    }
}

/// One allowed jump out of a configuration, with its rate.
#[derive(Debug, Clone)]
pub struct Transition {
    /// What kind of jump this is.
    pub kind: TransitionKind,
    /// Configuration after the jump.
    pub target: Configuration,
    /// Jump rate (strictly positive; zero-rate transitions are omitted).
    pub rate: f64,
}

/// Enumerates every transition with nonzero rate out of `cfg`.
///
/// Bulk jumps `i -> i +- 1` have rate `eta_i (m + eta_{i+-1})` and require an
/// occupied source. Births are always possible; deaths require an occupied
/// boundary site. The sum of returned rates is the total escape rate.
pub fn enumerate_transitions(cfg: &Configuration, p: &ModelParams) -> Result<Vec<Transition>> {
    p.check_dimensions(cfg)?;
    let occ = cfg.occupations();
    let n = p.n_sites();
    let m = p.m();
    let mut out = Vec::with_capacity(2 * n + 2);
    for i in 0..n - 1 {
        if occ[i] > 0 {
            out.push(Transition {
                kind: TransitionKind::BulkRight { from: i },
                target: cfg.with_move(i, i + 1),
                rate: f64::from(occ[i]) * (m + f64::from(occ[i + 1])),
            });
        }
        if occ[i + 1] > 0 {
            out.push(Transition {
                kind: TransitionKind::BulkLeft { from: i + 1 },
                target: cfg.with_move(i + 1, i),
                rate: f64::from(occ[i + 1]) * (m + f64::from(occ[i])),
            });
        }
    }
    out.push(Transition {
        kind: TransitionKind::BirthLeft,
        target: cfg.with_birth(0),
        rate: p.b1() * (m + f64::from(occ[0])),
    });
    if occ[0] > 0 {
        out.push(Transition {
            kind: TransitionKind::DeathLeft,
            target: cfg.with_death(0),
            rate: p.d1() * f64::from(occ[0]),
        });
    }
    out.push(Transition {
        kind: TransitionKind::BirthRight,
        target: cfg.with_birth(n - 1),
        rate: p.b_n() * (m + f64::from(occ[n - 1])),
    });
    if occ[n - 1] > 0 {
        out.push(Transition {
            kind: TransitionKind::DeathRight,
            target: cfg.with_death(n - 1),
            rate: p.d_n() * f64::from(occ[n - 1]),
        });
    }
    Ok(out)
}

/// Applies the full generator `L = L_bulk + B_1 + B_N` to an observable:
/// returns `sum_y rate(cfg -> y) * (f(y) - f(cfg))`.
pub fn generator_apply<F>(f: F, cfg: &Configuration, p: &ModelParams) -> Result<f64>
where
    F: Fn(&Configuration) -> f64,
{
    let base = f(cfg);
    let mut acc = 0.0;
    for t in enumerate_transitions(cfg, p)? {
        acc += t.rate * (f(&t.target) - base);
    }
    Ok(acc)
}

/// First-order driving force `F_1` of a transition kind: `+1` for birth-left
/// and death-right, `-1` for death-left and birth-right, `0` for bulk jumps.
pub fn local_force_f1(kind: TransitionKind) -> i32 {
    match kind {
        TransitionKind::BirthLeft | TransitionKind::DeathRight => 1,
        TransitionKind::DeathLeft | TransitionKind::BirthRight => -1,
        TransitionKind::BulkRight { .. } | TransitionKind::BulkLeft { .. } => 0,
    }
}

/// Exact finite-`eps` driving force entering local detailed balance,
/// `lambda(x,y)/lambda(y,x) = exp(U(x) - U(y) + F_eps(x,y))` for the
/// perturbed rates `b(1 +- eps)`.
///
/// Left-boundary moves carry `+-ln(1 + eps)`, right-boundary moves
/// `+-ln(1 - eps)`; expanding to first order gives `eps * F_1`.
pub fn local_force_eps(kind: TransitionKind, eps: f64) -> f64 {
    match kind {
        TransitionKind::BirthLeft => (1.0 + eps).ln(),
        TransitionKind::DeathLeft => -(1.0 + eps).ln(),
        TransitionKind::BirthRight => (1.0 - eps).ln(),
        TransitionKind::DeathRight => -(1.0 - eps).ln(),
        TransitionKind::BulkRight { .. } | TransitionKind::BulkLeft { .. } => 0.0,
    }
}

/// Entropy production rate `w_1 = sum_y lambda_0(x,y) F_1(x,y)` of the
/// unperturbed chain with rates `b`, `d`, which collapses to
/// `(b - d)(eta_1 - eta_N)`.
pub fn entropy_production_w1(cfg: &Configuration, b: f64, d: f64) -> f64 {
    (b - d) * (f64::from(cfg.left()) - f64::from(cfg.right()))
}
