//! Boundary-driven symmetric inclusion process (SIP).
//!
//! A chain of `N` sites exchanges particles with two reservoirs at its ends.
//! A particle at site `i` hops to a neighbour `j` at rate
//! `eta_i (m + eta_j)`, so occupied sites attract further particles; the
//! reservoirs inject at rate `b (m + eta)` and absorb at rate `d eta`.
//! Equal reservoir fugacities give a reversible product steady state; a
//! small mismatch `b(1 +- eps)` drives a weak particle current and makes
//! the steady state irreversible.
//!
//! The crate computes this steady state three independent ways and checks
//! them against each other:
//!
//! * [`analytic`] — closed forms: equilibrium marginals, the linear density
//!   profile, the local-equilibrium measure, and the first-order correction
//!   coefficients from the transient entropy production.
//! * [`exactsolve`] — master-equation solves on a truncated occupation box:
//!   stationary distributions, Poisson equations, and the order-by-order
//!   expansion of the driven measure.
//! * [`kmc`] — exact event-driven simulation with batch-means error bars.
//!
//! ```
//! use sip::analytic::{mclennan_coefficients, leq_first_order_coefficients};
//!
//! // first-order correction exponent for N = 3, m = 1, b = 1, d = 2
//! let mclennan = mclennan_coefficients(1.0, 2.0, 1.0, 3)?;
//! assert_eq!(mclennan.coefficients(), &[0.5, 0.0, -0.5]);
//!
//! // ... identical to the local-equilibrium exponent
//! let leq = leq_first_order_coefficients(1.0, 2.0, 1.0, 3)?;
//! for (a, b) in mclennan.coefficients().iter().zip(leq.coefficients()) {
//!     assert!((a - b).abs() < 1e-12);
//! }
//! # Ok::<(), sip::SipError>(())
//! ```

pub mod analytic;
pub mod error;
pub mod exactsolve;
pub mod kmc;
pub mod model;

pub use error::{Result, SipError};
pub use model::{Configuration, ModelParams, Transition, TransitionKind};

/// Book chapters double as compiled examples: every fenced Rust block in
/// the guide runs under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!($path)]
            pub struct $name;
        };
    }

    chapter!(Process, "../../../book/src/process.md");
    chapter!(Equilibrium, "../../../book/src/equilibrium.md");
    chapter!(Profiles, "../../../book/src/profiles.md");
    chapter!(Mclennan, "../../../book/src/mclennan.md");
    chapter!(ExactSolver, "../../../book/src/exact-solver.md");
    chapter!(Dyson, "../../../book/src/dyson.md");
    chapter!(Simulation, "../../../book/src/simulation.md");
}
