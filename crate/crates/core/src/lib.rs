//! Uniform concentration of empirical norms for shallow ReLU networks under
//! standard Gaussian inputs.
//!
//! The crate provides, as plain functions over explicit parameter types:
//!
//! - exact evaluation of ReLU neurons and shallow networks ([`model`]);
//! - Gaussian-measure norms, empirical seminorms, and the excess-risk
//!   decomposition ([`gaussian`]);
//! - sub-Gaussian (psi_2) norm and distance estimation through reduced
//!   exponential-moment integrals ([`subgaussian`]);
//! - constructive epsilon-nets in the sub-Gaussian metric together with
//!   closed-form covering-number bounds ([`covering`]);
//! - Dudley entropy integrals, greedy Talagrand-functional upper bounds, and
//!   the tail deviation bound for empirical squared norms ([`chaining`]);
//! - sample-complexity and generalization-bound calculators with explicit
//!   constants ([`bounds`]);
//! - seeded Monte-Carlo experiments that verify each of the above at desk
//!   scale ([`harness`]).
//!
//! Everything is deterministic for a fixed master seed: random streams are
//! counter-based ([`rng`]) and report rows are merged in trial order.

pub mod bounds;
pub mod chaining;
pub mod covering;
pub mod gaussian;
pub mod harness;
pub mod model;
pub mod quad;
pub mod report;
pub mod rng;
pub mod subgaussian;

pub use model::{
    max_bias_ratio, sample_parameter_class, validate_membership, Kappa, MembershipReport,
    MembershipViolation, ModelError, NetworkParams, NeuronParams, ParameterClass,
};
pub use quad::{QuadError, QuadratureSpec, Scheme};

/// Library version embedded in every emitted artifact.
pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}
