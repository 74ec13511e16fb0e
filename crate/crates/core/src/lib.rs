//! Nontrivial radial convex solutions of the coupled Monge-Ampere Dirichlet
//! system on the unit ball.
//!
//! The radial reduction turns the system into a pair of one-dimensional
//! boundary value problems; after the sign flip v = -u these are positive
//! concave profiles and fixed points of a cone-preserving integral operator.
//! This crate discretizes that operator, finds its fixed points two
//! independent ways (Picard iteration and a shooting oracle on the derivative
//! form), classifies problems into existence / multiplicity / nonexistence
//! regimes from the asymptotic quotients f(x)/x^N, and charts solution counts
//! across the parameter lambda.
//!
//! Modules follow the pipeline:
//!
//! - [`nonlinearity`]: the scalar maps f, g, their envelopes and quotients
//! - [`operator`]: radial grid, the integral operator, Gamma, cone checks
//! - [`solver`]: Picard multi-start and the forward-integration oracle
//! - [`regimes`]: theorem-part classification with explicit lambda windows
//! - [`sweep`]: counts across lambda and threshold bisection
//! - [`verify`]: seeded randomized property suites

pub mod error;
pub mod nonlinearity;
pub mod operator;
pub mod regimes;
pub mod solver;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use nonlinearity::{
    DeclaredLimits, ExtendedLimit, Family, LimitEnd, LimitKind, Nonlinearity,
};
pub use operator::{
    apply_t, cone_check, gamma_constant, weak_bounds, ConeReport, ProblemSpec, QuadRule,
    RadialGrid, StatePair, DEFAULT_INTERVALS,
};
pub use regimes::{classify, nonexistence_window, PartTag, RegimeReport};
pub use solver::{
    boundary_shoot, default_alpha_box, forward_integrate, multi_start, picard_solve, AlphaBox,
    MarchResult, SolveReport, SolverConfig,
};
pub use sweep::{
    lambda_sweep, threshold_bisect, ProblemTemplate, SolutionCount, SweepReport,
    ThresholdDetector, ThresholdEstimate,
};
