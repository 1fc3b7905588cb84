//! Numerical laboratory for non-Fickian (viscoelastic) penetrant diffusion
//! in polymers.
//!
//! The crate simulates the coupled concentration/stress system
//!
//! ```text
//! u' = div[D0 grad u + E0 grad sigma - M0 u]
//! sigma' + beta0 sigma = mu0(u) u + nu0(u) u'
//! ```
//!
//! on 1D/2D rectangles with Dirichlet concentration data, finds solutions
//! with repeating concentration `u(0) = u(T)` and time-periodic solutions by
//! shooting iteration, and checks the structural hypotheses, constants and
//! energy bounds that guarantee those solutions exist.
//!
//! Module map:
//! - [`grid_ops`]: grids, discrete calculus, Poisson solves, norms.
//! - [`coefficients`]: coefficient laws, the purely non-Fickian change of
//!   variables, homogenized coefficients, bound certificates.
//! - [`stress_kinetics`]: exponential integration of the stress equation.
//! - [`evolution`]: primal and regularized time steppers.
//! - [`fixed_point`]: Picard/shooting solvers.
//! - [`estimates`]: thresholds, energy functionals, coercivity search.

// `!(x > 0.0)` style guards are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod error;
pub mod estimates;
pub mod evolution;
pub mod fixed_point;
pub mod grid_ops;
pub mod linalg;
pub mod stress_kinetics;

pub use coefficients::{
    BackgroundField, BoundsCertificate, HomogenizedCoefficients, PrimalCoefficients,
    TransformedCoefficients,
};
pub use error::{Error, Result};
pub use estimates::EstimateReport;
pub use evolution::{RegularizedState, State, Trajectory};
pub use fixed_point::{ConvergenceReport, ShootingProblem};
pub use grid_ops::{build_grid, Grid, NormKind, Point, ScalarField, VectorField};
