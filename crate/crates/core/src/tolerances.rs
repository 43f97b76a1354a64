//! Default numerical tolerances shared by the solvers and verifiers.
//!
//! Every threshold that an assertion or a stopping rule depends on lives
//! here so that reports can echo them and tests can pin them.

/// Relative reduction of the residual max-norm that counts as converged.
pub const RESIDUAL_REL_TOL: f64 = 1e-8;

/// Absolute residual floor; a residual below this is converged regardless
/// of the initial value.
pub const RESIDUAL_ABS_TOL: f64 = 1e-10;

/// Target accuracy of fibering roots in `t` (relative).
pub const ROOT_TOL: f64 = 1e-12;

/// Relative bracket width at which bisection hands over to Newton.
pub const BISECTION_WIDTH: f64 = 1e-8;

/// `|J'(1)|` below this multiple of the term magnitudes means Nehari membership.
pub const NEHARI_MEMBER_TOL: f64 = 1e-10;

/// `|J''(1)|` below this multiple of the term magnitudes is flagged `N_zero`.
pub const NEHARI_ZERO_BAND: f64 = 1e-9;

/// Armijo sufficient-decrease slope parameter.
pub const ARMIJO_SLOPE: f64 = 1e-4;

/// Backtracking contraction factor.
pub const ARMIJO_BACKTRACK: f64 = 0.5;

/// Comparison-principle and barrier slack (nodewise).
pub const COMPARISON_TOL: f64 = 1e-6;

/// Energies may rise by this much (relative) and still count as a descent
/// step; accounts for cancellation once the residual is near round-off.
pub const ENERGY_ROUNDOFF: f64 = 1e-13;

/// Relative deviation accepted between a fitted and a predicted log-log slope.
pub const SLOPE_REL_TOL: f64 = 0.15;
