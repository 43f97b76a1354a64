//! Discretized singular `(p,q)`-Laplacian problems with critical growth:
//! fibering analysis, Nehari-manifold minimizers, sub/supersolution
//! solvers and quantitative estimate checks.

pub mod config;
pub mod discretization;
pub mod error;
pub mod estimates;
pub mod fibering;
pub(crate) mod functional;
pub mod problem;
pub mod quadrature;
pub mod report;
pub mod run;
pub mod solvers;
pub mod tolerances;

pub use discretization::{
    build_space, gradient_power, interpolate, nodal_power, norms_profile, DiscreteSpace, Field, FiberingProfile,
    SpaceKind,
};
pub use error::{Error, Result};
pub use fibering::{Branch, NehariClassification, Verdict};
pub use problem::{
    energy, gradient_weak, nehari_derivatives, regularize_singular, singular_energy, DomainDescriptor, ProblemSpec,
    RegularizationSchedule,
};
pub use solvers::{EigenPair, SolverOptions, SolverReport};
