//! Minimizers for the singular problem, the two Nehari branches, the
//! eigenvalue and barrier problems, the order-constrained problem between
//! a sub- and a supersolution, and the λ sweep.

use serde::{Deserialize, Serialize};

use crate::discretization::{DiscreteSpace, Field, SpaceKind};
use crate::error::{Error, Result};
use crate::functional::{Functional, NodalPotential};
use crate::problem::RegularizationSchedule;
use crate::tolerances::{ARMIJO_BACKTRACK, ARMIJO_SLOPE, RESIDUAL_ABS_TOL, RESIDUAL_REL_TOL};

mod between;
pub(crate) mod descent;
mod eigen;
mod nehari;
mod singular;
mod sweep;

pub use between::{solve_above, solve_between, verify_subsolution, verify_supersolution};
pub use eigen::{barrier_phi_hat, eigen_power, eigen_q, mesh_embedding_constant};
pub use nehari::{minimize_nehari, nehari_initial_guess, project_to_branch};
pub use singular::{solve_singular, solve_singular_from};
pub use sweep::{sweep_lambda, SweepReport, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub energy: f64,
    pub residual: f64,
}

/// A named pass/fail check with the measured value behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, value: f64) -> Self {
        Self { name: name.into(), passed, value }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub field: Field,
    pub energy: f64,
    pub residual_norm: f64,
    pub nehari_first: f64,
    pub nehari_second: f64,
    pub iterations: usize,
    pub eps_reg_final: f64,
    pub converged: bool,
    pub diverged: bool,
    pub trace: Vec<TracePoint>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub value: f64,
    pub field: Field,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Iteration budget per regularization stage.
    pub max_iter: usize,
    pub max_backtracks: usize,
    pub armijo_slope: f64,
    pub backtrack: f64,
    pub schedule: RegularizationSchedule,
    /// Stop as diverged once any nodal value exceeds this.
    pub divergence_cap: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: RESIDUAL_REL_TOL,
            abs_tol: RESIDUAL_ABS_TOL,
            max_iter: 500,
            max_backtracks: 60,
            armijo_slope: ARMIJO_SLOPE,
            backtrack: ARMIJO_BACKTRACK,
            schedule: RegularizationSchedule::default(),
            divergence_cap: None,
        }
    }
}

impl SolverOptions {
    pub(crate) fn tolerance(&self, initial_residual: f64) -> f64 {
        (self.rel_tol * initial_residual).max(self.abs_tol)
    }
}

/// A functional restricted to `lower ≤ u ≤ upper` (upper optional).
pub(crate) struct BoxObjective<'a, N> {
    pub functional: Functional<'a, N>,
    pub lower: Vec<f64>,
    pub upper: Option<Vec<f64>>,
}

impl<'a, N: NodalPotential> BoxObjective<'a, N> {
    pub fn nonnegative(functional: Functional<'a, N>) -> Self {
        let n = functional.space.num_nodes();
        Self { functional, lower: vec![0.0; n], upper: None }
    }

    pub fn clamp(&self, mut u: Vec<f64>) -> Vec<f64> {
        let sp = self.functional.space;
        for (i, v) in u.iter_mut().enumerate() {
            if sp.boundary[i] {
                *v = 0.0;
                continue;
            }
            *v = v.max(self.lower[i]);
            if let Some(hi) = &self.upper {
                *v = v.min(hi[i]);
            }
        }
        u
    }
}

impl<N: NodalPotential> descent::Objective for BoxObjective<'_, N> {
    fn value(&self, u: &[f64]) -> f64 {
        self.functional.value(u)
    }

    fn scale(&self, u: &[f64]) -> f64 {
        self.functional.scale(u)
    }

    fn gradient(&self, u: &[f64]) -> Vec<f64> {
        self.functional.gradient(u)
    }

    fn free(&self, u: &[f64], g: &[f64]) -> Vec<bool> {
        let sp = self.functional.space;
        (0..u.len())
            .map(|i| {
                if sp.boundary[i] {
                    return false;
                }
                let lo = self.lower[i];
                let at_lo = u[i] <= lo;
                match &self.upper {
                    Some(hi) => {
                        let hi = hi[i];
                        hi > lo && !(at_lo && g[i] > 0.0) && !(u[i] >= hi && g[i] < 0.0)
                    }
                    None => !(at_lo && g[i] > 0.0),
                }
            })
            .collect()
    }

    fn direction(&self, u: &[f64], g: &[f64], free: &[bool]) -> Vec<f64> {
        self.functional.direction(u, g, free)
    }

    fn project(&self, u: Vec<f64>) -> Result<Vec<f64>> {
        Ok(self.clamp(u))
    }
}

/// Result of [`compare_fields`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ordered: bool,
    /// Node with the largest `u_sub - u_super` and that difference.
    pub worst_node: usize,
    pub worst_excess: f64,
}

/// Whether `u_sub ≤ u_super + tol` at every node.
pub fn compare_fields(u_sub: &Field, u_super: &Field, tol: f64) -> Result<Comparison> {
    if u_sub.len() != u_super.len() {
        return Err(Error::DimensionMismatch { expected: u_sub.len(), found: u_super.len() });
    }
    let mut worst_node = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for (i, (a, b)) in u_sub.values.iter().zip(&u_super.values).enumerate() {
        if a - b > worst_excess {
            worst_excess = a - b;
            worst_node = i;
        }
    }
    Ok(Comparison { ordered: worst_excess <= tol, worst_node, worst_excess })
}

/// `min u/φ̂` over nodes where `φ̂ > 0` (the interior for a barrier field).
pub fn lower_barrier_constant(u_singular: &Field, phi_hat: &Field) -> Result<f64> {
    if u_singular.len() != phi_hat.len() {
        return Err(Error::DimensionMismatch { expected: phi_hat.len(), found: u_singular.len() });
    }
    let ratio = u_singular
        .values
        .iter()
        .zip(&phi_hat.values)
        .filter(|(_, p)| **p > 0.0)
        .map(|(u, p)| u / p)
        .fold(f64::INFINITY, f64::min);
    if !ratio.is_finite() {
        return Err(Error::InvalidArgument("barrier field has no positive node".into()));
    }
    if ratio <= 0.0 {
        return Err(Error::InvalidArgument(format!("barrier ratio is not positive: {ratio}")));
    }
    Ok(ratio)
}

/// Positive bump vanishing on the Dirichlet boundary, peak value 1.
pub fn bump_field(space: &DiscreteSpace) -> Field {
    let xmax = space.coords.iter().map(|c| c[0]).fold(0.0, f64::max);
    let vals = space
        .coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if space.boundary[i] {
                return 0.0;
            }
            match space.kind {
                SpaceKind::Interval => 4.0 * c[0] * (xmax - c[0]) / (xmax * xmax),
                SpaceKind::Square => 16.0 * c[0] * (xmax - c[0]) * c[1] * (xmax - c[1]) / xmax.powi(4),
                SpaceKind::RadialBall => 1.0 - (c[0] / xmax).powi(2),
            }
        })
        .collect();
    Field::new(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_verdicts() {
        let u = Field::new(vec![0.0, 1.0, 2.0, 0.0]);
        assert!(compare_fields(&u, &u, 0.0).unwrap().ordered);
        let lowered = u.axpy(-0.1, &Field::new(vec![0.0, 1.0, 1.0, 0.0]));
        let c = compare_fields(&u, &lowered, 1e-6).unwrap();
        assert!(!c.ordered);
        assert!(c.worst_node == 1 || c.worst_node == 2);
        assert!((c.worst_excess - 0.1).abs() < 1e-15);
    }

    #[test]
    fn barrier_ratio() {
        let phi = Field::new(vec![0.0, 0.5, 1.0, 0.0]);
        assert_eq!(lower_barrier_constant(&phi, &phi).unwrap(), 1.0);
        assert_eq!(lower_barrier_constant(&phi.scaled(2.0), &phi).unwrap(), 2.0);
        assert!(lower_barrier_constant(&Field::new(vec![0.0, 0.0, 1.0, 0.0]), &phi).is_err());
    }
}
