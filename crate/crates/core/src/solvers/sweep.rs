use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::{DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

use super::{barrier_phi_hat, lower_barrier_constant, solve_above, solve_singular, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub converged: bool,
    pub energy: f64,
    /// `min u̲_λ/φ̂` over interior nodes.
    pub barrier_eps: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Successes form an initial segment of the grid.
    pub downward_closed: bool,
    pub last_success: Option<f64>,
    pub first_failure: Option<f64>,
}

/// For each `λ`: solve the singular problem for `u̲_λ`, then descend on
/// `I_λ` above `u̲_λ`. A converged descent counts as existence on the grid.
/// Grid points run in parallel; row order follows the grid.
pub fn sweep_lambda(
    template: &ProblemSpec,
    space: &DiscreteSpace,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<SweepReport> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] <= 0.0 {
        return Err(Error::InvalidArgument("λ grid must be positive and strictly increasing".into()));
    }
    let phi = barrier_phi_hat(template, space, None, opts)?.field;
    let rows: Vec<Result<SweepRow>> = grid.par_iter().map(|&l| sweep_point(template, space, l, &phi, opts)).collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let first_fail = rows.iter().position(|r| !r.converged);
    let downward_closed = match first_fail {
        Some(k) => rows[k..].iter().all(|r| !r.converged),
        None => true,
    };
    let last_success = rows.iter().filter(|r| r.converged).map(|r| r.lambda).next_back();
    let first_failure = first_fail.map(|k| rows[k].lambda);
    Ok(SweepReport { rows, downward_closed, last_success, first_failure })
}

fn sweep_point(template: &ProblemSpec, space: &DiscreteSpace, lambda: f64, phi: &Field, opts: &SolverOptions) -> Result<SweepRow> {
    let spec = template.with_lambda(lambda);
    let low = solve_singular(&spec, space, opts)?;
    let barrier_eps = lower_barrier_constant(&low.field, phi).unwrap_or(0.0);
    let mut o = opts.clone();
    if o.divergence_cap.is_none() {
        o.divergence_cap = Some(1e3 * (1.0 + low.field.max_norm()));
    }
    let above = solve_above(&spec, space, &low.field, &o)?;
    Ok(SweepRow {
        lambda,
        converged: low.converged && above.converged,
        energy: above.energy,
        barrier_eps,
        residual: above.residual_norm,
        iterations: above.iterations,
    })
}
