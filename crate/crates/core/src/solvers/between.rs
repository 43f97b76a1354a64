use crate::discretization::{DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::problem::{energy, full_functional, gradient_weak, nehari_derivatives, ProblemSpec};
use crate::tolerances::COMPARISON_TOL;

use super::descent::{initial_residual, minimize};
use super::{BoxObjective, Check, SolverOptions, SolverReport};

/// Largest pairing `⟨I_λ'(u), φ_i⟩` over interior hat functions; a discrete
/// subsolution has it `≤ 0`.
pub fn verify_subsolution(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field, eps_reg: f64) -> Result<f64> {
    let g = gradient_weak(spec, space, u, eps_reg)?;
    Ok(space.interior().iter().map(|&i| g.values[i]).fold(f64::NEG_INFINITY, f64::max))
}

/// Smallest pairing over interior hat functions; `≥ 0` for a supersolution.
pub fn verify_supersolution(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field, eps_reg: f64) -> Result<f64> {
    let g = gradient_weak(spec, space, u, eps_reg)?;
    Ok(space.interior().iter().map(|&i| g.values[i]).fold(f64::INFINITY, f64::min))
}

/// Minimizes `I_λ` over `sub ≤ u ≤ super`, starting from `sub`.
pub fn solve_between(
    spec: &ProblemSpec,
    space: &DiscreteSpace,
    sub: &Field,
    sup: &Field,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    space.check(sup)?;
    solve_box(spec, space, sub, Some(sup), opts)
}

/// Minimizes `I_λ` locally over `u ≥ sub`, starting from `sub`. Without an
/// upper bound the energy is unbounded below, so this is a local descent:
/// it settles in the basin above `sub` when one exists and runs away
/// otherwise (stopped by the divergence cap or the budget).
pub fn solve_above(spec: &ProblemSpec, space: &DiscreteSpace, sub: &Field, opts: &SolverOptions) -> Result<SolverReport> {
    solve_box(spec, space, sub, None, opts)
}

fn solve_box(
    spec: &ProblemSpec,
    space: &DiscreteSpace,
    sub: &Field,
    sup: Option<&Field>,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    spec.validate()?;
    space.check(sub)?;
    if let Some(sup) = sup {
        if let Some(i) = (0..sub.len()).find(|&i| sub.values[i] > sup.values[i]) {
            return Err(Error::InvalidArgument(format!(
                "box violated at node {i}: sub = {} > super = {}",
                sub.values[i], sup.values[i]
            )));
        }
    }
    let eps = opts.schedule.terminal_eps();
    let mut checks = vec![];
    let sub_pair = verify_subsolution(spec, space, sub, eps)?;
    checks.push(Check::new("sub_is_subsolution", sub_pair <= COMPARISON_TOL, sub_pair));
    if let Some(sup) = sup {
        let sup_pair = verify_supersolution(spec, space, sup, eps)?;
        checks.push(Check::new("super_is_supersolution", sup_pair >= -COMPARISON_TOL, sup_pair));
    }
    let obj = BoxObjective {
        functional: full_functional(spec, space, eps),
        lower: sub.values.clone(),
        upper: sup.map(|s| s.values.clone()),
    };
    let u0 = obj.clamp(sub.values.clone());
    let tol = opts.tolerance(initial_residual(&obj, &u0));
    let out = minimize(&obj, u0, opts, tol);
    let field = Field::new(out.u);
    let e = energy(spec, space, &field, 0.0)?;
    let e_sub = energy(spec, space, sub, 0.0)?;
    checks.push(Check::new("energy_below_sub", e <= e_sub + 1e-12 * e_sub.abs(), e - e_sub));
    let (j1, j2) = nehari_derivatives(spec, space, &field).unwrap_or((f64::NAN, f64::NAN));
    Ok(SolverReport {
        field,
        energy: e,
        residual_norm: out.residual,
        nehari_first: j1,
        nehari_second: j2,
        iterations: out.iterations,
        eps_reg_final: eps,
        converged: out.converged,
        diverged: out.diverged,
        trace: out.trace,
        checks,
    })
}
