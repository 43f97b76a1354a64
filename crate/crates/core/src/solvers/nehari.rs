use crate::discretization::{norms_profile, DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::fibering::{classify, nehari_scale, Branch, Verdict};
use crate::functional::{Functional, SingularSource};
use crate::problem::{energy, full_functional, ProblemSpec};
use crate::tolerances::NEHARI_MEMBER_TOL;

use super::descent::{initial_residual, minimize, Objective};
use super::{bump_field, Check, SolverOptions, SolverReport};

/// `Φ(u) = I_λ(t(u)·u)` with `t = t̲` or `t̄` and the exact singular term.
/// Iterates are kept on the manifold, where `∇Φ = ∇I_λ`.
struct NehariObjective<'a> {
    spec: &'a ProblemSpec,
    space: &'a DiscreteSpace,
    branch: Branch,
    functional: Functional<'a, SingularSource>,
}

impl Objective for NehariObjective<'_> {
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
        (0..u.len())
            .map(|i| !self.space.boundary[i] && !(u[i] <= 0.0 && g[i] > 0.0))
            .collect()
    }

    fn direction(&self, u: &[f64], g: &[f64], free: &[bool]) -> Vec<f64> {
        self.functional.direction(u, g, free)
    }

    fn project(&self, u: Vec<f64>) -> Result<Vec<f64>> {
        project_values(self.spec, self.space, u, self.branch)
    }
}

fn project_values(spec: &ProblemSpec, space: &DiscreteSpace, mut u: Vec<f64>, branch: Branch) -> Result<Vec<f64>> {
    for (i, v) in u.iter_mut().enumerate() {
        if space.boundary[i] || *v < 0.0 {
            *v = 0.0;
        }
    }
    let field = Field::new(u);
    let prof = norms_profile(spec, space, &field)?;
    if prof.is_zero() {
        return Err(Error::ZeroField);
    }
    let t = nehari_scale(&prof, spec, branch)?;
    Ok(field.values.into_iter().map(|v| v * t).collect())
}

/// `t̲(u)·u` or `t̄(u)·u` after clamping to the nonnegative cone.
pub fn project_to_branch(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field, branch: Branch) -> Result<Field> {
    space.check(u)?;
    Ok(Field::new(project_values(spec, space, u.values.clone(), branch)?))
}

/// Projection of `u̲_λ + bump` onto the requested branch.
pub fn nehari_initial_guess(
    spec: &ProblemSpec,
    space: &DiscreteSpace,
    u_singular: &Field,
    branch: Branch,
) -> Result<Field> {
    let amp = 0.1 * u_singular.max_norm().max(f64::MIN_POSITIVE);
    let u = u_singular.axpy(amp, &bump_field(space));
    project_to_branch(spec, space, &u, branch)
}

/// Minimizes `I_λ` over `N⁺_λ` or `N⁻_λ` by projected descent with exact
/// re-projection onto the branch after every trial step.
pub fn minimize_nehari(
    spec: &ProblemSpec,
    space: &DiscreteSpace,
    branch: Branch,
    init: &Field,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    spec.validate()?;
    space.check(init)?;
    if init.is_zero() {
        return Err(Error::ZeroField);
    }
    // The exact term keeps value, gradient and projection consistent;
    // interior iterates stay positive after projection.
    let eps = 0.0;
    let obj = NehariObjective { spec, space, branch, functional: full_functional(spec, space, eps) };
    let u0 = obj.project(init.values.clone())?;
    let tol = opts.tolerance(initial_residual(&obj, &u0));
    let out = minimize(&obj, u0, opts, tol);
    let field = Field::new(out.u);
    let prof = norms_profile(spec, space, &field)?;
    let cls = classify(&prof, spec)?;
    let e = energy(spec, space, &field, 0.0)?;
    let expected = match branch {
        Branch::Plus => Verdict::NPlus,
        Branch::Minus => Verdict::NMinus,
    };
    let scale = prof.a + spec.beta * prof.b + spec.lambda * prof.c + prof.d;
    let mut checks = vec![
        Check::new("nehari_member", cls.nehari_first.abs() <= NEHARI_MEMBER_TOL * scale, cls.nehari_first),
        Check::new("branch_sign", cls.verdict == expected, cls.nehari_second),
    ];
    if branch == Branch::Plus {
        checks.push(Check::new("n_plus_energy_negative", e < 0.0, e));
    }
    Ok(SolverReport {
        field,
        energy: e,
        residual_norm: out.residual,
        nehari_first: cls.nehari_first,
        nehari_second: cls.nehari_second,
        iterations: out.iterations,
        eps_reg_final: eps,
        converged: out.converged,
        diverged: out.diverged,
        trace: out.trace,
        checks,
    })
}
