use crate::discretization::{DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::problem::{nehari_derivatives, singular_energy, singular_functional, ProblemSpec};

use super::descent::{initial_residual, minimize};
use super::{bump_field, BoxObjective, Check, SolverOptions, SolverReport};

/// Minimizer `u̲_λ` of `Ĩ_λ(u) = A/p + βB/q - λ∫u^{1-δ}/(1-δ)` over `u ≥ 0`,
/// by continuation down the regularization schedule.
pub fn solve_singular(spec: &ProblemSpec, space: &DiscreteSpace, opts: &SolverOptions) -> Result<SolverReport> {
    solve_singular_from(spec, space, &canonical_start(spec, space), opts)
}

fn canonical_start(spec: &ProblemSpec, space: &DiscreteSpace) -> Field {
    bump_field(space).scaled(spec.lambda.powf(1.0 / (spec.p - 1.0 + spec.delta)))
}

/// Starts from `init`. The stopping tolerance is relative to the residual
/// of the canonical start, so every start is held to the same tolerance.
pub fn solve_singular_from(
    spec: &ProblemSpec,
    space: &DiscreteSpace,
    init: &Field,
    opts: &SolverOptions,
) -> Result<SolverReport> {
    spec.validate()?;
    space.check(init)?;
    let terminal = opts.schedule.terminal_eps();
    if terminal > 1e-8 {
        return Err(Error::InvalidArgument(format!(
            "singular solve needs terminal regularization ≤ 1e-8, got {terminal}"
        )));
    }
    let eps_values = opts.schedule.eps_values();
    let mut u = BoxObjective::nonnegative(singular_functional(spec, space, terminal)).clamp(init.values.clone());
    let reference = {
        let obj = BoxObjective::nonnegative(singular_functional(spec, space, eps_values[0]));
        initial_residual(&obj, &canonical_start(spec, space).values)
    };
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut last = None;
    for (k, &eps) in eps_values.iter().enumerate() {
        let obj = BoxObjective::nonnegative(singular_functional(spec, space, eps));
        let r0 = reference;
        let mut tol = opts.tolerance(r0);
        if k + 1 < eps_values.len() {
            tol = tol.max(1e-4 * r0);
        }
        let out = minimize(&obj, u, opts, tol);
        trace.extend_from_slice(&out.trace);
        iterations += out.iterations;
        u = out.u.clone();
        let stop = out.diverged;
        last = Some(out);
        if stop {
            break;
        }
    }
    let out = last.expect("schedule is nonempty");
    let field = Field::new(u);
    let energy = singular_energy(spec, space, &field, 0.0)?;
    let (j1, j2) = match nehari_derivatives(spec, space, &field) {
        Ok(v) => v,
        Err(Error::ZeroField) => (0.0, 0.0),
        Err(e) => return Err(e),
    };
    let converged = out.converged && !out.diverged;
    let checks = vec![
        Check::new("singular_energy_negative", energy < 0.0, energy),
        Check::new("nonnegative", field.values.iter().all(|v| *v >= 0.0), field.values.iter().cloned().fold(f64::INFINITY, f64::min)),
    ];
    Ok(SolverReport {
        field,
        energy,
        residual_norm: out.residual,
        nehari_first: j1,
        nehari_second: j2,
        iterations,
        eps_reg_final: terminal,
        converged,
        diverged: out.diverged,
        trace,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_space, interpolate};
    use crate::problem::DomainDescriptor;

    fn spec(lambda: f64) -> ProblemSpec {
        ProblemSpec::new(3, 2.0, 1.5, 1.0, lambda, 0.5, 4.0, DomainDescriptor::unit_ball()).unwrap()
    }

    #[test]
    fn converges_with_negative_energy_and_is_init_independent() {
        let sp = build_space(&DomainDescriptor::unit_ball(), 3, 129).unwrap();
        let s = spec(0.1);
        let opts = SolverOptions::default();
        let a = solve_singular(&s, &sp, &opts).unwrap();
        assert!(a.converged, "residual {}", a.residual_norm);
        assert!(a.energy < 0.0);
        let other = interpolate(&sp, |x| 3.0 * (1.0 - x[0]).powi(3) + 0.01, true).unwrap();
        let b = solve_singular_from(&s, &sp, &other, &opts).unwrap();
        assert!(b.converged);
        assert!(a.field.distance_max(&b.field) < 1e-6);
        for w in a.trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs().max(1.0) || w[1].energy.is_nan());
        }
    }

    #[test]
    fn shrinks_as_lambda_vanishes() {
        let sp = build_space(&DomainDescriptor::unit_interval(), 3, 65).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..5 {
            let r = solve_singular(&spec(10f64.powi(-k)), &sp, &SolverOptions::default()).unwrap();
            assert!(r.converged);
            let m = r.field.max_norm();
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn rejects_loose_schedule() {
        let sp = build_space(&DomainDescriptor::unit_interval(), 3, 17).unwrap();
        let o = SolverOptions {
            schedule: crate::problem::RegularizationSchedule::new(vec![1e-2, 1e-4]).unwrap(),
            ..SolverOptions::default()
        };
        assert!(solve_singular(&spec(0.1), &sp, &o).is_err());
    }
}
