use crate::discretization::{gradient_power, nodal_power, DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::functional::{Functional, LinearSource, PowerSource};
use crate::problem::ProblemSpec;

use super::descent::{initial_residual, minimize};
use super::{bump_field, BoxObjective, EigenPair, SolverOptions};

fn rayleigh(space: &DiscreteSpace, u: &[f64], s: f64, coef: f64) -> f64 {
    coef * gradient_power(space, u, s) / nodal_power(space, u, s)
}

fn normalize(space: &DiscreteSpace, u: &mut [f64], s: f64) {
    let n = nodal_power(space, u, s).powf(1.0 / s);
    u.iter_mut().for_each(|v| *v /= n);
}

/// First eigenpair of `-c Δ_s` by nonlinear inverse iteration: each step
/// solves `-c Δ_s w = |u|^{s-2}u` (as a convex minimization) and
/// renormalizes to `‖w‖_s = 1`.
pub fn eigen_power(space: &DiscreteSpace, s: f64, coef: f64, opts: &SolverOptions) -> Result<EigenPair> {
    if !(s > 1.0) || !(coef > 0.0) {
        return Err(Error::InvalidArgument(format!("eigenproblem needs s > 1 and c > 0 (s = {s}, c = {coef})")));
    }
    let mut u = bump_field(space).values;
    normalize(space, &mut u, s);
    let mut value = rayleigh(space, &u, s, coef);
    let mut settled = false;
    for _ in 0..1000 {
        let f: Vec<f64> = u.iter().map(|v| if *v > 0.0 { v.powf(s - 1.0) } else { 0.0 }).collect();
        let rhs_size = f.iter().zip(&space.lumped).map(|(a, w)| a * w).fold(0.0, f64::max);
        let obj = BoxObjective::nonnegative(Functional::new(space, vec![(s, coef)], LinearSource { f }));
        let w0: Vec<f64> = u.iter().map(|v| v * value.powf(-1.0 / (s - 1.0))).collect();
        let tol = 1e-11 * rhs_size;
        let out = minimize(&obj, w0, opts, tol);
        let mut w = out.u;
        normalize(space, &mut w, s);
        let next = rayleigh(space, &w, s, coef);
        let change = w.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        u = w;
        let done = (next - value).abs() <= 1e-14 * next && change <= 1e-10;
        value = next;
        if done {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::NonConvergence { what: "inverse iteration".into(), iterations: 1000, residual: value });
    }
    let positive = space.interior().iter().all(|&i| u[i] > 0.0);
    Ok(EigenPair { value, field: Field::new(u), positive })
}

/// `λ₁(q, β)` with its `‖·‖_q`-normalized eigenfunction.
pub fn eigen_q(spec: &ProblemSpec, space: &DiscreteSpace, opts: &SolverOptions) -> Result<EigenPair> {
    eigen_power(space, spec.q, spec.beta, opts)
}

/// Positive solution `φ̂` of `-Δ_p φ - βΔ_q φ = λ̂ φ^{q-1}`, found as the
/// minimizer of `A/p + βB/q - λ̂‖φ‖_q^q/q` over `φ ≥ 0`. The returned pair
/// holds `λ̂` and the unnormalized `φ̂`. `lambda_hat` defaults to `2λ₁(q,β)`.
pub fn barrier_phi_hat(
    spec: &ProblemSpec,
    space: &DiscreteSpace,
    lambda_hat: Option<f64>,
    opts: &SolverOptions,
) -> Result<EigenPair> {
    let first = eigen_q(spec, space, opts)?;
    let lh = lambda_hat.unwrap_or(2.0 * first.value);
    if !(lh > first.value) {
        return Err(Error::InvalidArgument(format!(
            "λ̂ = {lh} must exceed λ₁(q,β) = {}",
            first.value
        )));
    }
    let phi1 = first.field.as_slice();
    let a = gradient_power(space, phi1, spec.p);
    let cq = nodal_power(space, phi1, spec.q);
    let t = ((lh - first.value) * cq / a).powf(1.0 / (spec.p - spec.q));
    let obj = BoxObjective::nonnegative(Functional::new(
        space,
        vec![(spec.p, 1.0), (spec.q, spec.beta)],
        PowerSource { coef: lh, s: spec.q },
    ));
    let init: Vec<f64> = phi1.iter().map(|v| t * v).collect();
    let tol = opts.tolerance(initial_residual(&obj, &init));
    let out = minimize(&obj, init, opts, tol);
    if !out.converged {
        return Err(Error::NonConvergence {
            what: "barrier problem".into(),
            iterations: out.iterations,
            residual: out.residual,
        });
    }
    let positive = space.interior().iter().all(|&i| out.u[i] > 0.0);
    Ok(EigenPair { value: lh, field: Field::new(out.u), positive })
}

/// `C_emb` with `∫|u|^{1-δ} ≤ C_emb ‖∇u‖_p^{1-δ}` for every mesh field:
/// Hölder on the lumped sums and the discrete first `p`-eigenvalue.
pub fn mesh_embedding_constant(spec: &ProblemSpec, space: &DiscreteSpace, opts: &SolverOptions) -> Result<f64> {
    let l1 = eigen_power(space, spec.p, 1.0, opts)?.value;
    let e = (1.0 - spec.delta) / spec.p;
    Ok(space.measure().powf(1.0 - e) * l1.powf(-e))
}
