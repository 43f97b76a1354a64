use serde::{Deserialize, Serialize};

use crate::discretization::{interpolate, DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::problem::{energy, ProblemSpec};

use super::bubble::{bubble_eval, BubbleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// First doubling with `I(u + R₀u_ε) < I(u)`.
    pub r0: f64,
    pub threshold: f64,
    pub max_gap: f64,
    pub t_at_max: f64,
    /// `(t, I(u + t u_ε) - I(u))`.
    pub rows: Vec<(f64, f64)>,
    pub passed: bool,
}

/// Scans `t ↦ I_λ(u + t u_ε) - I_λ(u)` on `[0, R₀]` and compares its
/// maximum with `S^{n/p}/n`.
pub fn energy_gap_scan(
    spec: &ProblemSpec,
    space: &DiscreteSpace,
    u_lambda: &Field,
    bspec: &BubbleSpec,
    n_t: usize,
    sobolev: f64,
) -> Result<GapReport> {
    space.check(u_lambda)?;
    bspec.validate()?;
    if !spec.is_critical() {
        return Err(Error::InvalidArgument("the energy gap scan needs r = p*".into()));
    }
    if n_t < 2 {
        return Err(Error::InvalidArgument("need at least two t values".into()));
    }
    let bubble = interpolate(space, |x| bubble_eval(bspec, spec, x), true)?;
    let base = energy(spec, space, u_lambda, 0.0)?;
    let diff = |t: f64| -> Result<f64> { Ok(energy(spec, space, &u_lambda.axpy(t, &bubble), 0.0)? - base) };
    let mut r0 = 1.0;
    let mut found = false;
    for _ in 0..80 {
        if diff(r0)? < 0.0 {
            found = true;
            break;
        }
        r0 *= 2.0;
    }
    if !found {
        return Err(Error::NonConvergence { what: "R₀ scan".into(), iterations: 80, residual: r0 });
    }
    let rows = (0..n_t)
        .map(|i| {
            let t = r0 * i as f64 / (n_t - 1) as f64;
            diff(t).map(|d| (t, d))
        })
        .collect::<Result<Vec<_>>>()?;
    let (t_at_max, max_gap) = rows.iter().cloned().fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let threshold = sobolev.powf(spec.n as f64 / spec.p) / spec.n as f64;
    Ok(GapReport { r0, threshold, max_gap, t_at_max, rows, passed: max_gap < threshold })
}
