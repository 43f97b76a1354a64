//! Projected, preconditioned descent with Armijo backtracking.

use crate::error::Result;
use crate::tolerances::ENERGY_ROUNDOFF;

use super::{SolverOptions, TracePoint};

/// Objective plus feasible set for [`minimize`].
pub(crate) trait Objective {
    fn value(&self, u: &[f64]) -> f64;
    /// Magnitude used to judge roundoff in energy differences.
    fn scale(&self, u: &[f64]) -> f64;
    fn gradient(&self, u: &[f64]) -> Vec<f64>;
    /// Nodes that may move: interior, not pinned by an active bound.
    fn free(&self, u: &[f64], g: &[f64]) -> Vec<bool>;
    fn direction(&self, u: &[f64], g: &[f64], free: &[bool]) -> Vec<f64>;
    /// Maps a trial point back to the feasible set.
    fn project(&self, u: Vec<f64>) -> Result<Vec<f64>>;
}

pub(crate) struct Outcome {
    pub u: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diverged: bool,
    pub trace: Vec<TracePoint>,
}

pub(crate) fn residual(g: &[f64], free: &[bool]) -> f64 {
    g.iter().zip(free).filter(|(_, f)| **f).map(|(v, _)| v.abs()).fold(0.0, f64::max)
}

/// Initial projected-gradient residual of `obj` at `u`.
pub(crate) fn initial_residual<O: Objective>(obj: &O, u: &[f64]) -> f64 {
    let g = obj.gradient(u);
    residual(&g, &obj.free(u, &g))
}

/// Runs descent from a feasible `u` until the projected gradient drops to
/// `tol`, the budget is spent, no step is accepted, or the iterate exceeds
/// the divergence cap.
pub(crate) fn minimize<O: Objective>(obj: &O, u: Vec<f64>, opts: &SolverOptions, tol: f64) -> Outcome {
    let mut u = u;
    let mut e = obj.value(&u);
    let mut trace = Vec::new();
    let out = |u: Vec<f64>, residual: f64, iterations: usize, converged: bool, diverged: bool, trace| {
        Outcome { u, residual, iterations, converged, diverged, trace }
    };
    let mut it = 0;
    loop {
        let g = obj.gradient(&u);
        let free = obj.free(&u, &g);
        let res = residual(&g, &free);
        trace.push(TracePoint { energy: e, residual: res });
        if res <= tol {
            return out(u, res, it, true, false, trace);
        }
        let too_big = opts
            .divergence_cap
            .map(|cap| u.iter().any(|v| v.abs() > cap))
            .unwrap_or(false);
        if !e.is_finite() || !res.is_finite() || too_big {
            return out(u, res, it, false, true, trace);
        }
        if it >= opts.max_iter {
            return out(u, res, it, false, false, trace);
        }
        it += 1;

        let mut d = obj.direction(&u, &g, &free);
        if dot(&g, &d) >= 0.0 {
            d = g.iter().zip(&free).map(|(v, f)| if *f { -v } else { 0.0 }).collect();
        }
        let scale = obj.scale(&u).max(e.abs());
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut roundoff_checked = false;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            if let Ok(cand) = obj.project(trial) {
                let slope: f64 = g.iter().zip(cand.iter().zip(&u)).map(|(gi, (c, x))| gi * (c - x)).sum();
                let ec = obj.value(&cand);
                if ec.is_finite() && slope < 0.0 && ec <= e + opts.armijo_slope * slope {
                    accepted = Some((cand, ec));
                    break;
                }
                if !roundoff_checked && ec.is_finite() && (ec - e).abs() <= ENERGY_ROUNDOFF * scale {
                    // energy differences are at roundoff level: accept if
                    // the residual still improves
                    roundoff_checked = true;
                    let gc = obj.gradient(&cand);
                    if residual(&gc, &obj.free(&cand, &gc)) < res {
                        accepted = Some((cand, ec));
                        break;
                    }
                }
            }
            alpha *= opts.backtrack;
        }
        match accepted {
            Some((cand, ec)) => {
                u = cand;
                e = ec;
            }
            None => return out(u, res, it, false, false, trace),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
