use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// Smallest `L` found on the final grid.
    pub l_fitted: f64,
    pub argmax_a: f64,
    pub argmax_b: f64,
    pub grid_points: usize,
    pub refinements: usize,
}

/// `F(a, b) = (a+b)^{1-δ}/(1-δ) - a^{1-δ}/(1-δ) - b a^{-δ}`, which is `≤ 0`.
fn defect(delta: f64, a: f64, b: f64) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let e = 1.0 - delta;
    // (a+b)^e - a^e written as a^e((1+b/a)^e - 1) to keep small b accurate
    let x = b / a;
    a.powf(e) * ((e * x.ln_1p()).exp_m1()) / e - b * a.powf(-delta)
}

/// Smallest `L` with `λF(a, b) ≥ -L b^ρ` on a geometric grid
/// `a ∈ [m, 10³m]`, `b ∈ (0, 10³]`, refined until `L` changes by under 1%.
pub fn singular_inequality_check(n: usize, p: f64, delta: f64, lambda: f64, m: f64, rho: f64) -> Result<InequalityReport> {
    let nf = n as f64;
    if !(nf > p && p > 1.0) {
        return Err(Error::InvalidArgument("requires 1 < p < n".into()));
    }
    let top = nf * (p - 1.0) / (nf - p);
    if !(rho > p - 1.0 && rho < top) {
        return Err(Error::InvalidArgument(format!("ρ = {rho} outside ({}, {top})", p - 1.0)));
    }
    if !(m > 0.0) || !(lambda > 0.0) || !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidArgument("requires m > 0, λ > 0, 0 ≤ δ < 1".into()));
    }
    let mut count = 64;
    let mut prev: Option<f64> = None;
    for refinements in 0..10 {
        let (mut best, mut ba, mut bb, mut bj) = (0.0f64, m, 0.0, 0);
        for i in 0..count {
            let a = m * 1e3f64.powf(i as f64 / (count - 1) as f64);
            for j in 0..count {
                // b from 1e-6 to 1e3
                let b = 1e-6 * 1e9f64.powf(j as f64 / (count - 1) as f64);
                let ratio = -lambda * defect(delta, a, b) / b.powf(rho);
                if ratio > best {
                    best = ratio;
                    ba = a;
                    bb = b;
                    bj = j;
                }
            }
        }
        if !best.is_finite() {
            return Err(Error::InvalidArgument("inequality ratio is not finite".into()));
        }
        if best > 0.0 && bj == 0 {
            // the ratio grows as b → 0 (ρ > 2): no finite L
            return Err(Error::InvalidArgument(format!("ratio is maximal at the smallest b; L is not finite for ρ = {rho}")));
        }
        if let Some(p0) = prev {
            if (best - p0).abs() <= 0.01 * best.max(f64::MIN_POSITIVE) || best == 0.0 {
                return Ok(InequalityReport { l_fitted: best, argmax_a: ba, argmax_b: bb, grid_points: count * count, refinements });
            }
        }
        prev = Some(best);
        count *= 2;
    }
    Err(Error::NonConvergence { what: "inequality grid refinement".into(), iterations: 10, residual: prev.unwrap_or(0.0) })
}
