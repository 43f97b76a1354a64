use serde::{Deserialize, Serialize};

use crate::discretization::{DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StampacchiaReport {
    pub gamma: f64,
    pub alpha: f64,
    /// `(k, ψ(k))` on the requested grid.
    pub psi: Vec<(f64, f64)>,
    pub psi_monotone: bool,
    pub vanishes_above_max: bool,
    /// Smallest `C` with `ψ(h) ≤ C ψ(k)^γ/(h-k)^{p*}` for all `h > k ≥ 0`.
    pub c_fitted: f64,
    /// The same supremum restricted to pairs from the grid.
    pub c_grid: f64,
    pub d: f64,
    pub max_u: f64,
    pub bound_holds: bool,
}

/// Level-set decay of `(u - 1)₊`: `ψ(k) = |{u - 1 ≥ k}|` (lumped measure),
/// the exact recursion constant over all level pairs, the extinction level
/// `d = (C 2^{p*γ/(γ-1)} ψ(0)^{γ-1})^{1/p*}` and the check `max u ≤ 1 + d`.
pub fn stampacchia_verify(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field, k_grid: &[f64]) -> Result<StampacchiaReport> {
    space.check(u)?;
    if u.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("field has non-finite values".into()));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) || k_grid.iter().any(|k| *k < 0.0) {
        return Err(Error::InvalidArgument("level grid must be nonnegative and increasing".into()));
    }
    let ps = spec.critical_exponent();
    let gamma = 0.5 * (1.0 + ps / spec.p);
    let alpha = ps / (1.0 - gamma * spec.p / ps);
    let v: Vec<f64> = u.values.iter().map(|x| x - 1.0).collect();
    let psi_at = |k: f64| -> f64 {
        v.iter().zip(&space.lumped).filter(|(x, _)| **x >= k).map(|(_, w)| *w).sum()
    };
    let psi: Vec<(f64, f64)> = k_grid.iter().map(|&k| (k, psi_at(k))).collect();
    let psi_monotone = psi.windows(2).all(|w| w[1].1 <= w[0].1);
    if !psi_monotone {
        return Err(Error::InvalidArgument("ψ is not monotone on the grid".into()));
    }
    let max_u = u.max_value();
    let vanishes_above_max = psi.iter().filter(|(k, _)| *k > max_u - 1.0).all(|(_, s)| *s == 0.0);

    // distinct positive levels L_1 < ... < L_m with L_0 = 0
    let mut levels: Vec<f64> = v.iter().cloned().filter(|x| *x > 0.0).collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    levels.dedup();
    let mut all = vec![0.0];
    all.extend(levels);
    let psis: Vec<f64> = all.iter().map(|&k| psi_at(k)).collect();
    let psi0 = psis[0];
    let mut c: f64 = 0.0;
    for j in 1..all.len() {
        // k = 0 exactly
        if psi0 > 0.0 {
            c = c.max(psis[j] * all[j].powf(ps) / psi0.powf(gamma));
        }
        // k just above L_i: ψ(k) = ψ(L_{i+1}), h - k → L_j - L_i
        for i in 0..j {
            let base = psis[i + 1];
            if base > 0.0 {
                c = c.max(psis[j] * (all[j] - all[i]).powf(ps) / base.powf(gamma));
            }
        }
    }
    let mut c_grid: f64 = 0.0;
    for a in 0..psi.len() {
        for b in a + 1..psi.len() {
            let (k, sk) = psi[a];
            let (h, sh) = psi[b];
            if sk > 0.0 {
                c_grid = c_grid.max(sh * (h - k).powf(ps) / sk.powf(gamma));
            }
        }
    }
    let d = (c * 2f64.powf(ps * gamma / (gamma - 1.0)) * psi0.powf(gamma - 1.0)).powf(1.0 / ps);
    Ok(StampacchiaReport {
        gamma,
        alpha,
        psi,
        psi_monotone,
        vanishes_above_max,
        c_fitted: c,
        c_grid,
        d,
        max_u,
        bound_holds: max_u <= 1.0 + d,
    })
}

/// Uniform grid of `count` levels on `[0, top]`.
pub fn uniform_levels(top: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| top * i as f64 / (count - 1) as f64).collect()
}
