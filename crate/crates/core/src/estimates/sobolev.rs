use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::discretization::sphere_area;
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::quadrature::{geometric_breaks, GaussLegendre};

use super::bubble::Profile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    pub s: f64,
    pub radius: f64,
    /// `(R, quotient)` for every radius tried.
    pub history: Vec<(f64, f64)>,
}

/// `∫_0^∞ r^a (1 + r^b)^{-c} dr = B((a+1)/b, c - (a+1)/b)/b`.
fn radial_beta(a: f64, b: f64, c: f64) -> f64 {
    let x = (a + 1.0) / b;
    beta(x, c - x) / b
}

/// `(∫|∇U₁|^p, ∫U₁^{p*})` over ℝⁿ in closed form (`C_n = 1`).
pub fn full_space_bubble_norms(spec: &ProblemSpec) -> (f64, f64) {
    let (n, p) = (spec.n as f64, spec.p);
    let s = p / (p - 1.0);
    let b = (n - p) / p;
    let omega = sphere_area(spec.n);
    let grad = omega * (b * s).powf(p) * radial_beta((s - 1.0) * p + n - 1.0, s, (b + 1.0) * p);
    let crit = omega * radial_beta(n - 1.0, s, b * spec.critical_exponent());
    (grad, crit)
}

fn integrate_half_line<F: Fn(f64) -> f64>(g: &GaussLegendre, scale: f64, f: F) -> f64 {
    let x = 1e4 * scale;
    let near = g.integrate_panels(&geometric_breaks(0.0, x, 1e-4 * scale, 1.3), &f);
    let far = g.integrate_panels(&geometric_breaks(0.0, 1.0, 1e-12, 1.5), |s| {
        if s == 0.0 {
            0.0
        } else {
            f(x / s) * x / (s * s)
        }
    });
    near + far
}

/// Sobolev quotient `‖∇U_ε‖_p^p / ‖U_ε‖_{p*}^p` over ℝⁿ by quadrature.
pub fn bubble_sobolev_quotient(spec: &ProblemSpec, eps: f64) -> f64 {
    let prof = Profile::new(spec);
    let g = GaussLegendre::new(10);
    let n1 = spec.n as f64 - 1.0;
    let ps = spec.critical_exponent();
    let omega = sphere_area(spec.n);
    let grad = omega * integrate_half_line(&g, eps, |r| prof.du(eps, r).abs().powf(spec.p) * r.powf(n1));
    let crit = omega * integrate_half_line(&g, eps, |r| prof.u(eps, r).powf(ps) * r.powf(n1));
    grad / crit.powf(spec.p / ps)
}

fn quotient_on_ball(spec: &ProblemSpec, radius: f64, g: &GaussLegendre) -> f64 {
    let prof = Profile::new(spec);
    let n1 = spec.n as f64 - 1.0;
    let ps = spec.critical_exponent();
    let edge = prof.u(1.0, radius);
    let breaks = geometric_breaks(0.0, radius, 1e-3, 1.3);
    let omega = sphere_area(spec.n);
    let grad = omega * g.integrate_panels(&breaks, |r| prof.du(1.0, r).abs().powf(spec.p) * r.powf(n1));
    let crit = omega * g.integrate_panels(&breaks, |r| (prof.u(1.0, r) - edge).max(0.0).powf(ps) * r.powf(n1));
    grad / crit.powf(spec.p / ps)
}

/// `S` from the quotient of `U₁ - U₁(R)` on the ball of radius `R`,
/// doubling `R` from 8 until the relative change drops below `1e-4`.
pub fn estimate_s(spec: &ProblemSpec) -> Result<SobolevEstimate> {
    if spec.n as f64 <= spec.p {
        return Err(Error::InvalidArgument("Sobolev constant needs n > p".into()));
    }
    let g = GaussLegendre::new(10);
    let mut radius = 8.0;
    let mut prev = quotient_on_ball(spec, radius, &g);
    let mut history = vec![(radius, prev)];
    while radius < 1e9 {
        radius *= 2.0;
        let q = quotient_on_ball(spec, radius, &g);
        history.push((radius, q));
        if (q - prev).abs() < 1e-4 * q {
            return Ok(SobolevEstimate { s: q, radius, history });
        }
        prev = q;
    }
    Err(Error::NonConvergence { what: "Sobolev radius refinement".into(), iterations: history.len(), residual: prev })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::DomainDescriptor;
    use std::f64::consts::PI;

    fn spec() -> ProblemSpec {
        ProblemSpec::new(3, 2.0, 1.5, 1.0, 0.1, 0.5, 4.0, DomainDescriptor::unit_ball()).unwrap()
    }

    #[test]
    fn closed_form_constant() {
        let (g, c) = full_space_bubble_norms(&spec());
        let s = g / c.powf(1.0 / 3.0);
        assert!((s - 3.0 * (PI / 2.0).powf(4.0 / 3.0)).abs() < 1e-12 * s);
    }

    #[test]
    fn estimate_decreases_toward_closed_form() {
        let est = estimate_s(&spec()).unwrap();
        for w in est.history.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        let exact = 3.0 * (PI / 2.0).powf(4.0 / 3.0);
        assert!(est.s >= exact && est.s < exact * (1.0 + 5e-4), "{} vs {exact}", est.s);
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let s = spec();
        let base = bubble_sobolev_quotient(&s, 1.0);
        for e in [0.5, 2.0] {
            assert!((bubble_sobolev_quotient(&s, e) / base - 1.0).abs() < 1e-6);
        }
        let (g, c) = full_space_bubble_norms(&s);
        assert!((base / (g / c.powf(1.0 / 3.0)) - 1.0).abs() < 1e-8);
    }
}
