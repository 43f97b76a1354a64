//! Problem data for `-Δ_p u - β Δ_q u = λ u^{-δ} + u^{r-1}` with Dirichlet
//! data, the energy `I_λ`, its weak gradient and the Nehari derivatives.

use serde::{Deserialize, Serialize};

use crate::discretization::{norms_profile, DiscreteSpace, Field, FiberingProfile};
use crate::error::{Error, Result};
use crate::functional::{Functional, SingularSource};

/// Bounded domain. The interval is a 1D surrogate usable with any `n`;
/// the square fixes `n = 2`; the radial ball is the radially reduced
/// ball in ℝⁿ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainDescriptor {
    Interval { length: f64 },
    Square { side: f64 },
    RadialBall { radius: f64, grading: f64 },
}

impl DomainDescriptor {
    pub fn unit_interval() -> Self {
        Self::Interval { length: 1.0 }
    }

    pub fn unit_square() -> Self {
        Self::Square { side: 1.0 }
    }

    pub fn unit_ball() -> Self {
        Self::RadialBall { radius: 1.0, grading: 1.0 }
    }
}

/// Scalar parameters of the problem plus its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub lambda: f64,
    pub delta: f64,
    pub r: f64,
    pub domain: DomainDescriptor,
}

impl ProblemSpec {
    /// Builds and validates a spec.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        p: f64,
        q: f64,
        beta: f64,
        lambda: f64,
        delta: f64,
        r: f64,
        domain: DomainDescriptor,
    ) -> Result<Self> {
        let spec = Self { n, p, q, beta, lambda, delta, r, domain };
        spec.validate()?;
        Ok(spec)
    }

    /// Critical Sobolev exponent `p* = np/(n-p)`.
    pub fn critical_exponent(&self) -> f64 {
        let n = self.n as f64;
        n * self.p / (n - self.p)
    }

    pub fn is_critical(&self) -> bool {
        (self.r - self.critical_exponent()).abs() <= 1e-12 * self.r
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// Every violated standing hypothesis, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let finite = [self.p, self.q, self.beta, self.lambda, self.delta, self.r]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            out.push("all parameters must be finite".to_string());
            return out;
        }
        if self.n < 2 {
            out.push(format!("requires n >= 2 (got n = {})", self.n));
        }
        if !(1.0 < self.q && self.q < self.p) {
            out.push(format!("requires 1 < q < p (got q = {}, p = {})", self.q, self.p));
        }
        if (self.n as f64) <= self.p {
            out.push(format!("requires n > p (got n = {}, p = {})", self.n, self.p));
        } else {
            let ps = self.critical_exponent();
            if self.r > ps * (1.0 + 1e-12) {
                out.push(format!("requires r ≤ p* (got r = {}, p* = {ps})", self.r));
            }
        }
        if self.r <= self.p {
            out.push(format!("requires p < r (got p = {}, r = {})", self.p, self.r));
        }
        if self.delta == 1.0 {
            out.push("δ = 1 is unsupported; requires 0 < δ < 1".to_string());
        } else if !(0.0 < self.delta && self.delta < 1.0) {
            out.push(format!("requires 0 < δ < 1 (got δ = {})", self.delta));
        }
        if self.lambda <= 0.0 {
            out.push(format!("requires λ > 0 (got λ = {})", self.lambda));
        }
        if self.beta <= 0.0 {
            out.push(format!("requires β > 0 (got β = {})", self.beta));
        }
        match self.domain {
            DomainDescriptor::Square { .. } if self.n != 2 => {
                out.push(format!("square domain requires n = 2 (got n = {})", self.n));
            }
            DomainDescriptor::Interval { length } | DomainDescriptor::Square { side: length }
                if !(length > 0.0) =>
            {
                out.push("domain size must be positive".to_string());
            }
            DomainDescriptor::RadialBall { radius, grading } => {
                if !(radius > 0.0) {
                    out.push("ball radius must be positive".to_string());
                }
                if !(grading >= 1.0) {
                    out.push("radial grading must be >= 1".to_string());
                }
            }
            _ => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(v))
        }
    }
}

/// Strictly decreasing regularization levels for `u^{-δ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizationSchedule {
    eps_values: Vec<f64>,
}

impl RegularizationSchedule {
    pub fn new(eps_values: Vec<f64>) -> Result<Self> {
        if eps_values.is_empty() {
            return Err(Error::InvalidArgument("empty regularization schedule".into()));
        }
        if eps_values.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument("regularization values must be positive".into()));
        }
        if eps_values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument(
                "regularization schedule must be strictly decreasing".into(),
            ));
        }
        Ok(Self { eps_values })
    }

    /// `start, start/factor, ...` down to `end` inclusive.
    pub fn geometric(start: f64, end: f64, factor: f64) -> Result<Self> {
        if !(factor > 1.0) || !(end > 0.0) || end > start {
            return Err(Error::InvalidArgument("bad geometric schedule".into()));
        }
        let mut v = Vec::new();
        let mut e = start;
        while e > end * (1.0 + 1e-9) {
            v.push(e);
            e /= factor;
        }
        v.push(end);
        Self::new(v)
    }

    pub fn eps_values(&self) -> &[f64] {
        &self.eps_values
    }

    pub fn terminal_eps(&self) -> f64 {
        *self.eps_values.last().unwrap()
    }
}

impl Default for RegularizationSchedule {
    /// `1e-2, 1e-3, ..., 1e-10`.
    fn default() -> Self {
        Self::geometric(1e-2, 1e-10, 10.0).unwrap()
    }
}

/// Smoothed `t^{-δ}`: `(t₊ + ε)^{-δ}`.
pub fn regularize_singular(t: f64, delta: f64, eps_reg: f64) -> f64 {
    (t.max(0.0) + eps_reg).powf(-delta)
}

/// `I_λ(u)`; with `eps_reg > 0` the `(1-δ)`-power term is replaced by
/// `∫((u₊+ε)^{1-δ} - ε^{1-δ})/(1-δ)`.
pub fn energy(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field, eps_reg: f64) -> Result<f64> {
    space.check(u)?;
    if !(eps_reg >= 0.0) {
        return Err(Error::InvalidArgument(format!("eps_reg must be >= 0, got {eps_reg}")));
    }
    Ok(full_functional(spec, space, eps_reg).value(u.as_slice()))
}

/// Discrete weak residual `⟨I_λ'(u), φ_i⟩` for every nodal basis function,
/// with the singular term regularized; entries at Dirichlet nodes are 0.
/// It is the exact gradient of [`energy`] at the same `eps_reg`.
pub fn gradient_weak(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field, eps_reg: f64) -> Result<Field> {
    space.check(u)?;
    if !(eps_reg > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gradient needs a positive regularization, got {eps_reg}"
        )));
    }
    Ok(Field::new(full_functional(spec, space, eps_reg).gradient(u.as_slice())))
}

/// `(J_u'(1), J_u''(1))` from the fibering profile of `u`.
pub fn nehari_derivatives(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field) -> Result<(f64, f64)> {
    let prof = norms_profile(spec, space, u)?;
    if prof.is_zero() {
        return Err(Error::ZeroField);
    }
    Ok(nehari_from_profile(spec, &prof))
}

pub(crate) fn nehari_from_profile(spec: &ProblemSpec, f: &FiberingProfile) -> (f64, f64) {
    let j1 = f.a + spec.beta * f.b - spec.lambda * f.c - f.d;
    let j2 = (spec.p - 1.0) * f.a + spec.beta * (spec.q - 1.0) * f.b + spec.lambda * spec.delta * f.c
        - (spec.r - 1.0) * f.d;
    (j1, j2)
}

/// `I_λ` as a [`Functional`] at regularization `eps_reg`.
pub(crate) fn full_functional<'a>(
    spec: &ProblemSpec,
    space: &'a DiscreteSpace,
    eps_reg: f64,
) -> Functional<'a, SingularSource> {
    Functional::new(
        space,
        vec![(spec.p, 1.0), (spec.q, spec.beta)],
        SingularSource {
            lambda: spec.lambda,
            delta: spec.delta,
            eps: eps_reg,
            power: Some(spec.r),
        },
    )
}

/// `Ĩ_λ` (no `u^{r-1}` term).
pub(crate) fn singular_functional<'a>(
    spec: &ProblemSpec,
    space: &'a DiscreteSpace,
    eps_reg: f64,
) -> Functional<'a, SingularSource> {
    Functional::new(
        space,
        vec![(spec.p, 1.0), (spec.q, spec.beta)],
        SingularSource {
            lambda: spec.lambda,
            delta: spec.delta,
            eps: eps_reg,
            power: None,
        },
    )
}

/// `Ĩ_λ(u)`, the energy of the purely singular problem.
pub fn singular_energy(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field, eps_reg: f64) -> Result<f64> {
    space.check(u)?;
    Ok(singular_functional(spec, space, eps_reg).value(u.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_space, interpolate};

    fn spec3() -> ProblemSpec {
        ProblemSpec::new(3, 2.0, 1.5, 1.0, 0.1, 0.5, 4.0, DomainDescriptor::unit_ball()).unwrap()
    }

    #[test]
    fn validation_lists_every_violation() {
        let bad = ProblemSpec {
            n: 3,
            p: 2.0,
            q: 2.5,
            beta: -1.0,
            lambda: 0.0,
            delta: 1.0,
            r: 7.0,
            domain: DomainDescriptor::unit_ball(),
        };
        let v = bad.violations();
        assert!(v.iter().any(|m| m.contains("1 < q < p")));
        assert!(v.iter().any(|m| m.contains("r ≤ p*")));
        assert!(v.iter().any(|m| m.contains("δ = 1 is unsupported")));
        assert!(v.iter().any(|m| m.contains("λ > 0")));
        assert!(v.iter().any(|m| m.contains("β > 0")));
        assert_eq!(spec3().critical_exponent(), 6.0);
    }

    #[test]
    fn schedule_invariants() {
        let s = RegularizationSchedule::default();
        assert_eq!(s.eps_values().len(), 9);
        assert_eq!(s.terminal_eps(), 1e-10);
        assert!(RegularizationSchedule::new(vec![1e-2, 1e-2]).is_err());
        assert!(RegularizationSchedule::new(vec![1e-2, -1.0]).is_err());
    }

    #[test]
    fn regularized_singular_term() {
        assert_eq!(regularize_singular(0.0, 0.5, 1e-4), 1e-4f64.powf(-0.5));
        assert!((regularize_singular(1.0, 0.5, 1e-8) - 1.0).abs() < 1e-8);
        let mut last = f64::INFINITY;
        for k in 0..=1000 {
            let v = regularize_singular(10.0 * k as f64 / 1000.0, 0.3, 1e-3);
            assert!(v <= last && v > 0.0 && v <= 1e-3f64.powf(-0.3));
            last = v;
        }
        // relative error bounded by δ ε / t far from the singularity
        let (t, d, e) = (5.0, 0.5, 1e-3);
        let rel = (regularize_singular(t, d, e) / t.powf(-d) - 1.0).abs();
        assert!(rel <= d * e / t);
    }

    #[test]
    fn zero_field_energy_and_nehari() {
        let sp = build_space(&DomainDescriptor::unit_ball(), 3, 33).unwrap();
        let z = sp.zero_field();
        assert_eq!(energy(&spec3(), &sp, &z, 0.0).unwrap(), 0.0);
        assert!(matches!(nehari_derivatives(&spec3(), &sp, &z), Err(Error::ZeroField)));
        assert!(energy(&spec3(), &sp, &Field::zeros(3), 0.0).is_err());
        assert!(gradient_weak(&spec3(), &sp, &z, 0.0).is_err());
    }

    #[test]
    fn zero_field_zero_residual_without_forcing() {
        // λ-term weight removed: the zero field is an exact critical point.
        let sp = build_space(&DomainDescriptor::unit_interval(), 3, 17).unwrap();
        let mut s = spec3();
        s.lambda = 0.0;
        let g = gradient_weak(&s, &sp, &sp.zero_field(), 1e-6).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn nehari_derivatives_match_profile_substitution() {
        let s = spec3();
        let (j1, j2) = nehari_from_profile(&s, &FiberingProfile::new(1.0, 1.0, 0.0, 1.0));
        assert_eq!(j1, 1.0);
        assert!((j2 - (s.p - 1.0 + s.q - 1.0 - (s.r - 1.0))).abs() < 1e-15);
        let sp = build_space(&DomainDescriptor::unit_ball(), 3, 40).unwrap();
        let u = interpolate(&sp, |x| (1.0 - x[0] * x[0]) * (1.0 + x[0]), true).unwrap();
        let (a1, a2) = nehari_derivatives(&s, &sp, &u).unwrap();
        let v = u.as_slice();
        let a = crate::discretization::gradient_power(&sp, v, s.p);
        let b = crate::discretization::gradient_power(&sp, v, s.q);
        let c = crate::discretization::nodal_power(&sp, v, 1.0 - s.delta);
        let d = crate::discretization::nodal_power(&sp, v, s.r);
        assert!((a1 - (a + s.beta * b - s.lambda * c - d)).abs() < 1e-12);
        assert!((a2 - ((s.p - 1.0) * a + s.beta * (s.q - 1.0) * b + s.lambda * s.delta * c - (s.r - 1.0) * d)).abs() < 1e-12);
    }
}
