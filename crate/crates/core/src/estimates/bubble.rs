//! Truncated Talenti bubbles `u_ε = ζ U_ε` and the scaling of their norms.

use serde::{Deserialize, Serialize};

use crate::discretization::{sphere_area, DiscreteSpace, SpaceKind};
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::quadrature::{geometric_breaks, merge_breaks, GaussLegendre};
use crate::tolerances::SLOPE_REL_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleSpec {
    pub eps: f64,
    pub cutoff_inner: f64,
    pub cutoff_outer: f64,
    pub normalizer: f64,
}

impl BubbleSpec {
    /// Cutoff between `μ` and `2μ`, `C_n = 1`.
    pub fn new(eps: f64, mu: f64) -> Result<Self> {
        let b = Self { eps, cutoff_inner: mu, cutoff_outer: 2.0 * mu, normalizer: 1.0 };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let mut v = Vec::new();
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            v.push(format!("bubble eps must be positive (got {})", self.eps));
        }
        if !(self.cutoff_inner > 0.0) {
            v.push(format!("cutoff radius must be positive (got {})", self.cutoff_inner));
        }
        if self.cutoff_outer != 2.0 * self.cutoff_inner {
            v.push("outer cutoff must be twice the inner cutoff".to_string());
        }
        if !(self.normalizer > 0.0) {
            v.push("normalizer must be positive".to_string());
        }
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(v.join("; ")))
        }
    }
}

/// Radial profile helpers for fixed `(n, p)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Profile {
    n: f64,
    s: f64,
    b: f64,
    a: f64,
}

impl Profile {
    pub fn new(spec: &ProblemSpec) -> Self {
        let (n, p) = (spec.n as f64, spec.p);
        Self { n, s: p / (p - 1.0), b: (n - p) / p, a: (n - p) / (p * (p - 1.0)) }
    }

    /// `U_ε(r)/C_n`.
    pub fn u(&self, eps: f64, r: f64) -> f64 {
        eps.powf(self.a) * (eps.powf(self.s) + r.powf(self.s)).powf(-self.b)
    }

    /// `U_ε'(r)/C_n`.
    pub fn du(&self, eps: f64, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        -eps.powf(self.a) * self.b * self.s * r.powf(self.s - 1.0) * (eps.powf(self.s) + r.powf(self.s)).powf(-self.b - 1.0)
    }

    pub fn dim(&self) -> f64 {
        self.n
    }
}

/// Cubic smoothstep cutoff and its derivative.
fn cutoff(mu: f64, r: f64) -> (f64, f64) {
    if r <= mu {
        (1.0, 0.0)
    } else if r >= 2.0 * mu {
        (0.0, 0.0)
    } else {
        let x = (r - mu) / mu;
        (1.0 - x * x * (3.0 - 2.0 * x), -6.0 * x * (1.0 - x) / mu)
    }
}

/// `u_ε(x) = ζ(|x|) U_ε(|x|)`.
pub fn bubble_eval(bspec: &BubbleSpec, spec: &ProblemSpec, x: [f64; 2]) -> f64 {
    let r = x[0].hypot(x[1]);
    let (z, _) = cutoff(bspec.cutoff_inner, r);
    if z == 0.0 {
        return 0.0;
    }
    bspec.normalizer * z * Profile::new(spec).u(bspec.eps, r)
}

fn bubble_and_derivative(bspec: &BubbleSpec, prof: &Profile, r: f64) -> (f64, f64) {
    let (z, dz) = cutoff(bspec.cutoff_inner, r);
    let c = bspec.normalizer;
    let u = prof.u(bspec.eps, r);
    (c * z * u, c * (dz * u + z * prof.du(bspec.eps, r)))
}

/// Tracked norm of the truncated bubble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BubbleQuantity {
    /// `∫_{ℝⁿ}|∇U₁|^p - ∫|∇u_ε|^p`
    GradientDeviation,
    /// `∫_{ℝⁿ}U₁^{p*} - ∫u_ε^{p*}`
    CriticalDeviation,
    /// `∫u_ε^ρ`
    Lebesgue { rho: f64 },
    /// `∫|∇u_ε|^l`
    Gradient { l: f64 },
}

impl BubbleQuantity {
    pub fn label(&self) -> String {
        match self {
            Self::GradientDeviation => "gradient_p_deviation".into(),
            Self::CriticalDeviation => "critical_deviation".into(),
            Self::Lebesgue { rho } => format!("lebesgue_rho_{rho}"),
            Self::Gradient { l } => format!("gradient_l_{l}"),
        }
    }

    /// Predicted exponent of `ε` in the decay of the quantity.
    pub fn predicted_exponent(&self, spec: &ProblemSpec) -> Result<f64> {
        let (n, p) = (spec.n as f64, spec.p);
        match *self {
            Self::GradientDeviation => Ok((n - p) / (p - 1.0)),
            Self::CriticalDeviation => Ok(n / (p - 1.0)),
            Self::Lebesgue { rho } => {
                let top = n * (p - 1.0) / (n - p);
                if !(rho > p - 1.0 && rho < top) {
                    return Err(Error::InvalidArgument(format!("ρ = {rho} outside ({}, {top})", p - 1.0)));
                }
                Ok(rho * (n - p) / (p * (p - 1.0)))
            }
            Self::Gradient { l } => {
                let split = n * (p - 1.0) / (n - 1.0);
                if !(l >= 1.0 && l < p) {
                    return Err(Error::InvalidArgument(format!("l = {l} outside [1, p)")));
                }
                if (l - split).abs() <= 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "no exponent is predicted at the boundary case l = n(p-1)/(n-1) = {split}"
                    )));
                }
                if l < split {
                    Ok(l * (n - p) / (p * (p - 1.0)))
                } else {
                    Ok(n - (n / p) * l)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub quantity: String,
    pub predicted: f64,
    pub fitted: f64,
    pub fitted_coarse: f64,
    pub relative_error: f64,
    pub passed: bool,
    /// `(ε, value)` pairs over the whole family.
    pub table: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub cutoff_inner: f64,
    pub eps_family: Vec<f64>,
    /// Number of largest-ε points left out of the fits.
    pub dropped: usize,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (lx, ly) = (x.ln(), y.abs().ln());
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

struct Quadrature<'a> {
    gauss: GaussLegendre,
    prof: Profile,
    omega: f64,
    radii: &'a [f64],
}

impl Quadrature<'_> {
    /// Panels on `[0, 2μ]`: the mesh radii plus `μ`, `2μ` and a geometric
    /// refinement around the bubble core.
    fn core_breaks(&self, bspec: &BubbleSpec) -> Vec<f64> {
        let mu = bspec.cutoff_inner;
        let mut extra = geometric_breaks(0.0, 2.0 * mu, bspec.eps / 64.0, 1.5);
        extra.extend_from_slice(self.radii);
        merge_breaks(&[0.0, mu, 2.0 * mu], &extra)
    }

    fn over_core<F: Fn(f64, f64, f64) -> f64>(&self, bspec: &BubbleSpec, lo: f64, f: F) -> f64 {
        // lo is 0 or μ, both of which are breakpoints
        let breaks: Vec<f64> = self.core_breaks(bspec).into_iter().filter(|r| *r >= lo).collect();
        self.omega
            * self.gauss.integrate_panels(&breaks, |r| {
                let (u, du) = bubble_and_derivative(bspec, &self.prof, r);
                f(u, du, r) * r.powf(self.prof.dim() - 1.0)
            })
    }

    /// `∫_{|x|>μ}` of an integrand of the untruncated bubble, with
    /// `r = 2μ/s` on the unbounded part.
    fn untruncated_outside<F: Fn(f64, f64) -> f64>(&self, bspec: &BubbleSpec, f: F) -> f64 {
        let mu = bspec.cutoff_inner;
        let c = bspec.normalizer;
        let n1 = self.prof.dim() - 1.0;
        let g = |r: f64| f(c * self.prof.u(bspec.eps, r), c * self.prof.du(bspec.eps, r)) * r.powf(n1);
        let near_breaks: Vec<f64> = self.core_breaks(bspec).into_iter().filter(|r| *r >= mu).collect();
        let near = self.gauss.integrate_panels(&near_breaks, &g);
        let s_breaks = geometric_breaks(0.0, 1.0, 1e-12, 2.0);
        let far = self.gauss.integrate_panels(&s_breaks, |s| {
            if s == 0.0 {
                0.0
            } else {
                g(2.0 * mu / s) * 2.0 * mu / (s * s)
            }
        });
        self.omega * (near + far)
    }

    fn quantity(&self, spec: &ProblemSpec, bspec: &BubbleSpec, q: BubbleQuantity) -> f64 {
        let mu = bspec.cutoff_inner;
        let p = spec.p;
        match q {
            BubbleQuantity::GradientDeviation => {
                let full = self.untruncated_outside(bspec, |_, du| du.abs().powf(p));
                full - self.over_core(bspec, mu, |_, du, _| du.abs().powf(p))
            }
            BubbleQuantity::CriticalDeviation => {
                let ps = spec.critical_exponent();
                let full = self.untruncated_outside(bspec, |u, _| u.powf(ps));
                full - self.over_core(bspec, mu, |u, _, _| u.powf(ps))
            }
            BubbleQuantity::Lebesgue { rho } => self.over_core(bspec, 0.0, |u, _, _| u.powf(rho)),
            BubbleQuantity::Gradient { l } => self.over_core(bspec, 0.0, |_, du, _| du.abs().powf(l)),
        }
    }
}

/// Fits the decay exponent of each quantity over an `ε` family on a radial
/// space, dropping the two largest `ε`. The mesh radii serve as quadrature
/// panels; the fit is repeated on every other radius and a disagreement
/// beyond 5% of the prediction is reported as quadrature-dominated.
pub fn bubble_norm_asymptotics(
    family: &[f64],
    mu: f64,
    spec: &ProblemSpec,
    space: &DiscreteSpace,
    quantities: &[BubbleQuantity],
) -> Result<ScalingReport> {
    if space.kind != SpaceKind::RadialBall {
        return Err(Error::InvalidArgument("bubble asymptotics need a radial space".into()));
    }
    let radius = space.coords.iter().map(|c| c[0]).fold(0.0, f64::max);
    if 2.0 * mu > radius * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!("cutoff ball 2μ = {} exceeds the domain", 2.0 * mu)));
    }
    let dropped = 2;
    if family.len() < dropped + 3 {
        return Err(Error::InvalidArgument("ε family needs at least five members".into()));
    }
    let mut eps: Vec<f64> = family.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let bspecs = eps.iter().map(|&e| BubbleSpec::new(e, mu)).collect::<Result<Vec<_>>>()?;
    let radii: Vec<f64> = space.coords.iter().map(|c| c[0]).collect();
    let coarse: Vec<f64> = radii.iter().step_by(2).cloned().collect();
    let make = |r| Quadrature { gauss: GaussLegendre::new(8), prof: Profile::new(spec), omega: sphere_area(spec.n), radii: r };
    let fine_q = make(&radii);
    let coarse_q = make(&coarse);
    let mut rows = Vec::new();
    for &q in quantities {
        let predicted = q.predicted_exponent(spec)?;
        let table: Vec<(f64, f64)> = bspecs.iter().map(|b| (b.eps, fine_q.quantity(spec, b, q))).collect();
        let coarse_table: Vec<(f64, f64)> = bspecs.iter().map(|b| (b.eps, coarse_q.quantity(spec, b, q))).collect();
        let fitted = loglog_slope(&table[dropped..]);
        let fitted_coarse = loglog_slope(&coarse_table[dropped..]);
        if !fitted.is_finite() || (fitted - fitted_coarse).abs() > 0.05 * predicted.abs() {
            return Err(Error::QuadratureDominated(format!(
                "{}: slope {fitted} on the mesh, {fitted_coarse} on the coarsened mesh",
                q.label()
            )));
        }
        let relative_error = (fitted - predicted).abs() / predicted.abs();
        rows.push(ScalingRow {
            quantity: q.label(),
            predicted,
            fitted,
            fitted_coarse,
            relative_error,
            passed: relative_error < SLOPE_REL_TOL,
            table,
        });
    }
    Ok(ScalingReport { cutoff_inner: mu, eps_family: eps, dropped, rows })
}

/// `ε = 2^{-k}` for `k` in `ks`.
pub fn dyadic_family(ks: std::ops::RangeInclusive<i32>) -> Vec<f64> {
    ks.map(|k| 2f64.powi(-k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_space;
    use crate::problem::DomainDescriptor;

    fn spec() -> ProblemSpec {
        ProblemSpec::new(3, 2.0, 1.5, 1.0, 0.1, 0.5, 4.0, DomainDescriptor::unit_ball()).unwrap()
    }

    #[test]
    fn bubble_values() {
        let s = spec();
        let b = BubbleSpec::new(0.1, 0.25).unwrap();
        // U_ε(0) = C ε^{(n-p)/(p(p-1))} / ε^{(n-p)/(p-1)}
        let direct = 0.1f64.powf(0.5) / 0.1f64.powf(1.0);
        assert!((bubble_eval(&b, &s, [0.0, 0.0]) - direct).abs() < 1e-14);
        assert_eq!(bubble_eval(&b, &s, [0.5, 0.0]), 0.0);
        assert_eq!(bubble_eval(&b, &s, [0.7, 0.1]), 0.0);
        let mut prev = f64::INFINITY;
        for k in 0..1000 {
            let v = bubble_eval(&b, &s, [0.5 * k as f64 / 999.0, 0.0]);
            assert!(v <= prev);
            prev = v;
        }
        assert!(BubbleSpec::new(0.0, 0.25).is_err());
    }

    #[test]
    fn derivative_matches_differences() {
        let s = spec();
        let b = BubbleSpec::new(0.05, 0.3).unwrap();
        let prof = Profile::new(&s);
        for &r in &[0.01, 0.2, 0.35, 0.5] {
            let h = 1e-6;
            let fd = (bubble_and_derivative(&b, &prof, r + h).0 - bubble_and_derivative(&b, &prof, r - h).0) / (2.0 * h);
            let d = bubble_and_derivative(&b, &prof, r).1;
            assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn boundary_exponent_refused() {
        let s = spec();
        assert!(BubbleQuantity::Gradient { l: 1.5 }.predicted_exponent(&s).is_err());
        assert!((BubbleQuantity::Gradient { l: 1.6 }.predicted_exponent(&s).unwrap() - 0.6).abs() < 1e-12);
        assert!((BubbleQuantity::Gradient { l: 1.2 }.predicted_exponent(&s).unwrap() - 0.6).abs() < 1e-12);
        assert!((BubbleQuantity::Lebesgue { rho: 1.2 }.predicted_exponent(&s).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..6).map(|k| (2f64.powi(-k), 3.0 * 2f64.powi(-k).powf(0.7))).collect();
        assert!((loglog_slope(&pts) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn scaling_on_coarse_mesh() {
        let s = spec();
        let sp = build_space(&DomainDescriptor::unit_ball(), 3, 512).unwrap();
        let rep = bubble_norm_asymptotics(
            &dyadic_family(4..=13),
            0.5,
            &s,
            &sp,
            &[BubbleQuantity::GradientDeviation, BubbleQuantity::Lebesgue { rho: 1.2 }, BubbleQuantity::Gradient { l: 1.2 }],
        )
        .unwrap();
        assert!(rep.all_passed(), "{:#?}", rep.rows.iter().map(|r| (&r.quantity, r.fitted)).collect::<Vec<_>>());
    }
}
