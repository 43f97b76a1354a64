//! Algebra of the fibering map `J_u(t) = I_λ(t u)` on a [`FiberingProfile`]:
//! evaluation, the stationary point of `M_u`, the two Nehari roots, the
//! classification of a field and the closed-form threshold constants.

use serde::{Deserialize, Serialize};

use crate::discretization::FiberingProfile;
use crate::error::{Error, Result};
use crate::problem::{nehari_from_profile, ProblemSpec};
use crate::tolerances::{BISECTION_WIDTH, NEHARI_MEMBER_TOL, NEHARI_ZERO_BAND, ROOT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "N_plus")]
    NPlus,
    #[serde(rename = "N_minus")]
    NMinus,
    #[serde(rename = "N_zero")]
    NZero,
    #[serde(rename = "not_member")]
    NotMember,
}

/// Which Nehari root a projection targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NehariClassification {
    pub verdict: Verdict,
    pub t_lower: Option<f64>,
    pub t_max: f64,
    pub t_upper: Option<f64>,
    pub lambda_threshold_ok: bool,
    pub nehari_first: f64,
    pub nehari_second: f64,
}

/// `(J(t), J'(t), J''(t))`.
pub fn fibering_eval(f: &FiberingProfile, spec: &ProblemSpec, t: f64) -> Result<(f64, f64, f64)> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("fibering parameter must be positive, got {t}")));
    }
    let (p, q, r, d, b, l) = (spec.p, spec.q, spec.r, spec.delta, spec.beta, spec.lambda);
    let e = 1.0 - d;
    let j = t.powf(p) * f.a / p + b * t.powf(q) * f.b / q - l * t.powf(e) * f.c / e - t.powf(r) * f.d / r;
    let j1 = t.powf(p - 1.0) * f.a + b * t.powf(q - 1.0) * f.b - l * t.powf(-d) * f.c - t.powf(r - 1.0) * f.d;
    let j2 = (p - 1.0) * t.powf(p - 2.0) * f.a + b * (q - 1.0) * t.powf(q - 2.0) * f.b
        + l * d * t.powf(-d - 1.0) * f.c
        - (r - 1.0) * t.powf(r - 2.0) * f.d;
    Ok((j, j1, j2))
}

/// `M_u(t) = t^{p-1+δ}A + β t^{q-1+δ}B - t^{r-1+δ}D`.
pub fn m_u(f: &FiberingProfile, spec: &ProblemSpec, t: f64) -> f64 {
    let d = spec.delta;
    t.powf(spec.p - 1.0 + d) * f.a + spec.beta * t.powf(spec.q - 1.0 + d) * f.b - t.powf(spec.r - 1.0 + d) * f.d
}

/// `G_u(t)`, with `M_u'(t) = t^{q+δ-2} G_u(t)`.
pub fn g_u(f: &FiberingProfile, spec: &ProblemSpec, t: f64) -> f64 {
    let (p, q, r, d) = (spec.p, spec.q, spec.r, spec.delta);
    (p - 1.0 + d) * t.powf(p - q) * f.a + spec.beta * (q - 1.0 + d) * f.b - (r - 1.0 + d) * t.powf(r - q) * f.d
}

pub fn m_u_prime(f: &FiberingProfile, spec: &ProblemSpec, t: f64) -> f64 {
    t.powf(spec.q + spec.delta - 2.0) * g_u(f, spec, t)
}

fn g_u_prime(f: &FiberingProfile, spec: &ProblemSpec, t: f64) -> f64 {
    let (p, q, r, d) = (spec.p, spec.q, spec.r, spec.delta);
    (p - 1.0 + d) * (p - q) * t.powf(p - q - 1.0) * f.a - (r - 1.0 + d) * (r - q) * t.powf(r - q - 1.0) * f.d
}

fn check_profile(f: &FiberingProfile) -> Result<()> {
    let ok = [f.a, f.b, f.c, f.d].iter().all(|v| v.is_finite() && *v >= 0.0);
    if !ok {
        return Err(Error::DegenerateProfile("profile entries must be finite and nonnegative".into()));
    }
    if f.a == 0.0 || f.d == 0.0 {
        return Err(Error::DegenerateProfile(format!("requires A > 0 and D > 0 (A = {}, D = {})", f.a, f.d)));
    }
    Ok(())
}

/// Solves `h(t) = 0` for an `h` that is positive at `lo` and negative at
/// `hi` (or the reverse, via `increasing`): bisection to relative width
/// [`BISECTION_WIDTH`], then safeguarded Newton to [`ROOT_TOL`].
fn bracketed_root<H, D>(h: H, dh: D, mut lo: f64, mut hi: f64) -> f64
where
    H: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let s_lo = h(lo).signum();
    for _ in 0..400 {
        if hi - lo <= BISECTION_WIDTH * hi {
            break;
        }
        let mid = if lo > 0.0 && hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if h(mid).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    let mut polished = 0;
    for _ in 0..60 {
        let v = h(t);
        if v == 0.0 {
            break;
        }
        if v.signum() == s_lo {
            lo = t;
        } else {
            hi = t;
        }
        let dv = dh(t);
        let mut next = t - v / dv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - t).abs();
        t = next;
        // one extra step past the tolerance lands at roundoff level
        if step <= ROOT_TOL * t {
            polished += 1;
            if polished == 2 {
                break;
            }
        }
    }
    t
}

/// Unique root of `G_u`, the maximizer of `M_u`.
pub fn find_tmax(f: &FiberingProfile, spec: &ProblemSpec) -> Result<f64> {
    check_profile(f)?;
    let (p, q, r, d) = (spec.p, spec.q, spec.r, spec.delta);
    // G is maximal at t_g where G' = 0, and G(t_g) > G(0+) ≥ 0.
    let t_g = (((p - 1.0 + d) * (p - q) * f.a) / ((r - 1.0 + d) * (r - q) * f.d)).powf(1.0 / (r - p));
    let mut hi = 2.0 * t_g;
    let mut guard = 0;
    while g_u(f, spec, hi) >= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(Error::RootAbsent("no sign change of G_u".into()));
        }
    }
    Ok(bracketed_root(|t| g_u(f, spec, t), |t| g_u_prime(f, spec, t), t_g, hi))
}

/// Roots `t̲ < t_max < t̄` of `M_u(t) = λC`. With `λC = 0` the lower root is
/// reported as the sentinel `0`. A double root (`M_u(t_max) = λC` within
/// roundoff) returns `t_max` twice; no crossing returns `(None, None)`.
pub fn find_roots(f: &FiberingProfile, spec: &ProblemSpec) -> Result<(Option<f64>, Option<f64>)> {
    let tmax = find_tmax(f, spec)?;
    roots_given_tmax(f, spec, tmax)
}

fn roots_given_tmax(f: &FiberingProfile, spec: &ProblemSpec, tmax: f64) -> Result<(Option<f64>, Option<f64>)> {
    let level = spec.lambda * f.c;
    let mmax = m_u(f, spec, tmax);
    let band = ROOT_TOL * mmax.abs().max(level.abs());
    if mmax < level - band {
        return Ok((None, None));
    }
    if (mmax - level).abs() <= band {
        return Ok((Some(tmax), Some(tmax)));
    }
    let h = |t: f64| m_u(f, spec, t) - level;
    let dh = |t: f64| m_u_prime(f, spec, t);
    let lower = if level == 0.0 {
        0.0
    } else {
        let mut lo = 0.5 * tmax;
        let mut guard = 0;
        while h(lo) >= 0.0 {
            lo *= 0.5;
            guard += 1;
            if guard > 3000 || lo == 0.0 {
                return Err(Error::RootAbsent("lower root bracket underflow".into()));
            }
        }
        bracketed_root(h, dh, lo, tmax)
    };
    let mut hi = 2.0 * tmax;
    let mut guard = 0;
    while h(hi) >= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 3000 || !hi.is_finite() {
            return Err(Error::RootAbsent("upper root bracket overflow".into()));
        }
    }
    let upper = bracketed_root(h, dh, tmax, hi);
    Ok((Some(lower), Some(upper)))
}

/// The Nehari scaling factor of the requested branch.
pub fn nehari_scale(f: &FiberingProfile, spec: &ProblemSpec, branch: Branch) -> Result<f64> {
    match (find_roots(f, spec)?, branch) {
        ((Some(t), _), Branch::Plus) if t > 0.0 => Ok(t),
        ((_, Some(t)), Branch::Minus) => Ok(t),
        _ => Err(Error::RootAbsent(format!("no {branch:?} root: λ∫|u|^(1-δ) exceeds max M_u"))),
    }
}

fn abs_terms_first(f: &FiberingProfile, spec: &ProblemSpec) -> f64 {
    f.a + spec.beta * f.b + spec.lambda * f.c + f.d
}

fn abs_terms_second(f: &FiberingProfile, spec: &ProblemSpec) -> f64 {
    (spec.p - 1.0) * f.a + spec.beta * (spec.q - 1.0) * f.b + spec.lambda * spec.delta * f.c + (spec.r - 1.0) * f.d
}

/// Verdict for the field itself (`t = 1`) plus both roots of its ray.
pub fn classify(f: &FiberingProfile, spec: &ProblemSpec) -> Result<NehariClassification> {
    let tmax = find_tmax(f, spec)?;
    let (t_lower, t_upper) = roots_given_tmax(f, spec, tmax)?;
    let (j1, j2) = nehari_from_profile(spec, f);
    let verdict = if j1.abs() > NEHARI_MEMBER_TOL * abs_terms_first(f, spec) {
        Verdict::NotMember
    } else if j2.abs() <= NEHARI_ZERO_BAND * abs_terms_second(f, spec) {
        Verdict::NZero
    } else if j2 > 0.0 {
        Verdict::NPlus
    } else {
        Verdict::NMinus
    };
    Ok(NehariClassification {
        verdict,
        t_lower,
        t_max: tmax,
        t_upper,
        lambda_threshold_ok: spec.lambda * f.c < m_u(f, spec, tmax),
        nehari_first: j1,
        nehari_second: j2,
    })
}

fn check_constants(s: f64, omega: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) || !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Sobolev constant and domain measure must be positive (S = {s}, |Ω| = {omega})"
        )));
    }
    Ok(())
}

/// Closed-form threshold `λ*` below which every ray crosses `N⁺` and `N⁻`.
pub fn lambda_star(spec: &ProblemSpec, s: f64, omega: f64) -> Result<f64> {
    check_constants(s, omega)?;
    let (p, r, d) = (spec.p, spec.r, spec.delta);
    let ps = spec.critical_exponent();
    let first = (r - p) * s.powf((1.0 - d) / p) / ((r - 1.0 + d) * omega.powf(1.0 - (1.0 - d) / ps));
    let base = (p - 1.0 + d) * s.powf(r / p) / ((r - 1.0 + d) * omega.powf(1.0 - r / ps));
    Ok(first * base.powf((p - 1.0 + d) / (r - p)))
}

/// `ν = ((p-1+δ) S^{r/p} / ((r-1+δ)|Ω|^{1-r/p*}))^{1/(r-p)}`, so that
/// `T₀ = ν/‖u‖`.
fn nu(spec: &ProblemSpec, s: f64, omega: f64) -> f64 {
    let (p, r, d) = (spec.p, spec.r, spec.delta);
    let ps = spec.critical_exponent();
    let log = ((p - 1.0 + d).ln() + (r / p) * s.ln() - (r - 1.0 + d).ln() - (1.0 - r / ps) * omega.ln()) / (r - p);
    log.exp()
}

/// Continuum embedding constant `κ` of `∫|u|^{1-δ} ≤ κ ‖u‖^{1-δ}`.
pub fn embedding_constant(spec: &ProblemSpec, s: f64, omega: f64) -> Result<f64> {
    check_constants(s, omega)?;
    let (p, d) = (spec.p, spec.delta);
    let ps = spec.critical_exponent();
    Ok((-(1.0 - d) / p * s.ln() + (1.0 - (1.0 - d) / ps) * omega.ln()).exp())
}

/// `λ*` assembled from the lower bound `M_u(T₀) ≥ ‖u‖^{1-δ}(r-p)/(r-1+δ) ν^{p-1+δ}`
/// and the embedding `λC ≤ λκ‖u‖^{1-δ}`, evaluated in log space.
pub fn lambda_star_via_t0(spec: &ProblemSpec, s: f64, omega: f64) -> Result<f64> {
    let kappa = embedding_constant(spec, s, omega)?;
    let (p, r, d) = (spec.p, spec.r, spec.delta);
    let log = ((r - p) / (r - 1.0 + d)).ln() + (p - 1.0 + d) * nu(spec, s, omega).ln() - kappa.ln();
    Ok(log.exp())
}

/// Lower bound `T₀ ≤ t_max` for the ray through a field with profile `f`.
pub fn t0_lower_bound(f: &FiberingProfile, spec: &ProblemSpec, s: f64, omega: f64) -> Result<f64> {
    check_constants(s, omega)?;
    check_profile(f)?;
    Ok(nu(spec, s, omega) / f.norm(spec))
}

/// `E_λ(u) = ((r-p)A + β(r-q)B)/(r-1+δ) - λC`.
pub fn e_lambda(f: &FiberingProfile, spec: &ProblemSpec) -> f64 {
    ((spec.r - spec.p) * f.a + spec.beta * (spec.r - spec.q) * f.b) / (spec.r - 1.0 + spec.delta) - spec.lambda * f.c
}

/// `(A, D₀)` of the critical-case lower bound `I_λ ≥ -D₀ λ^{p/(p-1+δ)}`.
pub fn lower_bound_constants(spec: &ProblemSpec, s: f64, omega: f64) -> Result<(f64, f64)> {
    check_constants(s, omega)?;
    if !spec.is_critical() {
        return Err(Error::InvalidArgument(format!(
            "lower bound constants need r = p* (r = {}, p* = {})",
            spec.r,
            spec.critical_exponent()
        )));
    }
    let (p, d) = (spec.p, spec.delta);
    let ps = spec.critical_exponent();
    let a = ((p - 1.0 + d) / p)
        * ((ps - 1.0 + d) / (ps - p)).powf(p * (1.0 - d) / (p - 1.0 + d))
        * s.powf(-(1.0 - d) / (p - 1.0 + d))
        * omega.powf(p * (ps - 1.0 + d) / ((p - 1.0 + d) * ps));
    Ok((a, (1.0 / (1.0 - d) - 1.0 / ps) * a))
}

/// Upper bound on `‖u‖` for `u ∈ N⁺` given an embedding constant.
pub fn n_plus_norm_bound(spec: &ProblemSpec, c_emb: f64) -> f64 {
    (spec.lambda * (spec.r - 1.0 + spec.delta) * c_emb / (spec.r - spec.p)).powf(1.0 / (spec.p - 1.0 + spec.delta))
}

/// Lower estimate of the largest λ for which every `N⁺` member satisfies
/// `‖u‖^p ≤ (p*/p)^{p/(p*-p)} S^{p*/(p*-p)}`, obtained from the `N⁺` norm
/// bound with embedding constant `c_emb`.
pub fn lambda_tilde_estimate(spec: &ProblemSpec, s: f64, c_emb: f64) -> Result<f64> {
    check_constants(s, c_emb)?;
    let (p, r, d) = (spec.p, spec.r, spec.delta);
    let ps = spec.critical_exponent();
    let k = (ps / p).powf(p / (ps - p)) * s.powf(ps / (ps - p));
    Ok((r - p) / ((r - 1.0 + d) * c_emb) * k.powf((p - 1.0 + d) / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::DomainDescriptor;
    use proptest::prelude::*;

    fn spec(lambda: f64) -> ProblemSpec {
        ProblemSpec::new(3, 2.0, 1.5, 1.0, lambda, 0.5, 4.0, DomainDescriptor::unit_ball()).unwrap()
    }

    #[test]
    fn eval_closed_form() {
        let f = FiberingProfile::new(1.0, 0.0, 0.0, 1.0);
        let (j, j1, j2) = fibering_eval(&f, &spec(0.1), 1.0).unwrap();
        assert!((j - 0.25).abs() < 1e-15);
        assert_eq!(j1, 0.0);
        assert!((j2 + 2.0).abs() < 1e-15);
        let (j, _, _) = fibering_eval(&f, &spec(0.1), 2.0).unwrap();
        assert!((j - (2.0 - 4.0)).abs() < 1e-14);
        assert!(fibering_eval(&f, &spec(0.1), 0.0).is_err());
    }

    #[test]
    fn tmax_closed_form_and_beta_limit() {
        let f = FiberingProfile::new(1.0, 0.0, 0.3, 1.0);
        let t = find_tmax(&f, &spec(0.1)).unwrap();
        assert!((t - (1.5f64 / 3.5).sqrt()).abs() < 1e-12);
        let f = FiberingProfile::new(1.0, 1.0, 0.3, 1.0);
        let mut prev = f64::INFINITY;
        for k in 1..8 {
            let mut s = spec(0.1);
            s.beta = 10f64.powi(-k);
            let err = (find_tmax(&f, &s).unwrap() - (1.5f64 / 3.5).sqrt()).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-6);
        assert!(find_tmax(&FiberingProfile::new(0.0, 1.0, 1.0, 1.0), &spec(0.1)).is_err());
    }

    #[test]
    fn roots_absent_and_zero_lambda_sentinel() {
        let f = FiberingProfile::new(1.3, 0.7, 0.9, 2.0);
        let s = spec(1.0);
        let tm = find_tmax(&f, &s).unwrap();
        let s2 = spec(2.0 * m_u(&f, &s, tm) / f.c);
        assert_eq!(find_roots(&f, &s2).unwrap(), (None, None));
        let mut s0 = spec(1.0);
        s0.lambda = 0.0;
        let (lo, hi) = find_roots(&f, &s0).unwrap();
        assert_eq!(lo, Some(0.0));
        assert!(m_u(&f, &s0, hi.unwrap()).abs() < 1e-11);
    }

    #[test]
    fn double_root_is_n_zero_and_e_lambda_vanishes() {
        // Choose λ so that λC = M(t_max) and scale the profile to t_max.
        let f0 = FiberingProfile::new(1.3, 0.7, 0.9, 2.0);
        let base = spec(1.0);
        let tm = find_tmax(&f0, &base).unwrap();
        let s = spec(m_u(&f0, &base, tm) / f0.c);
        let f = f0.scaled(tm, &s);
        let c = classify(&f, &s).unwrap();
        assert_eq!(c.verdict, Verdict::NZero);
        assert!(e_lambda(&f, &s).abs() < 1e-9 * (f.a + f.b + f.c));
    }

    #[test]
    fn e_lambda_constructed_zero() {
        let mut s = spec(1.0);
        s.beta = 0.0;
        s.lambda = (s.r - s.p) / (s.r - 1.0 + s.delta);
        assert!(e_lambda(&FiberingProfile::new(1.0, 5.0, 1.0, 3.0), &s).abs() < 1e-15);
    }

    #[test]
    fn lambda_star_paths_and_monotonicity() {
        for (k, r) in [3.0, 4.0, 5.0, 6.0].iter().enumerate() {
            let mut s = spec(0.1);
            s.r = *r;
            s.delta = 0.2 + 0.15 * k as f64;
            let a = lambda_star(&s, 5.478, 4.18879).unwrap();
            let b = lambda_star_via_t0(&s, 5.478, 4.18879).unwrap();
            assert!((a - b).abs() <= 1e-12 * a, "{a} {b}");
            assert!(lambda_star(&s, 5.478, 2.0 * 4.18879).unwrap() < a);
            assert!(lambda_star(&s, 2.0 * 5.478, 4.18879).unwrap() > a);
        }
        assert!(lambda_star(&spec(0.1), 0.0, 1.0).is_err());
    }

    #[test]
    fn lambda_star_vanishes_as_r_approaches_p() {
        let mut prev = f64::INFINITY;
        for k in 1..4 {
            let mut s = spec(0.1);
            s.r = 2.0 + 10f64.powi(-k);
            // S = 1 keeps the base below one for |Ω| > 1.
            let v = lambda_star(&s, 1.0, 1.5).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
        assert!(prev < 1e-100);
    }

    #[test]
    fn lambda_tilde_inverts_norm_bound() {
        let s = spec(1.0);
        let lt = lambda_tilde_estimate(&s, 5.0, 0.7).unwrap();
        let at = s.with_lambda(lt);
        let k = 3f64.powf(2.0 / 4.0) * 5f64.powf(6.0 / 4.0);
        assert!((n_plus_norm_bound(&at, 0.7).powf(2.0) / k - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_constants_ratio() {
        let mut s = spec(0.1);
        assert!(lower_bound_constants(&s, 5.0, 4.0).is_err());
        s.r = 6.0;
        let (a, d0) = lower_bound_constants(&s, 5.0, 4.0).unwrap();
        assert!((d0 - (1.0 / 0.5 - 1.0 / 6.0) * a).abs() <= 1e-14 * d0);
        let (a2, _) = lower_bound_constants(&s, 5.0, 8.0).unwrap();
        assert!(a2 > a && a > 0.0);
    }

    fn profile() -> impl Strategy<Value = FiberingProfile> {
        (0.1f64..10.0, 0.0f64..10.0, 0.1f64..10.0, 0.1f64..10.0)
            .prop_map(|(a, b, c, d)| FiberingProfile::new(a, b, c, d))
    }

    proptest! {
        #[test]
        fn derivative_consistency(f in profile(), t in 0.1f64..10.0) {
            let s = spec(0.7);
            let h = 1e-6 * t;
            let (_, j1, j2) = fibering_eval(&f, &s, t).unwrap();
            let (jp, j1p, _) = fibering_eval(&f, &s, t + h).unwrap();
            let (jm, j1m, _) = fibering_eval(&f, &s, t - h).unwrap();
            prop_assert!(((jp - jm) / (2.0 * h) - j1).abs() <= 1e-6 * (1.0 + j1.abs()) * (1.0 + jp.abs()));
            prop_assert!(((j1p - j1m) / (2.0 * h) - j2).abs() <= 1e-5 * (1.0 + j2.abs()) * (1.0 + j1p.abs()));
            let lhs = j1 * t;
            let rhs = t.powf(2.0) * f.a + t.powf(1.5) * f.b - 0.7 * t.powf(0.5) * f.c - t.powf(4.0) * f.d;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs() + t.powf(4.0) * f.d));
        }

        #[test]
        fn second_derivative_identity(f in profile(), t in 0.05f64..5.0) {
            // J_u'(t) = t^{-δ}(M_u(t) - λC), hence J_u'' + δ J_u'/t = t^{-δ} M_u'.
            let s = spec(0.7);
            let (_, j1, j2) = fibering_eval(&f, &s, t).unwrap();
            let lhs = j2 + s.delta * j1 / t;
            let rhs = t.powf(-s.delta) * m_u_prime(&f, &s, t);
            let scale = abs_terms_second(&f.scaled(t, &s), &s) / (t * t);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
            let (_, j2_ray) = nehari_from_profile(&s, &f.scaled(t, &s));
            prop_assert!((j2_ray - t * t * j2).abs() <= 1e-10 * scale * t * t);
        }

        #[test]
        fn roots_interlace(f in profile(), frac in 0.01f64..0.99) {
            let s0 = spec(1.0);
            let tm = find_tmax(&f, &s0).unwrap();
            let s = spec(frac * m_u(&f, &s0, tm) / f.c);
            let (lo, hi) = find_roots(&f, &s).unwrap();
            let (lo, hi) = (lo.unwrap(), hi.unwrap());
            prop_assert!(0.0 < lo && lo < tm && tm < hi);
            prop_assert!(m_u_prime(&f, &s, lo) > 0.0 && m_u_prime(&f, &s, hi) < 0.0);
            let lvl = s.lambda * f.c;
            // residual at roundoff of the largest term of M_u
            let size = |t: f64| t.powf(1.5) * f.a + t.powf(1.0) * f.b + t.powf(3.5) * f.d;
            prop_assert!((m_u(&f, &s, lo) - lvl).abs() <= 1e-11 * size(lo).max(lvl));
            prop_assert!((m_u(&f, &s, hi) - lvl).abs() <= 1e-11 * size(hi).max(lvl));
            let up = classify(&f.scaled(lo, &s), &s).unwrap();
            prop_assert_eq!(up.verdict, Verdict::NPlus);
            prop_assert!((up.t_lower.unwrap() - 1.0).abs() < 1e-9);
            prop_assert_eq!(classify(&f.scaled(hi, &s), &s).unwrap().verdict, Verdict::NMinus);
            prop_assert_eq!(classify(&f.scaled(0.5 * (lo + tm), &s), &s).unwrap().verdict, Verdict::NotMember);
        }
    }
}
