use std::f64::consts::PI;

use pq_singular::estimates::full_space_bubble_norms;
use pq_singular::fibering::{
    classify, fibering_eval, find_roots, find_tmax, lambda_star, m_u_prime, n_plus_norm_bound, nehari_scale,
    t0_lower_bound,
};
use pq_singular::solvers::{mesh_embedding_constant, project_to_branch, SolverOptions};
use pq_singular::{
    build_space, energy, norms_profile, Branch, DiscreteSpace, DomainDescriptor, Field, FiberingProfile, ProblemSpec,
};
use proptest::prelude::*;

fn ball() -> (ProblemSpec, DiscreteSpace) {
    let spec = ProblemSpec::new(3, 2.0, 1.5, 1.0, 0.2, 0.5, 4.0, DomainDescriptor::unit_ball()).unwrap();
    let space = build_space(&spec.domain, 3, 96).unwrap();
    (spec, space)
}

fn spaces() -> Vec<(ProblemSpec, DiscreteSpace)> {
    let mk = |n, dom: DomainDescriptor, res| {
        let spec = ProblemSpec::new(n, 1.8, 1.4, 0.7, 0.3, 0.4, 3.0, dom.clone()).unwrap();
        let space = build_space(&dom, n, res).unwrap();
        (spec, space)
    };
    vec![
        mk(3, DomainDescriptor::unit_interval(), 30),
        mk(2, DomainDescriptor::unit_square(), 6),
        mk(3, DomainDescriptor::unit_ball(), 30),
    ]
}

/// Smooth nonnegative field from a few radial-ish modes in the first coordinate.
fn smooth_field(space: &DiscreteSpace, coefs: &[f64]) -> Field {
    let xmax = space.coords.iter().map(|c| c[0]).fold(0.0, f64::max);
    Field::new(
        (0..space.num_nodes())
            .map(|i| {
                if space.boundary[i] {
                    return 0.0;
                }
                let s = space.coords[i][0] / xmax;
                let y = space.coords[i][1];
                let v: f64 = coefs.iter().enumerate().map(|(k, a)| a * ((k as f64 + 0.5) * PI * s).cos()).sum();
                (1.0 + 0.3 * y) * v.abs().max(0.05) * (1.0 - s * s).max(0.0) * s.max(1.0 - s).min(1.0)
            })
            .collect(),
    )
}

fn nodal(space: &DiscreteSpace, vals: &[f64]) -> Field {
    Field::new(
        (0..space.num_nodes())
            .map(|i| if space.boundary[i] { 0.0 } else { vals[i % vals.len()] })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn energy_along_a_ray_is_the_fibering_map(vals in prop::collection::vec(0.01f64..2.0, 7), t in 0.05f64..20.0) {
        for (spec, space) in spaces() {
            let u = nodal(&space, &vals);
            let prof = norms_profile(&spec, &space, &u).unwrap();
            let (j, _, _) = fibering_eval(&prof, &spec, t).unwrap();
            let e = energy(&spec, &space, &u.scaled(t), 0.0).unwrap();
            let scale = prof.scaled(t, &spec);
            let size = scale.a + scale.b + spec.lambda * scale.c + scale.d;
            prop_assert!((e - j).abs() <= 1e-12 * size, "{:?}: {e} vs {j}", space.kind);
        }
    }

    #[test]
    fn regularized_energy_does_not_increase_as_eps_decreases(vals in prop::collection::vec(0.0f64..2.0, 5)) {
        for (spec, space) in spaces() {
            let u = nodal(&space, &vals);
            let mut last = f64::INFINITY;
            for eps in [1e-1, 1e-2, 1e-4, 1e-8, 0.0] {
                let e = energy(&spec, &space, &u, eps).unwrap();
                prop_assert!(e <= last + 1e-14 * last.abs().max(1.0), "eps {eps}: {e} > {last}");
                last = e;
            }
        }
    }

    #[test]
    fn energy_on_the_nehari_set_reduces_to_the_profile(vals in prop::collection::vec(0.01f64..2.0, 6)) {
        let (spec, space) = ball();
        let u = nodal(&space, &vals);
        for br in [Branch::Plus, Branch::Minus] {
            let w = project_to_branch(&spec, &space, &u, br).unwrap();
            let f = norms_profile(&spec, &space, &w).unwrap();
            let (p, q, r, d) = (spec.p, spec.q, spec.r, spec.delta);
            let reduced = (1.0 / p - 1.0 / r) * f.a + spec.beta * (1.0 / q - 1.0 / r) * f.b
                - spec.lambda * (1.0 / (1.0 - d) - 1.0 / r) * f.c;
            let e = energy(&spec, &space, &w, 0.0).unwrap();
            let size = f.a + spec.beta * f.b + spec.lambda * f.c + f.d;
            prop_assert!((e - reduced).abs() <= 1e-10 * size, "{br:?}: {e} vs {reduced}");
        }
    }

    #[test]
    fn mesh_fields_respect_the_sobolev_inequality(coefs in prop::collection::vec(-1.0f64..1.0, 4)) {
        let (spec, space) = ball();
        let (grad, crit) = full_space_bubble_norms(&spec);
        let ps = spec.critical_exponent();
        let s = grad / crit.powf(spec.p / ps);
        let u = smooth_field(&space, &coefs);
        let mut cspec = spec.clone();
        cspec.r = ps;
        let f = norms_profile(&cspec, &space, &u).unwrap();
        let quotient = f.a / f.d.powf(spec.p / ps);
        prop_assert!(quotient >= s - 1e-4, "quotient {quotient} below S = {s}");
    }

    #[test]
    fn t0_bounds_tmax_from_below(vals in prop::collection::vec(0.01f64..2.0, 6)) {
        let (spec, space) = ball();
        let (grad, crit) = full_space_bubble_norms(&spec);
        let s = grad / crit.powf(spec.p / spec.critical_exponent());
        let f = norms_profile(&spec, &space, &nodal(&space, &vals)).unwrap();
        let t0 = t0_lower_bound(&f, &spec, s, space.measure()).unwrap();
        let tmax = find_tmax(&f, &spec).unwrap();
        prop_assert!(t0 <= tmax, "T0 = {t0} > t_max = {tmax}");
    }

    #[test]
    fn lower_nehari_point_has_negative_energy(a in 0.01f64..100.0, b in 0.01f64..100.0, c in 0.01f64..100.0, d in 0.01f64..100.0) {
        let (spec, _) = ball();
        let f = FiberingProfile::new(a, b, c, d);
        if let (Some(tl), Some(_)) = find_roots(&f, &spec).unwrap() {
            let (j, _, j2) = fibering_eval(&f, &spec, tl).unwrap();
            prop_assert!(j < 0.0 && j2 > 0.0, "J(t̲) = {j}, J″(t̲) = {j2}");
        }
    }

    #[test]
    fn upper_root_moves_with_lambda_as_the_implicit_function_predicts(a in 0.1f64..10.0, b in 0.1f64..10.0, c in 0.1f64..10.0, d in 0.1f64..10.0) {
        let (mut spec, _) = ball();
        let f = FiberingProfile::new(a, b, c, d);
        let tmax = find_tmax(&f, &spec).unwrap();
        let m = pq_singular::fibering::m_u(&f, &spec, tmax);
        spec.lambda = 0.5 * m / c;
        let h = 1e-6 * spec.lambda;
        let tu = |l: f64| find_roots(&f, &spec.with_lambda(l)).unwrap().1.unwrap();
        let fd = (tu(spec.lambda + h) - tu(spec.lambda - h)) / (2.0 * h);
        let t = tu(spec.lambda);
        // M_u(t̄(λ)) = λC  ⇒  dt̄/dλ = C / M_u'(t̄)
        let exact = c / m_u_prime(&f, &spec, t);
        prop_assert!((fd - exact).abs() <= 1e-4 * exact.abs(), "{fd} vs {exact}");
    }
}

#[test]
fn n_plus_members_obey_the_norm_bound() {
    let (spec, space) = ball();
    let c_emb = mesh_embedding_constant(&spec, &space, &SolverOptions::default()).unwrap();
    let bound = n_plus_norm_bound(&spec, c_emb);
    let mut worst: f64 = 0.0;
    for k in 0..40 {
        let coefs = [1.0, 0.3 * (k as f64).sin(), 0.2 * (k as f64 * 0.7).cos(), 0.1 * k as f64 / 40.0];
        let u = smooth_field(&space, &coefs).scaled(0.1 + k as f64);
        let f = norms_profile(&spec, &space, &u).unwrap();
        let t = nehari_scale(&f, &spec, Branch::Plus).unwrap();
        let norm = f.scaled(t, &spec).norm(&spec);
        worst = worst.max(norm / bound);
        assert!(norm <= bound, "‖t̲u‖ = {norm} > bound {bound}");
    }
    assert!(worst > 0.0);
}

#[test]
fn lambda_star_admits_two_roots_on_sampled_fields() {
    let (spec0, space) = ball();
    let (grad, crit) = full_space_bubble_norms(&spec0);
    let s = grad / crit.powf(spec0.p / spec0.critical_exponent());
    let ls = lambda_star(&spec0, s, space.measure()).unwrap();
    let spec = spec0.with_lambda(0.99 * ls);
    for k in 0..30 {
        let coefs = [1.0, 0.5 * (k as f64).sin(), -0.4 * (k as f64 * 1.3).cos()];
        let u = smooth_field(&space, &coefs).scaled(10f64.powf(k as f64 / 10.0 - 1.5));
        let f = norms_profile(&spec, &space, &u).unwrap();
        let cls = classify(&f, &spec).unwrap();
        assert!(cls.t_lower.is_some() && cls.t_upper.is_some(), "field {k}: {cls:?}");
        assert!(cls.lambda_threshold_ok);
    }
}
