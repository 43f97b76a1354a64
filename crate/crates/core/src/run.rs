//! Command dispatch behind the `pqsolve` binary. Each command writes its
//! artifacts into the output directory and returns the run report.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{BranchChoice, Command, Derived, ExperimentConfig};
use crate::discretization::{build_space, norms_profile, DiscreteSpace, Field};
use crate::error::{Error, Result};
use crate::estimates::{
    bubble_norm_asymptotics, dyadic_family, energy_gap_scan, stampacchia_verify, uniform_levels, BubbleQuantity,
    BubbleSpec,
};
use crate::fibering::{classify, e_lambda, fibering_eval, lambda_star_via_t0, Branch};
use crate::problem::{energy, gradient_weak, ProblemSpec};
use crate::report::{
    read_field_csv, write_csv, write_fields_csv, write_json, write_sweep_csv, write_trace_csv, fmt_f, RunReport,
    SolveSummary, Status,
};
use crate::solvers::{
    barrier_phi_hat, bump_field, compare_fields, eigen_q, lower_barrier_constant, minimize_nehari,
    nehari_initial_guess, solve_singular, solve_singular_from, sweep_lambda, Check, SolverOptions, SolverReport,
};

const ORDER_TOL: f64 = 1e-6;
const UNIQUENESS_TOL: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-5;

struct Outcome {
    checks: Vec<Check>,
    results: serde_json::Value,
    non_converged: bool,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    spec: ProblemSpec,
    derived: Derived,
    space: DiscreteSpace,
    opts: SolverOptions,
    out: &'a Path,
}

/// Runs the configured command, writing `report.json` and the command's
/// CSV tables into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let v = cfg.violations();
    if !v.is_empty() {
        return Err(Error::ConfigInvalid(v));
    }
    let (spec, derived) = cfg.resolve()?;
    let space = build_space(&spec.domain, spec.n, cfg.mesh.resolution)?;
    let opts = cfg.solver_options()?;
    fs::create_dir_all(out_dir)?;
    let ctx = Ctx { cfg, spec, derived, space, opts, out: out_dir };
    let o = match cfg.command {
        Command::Solve => cmd_solve(&ctx),
        Command::Fibering => cmd_fibering(&ctx),
        Command::Sweep => cmd_sweep(&ctx),
        Command::Verify => cmd_verify(&ctx),
        Command::Bubble => cmd_bubble(&ctx),
    };
    let o = match o {
        Ok(o) => o,
        Err(e) => {
            // still leave a report behind
            let status = if matches!(e, Error::NonConvergence { .. }) { Status::NonConvergence } else { Status::Error };
            let report = RunReport {
                command: cfg.command,
                status,
                exit_code: e.exit_code(),
                config: cfg.clone(),
                derived,
                checks: vec![],
                results: json!({ "error": e.to_string() }),
            };
            write_json(&out_dir.join("report.json"), &report)?;
            return Ok(report);
        }
    };
    let status = if o.non_converged {
        Status::NonConvergence
    } else if o.checks.iter().all(|c| c.passed) {
        Status::Pass
    } else {
        Status::AssertionFailure
    };
    let report = RunReport { command: cfg.command, status, exit_code: status.exit_code(), config: cfg.clone(), derived, checks: o.checks, results: o.results };
    write_json(&out_dir.join("report.json"), &report)?;
    Ok(report)
}

fn prefixed(prefix: &str, checks: &[Check]) -> Vec<Check> {
    checks.iter().map(|c| Check::new(format!("{prefix}.{}", c.name), c.passed, c.value)).collect()
}

fn branches(choice: BranchChoice) -> Vec<Branch> {
    match choice {
        BranchChoice::Plus => vec![Branch::Plus],
        BranchChoice::Minus => vec![Branch::Minus],
        BranchChoice::Both => vec![Branch::Plus, Branch::Minus],
    }
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Plus => "plus",
        Branch::Minus => "minus",
    }
}

type Solved = (SolverReport, Vec<(Branch, SolverReport)>, Vec<Check>);

/// Singular solution plus the requested Nehari branches, with the
/// comparison `u̲ ≤ u` for each branch.
fn solve_all(ctx: &Ctx) -> Result<Solved> {
    let low = solve_singular(&ctx.spec, &ctx.space, &ctx.opts)?;
    let mut checks = prefixed("singular", &low.checks);
    let mut sols = vec![];
    if !low.converged {
        return Ok((low, sols, checks));
    }
    for b in branches(ctx.cfg.solver.branch) {
        let init = nehari_initial_guess(&ctx.spec, &ctx.space, &low.field, b)?;
        let r = minimize_nehari(&ctx.spec, &ctx.space, b, &init, &ctx.opts)?;
        let name = branch_name(b);
        checks.extend(prefixed(name, &r.checks));
        let cmp = compare_fields(&low.field, &r.field, ORDER_TOL)?;
        checks.push(Check::new(format!("{name}.above_singular"), cmp.ordered, cmp.worst_excess));
        sols.push((b, r));
    }
    Ok((low, sols, checks))
}

fn cmd_solve(ctx: &Ctx) -> Result<Outcome> {
    let (low, sols, checks) = solve_all(ctx)?;
    let mut fields: Vec<(&str, &Field)> = vec![("singular", &low.field)];
    let mut runs: Vec<(&str, &SolverReport)> = vec![("singular", &low)];
    for (b, r) in &sols {
        fields.push((branch_name(*b), &r.field));
        runs.push((branch_name(*b), r));
    }
    write_fields_csv(&ctx.out.join("fields.csv"), &ctx.space, &fields)?;
    write_trace_csv(&ctx.out.join("trace.csv"), &runs)?;
    let non_converged = !low.converged || sols.iter().any(|(_, r)| !r.converged);
    let full: serde_json::Map<String, serde_json::Value> =
        runs.iter().map(|(n, r)| Ok((n.to_string(), serde_json::to_value(r)?))).collect::<Result<_>>()?;
    Ok(Outcome { checks, results: json!({ "solutions": full }), non_converged })
}

fn cmd_fibering(ctx: &Ctx) -> Result<Outcome> {
    let f = &ctx.cfg.fibering;
    let u = match &f.field {
        Some(path) => read_field_csv(path, f.column.as_deref(), &ctx.space)?,
        None => bump_field(&ctx.space),
    }
    .scaled(f.scale);
    let prof = norms_profile(&ctx.spec, &ctx.space, &u)?;
    let cls = classify(&prof, &ctx.spec)?;
    let el = e_lambda(&prof, &ctx.spec);
    let mut checks = vec![];
    if let Some(ls) = ctx.derived.lambda_star {
        if ctx.spec.lambda < ls {
            checks.push(Check::new("two_roots", cls.t_lower.is_some() && cls.t_upper.is_some(), cls.t_max));
            checks.push(Check::new("e_lambda_positive", el > 0.0, el));
        }
    }
    // ray table on a geometric grid bracketing both roots
    let lo = cls.t_lower.unwrap_or(cls.t_max) * 1e-2;
    let hi = cls.t_upper.unwrap_or(cls.t_max) * 1e1;
    let n = 200;
    let rows = (0..n)
        .map(|k| {
            let t = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
            let (j, j1, j2) = fibering_eval(&prof, &ctx.spec, t)?;
            Ok(vec![fmt_f(t), fmt_f(j), fmt_f(j1), fmt_f(j2)])
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(&ctx.out.join("fibering.csv"), &["t", "j", "dj", "d2j"], &rows)?;
    Ok(Outcome {
        checks,
        results: json!({ "profile": prof, "classification": cls, "e_lambda": el }),
        non_converged: false,
    })
}

fn lambda_star_required(ctx: &Ctx) -> Result<f64> {
    ctx.derived
        .lambda_star
        .ok_or_else(|| Error::ConfigInvalid(vec!["this command needs n > p so that λ* is defined".into()]))
}

fn cmd_sweep(ctx: &Ctx) -> Result<Outcome> {
    let ls = lambda_star_required(ctx)?;
    let s = &ctx.cfg.sweep;
    let grid: Vec<f64> = (0..s.points)
        .map(|i| ls * s.min_fraction * (s.max_fraction / s.min_fraction).powf(i as f64 / (s.points - 1) as f64))
        .collect();
    let rep = sweep_lambda(&ctx.spec, &ctx.space, &grid, &ctx.opts)?;
    write_sweep_csv(&ctx.out.join("sweep.csv"), &rep)?;
    let checks = vec![
        Check::new("downward_closed", rep.downward_closed, rep.first_failure.unwrap_or(f64::NAN)),
        Check::new("smallest_lambda_solved", rep.rows[0].converged, rep.rows[0].lambda),
    ];
    Ok(Outcome { checks, results: serde_json::to_value(&rep)?, non_converged: false })
}

fn random_interior(space: &DiscreteSpace, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Field {
    Field::new((0..space.num_nodes()).map(|i| if space.boundary[i] { 0.0 } else { rng.gen_range(lo..hi) }).collect())
}

fn cmd_verify(ctx: &Ctx) -> Result<Outcome> {
    let (spec, space) = (&ctx.spec, &ctx.space);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let mut checks = vec![];
    let mut results = serde_json::Map::new();

    // directional derivatives of the regularized energy
    let eps = 1e-2;
    let base = random_interior(space, &mut rng, 0.5, 1.5);
    let g = gradient_weak(spec, space, &base, eps)?;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let v = random_interior(space, &mut rng, -1.0, 1.0);
        let h = 1e-5;
        let fd = (energy(spec, space, &base.axpy(h, &v), eps)? - energy(spec, space, &base.axpy(-h, &v), eps)?) / (2.0 * h);
        let exact = g.dot(&v);
        worst = worst.max((fd - exact).abs() / exact.abs().max(f64::MIN_POSITIVE));
    }
    checks.push(Check::new("gradient_fd", worst < FD_REL_TOL, worst));

    // λ₁(q,β) is linear in β
    let e1 = eigen_q(spec, space, &ctx.opts)?;
    let mut doubled = spec.clone();
    doubled.beta *= 2.0;
    let e2 = eigen_q(&doubled, space, &ctx.opts)?;
    let dev = (e2.value / e1.value - 2.0).abs() / 2.0;
    checks.push(Check::new("eigen_beta_scaling", dev <= 1e-8, dev));

    if let (Some(ls), Some(s)) = (ctx.derived.lambda_star, ctx.derived.sobolev) {
        let alt = lambda_star_via_t0(spec, s, ctx.derived.omega_measure)?;
        let dev = (alt - ls).abs() / ls;
        checks.push(Check::new("lambda_star_two_paths", dev <= 1e-12, dev));
        if spec.lambda < ls {
            let mut min_e = f64::INFINITY;
            let mut all_roots = true;
            for _ in 0..50 {
                let u = random_interior(space, &mut rng, 0.0, 1.0);
                let prof = norms_profile(spec, space, &u)?;
                let cls = classify(&prof, spec)?;
                all_roots &= cls.t_lower.is_some() && cls.t_upper.is_some();
                min_e = min_e.min(e_lambda(&prof, spec));
            }
            checks.push(Check::new("random_rays_two_roots", all_roots, min_e));
            checks.push(Check::new("random_rays_e_lambda_positive", min_e > 0.0, min_e));
        }
    }

    let (low, sols, solve_checks) = solve_all(ctx)?;
    checks.extend(solve_checks);
    let mut non_converged = !low.converged || sols.iter().any(|(_, r)| !r.converged);
    if low.converged {
        let init = random_interior(space, &mut rng, 0.0, 2.0 * low.field.max_value().max(1e-3));
        let other = solve_singular_from(spec, space, &init, &ctx.opts)?;
        non_converged |= !other.converged;
        let d = other.field.distance_max(&low.field);
        checks.push(Check::new("singular_unique", d <= UNIQUENESS_TOL * low.field.max_value().max(1.0), d));
    }
    let phi = barrier_phi_hat(spec, space, None, &ctx.opts)?.field;
    if let Ok(c) = lower_barrier_constant(&low.field, &phi) {
        for (b, r) in &sols {
            let excess = (0..phi.len()).map(|i| c * phi.values[i] - r.field.values[i]).fold(f64::NEG_INFINITY, f64::max);
            checks.push(Check::new(format!("{}.above_barrier", branch_name(*b)), excess <= ORDER_TOL, excess));
        }
        results.insert("barrier_eps".into(), json!(c));
    } else {
        checks.push(Check::new("singular_positive", false, low.field.max_value()));
    }
    let mut named: Vec<(&str, &Field)> = vec![("singular", &low.field)];
    named.extend(sols.iter().map(|(b, r)| (branch_name(*b), &r.field)));
    for (name, u) in &named {
        let top = (u.max_value() - 1.0).max(0.0) + 1.0;
        let st = stampacchia_verify(spec, space, u, &uniform_levels(top, 40))?;
        checks.push(Check::new(format!("{name}.stampacchia"), st.bound_holds && st.psi_monotone, st.d));
    }
    let mut summaries = vec![SolveSummary::of("singular", &low)];
    summaries.extend(sols.iter().map(|(b, r)| SolveSummary::of(branch_name(*b), r)));
    results.insert("solutions".into(), serde_json::to_value(&summaries)?);
    results.insert("eigen_q".into(), json!(e1.value));
    Ok(Outcome { checks, results: serde_json::Value::Object(results), non_converged })
}

fn cmd_bubble(ctx: &Ctx) -> Result<Outcome> {
    let b = &ctx.cfg.bubble;
    let spec = &ctx.spec;
    let family = dyadic_family(b.k_min..=b.k_max);
    let mut qs = vec![BubbleQuantity::GradientDeviation];
    if spec.is_critical() {
        qs.push(BubbleQuantity::CriticalDeviation);
    }
    qs.extend(b.rho.iter().map(|&rho| BubbleQuantity::Lebesgue { rho }));
    qs.extend(b.l.iter().map(|&l| BubbleQuantity::Gradient { l }));
    let rep = bubble_norm_asymptotics(&family, b.mu, spec, &ctx.space, &qs)?;
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .flat_map(|r| r.table.iter().map(move |(e, v)| vec![r.quantity.clone(), fmt_f(*e), fmt_f(*v)]))
        .collect();
    write_csv(&ctx.out.join("bubble.csv"), &["quantity", "eps", "value"], &rows)?;
    let checks: Vec<Check> = rep
        .rows
        .iter()
        .map(|r| Check::new(format!("slope.{}", r.quantity), r.passed, r.relative_error))
        .collect();
    let mut results = serde_json::Map::new();
    results.insert("scaling".into(), serde_json::to_value(&rep)?);
    let mut non_converged = false;
    if b.gap_scan {
        let s = ctx.derived.sobolev.ok_or_else(|| Error::ConfigInvalid(vec!["gap scan needs n > p".into()]))?;
        let low = solve_singular(spec, &ctx.space, &ctx.opts)?;
        let init = nehari_initial_guess(spec, &ctx.space, &low.field, Branch::Plus)?;
        let plus = minimize_nehari(spec, &ctx.space, Branch::Plus, &init, &ctx.opts)?;
        non_converged = !low.converged || !plus.converged;
        let gap = energy_gap_scan(spec, &ctx.space, &plus.field, &BubbleSpec::new(b.gap_eps, b.mu)?, b.gap_points, s)?;
        // only guaranteed for ε small enough, so it does not set the status
        results.insert("gap".into(), serde_json::to_value(&gap)?);
    }
    Ok(Outcome { checks, results: serde_json::Value::Object(results), non_converged })
}
