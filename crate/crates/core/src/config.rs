//! Experiment configuration: a flat TOML document with one table per
//! concern. Every constraint violation is collected, not just the first.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::discretization::sphere_area;
use crate::error::{Error, Result};
use crate::estimates::estimate_s;
use crate::fibering::lambda_star;
use crate::problem::{DomainDescriptor, ProblemSpec, RegularizationSchedule};
use crate::solvers::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Fibering,
    Sweep,
    Verify,
    Bubble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshKind {
    Interval,
    Square,
    RadialBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchChoice {
    Plus,
    Minus,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    /// Absolute λ; exclusive with `lambda_fraction`.
    pub lambda: Option<f64>,
    /// λ as a multiple of λ*.
    pub lambda_fraction: Option<f64>,
    pub delta: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSection {
    pub kind: MeshKind,
    /// Interval length, square side or ball radius.
    pub size: f64,
    pub grading: f64,
    pub resolution: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        Self { kind: MeshKind::RadialBall, size: 1.0, grading: 1.0, resolution: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_factor: f64,
    pub branch: BranchChoice,
}

impl Default for SolverSection {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            rel_tol: o.rel_tol,
            abs_tol: o.abs_tol,
            max_iter: o.max_iter,
            eps_start: 1e-2,
            eps_end: 1e-10,
            eps_factor: 10.0,
            branch: BranchChoice::Both,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Grid bounds as multiples of λ*.
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { min_fraction: 1e-3, max_fraction: 1e3, points: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BubbleSection {
    /// `ε = 2^{-k}` for `k_min ≤ k ≤ k_max`.
    pub k_min: i32,
    pub k_max: i32,
    pub mu: f64,
    pub rho: Vec<f64>,
    pub l: Vec<f64>,
    /// Also run the energy-gap scan (needs `r = p*`).
    pub gap_scan: bool,
    pub gap_eps: f64,
    pub gap_points: usize,
}

impl Default for BubbleSection {
    fn default() -> Self {
        Self {
            k_min: 4,
            k_max: 13,
            mu: 0.5,
            rho: vec![1.2],
            l: vec![1.2, 1.6],
            gap_scan: false,
            gap_eps: 1.0 / 256.0,
            gap_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberingSection {
    /// Field CSV as written by `solve`; the `value` column (or the column
    /// named by `column`) is used. Without it a bump field is used.
    pub field: Option<PathBuf>,
    pub column: Option<String>,
    pub scale: f64,
}

impl Default for FiberingSection {
    fn default() -> Self {
        Self { field: None, column: None, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub problem: ProblemSection,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub bubble: BubbleSection,
    #[serde(default)]
    pub fibering: FiberingSection,
}

/// λ*, the Sobolev estimate and |Ω| used to resolve the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub lambda: f64,
    /// Absent when `n ≤ p` (no critical Sobolev embedding).
    pub lambda_star: Option<f64>,
    pub sobolev: Option<f64>,
    pub omega_measure: f64,
}

impl ExperimentConfig {
    pub fn domain(&self) -> DomainDescriptor {
        match self.mesh.kind {
            MeshKind::Interval => DomainDescriptor::Interval { length: self.mesh.size },
            MeshKind::Square => DomainDescriptor::Square { side: self.mesh.size },
            MeshKind::RadialBall => DomainDescriptor::RadialBall { radius: self.mesh.size, grading: self.mesh.grading },
        }
    }

    /// Continuum measure of the configured domain.
    pub fn omega_measure(&self) -> f64 {
        let s = self.mesh.size;
        match self.mesh.kind {
            MeshKind::Interval => s,
            MeshKind::Square => s * s,
            MeshKind::RadialBall => sphere_area(self.problem.n) * s.powi(self.problem.n as i32) / self.problem.n as f64,
        }
    }

    fn spec_with(&self, lambda: f64) -> ProblemSpec {
        let pr = &self.problem;
        ProblemSpec { n: pr.n, p: pr.p, q: pr.q, beta: pr.beta, lambda, delta: pr.delta, r: pr.r, domain: self.domain() }
    }

    pub fn schedule(&self) -> Result<RegularizationSchedule> {
        let s = &self.solver;
        RegularizationSchedule::geometric(s.eps_start, s.eps_end, s.eps_factor)
    }

    pub fn solver_options(&self) -> Result<SolverOptions> {
        Ok(SolverOptions {
            rel_tol: self.solver.rel_tol,
            abs_tol: self.solver.abs_tol,
            max_iter: self.solver.max_iter,
            schedule: self.schedule()?,
            ..SolverOptions::default()
        })
    }

    /// Resolves λ (absolute or as a fraction of λ*) and returns the spec.
    pub fn resolve(&self) -> Result<(ProblemSpec, Derived)> {
        let probe = self.spec_with(1.0);
        probe.validate()?;
        let omega = self.omega_measure();
        let (sobolev, ls) = if (probe.n as f64) > probe.p {
            let s = estimate_s(&probe)?.s;
            (Some(s), Some(lambda_star(&probe, s, omega)?))
        } else {
            (None, None)
        };
        let lambda = match (self.problem.lambda, self.problem.lambda_fraction, ls) {
            (Some(l), None, _) => l,
            (None, Some(f), Some(ls)) => f * ls,
            (None, Some(_), None) => {
                return Err(Error::InvalidArgument("lambda_fraction needs n > p".into()))
            }
            _ => unreachable!("validated"),
        };
        let spec = self.spec_with(lambda);
        spec.validate()?;
        Ok((spec, Derived { lambda, lambda_star: ls, sobolev, omega_measure: omega }))
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let pr = &self.problem;
        match (pr.lambda, pr.lambda_fraction) {
            (Some(_), Some(_)) => v.push("give either problem.lambda or problem.lambda_fraction, not both".into()),
            (None, None) => v.push("one of problem.lambda or problem.lambda_fraction is required".into()),
            (None, Some(f)) if !(f > 0.0) => v.push(format!("requires lambda_fraction > 0 (got {f})")),
            _ => {}
        }
        // λ is checked by ProblemSpec only when given directly
        let spec = self.spec_with(pr.lambda.unwrap_or(1.0));
        v.extend(spec.violations());
        if self.mesh.resolution < 3 {
            v.push(format!("requires mesh.resolution >= 3 (got {})", self.mesh.resolution));
        }
        let s = &self.solver;
        if !(s.rel_tol > 0.0) || !(s.abs_tol > 0.0) {
            v.push("solver tolerances must be positive".into());
        }
        if s.max_iter == 0 {
            v.push("solver.max_iter must be positive".into());
        }
        if let Err(Error::InvalidArgument(m)) = self.schedule() {
            v.push(format!("regularization schedule: {m}"));
        }
        // every command runs the singular solver at some point
        if s.eps_end > 1e-8 {
            v.push(format!("requires solver.eps_end ≤ 1e-8 (got {})", s.eps_end));
        }
        let sw = &self.sweep;
        if !(sw.min_fraction > 0.0 && sw.min_fraction < sw.max_fraction) {
            v.push("requires 0 < sweep.min_fraction < sweep.max_fraction".into());
        }
        if sw.points < 2 {
            v.push("requires sweep.points >= 2".into());
        }
        let b = &self.bubble;
        if b.k_max - b.k_min < 4 {
            v.push("requires bubble.k_max - bubble.k_min >= 4".into());
        }
        if !(b.mu > 0.0) || 2.0 * b.mu > self.mesh.size {
            v.push("requires 0 < 2·bubble.mu ≤ mesh.size".into());
        }
        if self.command == Command::Bubble && self.mesh.kind != MeshKind::RadialBall {
            v.push("the bubble command needs mesh.kind = \"radial-ball\"".into());
        }
        if !(self.fibering.scale > 0.0) {
            v.push("requires fibering.scale > 0".into());
        }
        v
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let v = cfg.violations();
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::ConfigInvalid(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "command = \"solve\"\n[problem]\nn = 3\np = 2.0\nq = 1.5\nbeta = 1.0\nlambda = 0.1\ndelta = 0.5\nr = 4.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = load_config(MINIMAL).unwrap();
        assert_eq!(c.mesh, MeshSection::default());
        assert_eq!(c.solver.rel_tol, 1e-8);
        assert_eq!(c.schedule().unwrap(), RegularizationSchedule::default());
        assert_eq!(c.seed, 0);
    }

    #[test]
    fn violations_are_all_reported() {
        let text = MINIMAL.replace("q = 1.5", "q = 2.5").replace("r = 4.0", "r = 7.0");
        match load_config(&text) {
            Err(Error::ConfigInvalid(v)) => {
                assert!(v.iter().any(|m| m.contains("1 < q < p")));
                assert!(v.iter().any(|m| m.contains("r ≤ p*")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = MINIMAL.replace("beta = 1.0", "beta = = 1.0");
        match load_config(&text) {
            Err(Error::ConfigParse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        let text = format!("{MINIMAL}bogus = 1\n");
        assert!(matches!(load_config(&text), Err(Error::ConfigParse { .. })));
    }

    #[test]
    fn lambda_fraction_resolves() {
        let text = MINIMAL.replace("lambda = 0.1", "lambda_fraction = 0.3");
        let c = load_config(&text).unwrap();
        let (spec, d) = c.resolve().unwrap();
        assert!((spec.lambda - 0.3 * d.lambda_star.unwrap()).abs() < 1e-15);
        assert!((d.omega_measure - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-14);
    }
}
