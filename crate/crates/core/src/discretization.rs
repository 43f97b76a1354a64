//! Piecewise-linear function spaces on the interval, the unit square and
//! the radially reduced ball, with the integrals that feed the fibering
//! algebra.
//!
//! Gradient terms are integrated exactly element by element (the gradient
//! of a P1 field is constant on each element). Nodal terms such as
//! `|u|^{1-δ}` and `|u|^r` use mass-lumped weights `w_i = ∫ φ_i`, so every
//! power-law integral is a weighted sum of nodal powers and scales exactly
//! under `u ↦ t·u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{DomainDescriptor, ProblemSpec};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    Interval,
    Square,
    RadialBall,
}

/// One simplex: up to three nodes with constant basis gradients.
#[derive(Debug, Clone)]
pub struct Element {
    pub nodes: [usize; 3],
    pub dphi: [[f64; 2]; 3],
    /// Measure of the element; for the radial reduction this already
    /// includes the `ω_{n-1} r^{n-1}` Jacobian.
    pub weight: f64,
    pub local: usize,
}

impl Element {
    #[inline]
    pub fn gradient(&self, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..self.local {
            let v = u[self.nodes[k]];
            g[0] += v * self.dphi[k][0];
            g[1] += v * self.dphi[k][1];
        }
        g
    }
}

/// Mesh, Dirichlet mask and quadrature for one of the supported domains.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    pub kind: SpaceKind,
    pub resolution: usize,
    /// Ambient dimension `n` (the radial Jacobian uses it).
    pub ambient_dim: usize,
    pub coords: Vec<[f64; 2]>,
    pub boundary: Vec<bool>,
    pub elements: Vec<Element>,
    /// Mass-lumped nodal weights.
    pub lumped: Vec<f64>,
    interior: Vec<usize>,
    interior_index: Vec<usize>,
}

pub const NOT_INTERIOR: usize = usize::MAX;

/// Surface measure of the unit sphere in ℝⁿ.
pub fn sphere_area(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * std::f64::consts::PI.powf(nf / 2.0) / statrs::function::gamma::gamma(nf / 2.0)
}

/// Builds the discrete space for `domain`. `resolution` is the node count
/// per axis (vertices per side for the square).
pub fn build_space(domain: &DomainDescriptor, n: usize, resolution: usize) -> Result<DiscreteSpace> {
    if resolution < 3 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be at least 3 nodes per axis, got {resolution}"
        )));
    }
    match *domain {
        DomainDescriptor::Interval { length } => {
            check_positive("interval length", length)?;
            let coords: Vec<f64> = (0..resolution)
                .map(|i| length * i as f64 / (resolution - 1) as f64)
                .collect();
            Ok(line_space(SpaceKind::Interval, n, &coords, |a, b| b - a, true))
        }
        DomainDescriptor::Square { side } => {
            check_positive("square side", side)?;
            if n != 2 {
                return Err(Error::InvalidArgument(format!(
                    "square domain lives in dimension 2, problem has n = {n}"
                )));
            }
            Ok(square_space(side, resolution))
        }
        DomainDescriptor::RadialBall { radius, grading } => {
            check_positive("ball radius", radius)?;
            if !(grading >= 1.0 && grading.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "radial grading must be >= 1, got {grading}"
                )));
            }
            if n < 2 {
                return Err(Error::InvalidArgument(format!("radial ball needs n >= 2, got {n}")));
            }
            let m = resolution - 1;
            let coords: Vec<f64> = (0..resolution)
                .map(|i| radius * (i as f64 / m as f64).powf(grading))
                .collect();
            let omega = sphere_area(n);
            let nf = n as f64;
            let space = line_space(
                SpaceKind::RadialBall,
                n,
                &coords,
                |a, b| omega * (b.powf(nf) - a.powf(nf)) / nf,
                false,
            );
            Ok(space)
        }
    }
}

fn check_positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
    }
}

fn line_space<W>(kind: SpaceKind, n: usize, x: &[f64], elem_weight: W, left_dirichlet: bool) -> DiscreteSpace
where
    W: Fn(f64, f64) -> f64,
{
    let nodes = x.len();
    let radial = kind == SpaceKind::RadialBall;
    let omega = if radial { sphere_area(n) } else { 1.0 };
    // φ_i r^{n-1} is a polynomial of degree n on each element.
    let rule = GaussLegendre::new(n / 2 + 2);
    let mut lumped = vec![0.0; nodes];
    let mut elements = Vec::with_capacity(nodes - 1);
    for i in 0..nodes - 1 {
        let (a, b) = (x[i], x[i + 1]);
        let h = b - a;
        elements.push(Element {
            nodes: [i, i + 1, i + 1],
            dphi: [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]],
            weight: elem_weight(a, b),
            local: 2,
        });
        if radial {
            let nm1 = (n - 1) as i32;
            lumped[i] += omega * rule.integrate(a, b, |r| (b - r) / h * r.powi(nm1));
            lumped[i + 1] += omega * rule.integrate(a, b, |r| (r - a) / h * r.powi(nm1));
        } else {
            lumped[i] += 0.5 * h;
            lumped[i + 1] += 0.5 * h;
        }
    }
    let mut boundary = vec![false; nodes];
    boundary[nodes - 1] = true;
    if left_dirichlet {
        boundary[0] = true;
    }
    let coords = x.iter().map(|&v| [v, 0.0]).collect();
    DiscreteSpace::assemble(kind, nodes, n, coords, boundary, elements, lumped)
}

/// Crisscross triangulation: every cell is split into four triangles
/// through an added centre node.
fn square_space(side: f64, m: usize) -> DiscreteSpace {
    let h = side / (m - 1) as f64;
    let vid = |i: usize, j: usize| j * m + i;
    let cells = m - 1;
    let cid = |i: usize, j: usize| m * m + j * cells + i;
    let mut coords = Vec::with_capacity(m * m + cells * cells);
    let mut boundary = Vec::with_capacity(coords.capacity());
    for j in 0..m {
        for i in 0..m {
            coords.push([i as f64 * h, j as f64 * h]);
            boundary.push(i == 0 || j == 0 || i == m - 1 || j == m - 1);
        }
    }
    for j in 0..cells {
        for i in 0..cells {
            coords.push([(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]);
            boundary.push(false);
        }
    }
    let mut elements = Vec::with_capacity(4 * cells * cells);
    let mut lumped = vec![0.0; coords.len()];
    for j in 0..cells {
        for i in 0..cells {
            let c = cid(i, j);
            let corners = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)];
            for k in 0..4 {
                let tri = [corners[k], corners[(k + 1) % 4], c];
                let el = triangle(&coords, tri);
                for &v in &tri {
                    lumped[v] += el.weight / 3.0;
                }
                elements.push(el);
            }
        }
    }
    DiscreteSpace::assemble(SpaceKind::Square, m, 2, coords, boundary, elements, lumped)
}

fn triangle(coords: &[[f64; 2]], tri: [usize; 3]) -> Element {
    let p: Vec<[f64; 2]> = tri.iter().map(|&v| coords[v]).collect();
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut dphi = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        dphi[k] = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
    }
    Element {
        nodes: tri,
        dphi,
        weight: 0.5 * det.abs(),
        local: 3,
    }
}

impl DiscreteSpace {
    fn assemble(
        kind: SpaceKind,
        resolution: usize,
        n: usize,
        coords: Vec<[f64; 2]>,
        boundary: Vec<bool>,
        elements: Vec<Element>,
        lumped: Vec<f64>,
    ) -> Self {
        let mut interior = Vec::new();
        let mut interior_index = vec![NOT_INTERIOR; coords.len()];
        for (i, &b) in boundary.iter().enumerate() {
            if !b {
                interior_index[i] = interior.len();
                interior.push(i);
            }
        }
        Self {
            kind,
            resolution,
            ambient_dim: n,
            coords,
            boundary,
            elements,
            lumped,
            interior,
            interior_index,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Position of node `i` among interior unknowns, or [`NOT_INTERIOR`].
    pub fn interior_index(&self, i: usize) -> usize {
        self.interior_index[i]
    }

    /// Radial coordinate (distance to the origin for the square).
    pub fn radius_of(&self, i: usize) -> f64 {
        let [x, y] = self.coords[i];
        x.hypot(y)
    }

    /// `r^{n-1}` at node `i` for the radial reduction, 1 otherwise.
    pub fn radial_weight(&self, i: usize) -> f64 {
        match self.kind {
            SpaceKind::RadialBall => self.coords[i][0].powi(self.ambient_dim as i32 - 1),
            _ => 1.0,
        }
    }

    /// ∫ of a nodal field with the lumped rule.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.lumped.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Domain measure `|Ω|` as `∫ 1`.
    pub fn measure(&self) -> f64 {
        self.lumped.iter().sum()
    }

    pub fn check(&self, u: &Field) -> Result<()> {
        if u.len() != self.num_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_nodes(),
                found: u.len(),
            });
        }
        Ok(())
    }

    pub fn zero_field(&self) -> Field {
        Field::zeros(self.num_nodes())
    }

    /// Largest element diameter along the first axis (diagnostic only).
    pub fn max_spacing(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| {
                let xs: Vec<f64> = e.nodes[..e.local].iter().map(|&v| self.coords[v][0]).collect();
                let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0, f64::max)
    }
}

/// Nodal coefficient vector of a P1 field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self { values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, t: f64) -> Field {
        Field::new(self.values.iter().map(|v| t * v).collect())
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `max_i |self_i - other_i|`.
    pub fn distance_max(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn axpy(&self, a: f64, other: &Field) -> Field {
        Field::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        )
    }

    pub fn positive_part(&self) -> Field {
        Field::new(self.values.iter().map(|v| v.max(0.0)).collect())
    }

    pub fn dot(&self, other: &Field) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

/// The four integrals that determine the fibering map `t ↦ I_λ(t u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberingProfile {
    /// `‖∇u‖_p^p`
    pub a: f64,
    /// `‖∇u‖_q^q`
    pub b: f64,
    /// `∫|u|^{1-δ}`
    pub c: f64,
    /// `∫|u|^r`
    pub d: f64,
}

impl FiberingProfile {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// Profile of `t·u` given the profile of `u`.
    pub fn scaled(&self, t: f64, spec: &ProblemSpec) -> Self {
        Self {
            a: t.powf(spec.p) * self.a,
            b: t.powf(spec.q) * self.b,
            c: t.powf(1.0 - spec.delta) * self.c,
            d: t.powf(spec.r) * self.d,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0 && self.c == 0.0 && self.d == 0.0
    }

    /// `‖u‖ = ‖∇u‖_p`.
    pub fn norm(&self, spec: &ProblemSpec) -> f64 {
        self.a.powf(1.0 / spec.p)
    }
}

/// `∫|∇u|^s` over all elements.
pub fn gradient_power(space: &DiscreteSpace, u: &[f64], s: f64) -> f64 {
    space
        .elements
        .iter()
        .map(|e| {
            let g = e.gradient(u);
            let m = g[0].hypot(g[1]);
            if m == 0.0 {
                0.0
            } else {
                e.weight * m.powf(s)
            }
        })
        .sum()
}

/// `∫|u|^s` with the lumped rule.
pub fn nodal_power(space: &DiscreteSpace, u: &[f64], s: f64) -> f64 {
    space
        .lumped
        .iter()
        .zip(u)
        .map(|(w, v)| if *v == 0.0 { 0.0 } else { w * v.abs().powf(s) })
        .sum()
}

/// Assembles `(A, B, C, D)` for `u`.
pub fn norms_profile(spec: &ProblemSpec, space: &DiscreteSpace, u: &Field) -> Result<FiberingProfile> {
    space.check(u)?;
    let v = u.as_slice();
    Ok(FiberingProfile {
        a: gradient_power(space, v, spec.p),
        b: gradient_power(space, v, spec.q),
        c: nodal_power(space, v, 1.0 - spec.delta),
        d: nodal_power(space, v, spec.r),
    })
}

/// Samples `f` at the nodes. With `conforming`, Dirichlet nodes are set to 0.
pub fn interpolate<F>(space: &DiscreteSpace, f: F, conforming: bool) -> Result<Field>
where
    F: Fn([f64; 2]) -> f64,
{
    let mut values = Vec::with_capacity(space.num_nodes());
    for (i, &x) in space.coords.iter().enumerate() {
        if conforming && space.boundary[i] {
            values.push(0.0);
            continue;
        }
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFinite { node: i, x });
        }
        values.push(v);
    }
    Ok(Field::new(values))
}
