//! Discrete functionals of the form
//! `Σ_e w_e Σ_k c_k |∇u|^{s_k}/s_k + Σ_i w_i F(i, u_i)`
//! with exact gradients and a positive definite preconditioner built from
//! the stiffness Hessian plus the convex part of the nodal curvature.

use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::discretization::{DiscreteSpace, NOT_INTERIOR};

/// Nodal potential density `F(i, t)`.
pub(crate) trait NodalPotential {
    fn value(&self, i: usize, t: f64) -> f64;
    fn derivative(&self, i: usize, t: f64) -> f64;
    /// Nonnegative curvature kept in the preconditioner.
    fn curvature(&self, _i: usize, _t: f64) -> f64 {
        0.0
    }
    /// Magnitude of the largest individual contribution (roundoff scale).
    fn magnitude(&self, i: usize, t: f64) -> f64 {
        self.value(i, t).abs()
    }
}

/// `-λ F_ε(t)` optionally minus `|t|^r/r`, where `F_ε` regularizes
/// `t^{1-δ}/(1-δ)`. With `eps == 0` the exact `|t|^{1-δ}/(1-δ)` is used.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SingularSource {
    pub lambda: f64,
    pub delta: f64,
    pub eps: f64,
    pub power: Option<f64>,
}

impl SingularSource {
    fn singular(&self, t: f64) -> f64 {
        let e = 1.0 - self.delta;
        if self.eps == 0.0 {
            if t == 0.0 {
                0.0
            } else {
                t.abs().powf(e) / e
            }
        } else {
            ((t.max(0.0) + self.eps).powf(e) - self.eps.powf(e)) / e
        }
    }

    fn power_term(&self, t: f64) -> f64 {
        match self.power {
            Some(r) if t != 0.0 => t.abs().powf(r) / r,
            _ => 0.0,
        }
    }
}

impl NodalPotential for SingularSource {
    fn value(&self, _i: usize, t: f64) -> f64 {
        -self.lambda * self.singular(t) - self.power_term(t)
    }

    fn derivative(&self, _i: usize, t: f64) -> f64 {
        let s = if t < 0.0 {
            0.0
        } else if self.eps == 0.0 {
            t.max(f64::MIN_POSITIVE).powf(-self.delta)
        } else {
            (t + self.eps).powf(-self.delta)
        };
        let pw = match self.power {
            Some(r) if t != 0.0 => t.abs().powf(r - 1.0) * t.signum(),
            _ => 0.0,
        };
        -self.lambda * s - pw
    }

    fn curvature(&self, _i: usize, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            self.lambda * self.delta * (t + self.eps).powf(-self.delta - 1.0)
        }
    }

    fn magnitude(&self, _i: usize, t: f64) -> f64 {
        self.lambda * self.singular(t) + self.power_term(t)
    }
}

/// `-c |t|^s / s`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PowerSource {
    pub coef: f64,
    pub s: f64,
}

impl NodalPotential for PowerSource {
    fn value(&self, _i: usize, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            -self.coef * t.abs().powf(self.s) / self.s
        }
    }

    fn derivative(&self, _i: usize, t: f64) -> f64 {
        if t == 0.0 {
            0.0
        } else {
            -self.coef * t.abs().powf(self.s - 1.0) * t.signum()
        }
    }
}

/// `-f_i t`.
#[derive(Debug, Clone)]
pub(crate) struct LinearSource {
    pub f: Vec<f64>,
}

impl NodalPotential for LinearSource {
    fn value(&self, i: usize, t: f64) -> f64 {
        -self.f[i] * t
    }

    fn derivative(&self, i: usize, _t: f64) -> f64 {
        -self.f[i]
    }
}

pub(crate) struct Functional<'a, N> {
    pub space: &'a DiscreteSpace,
    /// `(s_k, c_k)` pairs of the gradient terms.
    pub stiffness: Vec<(f64, f64)>,
    pub nodal: N,
}

impl<'a, N: NodalPotential> Functional<'a, N> {
    pub fn new(space: &'a DiscreteSpace, stiffness: Vec<(f64, f64)>, nodal: N) -> Self {
        Self { space, stiffness, nodal }
    }

    fn stiffness_density(&self, m: f64) -> f64 {
        if m == 0.0 {
            return 0.0;
        }
        self.stiffness.iter().map(|&(s, c)| c * m.powf(s) / s).sum()
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        let sp = self.space;
        let grad: f64 = sp
            .elements
            .iter()
            .map(|e| {
                let g = e.gradient(u);
                e.weight * self.stiffness_density(g[0].hypot(g[1]))
            })
            .sum();
        let nod: f64 = (0..u.len()).map(|i| sp.lumped[i] * self.nodal.value(i, u[i])).sum();
        grad + nod
    }

    /// Sum of absolute values of all contributions.
    pub fn scale(&self, u: &[f64]) -> f64 {
        let sp = self.space;
        let grad: f64 = sp
            .elements
            .iter()
            .map(|e| {
                let g = e.gradient(u);
                e.weight * self.stiffness_density(g[0].hypot(g[1])).abs()
            })
            .sum();
        let nod: f64 = (0..u.len()).map(|i| sp.lumped[i] * self.nodal.magnitude(i, u[i])).sum();
        grad + nod
    }

    /// Exact gradient of [`Self::value`] with respect to the nodal values;
    /// Dirichlet entries are zeroed.
    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let sp = self.space;
        let mut out = vec![0.0; u.len()];
        for e in &sp.elements {
            let g = e.gradient(u);
            let m = g[0].hypot(g[1]);
            if m == 0.0 {
                continue;
            }
            let coef: f64 = self.stiffness.iter().map(|&(s, c)| c * m.powf(s - 2.0)).sum::<f64>() * e.weight;
            for k in 0..e.local {
                out[e.nodes[k]] += coef * (g[0] * e.dphi[k][0] + g[1] * e.dphi[k][1]);
            }
        }
        for i in 0..u.len() {
            if sp.boundary[i] {
                out[i] = 0.0;
            } else {
                out[i] += sp.lumped[i] * self.nodal.derivative(i, u[i]);
            }
        }
        out
    }

    /// Preconditioned direction `-P⁻¹ g` on the nodes flagged in `free`;
    /// zero elsewhere. `P` is the regularized stiffness Hessian plus the
    /// convex nodal curvature, reduced to the free interior nodes.
    pub fn direction(&self, u: &[f64], g: &[f64], free: &[bool]) -> Vec<f64> {
        let sp = self.space;
        let idx: Vec<usize> = (0..u.len())
            .map(|i| {
                let k = sp.interior_index(i);
                if k != NOT_INTERIOR && free[i] {
                    k
                } else {
                    NOT_INTERIOR
                }
            })
            .collect();
        let dim = sp.interior().len();
        if dim == 0 {
            return vec![0.0; u.len()];
        }
        let grads: Vec<[f64; 2]> = sp.elements.iter().map(|e| e.gradient(u)).collect();
        let gmax = grads.iter().map(|g| g[0].hypot(g[1])).fold(0.0, f64::max);
        let eta = if gmax > 0.0 { 1e-6 * gmax } else { 1.0 };
        let eta2 = eta * eta;

        let mut coo = CooMatrix::new(dim, dim);
        let mut diag = vec![0.0; dim];
        for (e, g) in sp.elements.iter().zip(&grads) {
            let rho = g[0] * g[0] + g[1] * g[1] + eta2;
            let mut iso = 0.0;
            let mut aniso = 0.0;
            for &(s, c) in &self.stiffness {
                iso += c * rho.powf((s - 2.0) / 2.0);
                aniso += c * (s - 2.0) * rho.powf((s - 4.0) / 2.0);
            }
            let h = [
                [iso + aniso * g[0] * g[0], aniso * g[0] * g[1]],
                [aniso * g[0] * g[1], iso + aniso * g[1] * g[1]],
            ];
            for a in 0..e.local {
                let ia = idx[e.nodes[a]];
                if ia == NOT_INTERIOR {
                    continue;
                }
                let da = e.dphi[a];
                let hd = [h[0][0] * da[0] + h[0][1] * da[1], h[1][0] * da[0] + h[1][1] * da[1]];
                for b in 0..e.local {
                    let ib = idx[e.nodes[b]];
                    if ib == NOT_INTERIOR {
                        continue;
                    }
                    let db = e.dphi[b];
                    let v = e.weight * (hd[0] * db[0] + hd[1] * db[1]);
                    coo.push(ia, ib, v);
                    if ia == ib {
                        diag[ia] += v;
                    }
                }
            }
        }
        let mut rhs = vec![0.0; dim];
        for i in 0..u.len() {
            let k = sp.interior_index(i);
            if k == NOT_INTERIOR {
                continue;
            }
            if idx[i] == NOT_INTERIOR {
                coo.push(k, k, 1.0);
                diag[k] += 1.0;
                continue;
            }
            let c = sp.lumped[i] * self.nodal.curvature(i, u[i]);
            if c > 0.0 && c.is_finite() {
                coo.push(k, k, c);
                diag[k] += c;
            }
            rhs[k] = -g[i];
        }
        let csc = CscMatrix::from(&coo);
        let sol: Vec<f64> = match CscCholesky::factor(&csc) {
            Ok(chol) => {
                let b = DMatrix::from_column_slice(dim, 1, &rhs);
                chol.solve(&b).as_slice().to_vec()
            }
            Err(_) => rhs.iter().zip(&diag).map(|(r, d)| if *d > 0.0 { r / d } else { *r }).collect(),
        };
        let mut d = vec![0.0; u.len()];
        for i in 0..u.len() {
            if idx[i] != NOT_INTERIOR {
                d[i] = sol[idx[i]];
            }
        }
        if d.iter().all(|v| v.is_finite()) {
            d
        } else {
            (0..u.len())
                .map(|i| if idx[i] != NOT_INTERIOR { -g[i] / sp.lumped[i] } else { 0.0 })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_space, interpolate};
    use crate::problem::DomainDescriptor;

    fn check_fd<N: NodalPotential>(f: &Functional<N>, u: &[f64]) {
        let g = f.gradient(u);
        for &i in f.space.interior().iter().step_by(3) {
            let h = 1e-6 * (1.0 + u[i].abs());
            let mut up = u.to_vec();
            up[i] += h;
            let mut um = u.to_vec();
            um[i] -= h;
            let fd = (f.value(&up) - f.value(&um)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "node {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn gradients_match_differences() {
        for (dom, n, m) in [
            (DomainDescriptor::unit_interval(), 3, 30),
            (DomainDescriptor::unit_square(), 2, 7),
            (DomainDescriptor::unit_ball(), 3, 30),
        ] {
            let sp = build_space(&dom, n, m).unwrap();
            let u = interpolate(&sp, |x| 0.3 + x[0] * (1.0 - x[0]) + 0.2 * x[1], true).unwrap();
            let f = Functional::new(
                &sp,
                vec![(2.5, 1.0), (1.5, 0.7)],
                SingularSource { lambda: 0.4, delta: 0.3, eps: 1e-3, power: Some(3.2) },
            );
            check_fd(&f, u.as_slice());
            let f = Functional::new(&sp, vec![(1.8, 1.0)], PowerSource { coef: 2.0, s: 1.8 });
            check_fd(&f, u.as_slice());
        }
    }

    #[test]
    fn quadratic_problem_one_newton_step() {
        // -u'' = 1 on (0,1): the preconditioner is the exact Hessian.
        let sp = build_space(&DomainDescriptor::unit_interval(), 3, 41).unwrap();
        let f = Functional::new(&sp, vec![(2.0, 1.0)], LinearSource { f: vec![1.0; sp.num_nodes()] });
        let u0 = vec![0.0; sp.num_nodes()];
        let g = f.gradient(&u0);
        let d = f.direction(&u0, &g, &vec![true; sp.num_nodes()]);
        let g1 = f.gradient(&d);
        assert!(g1.iter().all(|v| v.abs() < 1e-12));
        for (i, x) in sp.coords.iter().enumerate() {
            let exact = x[0] * (1.0 - x[0]) / 2.0;
            assert!((d[i] - exact).abs() < 1e-3);
        }
    }
}
