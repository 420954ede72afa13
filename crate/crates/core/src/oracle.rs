//! Convex energy whose first-order condition is the discrete weak form, and
//! a preconditioned limited-memory quasi-Newton minimiser for it.
//!
//! `J(u) = 1/(2p) sum_g w (mu + |Du|^2)^{p/2} - sum_n w f.u`. Differentiating
//! along `v` gives `1/2 sum_g w B(Du) Du:Dv - sum_n w f.v`, because
//! `Du : Dv = 2 Du : grad v` for symmetric `Du`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::grid::{enforce_tangency, BcVariant, Domain, VectorField};
use crate::linear::{assemble, dot, fem, norm2, LinearOperator};
use crate::stress::StressParams;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EnergyFunctional {
    pub dom: Domain,
    pub params: StressParams,
    pub f: VectorField,
}

impl EnergyFunctional {
    pub fn new(dom: Domain, params: StressParams, f: VectorField) -> Result<Self> {
        if f.len() != dom.len() {
            return Err(Error::SizeMismatch {
                expected: dom.len(),
                got: f.len(),
            });
        }
        Ok(Self { dom, params, f })
    }
}

pub fn energy(u: &VectorField, j: &EnergyFunctional) -> f64 {
    let bulk = fem::energy_density_sum(u, &j.params, &j.dom);
    let load: f64 = fem::lumped_load(&j.f, &j.dom)
        .iter()
        .zip(&u.values)
        .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
        .sum();
    bulk - load
}

/// Representer of the derivative on tangent fields: `v . grad` equals the
/// directional derivative for every tangent `v`. Normal components are zero.
pub fn energy_grad(u: &VectorField, j: &EnergyFunctional) -> VectorField {
    let n = fem::weak_operator(u, &j.params, &j.dom);
    let w = fem::lumped_load(&j.f, &j.dom);
    let values = n.iter().zip(&w).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
    let mut g = enforce_tangency(&VectorField { values, tangent: false }, &j.dom);
    g.tangent = true;
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeOptions {
    /// Stop when `|grad J|_2 <= tol_g |W f|_2`.
    pub tol_g: f64,
    pub max_iter: usize,
    pub memory: usize,
    /// Curvature parameter of the line search, `|phi'(a)| <= c2 |phi'(0)|`.
    pub c2: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            tol_g: 1e-10,
            max_iter: 2000,
            memory: 10,
            c2: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizeReport {
    pub iterations: usize,
    pub converged: bool,
    pub energy: f64,
    pub gradient_norm: f64,
    pub gradient_scale: f64,
    /// Restarts with a preconditioned steepest-descent direction after a failed line search.
    pub fallbacks: usize,
    pub gradient_evaluations: usize,
}

struct Problem<'a> {
    j: &'a EnergyFunctional,
    op: LinearOperator,
    evals: usize,
}

impl Problem<'_> {
    fn grad(&mut self, x: &[f64]) -> Vec<f64> {
        self.evals += 1;
        let u = self.op.dofs.scatter(x, self.j.dom.len());
        let g = energy_grad(&u, self.j);
        self.op.dofs.gather(&g)
    }

    fn precondition(&self, g: &[f64]) -> Result<Vec<f64>> {
        Ok(self.op.cholesky()?.solve(g))
    }
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

/// Find `a > 0` with `|phi'(a)| <= c2 |phi'(0)|`, `phi'` nondecreasing (convexity).
fn line_search(pb: &mut Problem<'_>, x: &[f64], d: &[f64], d0: f64, c2: f64) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let (mut lo, mut dlo) = (0.0, d0);
    let mut hi: Option<(f64, f64)> = None;
    let mut a = 1.0;
    for _ in 0..80 {
        let xa = axpy(a, d, x);
        let g = pb.grad(&xa);
        let da = dot(&g, d);
        if !da.is_finite() {
            hi = Some((a, f64::INFINITY));
        } else if da.abs() <= c2 * d0.abs() {
            return Some((a, xa, g));
        } else if da < 0.0 {
            lo = a;
            dlo = da;
        } else {
            hi = Some((a, da));
        }
        a = match hi {
            None => 4.0 * a,
            Some((h, dh)) => {
                let width = h - lo;
                let sec = if dh.is_finite() {
                    lo - dlo * width / (dh - dlo)
                } else {
                    lo + 0.5 * width
                };
                sec.clamp(lo + 0.1 * width, h - 0.1 * width)
            }
        };
    }
    None
}

/// Minimiser from `u = 0`.
pub fn minimize(j: &EnergyFunctional, tol_g: f64, max_iter: usize) -> Result<VectorField> {
    let opts = MinimizeOptions {
        tol_g,
        max_iter,
        ..MinimizeOptions::default()
    };
    minimize_with(j, &opts, None).map(|(u, _)| u)
}

/// L-BFGS with initial inverse Hessian `gamma A^{-1}`, `A` the linear slip
/// operator, in the space of tangent fields.
pub fn minimize_with(
    j: &EnergyFunctional,
    opts: &MinimizeOptions,
    start: Option<&VectorField>,
) -> Result<(VectorField, MinimizeReport)> {
    let op = assemble(&j.dom, BcVariant::NavierStress);
    let scale = norm2(&op.load(&j.f));
    let mut x = match start {
        Some(s) => op.dofs.gather(s),
        None => vec![0.0; op.n_dofs()],
    };
    let mut pb = Problem { j, op, evals: 0 };
    let mut g = pb.grad(&x);
    let mut history = vec![norm2(&g)];
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut gamma = 1.0;
    let mut fallbacks = 0;
    let mut it = 0;
    let mut converged = norm2(&g) <= opts.tol_g * scale;
    while !converged && it < opts.max_iter {
        it += 1;
        // two-loop recursion
        let mut qv = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &qv);
            qv = axpy(-a, y, &qv);
            alphas.push(a);
        }
        let mut r: Vec<f64> = pb.precondition(&qv)?.iter().map(|v| gamma * v).collect();
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &r);
            r = axpy(a - b, s, &r);
        }
        let mut d: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut d0 = dot(&g, &d);
        if !(d0 < 0.0) {
            mem.clear();
            d = pb.precondition(&g)?.iter().map(|v| -v).collect();
            d0 = dot(&g, &d);
        }
        let step = match line_search(&mut pb, &x, &d, d0, opts.c2) {
            Some(s) => Some(s),
            None => {
                fallbacks += 1;
                mem.clear();
                d = pb.precondition(&g)?.iter().map(|v| -v).collect();
                d0 = dot(&g, &d);
                line_search(&mut pb, &x, &d, d0, opts.c2)
            }
        };
        let Some((_, xn, gn)) = step else {
            return Err(Error::Minimizer {
                iterations: it,
                reason: "line search failed along the preconditioned gradient".into(),
                gradient_history: history,
            });
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 0.0 {
            let hy = pb.precondition(&y)?;
            gamma = sy / dot(&y, &hy);
            mem.push_back((s, y, 1.0 / sy));
            if mem.len() > opts.memory {
                mem.pop_front();
            }
        }
        x = xn;
        g = gn;
        history.push(norm2(&g));
        converged = norm2(&g) <= opts.tol_g * scale;
    }
    let u = pb.op.dofs.scatter(&x, j.dom.len());
    let report = MinimizeReport {
        iterations: it,
        converged,
        energy: energy(&u, j),
        gradient_norm: norm2(&g),
        gradient_scale: scale,
        fallbacks,
        gradient_evaluations: pb.evals,
    };
    if !converged {
        return Err(Error::Minimizer {
            iterations: it,
            reason: format!(
                "gradient norm {:.3e} above {:.3e}",
                report.gradient_norm,
                opts.tol_g * scale
            ),
            gradient_history: history,
        });
    }
    Ok((u, report))
}
