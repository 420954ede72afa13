//! Discrete checks of the integration-by-parts, Green and boundary identities,
//! the equivalence of the two slip conditions on flat faces, the alternative
//! weak form with its curvature term, and the a priori second-order estimate.
//!
//! Vorticity is the scalar `omega = d_1 u_2 - d_2 u_1`. The cross products of
//! the three-dimensional identities become `n x omega = omega (n_2, -n_1)` and
//! `omega x n = omega (-n_2, n_1)`. Boundary sums skip the four corner nodes.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{
    curl2, curl_scalar, ddot, divergence, grad_div, gradient, hessian, laplacian, lq_norm, mms_forcing, sym_grad,
    sym_grad_gradient, symmetrize, vector_gradient, BcVariant, Domain, Face, FieldClass, Manufactured, Mat2,
    PointwiseMagnitude, ScalarField, SmoothFieldSampler, Vec2, VectorField, FACES,
};
use crate::solver::{fixed_point, weak_residual_vector, FixedPointOptions, SlipProblem};
use crate::stress::{b_coeff, b_inverse, b_times_d_field, expansion_residual, StressParams};
use crate::{Error, Result};

pub const DIMENSION_NOTE: &str =
    "2-D realisation: n x omega = omega (n_2, -n_1), omega x n = omega (-n_2, n_1), omega = d_1 u_2 - d_2 u_1";

/// Relative size below which a residual counts as rounding.
const ROUNDING: f64 = 1e-11;

/// Default refinement levels of the battery.
pub const BATTERY_GRIDS: [usize; 4] = [16, 32, 64, 128];

/// A vector field with closed-form gradient `g[k][i] = d_k u_i` and Laplacian.
pub trait ClosedForm {
    fn value(&self, x: f64, y: f64) -> Vec2;
    fn grad(&self, x: f64, y: f64) -> Mat2;
    fn laplacian(&self, x: f64, y: f64) -> Vec2;

    fn sample(&self, dom: &Domain) -> VectorField {
        VectorField::from_fn(dom, |x, y| self.value(x, y))
    }
}

impl ClosedForm for Manufactured {
    fn value(&self, x: f64, y: f64) -> Vec2 {
        self.velocity(x, y)
    }

    fn grad(&self, x: f64, y: f64) -> Mat2 {
        let (a, b) = (PI / self.lx, PI / self.ly);
        let cc = (a * x).cos() * (b * y).cos();
        let ss = (a * x).sin() * (b * y).sin();
        [[a * cc, -self.c * a * ss], [-b * ss, self.c * b * cc]]
    }

    fn laplacian(&self, x: f64, y: f64) -> Vec2 {
        let (a, b) = (PI / self.lx, PI / self.ly);
        let u = self.velocity(x, y);
        let k = -(a * a + b * b);
        [k * u[0], k * u[1]]
    }
}

/// Quadratic polynomial field, coefficients of `1, x, y, x^2, xy, y^2` per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub c: [[f64; 6]; 2],
}

impl Quadratic {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut c = [[0.0; 6]; 2];
        for row in c.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
        }
        Self { c }
    }

    pub fn affine(&self) -> Self {
        let mut c = self.c;
        for row in c.iter_mut() {
            row[3..].fill(0.0);
        }
        Self { c }
    }
}

impl ClosedForm for Quadratic {
    fn value(&self, x: f64, y: f64) -> Vec2 {
        let e = |c: &[f64; 6]| c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
        [e(&self.c[0]), e(&self.c[1])]
    }

    fn grad(&self, x: f64, y: f64) -> Mat2 {
        let dx = |c: &[f64; 6]| c[1] + 2.0 * c[3] * x + c[4] * y;
        let dy = |c: &[f64; 6]| c[2] + c[4] * x + 2.0 * c[5] * y;
        [[dx(&self.c[0]), dx(&self.c[1])], [dy(&self.c[0]), dy(&self.c[1])]]
    }

    fn laplacian(&self, _: f64, _: f64) -> Vec2 {
        let l = |c: &[f64; 6]| 2.0 * (c[3] + c[5]);
        [l(&self.c[0]), l(&self.c[1])]
    }
}

/// Cubic `sum_{i+j<=3} c_ij x^i y^j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic {
    pub c: [[f64; 4]; 4],
}

impl Cubic {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut c = [[0.0; 4]; 4];
        for (i, row) in c.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                if i + j <= 3 {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
        }
        Self { c }
    }

    /// `d^a/dx^a d^b/dy^b` at `(x, y)`.
    pub fn derivative(&self, a: usize, b: usize, x: f64, y: f64) -> f64 {
        let fall = |n: usize, k: usize| (0..k).map(|t| (n - t) as f64).product::<f64>();
        let mut s = 0.0;
        for i in a..4 {
            for j in b..4 {
                if i + j <= 3 {
                    s += self.c[i][j] * fall(i, a) * fall(j, b) * x.powi((i - a) as i32) * y.powi((j - b) as i32);
                }
            }
        }
        s
    }
}

/// `u = (x (lx - x) P, y (ly - y) Q)` with cubic `P, Q`: tangent to every face,
/// tangential stress generally nonzero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentPolynomial {
    pub lx: f64,
    pub ly: f64,
    pub p: Cubic,
    pub q: Cubic,
}

impl TangentPolynomial {
    pub fn random<R: Rng + ?Sized>(dom: &Domain, rng: &mut R) -> Self {
        Self {
            lx: dom.lx,
            ly: dom.ly,
            p: Cubic::random(rng),
            q: Cubic::random(rng),
        }
    }
}

impl ClosedForm for TangentPolynomial {
    fn value(&self, x: f64, y: f64) -> Vec2 {
        [
            x * (self.lx - x) * self.p.derivative(0, 0, x, y),
            y * (self.ly - y) * self.q.derivative(0, 0, x, y),
        ]
    }

    fn grad(&self, x: f64, y: f64) -> Mat2 {
        let (sx, sy) = (x * (self.lx - x), y * (self.ly - y));
        let (p, q) = (&self.p, &self.q);
        [
            [
                (self.lx - 2.0 * x) * p.derivative(0, 0, x, y) + sx * p.derivative(1, 0, x, y),
                sy * q.derivative(1, 0, x, y),
            ],
            [
                sx * p.derivative(0, 1, x, y),
                (self.ly - 2.0 * y) * q.derivative(0, 0, x, y) + sy * q.derivative(0, 1, x, y),
            ],
        ]
    }

    fn laplacian(&self, x: f64, y: f64) -> Vec2 {
        let (sx, sy) = (x * (self.lx - x), y * (self.ly - y));
        let (p, q) = (&self.p, &self.q);
        [
            -2.0 * p.derivative(0, 0, x, y)
                + 2.0 * (self.lx - 2.0 * x) * p.derivative(1, 0, x, y)
                + sx * (p.derivative(2, 0, x, y) + p.derivative(0, 2, x, y)),
            -2.0 * q.derivative(0, 0, x, y)
                + 2.0 * (self.ly - 2.0 * y) * q.derivative(0, 1, x, y)
                + sy * (q.derivative(2, 0, x, y) + q.derivative(0, 2, x, y)),
        ]
    }
}

/// Gradient field `grad phi`, `phi = sin(alpha x + s) cos(beta y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub alpha: f64,
    pub beta: f64,
    pub shift: f64,
}

impl ClosedForm for Potential {
    fn value(&self, x: f64, y: f64) -> Vec2 {
        let t = self.alpha * x + self.shift;
        [
            self.alpha * t.cos() * (self.beta * y).cos(),
            -self.beta * t.sin() * (self.beta * y).sin(),
        ]
    }

    fn grad(&self, x: f64, y: f64) -> Mat2 {
        let t = self.alpha * x + self.shift;
        let (a, b) = (self.alpha, self.beta);
        let sc = t.sin() * (b * y).cos();
        let cs = t.cos() * (b * y).sin();
        [[-a * a * sc, -a * b * cs], [-a * b * cs, -b * b * sc]]
    }

    fn laplacian(&self, x: f64, y: f64) -> Vec2 {
        let k = -(self.alpha * self.alpha + self.beta * self.beta);
        let u = self.value(x, y);
        [k * u[0], k * u[1]]
    }
}

/// Trapezoid sum over all nodes.
fn volume(dom: &Domain, mut g: impl FnMut(usize) -> f64) -> f64 {
    (0..dom.len())
        .map(|n| {
            let (i, j) = dom.ij(n);
            dom.weight(i, j) * g(n)
        })
        .sum()
}

/// Sum over the corner-trimmed face nodes with the face spacing as weight.
fn boundary(dom: &Domain, mut g: impl FnMut(Face, usize) -> f64) -> f64 {
    FACES
        .iter()
        .map(|&face| {
            let h = face.spacing(dom);
            face.trimmed_nodes(dom).iter().map(|t| h * g(face, t[0])).sum::<f64>()
        })
        .sum()
}

fn n_cross_omega(n: Vec2, w: f64) -> Vec2 {
    [w * n[1], -w * n[0]]
}

fn omega_cross_n(n: Vec2, w: f64) -> Vec2 {
    [-w * n[1], w * n[0]]
}

fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// `(S n)_j = S_ij n_i`.
fn traction(s: &Mat2, n: Vec2) -> Vec2 {
    [s[0][0] * n[0] + s[1][0] * n[1], s[0][1] * n[0] + s[1][1] * n[1]]
}

/// Terms of `1/2 sum B Du:Dv = -sum div(B Du).v + sum_Gamma (B Du n).v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartsIdentity {
    pub lhs: f64,
    pub volume: f64,
    pub boundary: f64,
    pub residual: f64,
}

impl PartsIdentity {
    pub fn scale(&self) -> f64 {
        self.lhs.abs() + self.volume.abs() + self.boundary.abs()
    }
}

pub fn check_parts_identity(u: &VectorField, v: &VectorField, dom: &Domain, params: &StressParams) -> PartsIdentity {
    let s = b_times_d_field(&sym_grad(u, dom), params);
    let dv = sym_grad(v, dom);
    let div = crate::grid::div_tensor(&s, dom);
    let lhs = 0.5 * volume(dom, |n| ddot(&s.values[n], &dv.values[n]));
    let vol = -volume(dom, |n| dot2(div.values[n], v.values[n]));
    let bnd = boundary(dom, |face, n| dot2(traction(&s.values[n], face.normal()), v.values[n]));
    PartsIdentity {
        lhs,
        volume: vol,
        boundary: bnd,
        residual: (lhs - vol - bnd).abs(),
    }
}

/// Terms of `sum grad(div u).Lap v = sum grad(div u).grad(div v) - sum_Gamma grad(div u).(n x omega(v))`,
/// plus the largest nodal gap of the discrete decomposition `Lap v = grad(div v) - curl omega(v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenCurl {
    pub lhs: f64,
    pub grad_div_term: f64,
    pub boundary: f64,
    pub residual: f64,
    pub decomposition_gap: f64,
}

impl GreenCurl {
    pub fn scale(&self) -> f64 {
        self.lhs.abs() + self.grad_div_term.abs() + self.boundary.abs()
    }
}

pub fn check_green_curl(u: &VectorField, v: &VectorField, dom: &Domain) -> GreenCurl {
    let gphi = gradient(&divergence(u, dom), dom);
    let lap = laplacian(v, dom);
    let gdv = grad_div(v, dom);
    let om = curl2(v, dom);
    let curl_om = curl_scalar(&om, dom);
    let lhs = volume(dom, |n| dot2(gphi.values[n], lap.values[n]));
    let gd = volume(dom, |n| dot2(gphi.values[n], gdv.values[n]));
    let bnd = boundary(dom, |face, n| {
        dot2(gphi.values[n], n_cross_omega(face.normal(), om.values[n]))
    });
    let gap = (0..dom.len())
        .map(|n| {
            let a = lap.values[n];
            let b = [
                gdv.values[n][0] - curl_om.values[n][0],
                gdv.values[n][1] - curl_om.values[n][1],
            ];
            (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
        })
        .fold(0.0, f64::max);
    GreenCurl {
        lhs,
        grad_div_term: gd,
        boundary: bnd,
        residual: (lhs - gd + bnd).abs(),
        decomposition_gap: gap,
    }
}

/// Trapezoid `L^2` error of the discrete `grad(div v) - curl omega(v)` against the closed-form Laplacian.
pub fn decomposition_error(v: &(impl ClosedForm + ?Sized), dom: &Domain) -> Result<(f64, f64)> {
    let vh = v.sample(dom);
    let gdv = grad_div(&vh, dom);
    let co = curl_scalar(&curl2(&vh, dom), dom);
    let exact = VectorField::from_fn(dom, |x, y| v.laplacian(x, y));
    let err = VectorField {
        values: (0..dom.len())
            .map(|n| {
                [
                    gdv.values[n][0] - co.values[n][0] - exact.values[n][0],
                    gdv.values[n][1] - co.values[n][1] - exact.values[n][1],
                ]
            })
            .collect(),
        tangent: false,
    };
    Ok((lq_norm(&err, 2.0, dom)?, lq_norm(&exact, 2.0, dom)?))
}

/// Per-face check of `(Du n).v = (omega x n).v + 2 grad(u.n).v` (flat faces, `d_k n_i = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceResidual {
    pub face: &'static str,
    /// Face `L^2` norm of the discrete left side minus the closed-form right side.
    pub residual: f64,
    /// Largest nodal gap between the discrete left and right sides.
    pub discrete_gap: f64,
    /// Face `L^2` norm of the closed-form right side plus `|grad u| |v|`.
    pub scale: f64,
}

pub fn face_name(face: Face) -> &'static str {
    match face {
        Face::Left => "left",
        Face::Right => "right",
        Face::Bottom => "bottom",
        Face::Top => "top",
    }
}

fn boundary_rhs(g: &Mat2, n: Vec2, v: Vec2) -> f64 {
    let w = g[0][1] - g[1][0];
    let grad_un = [g[0][0] * n[0] + g[0][1] * n[1], g[1][0] * n[0] + g[1][1] * n[1]];
    dot2(omega_cross_n(n, w), v) + 2.0 * dot2(grad_un, v)
}

pub fn check_boundary_identities(
    u: &(impl ClosedForm + ?Sized),
    v: &(impl ClosedForm + ?Sized),
    dom: &Domain,
) -> Vec<FaceResidual> {
    let uh = u.sample(dom);
    let g = vector_gradient(&uh, dom);
    FACES
        .iter()
        .map(|&face| {
            let n = face.normal();
            let h = face.spacing(dom);
            let un = ScalarField {
                values: uh.values.iter().map(|w| dot2(*w, n)).collect(),
            };
            let gun = gradient(&un, dom);
            let (mut res, mut scale, mut gap) = (0.0, 0.0, 0.0f64);
            for t in face.trimmed_nodes(dom) {
                let k = t[0];
                let (i, j) = dom.ij(k);
                let (x, y) = dom.coords(i, j);
                let vv = v.value(x, y);
                let gh = &g.values[k];
                let lhs_h = dot2(traction(&symmetrize(gh), n), vv);
                let w_h = gh[0][1] - gh[1][0];
                let rhs_h = dot2(omega_cross_n(n, w_h), vv) + 2.0 * dot2(gun.values[k], vv);
                let ge = u.grad(x, y);
                let rhs_e = boundary_rhs(&ge, n, vv);
                res += h * (lhs_h - rhs_e).powi(2);
                let gnorm = crate::grid::frob2(&ge).sqrt() * vv[0].hypot(vv[1]);
                scale += h * (rhs_e.powi(2) + gnorm.powi(2));
                gap = gap.max((lhs_h - rhs_h).abs());
            }
            FaceResidual {
                face: face_name(face),
                residual: res.sqrt(),
                discrete_gap: gap,
                scale: scale.sqrt(),
            }
        })
        .collect()
}

/// Largest deviation of `(d_i u_k - d_k u_i) n_i` from `(omega x n)_k` at three points per face.
pub fn curl_algebra_residual(u: &(impl ClosedForm + ?Sized), dom: &Domain) -> f64 {
    let mut worst = 0.0f64;
    for face in FACES {
        let n = face.normal();
        for s in [0.25, 0.5, 0.75] {
            let (x, y) = match face {
                Face::Left => (0.0, s * dom.ly),
                Face::Right => (dom.lx, s * dom.ly),
                Face::Bottom => (s * dom.lx, 0.0),
                Face::Top => (s * dom.lx, dom.ly),
            };
            let g = u.grad(x, y);
            let w = g[0][1] - g[1][0];
            let oxn = omega_cross_n(n, w);
            for (k, o) in oxn.iter().enumerate() {
                let lhs: f64 = (0..2).map(|i| (g[i][k] - g[k][i]) * n[i]).sum();
                worst = worst.max((lhs - o).abs());
            }
        }
    }
    worst
}

/// Navier and vorticity solutions of the same problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcEquivalence {
    /// `||u_navier - u_bardos||_2 / ||u_navier||_2` (absolute when `u_navier = 0`).
    pub discrepancy: f64,
    pub navier_norm: f64,
}

pub fn bc_equivalence_probe(prob: &SlipProblem, opts: &FixedPointOptions) -> Result<BcEquivalence> {
    let solve = |variant| -> Result<VectorField> {
        let p = SlipProblem {
            variant,
            ..prob.clone()
        };
        Ok(fixed_point(&p, None, opts)?.0)
    };
    let a = solve(BcVariant::NavierStress)?;
    let b = solve(BcVariant::BardosVorticity)?;
    let dom = &prob.dom;
    let na = lq_norm(&a, 2.0, dom)?;
    let d = lq_norm(&a.sub(&b), 2.0, dom)?;
    Ok(BcEquivalence {
        discrepancy: if na > 0.0 { d / na } else { d },
        navier_norm: na,
    })
}

/// Curvature `d_k n_i` per face; identically zero on the rectangle.
pub type Curvature<'a> = &'a dyn Fn(Face) -> Mat2;

pub fn flat(_: Face) -> Mat2 {
    [[0.0; 2]; 2]
}

/// `2 sum_Gamma B(Du) (d_k n_i) v_k u_i`.
pub fn curvature_term(u: &VectorField, v: &VectorField, prob: &SlipProblem, curvature: Curvature<'_>) -> Result<f64> {
    let dom = &prob.dom;
    let du = sym_grad(u, dom);
    let mut total = 0.0;
    for face in FACES {
        let k = curvature(face);
        if k.iter().flatten().all(|&c| c == 0.0) {
            continue;
        }
        let h = face.spacing(dom);
        for t in face.trimmed_nodes(dom) {
            let n = t[0];
            let b = b_coeff(&du.values[n], &prob.params)?;
            let (uu, vv) = (u.values[n], v.values[n]);
            let mut s = 0.0;
            for (kk, row) in k.iter().enumerate() {
                for (i, c) in row.iter().enumerate() {
                    s += c * vv[kk] * uu[i];
                }
            }
            total += 2.0 * h * b * s;
        }
    }
    Ok(total)
}

/// Signed alternative weak form along `v`: `1/2 sum B Du:Dv + curvature term - sum f.v`.
pub fn alt_weak_form_value(
    u: &VectorField,
    v: &VectorField,
    prob: &SlipProblem,
    curvature: Curvature<'_>,
) -> Result<f64> {
    let r = weak_residual_vector(u, prob);
    let base: f64 = r.values.iter().zip(&v.values).map(|(a, b)| dot2(*a, *b)).sum();
    Ok(base + curvature_term(u, v, prob, curvature)?)
}

/// Same test fields and normalisation as [`crate::solver::weak_residual_seeded`].
pub fn alt_weak_form_residual_with(
    u: &VectorField,
    prob: &SlipProblem,
    n_test: usize,
    seed: u64,
    curvature: Curvature<'_>,
) -> Result<f64> {
    let sampler = SmoothFieldSampler::new(FieldClass::Tangent, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..n_test {
        let v = sampler.sample(&prob.dom, &mut rng);
        let norm = crate::grid::w1p_norm(&v, &prob.dom, prob.params.p)?;
        if norm > 0.0 {
            best = best.max(alt_weak_form_value(u, &v, prob, curvature)?.abs() / norm);
        }
    }
    Ok(best)
}

pub fn alt_weak_form_residual(u: &VectorField, prob: &SlipProblem, n_test: usize) -> Result<f64> {
    alt_weak_form_residual_with(u, prob, n_test, 0, &flat)
}

/// `||Lap u||^2 + ||grad div u||^2` against
/// `(2-p) sum |grad Du| |Lap u| + sum (mu + |Du|^2)^{(2-p)/2} |f| |Lap u|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriSlack {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
}

pub fn apriori_energy_check(u: &VectorField, prob: &SlipProblem) -> Result<AprioriSlack> {
    if !(prob.params.mu > 0.0) && !prob.params.is_linear() {
        return Err(Error::Domain("the a priori check needs mu > 0".into()));
    }
    let dom = &prob.dom;
    let h = hessian(u, dom);
    let gdu = sym_grad_gradient(u, dom);
    let du = sym_grad(u, dom);
    let p = prob.params.p;
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for n in 0..dom.len() {
        let (i, j) = dom.ij(n);
        let w = dom.weight(i, j);
        let hn = &h[n];
        let lap = [hn[0][0][0] + hn[1][1][0], hn[0][0][1] + hn[1][1][1]];
        let gd = [hn[0][0][0] + hn[0][1][1], hn[1][0][0] + hn[1][1][1]];
        let lap_norm = lap[0].hypot(lap[1]);
        lhs += w * (dot2(lap, lap) + dot2(gd, gd));
        let f = prob.f.values[n];
        rhs +=
            w * lap_norm * ((2.0 - p) * gdu.magnitude(n) + b_inverse(&du.values[n], &prob.params) * f[0].hypot(f[1]));
    }
    Ok(AprioriSlack {
        lhs,
        rhs,
        slack: rhs - lhs,
    })
}

/// Refinement study of one identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub grids: Vec<usize>,
    pub h: Vec<f64>,
    pub residuals: Vec<f64>,
    pub scales: Vec<f64>,
    /// Orders between consecutive levels.
    pub orders: Vec<f64>,
    /// Least-squares slope of `log residual` against `log h`.
    pub observed_order: f64,
    pub expected_order: f64,
    /// Every residual is at rounding level relative to its scale.
    pub exact: bool,
    pub pass: bool,
    pub note: String,
}

fn fitted_slope(h: &[f64], r: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(r)
        .filter(|(_, r)| **r > 0.0)
        .map(|(h, r)| (h.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// Run `eval` on every grid; `eval` returns `(residual, scale)`.
pub fn refinement_study(
    name: &str,
    grids: &[usize],
    expected_order: f64,
    note: &str,
    mut eval: impl FnMut(&Domain) -> Result<(f64, f64)>,
) -> Result<IdentityReport> {
    if grids.len() < 3 {
        return Err(Error::Domain("a refinement study needs at least three grids".into()));
    }
    let (mut h, mut residuals, mut scales) = (Vec::new(), Vec::new(), Vec::new());
    for &n in grids {
        let dom = Domain::rectangle(n)?;
        let (r, s) = eval(&dom)?;
        if !r.is_finite() {
            return Err(Error::Domain(format!("{name}: non-finite residual on grid {n}")));
        }
        h.push(dom.h());
        residuals.push(r);
        scales.push(s);
    }
    let orders = (1..grids.len())
        .map(|k| (residuals[k - 1] / residuals[k]).ln() / (h[k - 1] / h[k]).ln())
        .collect();
    let exact = residuals.iter().zip(&scales).all(|(r, s)| *r <= ROUNDING * s.max(1.0));
    let observed_order = fitted_slope(&h, &residuals);
    let pass = exact || observed_order >= 0.9 * expected_order;
    let mut note = note.to_string();
    if exact {
        note.push_str("; residual at rounding level on every grid");
    }
    Ok(IdentityReport {
        name: name.into(),
        grids: grids.to_vec(),
        h,
        residuals,
        scales,
        orders,
        observed_order,
        expected_order,
        exact,
        pass,
        note,
    })
}

/// A single check at one resolution (pure algebra or a discrete exact identity).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactCheck {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ExactCheck {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

/// Slack of the a priori estimate on a converged vorticity-variant solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub grids: Vec<usize>,
    pub h: Vec<f64>,
    pub slack: Vec<f64>,
    /// `slack / rhs`.
    pub relative_slack: Vec<f64>,
    /// Smallest `C >= 0` with `relative_slack >= -C h` on every grid.
    pub fitted_c: f64,
    /// `relative_slack >= -h` on every grid.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityBattery {
    pub reports: Vec<IdentityReport>,
    pub exact: Vec<ExactCheck>,
    pub inequalities: Vec<InequalityCheck>,
    pub runtime_s: f64,
    pub note: String,
}

impl IdentityBattery {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
            && self.exact.iter().all(|c| c.pass)
            && self.inequalities.iter().all(|c| c.pass)
    }

    /// Plain-text table `identity, h, residual, order`.
    pub fn table(&self) -> String {
        let mut out = format!("{:<44} {:>10} {:>12} {:>7}\n", "identity", "h", "residual", "order");
        for r in &self.reports {
            for k in 0..r.grids.len() {
                let order = if k == 0 {
                    String::from("-")
                } else {
                    format!("{:.2}", r.orders[k - 1])
                };
                out.push_str(&format!(
                    "{:<44} {:>10.4e} {:>12.4e} {:>7}\n",
                    r.name, r.h[k], r.residuals[k], order
                ));
            }
            out.push_str(&format!(
                "{:<44} fitted order {:.2} (expected {:.0}) {}\n",
                r.name,
                r.observed_order,
                r.expected_order,
                if r.pass { "pass" } else { "FAIL" }
            ));
        }
        for c in &self.exact {
            out.push_str(&format!(
                "{:<44} residual {:.3e} (tolerance {:.1e}) {}\n",
                c.name,
                c.residual,
                c.tolerance,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        for c in &self.inequalities {
            out.push_str(&format!(
                "{:<44} relative slack {:?} {}\n",
                c.name,
                c.relative_slack,
                if c.pass { "pass" } else { "FAIL" }
            ));
        }
        out
    }
}

/// The full battery on `grids` with random fields drawn from `seed`.
pub fn identity_battery(grids: &[usize], seed: u64) -> Result<IdentityBattery> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = Domain::rectangle(grids[0])?;
    let quad = Quadratic::random(&mut rng);
    let quad2 = Quadratic::random(&mut rng);
    let tan_u = TangentPolynomial::random(&coarse, &mut rng);
    let tan_v = TangentPolynomial::random(&coarse, &mut rng);
    let pot = Potential {
        alpha: 1.3,
        beta: 1.7,
        shift: 0.4,
    };
    let slip_u = Manufactured::new(&coarse, 1.0);
    let slip_v = Manufactured::new(&coarse, 0.5);
    let nonlinear = StressParams::new(1.7, 1.0)?;
    let linear = StressParams::new(2.0, 0.0)?;
    let mut reports = Vec::new();

    let parts =
        |name: &str, u: &dyn Fn(&Domain) -> VectorField, v: &dyn Fn(&Domain) -> VectorField, params: StressParams| {
            refinement_study(name, grids, 1.0, DIMENSION_NOTE, |dom| {
                let r = check_parts_identity(&u(dom), &v(dom), dom, &params);
                Ok((r.residual, r.scale()))
            })
        };
    reports.push(parts(
        "parts/slip-fields",
        &|d| slip_u.sample(d),
        &|d| slip_v.sample(d),
        nonlinear,
    )?);
    reports.push(parts(
        "parts/general-fields",
        &|d| quad.sample(d),
        &|d| pot.sample(d),
        nonlinear,
    )?);
    reports.push(parts(
        "parts/tangent-fields",
        &|d| tan_u.sample(d),
        &|d| tan_v.sample(d),
        nonlinear,
    )?);
    reports.push(parts("parts/linear", &|d| pot.sample(d), &|d| quad.sample(d), linear)?);
    reports.push(parts(
        "parts/affine",
        &|d| quad.affine().sample(d),
        &|d| quad2.affine().sample(d),
        nonlinear,
    )?);

    let green = |name: &str, u: &dyn Fn(&Domain) -> VectorField, v: &dyn Fn(&Domain) -> VectorField| {
        refinement_study(name, grids, 1.0, DIMENSION_NOTE, |dom| {
            let r = check_green_curl(&u(dom), &v(dom), dom);
            Ok((r.residual, r.scale()))
        })
    };
    reports.push(green(
        "green-curl/zero-boundary-vorticity",
        &|d| tan_u.sample(d),
        &|d| slip_u.sample(d),
    )?);
    reports.push(green("green-curl/energy-form", &|d| slip_v.sample(d), &|d| {
        slip_v.sample(d)
    })?);
    reports.push(green("green-curl/potential", &|d| pot.sample(d), &|d| pot.sample(d))?);
    reports.push(green("green-curl/general", &|d| tan_u.sample(d), &|d| pot.sample(d))?);

    reports.push(refinement_study(
        "decomposition/slip-field",
        grids,
        1.0,
        DIMENSION_NOTE,
        |dom| decomposition_error(&slip_v, dom),
    )?);
    reports.push(refinement_study(
        "decomposition/tangent-field",
        grids,
        1.0,
        DIMENSION_NOTE,
        |dom| decomposition_error(&tan_u, dom),
    )?);

    for (label, u) in [("slip-field", &slip_u as &dyn ClosedForm), ("tangent-field", &tan_u)] {
        for (k, face) in FACES.iter().enumerate() {
            let name = format!("boundary/{}/{}", face_name(*face), label);
            reports.push(refinement_study(&name, grids, 1.0, DIMENSION_NOTE, |dom| {
                let r = check_boundary_identities(u, &tan_v, dom);
                Ok((r[k].residual, r[k].scale))
            })?);
        }
    }

    reports.push(refinement_study(
        "expansion/general-field",
        grids,
        2.0,
        "sup norm of div(B Du) - B div(Du) - (p-2)(mu+|Du|^2)^{(p-4)/2} I(u), p = 1.7, mu = 1",
        |dom| {
            let u = pot.sample(dom);
            let r = expansion_residual(&u, &nonlinear, dom)?;
            Ok((r.max_abs(), 1.0))
        },
    )?);

    let mut exact = Vec::new();
    let fine = Domain::rectangle(*grids.last().expect("grids checked above"))?;
    let algebra = [
        curl_algebra_residual(&slip_u, &fine),
        curl_algebra_residual(&tan_u, &fine),
        curl_algebra_residual(&quad, &fine),
        curl_algebra_residual(&pot, &fine),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    exact.push(ExactCheck::new("curl-algebra/closed-form", algebra, 1e-12));
    let gap = check_green_curl(&quad.sample(&fine), &tan_v.sample(&fine), &fine).decomposition_gap;
    exact.push(ExactCheck::new("decomposition/discrete", gap, 1e-8));
    let bgap = check_boundary_identities(&tan_u, &tan_v, &fine)
        .iter()
        .map(|r| r.discrete_gap)
        .fold(0.0, f64::max);
    exact.push(ExactCheck::new("boundary/discrete", bgap, 1e-10));

    let dom = Domain::rectangle(32)?;
    let params = StressParams::new(1.9, 1.0)?;
    let prob = SlipProblem::new(
        dom,
        params,
        4.0,
        mms_forcing(&dom, 1.9, 1.0, 1.0)?,
        BcVariant::BardosVorticity,
    )?;
    let (u, _) = fixed_point(&prob, None, &FixedPointOptions::default())?;
    let weak = crate::solver::weak_residual_seeded(&u, &prob, 8, seed)?;
    let alt = alt_weak_form_residual_with(&u, &prob, 8, seed, &flat)?;
    exact.push(ExactCheck::new(
        "alt-weak-form/flat-faces",
        (alt - weak).abs(),
        1e-12 * weak.max(1e-300) + 1e-300,
    ));
    let fake = |face: Face| {
        if face == Face::Bottom {
            [[0.3, -0.2], [0.1, 0.7]]
        } else {
            [[0.0; 2]; 2]
        }
    };
    let v = SmoothFieldSampler::new(FieldClass::Tangent, 3).sample(&dom, &mut rng);
    let shift = alt_weak_form_value(&u, &v, &prob, &fake)? - alt_weak_form_value(&u, &v, &prob, &flat)?;
    let injected = curvature_term(&u, &v, &prob, &fake)?;
    exact.push(ExactCheck::new(
        "alt-weak-form/curvature-injection",
        (shift - injected).abs(),
        1e-12 * injected.abs().max(1.0),
    ));

    let mut inequalities = Vec::new();
    for p in [2.0, 1.9] {
        let (mut slack, mut rel, mut hs) = (Vec::new(), Vec::new(), Vec::new());
        for &n in grids.iter().take(3) {
            let dom = Domain::rectangle(n)?;
            let f = mms_forcing(&dom, p, 1.0, 1.0)?;
            let prob = SlipProblem::new(dom, StressParams::new(p, 1.0)?, 4.0, f, BcVariant::BardosVorticity)?;
            let (u, _) = fixed_point(&prob, None, &FixedPointOptions::default())?;
            let s = apriori_energy_check(&u, &prob)?;
            slack.push(s.slack);
            rel.push(s.slack / s.rhs);
            hs.push(dom.h());
        }
        let fitted_c = rel.iter().zip(&hs).map(|(r, h)| (-r / h).max(0.0)).fold(0.0, f64::max);
        inequalities.push(InequalityCheck {
            name: format!("apriori-estimate/p={p}"),
            grids: grids.iter().take(3).copied().collect(),
            pass: rel.iter().zip(&hs).all(|(r, h)| *r >= -h),
            h: hs,
            slack,
            relative_slack: rel,
            fitted_c,
        });
    }

    Ok(IdentityBattery {
        reports,
        exact,
        inequalities,
        runtime_s: t0.elapsed().as_secs_f64(),
        note: format!("{DIMENSION_NOTE}; corners excluded from boundary sums"),
    })
}
