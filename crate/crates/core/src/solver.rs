//! The fixed-point map `T` and its iteration for `mu > 0`.
//!
//! `T(v)` solves the linear slip problem `-div(Du) = F(v)`. Two discrete
//! right-hand sides are available:
//!
//! * [`RhsForm::Conservative`] (default) uses the continuum identity
//!   `F(v) = -div(Dv) + B(Dv)^{-1} (f + div(B(Dv) Dv))`, which follows from
//!   the expansion of `div(B Du)`. With the weak forms of this crate,
//!   `T(v) = v + A^{-1} beta (W f - N(v))` where `N` is the discrete weak
//!   operator and `beta = (mu + |Dv|^2)^{(2-p)/2}` at the nodes. A fixed
//!   point of `T` is exactly a discrete weak solution.
//! * [`RhsForm::Pointwise`] evaluates `F(v) = (p-2) G(v) + beta f` node by
//!   node with the finite-difference operators. Its fixed point differs from
//!   the weak solution by the discretisation error.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exponents::{ball_radius, contraction_gate, mu_exponent, ExponentParams, Gate, RadiusInputs};
use crate::grid::{
    div_sym_grad, lq_norm, lq_norm_masked, sym_grad, sym_grad_gradient, w1p_norm, w2q_surrogate, BcVariant, Domain,
    FieldClass, SmoothFieldSampler, VectorField,
};
use crate::linear::{assemble, dot, fem, solve_linear_with, ConstantsEstimate, LinearOperator, LinearSolveOptions};
use crate::stress::{b_inverse, g_vector, rhs_f, StressParams};
use crate::{Error, Result};

/// Problem data: domain, `(p, mu)`, integrability exponent `q`, forcing and slip variant.
#[derive(Debug, Clone, PartialEq)]
pub struct SlipProblem {
    pub dom: Domain,
    pub params: StressParams,
    pub q: f64,
    pub f: VectorField,
    pub variant: BcVariant,
}

impl SlipProblem {
    pub fn new(dom: Domain, params: StressParams, q: f64, f: VectorField, variant: BcVariant) -> Result<Self> {
        if !(q > 1.0) {
            return Err(Error::Domain(format!("q must exceed 1, got {q}")));
        }
        if f.len() != dom.len() {
            return Err(Error::SizeMismatch {
                expected: dom.len(),
                got: f.len(),
            });
        }
        if !f.is_finite() {
            return Err(Error::Domain("forcing has non-finite entries".into()));
        }
        Ok(Self {
            dom,
            params,
            q,
            f,
            variant,
        })
    }

    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Ok(Self {
            params: StressParams::new(self.params.p, mu)?,
            ..self.clone()
        })
    }

    pub fn with_forcing(&self, f: VectorField) -> Result<Self> {
        Self::new(self.dom, self.params, self.q, f, self.variant)
    }

    /// `q > n = 2`, the integrability needed for strong solutions.
    pub fn is_strong_regime(&self) -> bool {
        self.q > 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RhsForm {
    #[default]
    Conservative,
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointOptions {
    /// Relative `W^{1,p}` increment at which the iteration stops.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation used when the gate is violated.
    pub theta: f64,
    /// Relaxation applied regardless of the gate.
    pub force_theta: Option<f64>,
    pub rhs: RhsForm,
    pub linear: LinearSolveOptions,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            theta: 0.5,
            force_theta: None,
            rhs: RhsForm::Conservative,
            linear: LinearSolveOptions::default(),
        }
    }
}

/// Diagnostics of one application of `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    /// `||grad D u_k||_q` of the new iterate.
    pub w2q: f64,
    pub increment_l2: f64,
    pub increment_w1p: f64,
    pub relative_increment: f64,
    /// Right-hand side of the a priori bound on `||grad D T(v)||_q`, when the constants allow it.
    pub apriori_bound: Option<f64>,
    pub within_ball: Option<bool>,
    pub linear_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub p: f64,
    pub mu: f64,
    pub q: f64,
    pub variant: BcVariant,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub rhs_form: RhsForm,
    /// Applications of `T`.
    pub iterations: usize,
    /// Applications after the first one.
    pub corrections: usize,
    pub converged: bool,
    pub theta: f64,
    pub fnorm_q: f64,
    pub cq_disc: Option<f64>,
    pub chat_disc: Option<f64>,
    pub gate: Option<Gate>,
    pub radius: Option<f64>,
    pub all_within_ball: Option<bool>,
    pub iterates: Vec<IterateRecord>,
    /// Ratios of successive `W^{1,p}` increments.
    pub contraction_factors: Vec<f64>,
    pub increments_monotone: bool,
    pub strong_residual: f64,
    pub weak_residual: f64,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

impl SolveReport {
    pub fn last_contraction(&self) -> Option<f64> {
        self.contraction_factors.last().copied()
    }

    /// Geometric mean of the contraction factors after the first `skip`.
    pub fn mean_contraction(&self, skip: usize) -> Option<f64> {
        let c: Vec<f64> = self
            .contraction_factors
            .iter()
            .skip(skip)
            .copied()
            .filter(|v| *v > 0.0 && v.is_finite())
            .collect();
        if c.is_empty() {
            return None;
        }
        Some((c.iter().map(|v| v.ln()).sum::<f64>() / c.len() as f64).exp())
    }
}

fn standard_notes(prob: &SlipProblem, gate: Option<&Gate>, theta: f64) -> Vec<String> {
    let mut notes = vec![
        "ball radius uses mu^((2-p)/2) in its first term".to_string(),
        "C_q and C_hat are sampled lower bounds; the gate is a heuristic diagnostic".to_string(),
        "stopping rule: relative W^{1,p} increment of successive iterates".to_string(),
    ];
    if let Some(g) = gate {
        if !g.satisfied {
            notes.push(format!(
                "gate violated (alpha = {:.4}); iteration relaxed with theta = {theta}",
                g.alpha
            ));
        }
    }
    if !prob.is_strong_regime() {
        notes.push(format!("q = {} is not above n = 2; radius not computed", prob.q));
    }
    notes
}

/// Context shared by all applications of `T` for one problem.
pub struct FixedPointMap<'a> {
    pub prob: &'a SlipProblem,
    pub op: LinearOperator,
    pub opts: FixedPointOptions,
    load: Vec<f64>,
}

impl<'a> FixedPointMap<'a> {
    pub fn new(prob: &'a SlipProblem, opts: FixedPointOptions) -> Self {
        let op = assemble(&prob.dom, prob.variant);
        let load = op.load(&prob.f);
        Self { prob, op, opts, load }
    }

    /// `T(v)` and the number of inner linear iterations.
    pub fn apply(&self, v: &VectorField) -> Result<(VectorField, usize)> {
        let prob = self.prob;
        let dom = &prob.dom;
        if prob.params.is_linear() {
            let (u, s) = solve_linear_with(&self.op, &prob.f, &self.opts.linear)?;
            return Ok((u, s.iterations));
        }
        if !(prob.params.mu > 0.0) {
            return Err(Error::Domain("the fixed-point map needs mu > 0".into()));
        }
        match self.opts.rhs {
            RhsForm::Pointwise => {
                let f = rhs_f(v, &prob.f, &prob.params, dom)?;
                let (u, s) = solve_linear_with(&self.op, &f, &self.opts.linear)?;
                Ok((u, s.iterations))
            }
            RhsForm::Conservative => {
                let dv = sym_grad(v, dom);
                let nv = self.op.dofs.restrict(&fem::weak_operator(v, &prob.params, dom));
                let rhs: Vec<f64> = (0..self.op.n_dofs())
                    .map(|k| {
                        let (n, _) = self.op.dofs.location(k);
                        b_inverse(&dv.values[n], &prob.params) * (self.load[k] - nv[k])
                    })
                    .collect();
                let (dx, s) = self.op.solve_system(&rhs, None, &self.opts.linear)?;
                let mut x = self.op.dofs.gather(v);
                for (a, b) in x.iter_mut().zip(&dx) {
                    *a += b;
                }
                Ok((self.op.dofs.scatter(&x, dom.len()), s.iterations))
            }
        }
    }
}

/// One application of `T` with a fresh operator.
pub fn map_t(v: &VectorField, prob: &SlipProblem, opts: &FixedPointOptions) -> Result<VectorField> {
    FixedPointMap::new(prob, *opts).apply(v).map(|(u, _)| u)
}

/// `C_q [(2-p) ||grad Dv||_q + mu^{(2-p)/2} ||f||_q + C_hat^{2-p} ||grad Dv||_q^{2-p} ||f||_q]`.
pub fn apriori_bound(w2q_v: f64, fnorm_q: f64, p: f64, mu: f64, cq: f64, chat: f64) -> f64 {
    cq * ((2.0 - p) * w2q_v + mu.powf(mu_exponent(p)) * fnorm_q + chat.powf(2.0 - p) * w2q_v.powf(2.0 - p) * fnorm_q)
}

/// Iterate `u_{k+1} = (1 - theta) u_k + theta T(u_k)` from `u_0 = 0`.
pub fn fixed_point(
    prob: &SlipProblem,
    consts: Option<&ConstantsEstimate>,
    opts: &FixedPointOptions,
) -> Result<(VectorField, SolveReport)> {
    fixed_point_from(prob, consts, opts, None)
}

pub fn fixed_point_from(
    prob: &SlipProblem,
    consts: Option<&ConstantsEstimate>,
    opts: &FixedPointOptions,
    start: Option<&VectorField>,
) -> Result<(VectorField, SolveReport)> {
    let t0 = Instant::now();
    let dom = &prob.dom;
    let (p, mu, q) = (prob.params.p, prob.params.mu, prob.q);
    let fnorm_q = lq_norm(&prob.f, q, dom)?;
    let gate = consts.map(|c| contraction_gate(p, c.cq_disc));
    let cq = consts.map(|c| c.cq_disc);
    let chat = consts.and_then(|c| c.chat_disc);
    let radius = match (consts, chat, gate) {
        (Some(c), Some(ch), Some(g)) if g.satisfied && prob.is_strong_regime() => {
            let params = ExponentParams::new(p, q, 2.0, mu)?;
            let inputs = RadiusInputs {
                cq: c.cq_disc,
                chat: ch,
                fnorm_q,
                alpha: g.alpha,
            };
            Some(ball_radius(&inputs, &params)?)
        }
        _ => None,
    };
    let theta = match opts.force_theta {
        Some(t) => t,
        None if gate.is_some_and(|g| !g.satisfied) => opts.theta,
        None => 1.0,
    };
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::Domain(format!("relaxation must lie in (0, 1], got {theta}")));
    }
    let map = FixedPointMap::new(prob, *opts);
    let mut u = match start {
        Some(s) => {
            let mut s = crate::grid::enforce_tangency(s, dom);
            s.tangent = true;
            s
        }
        None => VectorField::zeros(dom),
    };
    let mut report = SolveReport {
        p,
        mu,
        q,
        variant: prob.variant,
        nx: dom.nx,
        ny: dom.ny,
        lx: dom.lx,
        ly: dom.ly,
        rhs_form: opts.rhs,
        iterations: 0,
        corrections: 0,
        converged: false,
        theta,
        fnorm_q,
        cq_disc: cq,
        chat_disc: chat,
        gate,
        radius,
        all_within_ball: radius.map(|_| true),
        iterates: Vec::new(),
        contraction_factors: Vec::new(),
        increments_monotone: true,
        strong_residual: f64::NAN,
        weak_residual: f64::NAN,
        wall_time_s: 0.0,
        notes: standard_notes(prob, gate.as_ref(), theta),
    };
    let mut w2q_prev = w2q_surrogate(&u, dom, q)?;
    let mut prev_inc: Option<f64> = None;
    for k in 1..=opts.max_iter {
        let (tu, lin_it) = map.apply(&u)?;
        let next = if theta == 1.0 {
            tu
        } else {
            u.axpby(1.0 - theta, &tu, theta)
        };
        if !next.is_finite() {
            report.notes.push(format!("iterate {k} is not finite"));
            report.wall_time_s = t0.elapsed().as_secs_f64();
            return Err(Error::NonConvergence {
                report: Box::new(report),
            });
        }
        let diff = next.sub(&u);
        let inc_w1p = w1p_norm(&diff, dom, p)?;
        let inc_l2 = lq_norm(&diff, 2.0, dom)?;
        let norm_next = w1p_norm(&next, dom, p)?;
        let rel = if inc_w1p == 0.0 { 0.0 } else { inc_w1p / norm_next };
        let w2q = w2q_surrogate(&next, dom, q)?;
        let bound = match (cq, chat) {
            (Some(c), Some(h)) => Some(apriori_bound(w2q_prev, fnorm_q, p, mu, c, h)),
            _ => None,
        };
        let within = radius.map(|r| w2q <= r * 1.1);
        if within == Some(false) {
            report.all_within_ball = Some(false);
        }
        if let Some(pi) = prev_inc {
            if pi > 0.0 {
                report.contraction_factors.push(inc_w1p / pi);
                if inc_w1p > pi {
                    report.increments_monotone = false;
                }
            }
        }
        prev_inc = Some(inc_w1p);
        report.iterates.push(IterateRecord {
            k,
            w2q,
            increment_l2: inc_l2,
            increment_w1p: inc_w1p,
            relative_increment: rel,
            apriori_bound: bound,
            within_ball: within,
            linear_iterations: lin_it,
        });
        report.iterations = k;
        u = next;
        w2q_prev = w2q;
        if rel <= opts.tol {
            report.converged = true;
            report.corrections = k - 1;
            break;
        }
    }
    report.strong_residual = strong_residual(&u, prob)?;
    report.weak_residual = weak_residual(&u, prob, 8)?;
    report.wall_time_s = t0.elapsed().as_secs_f64();
    if !report.converged {
        report.corrections = report.iterations.saturating_sub(1);
        return Err(Error::NonConvergence {
            report: Box::new(report),
        });
    }
    Ok((u, report))
}

/// Interior `L^2` norm of `-div(Du) - (p-2) G(u) - (mu + |Du|^2)^{(2-p)/2} f`.
pub fn strong_residual(u: &VectorField, prob: &SlipProblem) -> Result<f64> {
    let dom = &prob.dom;
    let du = sym_grad(u, dom);
    let lhs = div_sym_grad(u, dom);
    let g = g_vector(&du, &sym_grad_gradient(u, dom), &prob.params);
    let c = prob.params.p - 2.0;
    let values = (0..dom.len())
        .map(|n| {
            let b = b_inverse(&du.values[n], &prob.params);
            let f = prob.f.values[n];
            [
                -lhs.values[n][0] - c * g.values[n][0] - b * f[0],
                -lhs.values[n][1] - c * g.values[n][1] - b * f[1],
            ]
        })
        .collect();
    let r = VectorField { values, tangent: false };
    lq_norm_masked(&r, 2.0, dom, |i, j| !dom.is_boundary(i, j))
}

/// Nodal weak residual `N(u) - W f` (constrained components zero).
pub fn weak_residual_vector(u: &VectorField, prob: &SlipProblem) -> VectorField {
    let dom = &prob.dom;
    let n = fem::weak_operator(u, &prob.params, dom);
    let w = fem::lumped_load(&prob.f, dom);
    let values = n
        .iter()
        .zip(&w)
        .enumerate()
        .map(|(k, (a, b))| {
            let (i, j) = dom.ij(k);
            let keep = [!(i == 0 || i == dom.nx + 1), !(j == 0 || j == dom.ny + 1)];
            [
                if keep[0] { a[0] - b[0] } else { 0.0 },
                if keep[1] { a[1] - b[1] } else { 0.0 },
            ]
        })
        .collect();
    VectorField { values, tangent: true }
}

/// `max_v |1/2 sum B Du:Dv w - sum f.v w| / ||v||_{W^{1,p}}` over `n_test`
/// random smooth tangent test fields.
pub fn weak_residual(u: &VectorField, prob: &SlipProblem, n_test: usize) -> Result<f64> {
    weak_residual_seeded(u, prob, n_test, 0)
}

pub fn weak_residual_seeded(u: &VectorField, prob: &SlipProblem, n_test: usize, seed: u64) -> Result<f64> {
    let r = weak_residual_vector(u, prob);
    let flat: Vec<f64> = r.values.iter().flatten().copied().collect();
    let sampler = SmoothFieldSampler::new(FieldClass::Tangent, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..n_test {
        let v = sampler.sample(&prob.dom, &mut rng);
        let vf: Vec<f64> = v.values.iter().flatten().copied().collect();
        let norm = w1p_norm(&v, &prob.dom, prob.params.p)?;
        if norm > 0.0 {
            best = best.max(dot(&flat, &vf).abs() / norm);
        }
    }
    Ok(best)
}
