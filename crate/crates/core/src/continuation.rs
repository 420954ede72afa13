//! The `mu -> 0` path: a geometric sequence of regularised solves with warm
//! starts, uniformity diagnostics and the singular (`mu = 0`) checks.

use serde::{Deserialize, Serialize};

use crate::grid::{lq_norm, sym_grad, w1p_norm, w2q_surrogate, TensorField, VectorField};
use crate::linear::ConstantsEstimate;
use crate::oracle::{minimize_with, EnergyFunctional, MinimizeOptions};
use crate::solver::{fixed_point_from, weak_residual_seeded, FixedPointOptions, SlipProblem, SolveReport};
use crate::stress::{b_times_d_field, StressParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationSchedule {
    pub mu0: f64,
    pub factor: f64,
    /// Number of reductions; `mu_k = mu0 factor^k` for `k = 0..=steps`.
    pub steps: usize,
    pub warm_start: bool,
}

impl Default for ContinuationSchedule {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            factor: 0.25,
            steps: 8,
            warm_start: true,
        }
    }
}

impl ContinuationSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return Err(Error::Domain(format!("mu0 must be positive, got {}", self.mu0)));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::Domain(format!("factor must lie in (0, 1), got {}", self.factor)));
        }
        if self.steps == 0 {
            return Err(Error::Domain("continuation needs at least one step".into()));
        }
        Ok(())
    }

    pub fn mu_values(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| self.mu0 * self.factor.powi(k as i32))
            .collect()
    }

    pub fn final_mu(&self) -> f64 {
        self.mu0 * self.factor.powi(self.steps as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationStep {
    pub k: usize,
    pub mu: f64,
    /// `||grad D u^{mu_k}||_q`.
    pub w2q: f64,
    /// `||u^{mu_k} - u^{mu_{k-1}}||_{W^{1,p}}`, absent at `k = 0`.
    pub increment_w1p: Option<f64>,
    pub report: SolveReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub schedule: ContinuationSchedule,
    pub steps: Vec<ContinuationStep>,
    /// `max_k w2q / min_k w2q`.
    pub w2q_spread: f64,
    /// `max_k w2q / w2q(mu0)`.
    pub w2q_sup_over_first: f64,
    pub increments_decreasing: bool,
    /// Ratios `||B Du^mu - B Du^0||_{p'} / ||Du^mu - Du^0||_p^{p-1}` against the
    /// final iterate, evaluated with the `mu = 0` coefficient for `u^0`.
    pub nonlinear_difference_ratios: Vec<f64>,
    pub nonlinear_difference_constant: f64,
    pub singular_weak_residual: f64,
    /// `sup_v |sum f.v w| / ||v||_{W^{1,p}}`, the residual of `u = 0`.
    pub residual_scale: f64,
    pub notes: Vec<String>,
}

/// Solve at `mu_k = mu0 factor^k`, `k = 0..=steps`, ignoring `prob.params.mu`.
/// The final iterate is the `mu = 0` candidate.
pub fn run_continuation(
    prob: &SlipProblem,
    sched: &ContinuationSchedule,
    consts: Option<&ConstantsEstimate>,
    opts: &FixedPointOptions,
) -> Result<(VectorField, ContinuationReport)> {
    sched.validate()?;
    let dom = &prob.dom;
    let p = prob.params.p;
    let mut steps: Vec<ContinuationStep> = Vec::new();
    let mut u_prev: Option<VectorField> = None;
    let mut solutions = Vec::new();
    for (k, mu) in sched.mu_values().into_iter().enumerate() {
        let pk = prob.with_mu(mu)?;
        let start = if sched.warm_start { u_prev.as_ref() } else { None };
        let (u, report) = match fixed_point_from(&pk, consts, opts, start) {
            Ok(r) => r,
            Err(e) => {
                let mut reports: Vec<SolveReport> = steps.into_iter().map(|s| s.report).collect();
                if let Error::NonConvergence { report } = &e {
                    reports.push((**report).clone());
                }
                return Err(Error::Continuation {
                    step: k,
                    reports,
                    source: Box::new(e),
                });
            }
        };
        let increment_w1p = match &u_prev {
            Some(v) => Some(w1p_norm(&u.sub(v), dom, p)?),
            None => None,
        };
        steps.push(ContinuationStep {
            k,
            mu,
            w2q: w2q_surrogate(&u, dom, prob.q)?,
            increment_w1p,
            report,
        });
        solutions.push((mu, u.clone()));
        u_prev = Some(u);
    }
    let u0 = u_prev.expect("schedule has at least one step");
    let w: Vec<f64> = steps.iter().map(|s| s.w2q).collect();
    let wmax = w.iter().copied().fold(0.0, f64::max);
    let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
    let incs: Vec<f64> = steps.iter().filter_map(|s| s.increment_w1p).collect();
    let increments_decreasing = incs.windows(2).all(|a| a[1] <= a[0]);
    let ratios = nonlinear_difference_ratios(&solutions[..solutions.len() - 1], &u0, prob)?;
    let constant = ratios.iter().copied().fold(0.0, f64::max);
    let zero = VectorField::zeros(dom);
    let singular = singular_weak_residual(&u0, prob, 16)?;
    let scale = singular_weak_residual(&zero, prob, 16)?;
    let mut notes = vec![format!(
        "mu_k = {} * {}^k for k = 0..={}; final mu = {:e}",
        sched.mu0,
        sched.factor,
        sched.steps,
        sched.final_mu()
    )];
    if p < 2.0 && !within_factor(wmax, w[0], 2.5) {
        notes.push(format!("surrogate grew to {:.3} times its mu0 value", wmax / w[0]));
    }
    Ok((
        u0,
        ContinuationReport {
            schedule: *sched,
            steps,
            w2q_spread: if wmin > 0.0 { wmax / wmin } else { 1.0 },
            w2q_sup_over_first: if w[0] > 0.0 { wmax / w[0] } else { 1.0 },
            increments_decreasing,
            nonlinear_difference_ratios: ratios,
            nonlinear_difference_constant: constant,
            singular_weak_residual: singular,
            residual_scale: scale,
            notes,
        },
    ))
}

fn within_factor(v: f64, base: f64, factor: f64) -> bool {
    base == 0.0 || v <= factor * base
}

/// `||B_mu(Du) Du - B_0(Du0) Du0||_{p'} / ||Du - Du0||_p^{p-1}` for each `(mu, u)`.
pub fn nonlinear_difference_ratios(
    path: &[(f64, VectorField)],
    u0: &VectorField,
    prob: &SlipProblem,
) -> Result<Vec<f64>> {
    let dom = &prob.dom;
    let p = prob.params.p;
    let dual = p / (p - 1.0);
    let d0 = sym_grad(u0, dom);
    let s0 = b_times_d_field(&d0, &StressParams::new(p, 0.0)?);
    let mut out = Vec::new();
    for (mu, u) in path {
        let du = sym_grad(u, dom);
        let s = b_times_d_field(&du, &StressParams::new(p, *mu)?);
        let den = lq_norm(&tensor_diff(&du, &d0), p, dom)?.powf(p - 1.0);
        if den > 0.0 {
            out.push(lq_norm(&tensor_diff(&s, &s0), dual, dom)? / den);
        }
    }
    Ok(out)
}

fn tensor_diff(a: &TensorField, b: &TensorField) -> TensorField {
    TensorField {
        values: a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| crate::grid::mat_sub(x, y))
            .collect(),
        symmetric: a.symmetric && b.symmetric,
    }
}

/// Weak residual of the `mu = 0` form, with `B(D) D = 0` where `D = 0`.
pub fn singular_weak_residual(u0: &VectorField, prob: &SlipProblem, n_test: usize) -> Result<f64> {
    weak_residual_seeded(u0, &prob.with_mu(0.0)?, n_test, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub p: f64,
    pub lambdas: Vec<f64>,
    /// `||u(lambda f) - lambda^{1/(p-1)} u(f)||_2 / ||lambda^{1/(p-1)} u(f)||_2`.
    pub deviations: Vec<f64>,
    pub max_deviation: f64,
    pub minimizer_tol: f64,
}

/// Scaling law of the `mu = 0` problem, `u(lambda f) = lambda^{1/(p-1)} u(f)`,
/// with every solve done by the energy minimiser.
pub fn homogeneity_check(prob: &SlipProblem, lambdas: &[f64], opts: &MinimizeOptions) -> Result<HomogeneityReport> {
    if prob.params.mu != 0.0 {
        return Err(Error::Domain(format!(
            "homogeneity check needs mu = 0, got {}",
            prob.params.mu
        )));
    }
    let dom = prob.dom;
    let p = prob.params.p;
    let solve = |f: VectorField| -> Result<VectorField> {
        let j = EnergyFunctional::new(dom, prob.params, f)?;
        Ok(minimize_with(&j, opts, None)?.0)
    };
    let base = solve(prob.f.clone())?;
    let mut deviations = Vec::new();
    for &lambda in lambdas {
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("scaling factor must be positive, got {lambda}")));
        }
        let expected = base.scaled(lambda.powf(1.0 / (p - 1.0)));
        let dev = if lambda == 1.0 {
            0.0
        } else {
            let u = solve(prob.f.scaled(lambda))?;
            let den = lq_norm(&expected, 2.0, &dom)?;
            if den == 0.0 {
                lq_norm(&u, 2.0, &dom)?
            } else {
                lq_norm(&u.sub(&expected), 2.0, &dom)? / den
            }
        };
        deviations.push(dev);
    }
    Ok(HomogeneityReport {
        p,
        lambdas: lambdas.to_vec(),
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        deviations,
        minimizer_tol: opts.tol_g,
    })
}
