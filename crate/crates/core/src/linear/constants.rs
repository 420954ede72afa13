//! Empirical lower bounds for the constants of the linear estimate, the
//! embedding `||Dv||_inf <= C_hat ||grad Dv||_q` and Korn's inequality.
//!
//! Every value is a supremum over sampled inputs and therefore a lower
//! bound of the true constant.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, solve_linear_with, LinearMethod, LinearOperator, LinearSolveOptions};
use crate::exponents::{contraction_gate, Gate};
use crate::grid::{lq_norm, sym_grad, vector_gradient, w2q_surrogate, Domain, FieldClass, SmoothFieldSampler};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsEstimate {
    pub q: f64,
    pub cq_disc: f64,
    pub chat_disc: Option<f64>,
    pub korn_disc: Option<f64>,
    pub samples: usize,
    pub method: String,
}

impl ConstantsEstimate {
    /// Gate `1 - (2-p) C_q` with the sampled `C_q`. Heuristic: the sample is a lower bound.
    pub fn gate(&self, p: f64) -> Gate {
        contraction_gate(p, self.cq_disc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqOptions {
    pub samples: usize,
    pub seed: u64,
    /// Coordinate-ascent sweeps started from the best sample.
    pub ascent_sweeps: usize,
    /// Wavenumbers per factor of the random forcing.
    pub frequencies: usize,
}

impl Default for CqOptions {
    fn default() -> Self {
        Self {
            samples: 200,
            seed: 0,
            ascent_sweeps: 2,
            frequencies: 3,
        }
    }
}

fn direct() -> LinearSolveOptions {
    LinearSolveOptions {
        method: LinearMethod::Cholesky,
        ..LinearSolveOptions::default()
    }
}

fn cq_ratio(op: &LinearOperator, sampler: &SmoothFieldSampler, c: &[f64], q: f64) -> Result<f64> {
    let f = sampler.eval(&op.dom, c);
    let fnorm = lq_norm(&f, q, &op.dom)?;
    if fnorm == 0.0 {
        return Ok(0.0);
    }
    let (u, _) = solve_linear_with(op, &f, &direct())?;
    Ok(w2q_surrogate(&u, &op.dom, q)? / fnorm)
}

/// `sup ||grad Du||_q / ||F||_q` over random smooth `F`, refined by coordinate ascent.
pub fn estimate_cq(op: &LinearOperator, q: f64, n_samples: usize, seed: u64) -> Result<ConstantsEstimate> {
    estimate_cq_with(
        op,
        q,
        &CqOptions {
            samples: n_samples,
            seed,
            ..CqOptions::default()
        },
    )
}

pub fn estimate_cq_with(op: &LinearOperator, q: f64, opts: &CqOptions) -> Result<ConstantsEstimate> {
    if opts.samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let sampler = SmoothFieldSampler::new(FieldClass::General, opts.frequencies);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for _ in 0..opts.samples {
        let c = sampler.coefficients(&mut rng);
        let r = cq_ratio(op, &sampler, &c, q)?;
        if r > best.0 {
            best = (r, c);
        }
    }
    let (mut val, mut c) = best;
    let mut step = 0.5;
    for _ in 0..opts.ascent_sweeps {
        for m in 0..c.len() {
            for dir in [1.0, -1.0] {
                let old = c[m];
                c[m] = old + dir * step;
                let r = cq_ratio(op, &sampler, &c, q)?;
                if r > val {
                    val = r;
                    break;
                }
                c[m] = old;
            }
        }
        step *= 0.5;
    }
    Ok(ConstantsEstimate {
        q,
        cq_disc: val,
        chat_disc: None,
        korn_disc: None,
        samples: opts.samples,
        method: format!(
            "sampled sup over {} random forcings ({} wavenumbers) plus {} coordinate-ascent sweeps; lower bound",
            opts.samples, opts.frequencies, opts.ascent_sweeps
        ),
    })
}

fn tangent_samples(dom: &Domain, n: usize, seed: u64) -> impl Iterator<Item = crate::grid::VectorField> + '_ {
    let sampler = SmoothFieldSampler::new(FieldClass::Tangent, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(move |_| sampler.sample(dom, &mut rng))
}

/// `sup ||Dv||_inf / ||grad Dv||_q` over random tangent fields; needs `q > 2`.
pub fn estimate_chat(dom: &Domain, q: f64, n_samples: usize, seed: u64) -> Result<f64> {
    if !(q > 2.0) {
        return Err(Error::Domain(format!(
            "the embedding constant needs q > n = 2, got {q}"
        )));
    }
    let mut best = 0.0f64;
    for v in tangent_samples(dom, n_samples, seed) {
        let num = lq_norm(&sym_grad(&v, dom), f64::INFINITY, dom)?;
        let den = w2q_surrogate(&v, dom, q)?;
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    Ok(best)
}

/// `sup ||grad v||_p / ||Dv||_p` over random tangent fields.
pub fn estimate_korn(dom: &Domain, p: f64, n_samples: usize, seed: u64) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain(format!("p must lie in (1, 2], got {p}")));
    }
    let mut best = 0.0f64;
    for v in tangent_samples(dom, n_samples, seed) {
        let num = lq_norm(&vector_gradient(&v, dom), p, dom)?;
        let den = lq_norm(&sym_grad(&v, dom), p, dom)?;
        if den > 0.0 {
            best = best.max(num / den);
        }
    }
    Ok(best)
}

/// All constants at once; `C_hat` only when `q > 2`.
pub fn estimate_constants(op: &LinearOperator, p: f64, q: f64, opts: &CqOptions) -> Result<ConstantsEstimate> {
    let mut est = estimate_cq_with(op, q, opts)?;
    if q > 2.0 {
        est.chat_disc = Some(estimate_chat(&op.dom, q, opts.samples, opts.seed)?);
    }
    est.korn_disc = Some(estimate_korn(&op.dom, p, opts.samples, opts.seed)?);
    Ok(est)
}

/// Smallest eigenvalue of `A x = lambda W x` (lumped mass) by inverse iteration.
pub fn smallest_eigenvalue(op: &LinearOperator) -> Result<f64> {
    let w: Vec<f64> = (0..op.n_dofs())
        .map(|k| {
            let (n, _) = op.dofs.location(k);
            let (i, j) = op.dom.ij(n);
            op.dom.weight(i, j)
        })
        .collect();
    let chol = op.cholesky()?;
    let mut x: Vec<f64> = (0..op.n_dofs()).map(|k| 1.0 + (k as f64 * 0.37).sin()).collect();
    let mut lambda = f64::INFINITY;
    for _ in 0..200 {
        let wx: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
        let mut y = chol.solve(&wx);
        let norm = dot(&y, &y.iter().zip(&w).map(|(a, b)| a * b).collect::<Vec<_>>()).sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        let ay = op.matrix.mul(&y);
        let next = dot(&y, &ay);
        x = y;
        if (next - lambda).abs() <= 1e-12 * next {
            return Ok(next);
        }
        lambda = next;
    }
    Ok(lambda)
}
