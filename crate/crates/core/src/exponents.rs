//! Closed-form exponent algebra.
//!
//! All functions here are pure maps of scalars.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Exponents and regularisation parameter of a problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentParams {
    pub p: f64,
    pub q: f64,
    pub n: f64,
    pub mu: f64,
}

impl ExponentParams {
    pub fn new(p: f64, q: f64, n: f64, mu: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::Domain(format!("p must lie in (1, 2], got {p}")));
        }
        if !(q > 1.0) {
            return Err(Error::Domain(format!("q must exceed 1, got {q}")));
        }
        if !(n >= 2.0) {
            return Err(Error::Domain(format!("n must be at least 2, got {n}")));
        }
        if !(mu >= 0.0) {
            return Err(Error::Domain(format!("mu must be nonnegative, got {mu}")));
        }
        Ok(Self { p, q, n, mu })
    }
}

/// Constants entering the invariant-ball radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusInputs {
    pub cq: f64,
    pub chat: f64,
    pub fnorm_q: f64,
    pub alpha: f64,
}

/// Output of [`contraction_gate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub alpha: f64,
    pub satisfied: bool,
}

/// `r(q) = n q / (n (p-1) + q (2-p))`.
///
/// The denominator is evaluated as `(n - q) p + 2q - n`, which is the same
/// polynomial but reduces to exactly `n` when `q == n`, so `r(n) == n` holds
/// in floating point as well.
pub fn critical_r(q: f64, n: f64, p: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain(format!("r(q) needs q > 0, got {q}")));
    }
    let denom = (n - q) * p + 2.0 * q - n;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "r(q) denominator n(p-1) + q(2-p) = {denom} is not positive"
        )));
    }
    Ok(n * q / denom)
}

/// The exponent `q_hat = 2n(p-1) / (n - 2(2-p))`, i.e. the `q` with `r(q) = 2`.
pub fn q_hat(n: f64, p: f64) -> Result<f64> {
    let denom = n - 2.0 * (2.0 - p);
    if !(denom > 0.0) {
        return Err(Error::Domain(format!(
            "q_hat denominator n - 2(2-p) = {denom} is not positive"
        )));
    }
    Ok(2.0 * n * (p - 1.0) / denom)
}

/// `alpha = 1 - (2-p) C_q`; the gate is satisfied iff `alpha > 0`.
pub fn contraction_gate(p: f64, cq: f64) -> Gate {
    let alpha = 1.0 - (2.0 - p) * cq;
    Gate {
        alpha,
        satisfied: alpha > 0.0,
    }
}

/// Exponent on `mu` in the ball radius and in the bound on `(mu+|Dv|^2)^{(2-p)/2} f`.
pub fn mu_exponent(p: f64) -> f64 {
    (2.0 - p) / 2.0
}

/// Radius `R` of the ball `K(R) = { v : ||grad Dv||_q <= R }` mapped into itself by `T`:
///
/// `R = (2/alpha) mu^{(2-p)/2} C_q ||f||_q + (2 C_q C_hat^{2-p} / alpha)^{1/(p-1)} ||f||_q^{1/(p-1)}`.
pub fn ball_radius(inputs: &RadiusInputs, params: &ExponentParams) -> Result<f64> {
    let RadiusInputs {
        cq,
        chat,
        fnorm_q,
        alpha,
    } = *inputs;
    let p = params.p;
    if !(alpha > 0.0) {
        return Err(Error::GateViolated { alpha });
    }
    if !(p > 1.0) {
        return Err(Error::Domain(format!("ball radius needs p > 1, got {p}")));
    }
    let mu_term = params.mu.powf(mu_exponent(p)) * cq * fnorm_q;
    let e = 1.0 / (p - 1.0);
    let second = (2.0 * cq * chat.powf(2.0 - p) / alpha).powf(e) * fnorm_q.powf(e);
    Ok(2.0 / alpha * mu_term + second)
}

/// `alpha R - (mu^{(2-p)/2} C_q ||f|| + C_q C_hat^{2-p} ||f|| R^{2-p})`.
///
/// Nonnegative slack means `T(K(R))` is contained in `K(R)` by the a priori estimate.
pub fn radius_slack(radius: f64, inputs: &RadiusInputs, params: &ExponentParams) -> f64 {
    let p = params.p;
    let rhs = params.mu.powf(mu_exponent(p)) * inputs.cq * inputs.fnorm_q
        + inputs.cq * inputs.chat.powf(2.0 - p) * inputs.fnorm_q * radius.powf(2.0 - p);
    inputs.alpha * radius - rhs
}
