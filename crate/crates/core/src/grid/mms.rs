//! Manufactured solution `u* = (sin(a x) cos(b y), c cos(a x) sin(b y))`,
//! `a = pi / lx`, `b = pi / ly`.
//!
//! `u*` is tangent to every face and has `d_n u*_tau = 0` there, so it
//! satisfies the Navier and the vorticity slip conditions at once.

use std::f64::consts::PI;

use super::{Domain, Mat2, Vec2, VectorField};
use crate::stress::{b_times_d, StressParams};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manufactured {
    pub lx: f64,
    pub ly: f64,
    pub c: f64,
}

impl Manufactured {
    pub fn new(dom: &Domain, c: f64) -> Self {
        Self {
            lx: dom.lx,
            ly: dom.ly,
            c,
        }
    }

    fn ab(&self) -> (f64, f64) {
        (PI / self.lx, PI / self.ly)
    }

    pub fn velocity(&self, x: f64, y: f64) -> Vec2 {
        let (a, b) = self.ab();
        [(a * x).sin() * (b * y).cos(), self.c * (a * x).cos() * (b * y).sin()]
    }

    /// Closed-form `Du*`.
    pub fn sym_grad(&self, x: f64, y: f64) -> Mat2 {
        let (a, b) = self.ab();
        let cc = (a * x).cos() * (b * y).cos();
        let ss = (a * x).sin() * (b * y).sin();
        let d12 = -(b + self.c * a) * ss;
        [[2.0 * a * cc, d12], [d12, 2.0 * self.c * b * cc]]
    }

    /// Closed-form vorticity `(b - c a) sin(a x) sin(b y)`.
    pub fn vorticity(&self, x: f64, y: f64) -> f64 {
        let (a, b) = self.ab();
        (b - self.c * a) * (a * x).sin() * (b * y).sin()
    }

    pub fn flux(&self, x: f64, y: f64, params: &StressParams) -> Mat2 {
        b_times_d(&self.sym_grad(x, y), params)
    }

    /// `f = -div(B(Du*) Du*)` by sixth-order central differences of the
    /// closed-form flux with step `delta`.
    pub fn forcing(&self, x: f64, y: f64, params: &StressParams, delta: f64) -> Vec2 {
        const W: [(f64, f64); 3] = [(1.0, 45.0), (2.0, -9.0), (3.0, 1.0)];
        let mut dx = [[0.0; 2]; 2];
        let mut dy = [[0.0; 2]; 2];
        for (s, w) in W {
            let xp = self.flux(x + s * delta, y, params);
            let xm = self.flux(x - s * delta, y, params);
            let yp = self.flux(x, y + s * delta, params);
            let ym = self.flux(x, y - s * delta, params);
            for i in 0..2 {
                for j in 0..2 {
                    dx[i][j] += w * (xp[i][j] - xm[i][j]);
                    dy[i][j] += w * (yp[i][j] - ym[i][j]);
                }
            }
        }
        let scale = 1.0 / (60.0 * delta);
        [-scale * (dx[0][0] + dy[1][0]), -scale * (dx[0][1] + dy[1][1])]
    }

    /// Closed form of `-div(Du*)`, the `p = 2` forcing.
    pub fn forcing_linear(&self, x: f64, y: f64) -> Vec2 {
        let (a, b) = self.ab();
        let c = self.c;
        [
            (2.0 * a * a + b * b + a * b * c) * (a * x).sin() * (b * y).cos(),
            (c * a * a + 2.0 * c * b * b + a * b) * (a * x).cos() * (b * y).sin(),
        ]
    }
}

/// Nodal samples of `u*` with amplitude `c` on the second component.
pub fn mms_field(dom: &Domain, c: f64) -> VectorField {
    let m = Manufactured::new(dom, c);
    let mut u = VectorField::from_fn(dom, |x, y| m.velocity(x, y));
    // sin(pi) is not exactly zero in floating point
    let bc = super::enforce_tangency(&u, dom);
    u.values = bc.values;
    u.tangent = true;
    u
}

/// Nodal forcing for `u*` at `(p, mu)`, differentiated on an auxiliary
/// grid eight times finer than `dom`.
pub fn mms_forcing(dom: &Domain, p: f64, mu: f64, c: f64) -> Result<VectorField> {
    let params = StressParams::new(p, mu)?;
    let m = Manufactured::new(dom, c);
    let delta = dom.hx().min(dom.hy()) / 8.0;
    Ok(VectorField::from_fn(dom, |x, y| m.forcing(x, y, &params, delta)))
}

pub fn mms_forcing_closed_form_linear(dom: &Domain, c: f64) -> VectorField {
    let m = Manufactured::new(dom, c);
    VectorField::from_fn(dom, |x, y| m.forcing_linear(x, y))
}
