//! Pointwise nonlinear quantities: the diffusivity `B`, the flux `B Du`,
//! the vectors `I(u)` and `G(v)`, the fixed-point right-hand side and the
//! scalar inequalities used along the way.

use serde::{Deserialize, Serialize};

use crate::grid::sym_grad_gradient;
use crate::grid::{
    ddot, div_tensor, frob2, grad_tensor, mat_scale, mat_sub, sym_grad, Domain, Mat2, TensorField, TensorGradient,
    VectorField,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressParams {
    pub p: f64,
    pub mu: f64,
}

impl StressParams {
    pub fn new(p: f64, mu: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::Domain(format!("p must lie in (1, 2], got {p}")));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::Domain(format!("mu must be nonnegative, got {mu}")));
        }
        Ok(Self { p, mu })
    }

    pub fn is_linear(&self) -> bool {
        self.p == 2.0
    }
}

/// `B(D) = (mu + |D|^2)^{(p-2)/2}`.
pub fn b_coeff(d: &Mat2, params: &StressParams) -> Result<f64> {
    if params.is_linear() {
        return Ok(1.0);
    }
    let s = params.mu + frob2(d);
    if s == 0.0 {
        return Err(Error::Singular);
    }
    Ok(s.powf((params.p - 2.0) / 2.0))
}

/// `B(D) D`, extended by `0` at `D = 0` when `mu = 0`.
pub fn b_times_d(d: &Mat2, params: &StressParams) -> Mat2 {
    if params.is_linear() {
        return *d;
    }
    let s = params.mu + frob2(d);
    if s == 0.0 {
        return [[0.0; 2]; 2];
    }
    mat_scale(d, s.powf((params.p - 2.0) / 2.0))
}

/// `(mu + |D|^2)^{(2-p)/2}`, the reciprocal of `B`; finite everywhere.
pub fn b_inverse(d: &Mat2, params: &StressParams) -> f64 {
    if params.is_linear() {
        return 1.0;
    }
    (params.mu + frob2(d)).powf((2.0 - params.p) / 2.0)
}

pub fn b_times_d_field(du: &TensorField, params: &StressParams) -> TensorField {
    du.map(|d| b_times_d(d, params))
}

/// `I_j = sum_{k,l,m} D_lm (d_k D_lm) D_kj`.
pub fn i_vector(du: &TensorField, gdu: &TensorGradient) -> VectorField {
    let values = du
        .values
        .iter()
        .zip(&gdu.values)
        .map(|(d, g)| {
            let s = [ddot(d, &g[0]), ddot(d, &g[1])];
            [s[0] * d[0][0] + s[1] * d[1][0], s[0] * d[0][1] + s[1] * d[1][1]]
        })
        .collect();
    VectorField { values, tangent: false }
}

/// `G = I / (mu + |Dv|^2)`, set to `0` where the denominator vanishes.
pub fn g_vector(dv: &TensorField, gdv: &TensorGradient, params: &StressParams) -> VectorField {
    let mut g = i_vector(dv, gdv);
    for (val, d) in g.values.iter_mut().zip(&dv.values) {
        let s = params.mu + frob2(d);
        if s == 0.0 {
            *val = [0.0; 2];
        } else {
            val[0] /= s;
            val[1] /= s;
        }
    }
    g
}

/// Pointwise `F(v) = (p-2) G(v) + (mu + |Dv|^2)^{(2-p)/2} f`.
pub fn rhs_f(v: &VectorField, f: &VectorField, params: &StressParams, dom: &Domain) -> Result<VectorField> {
    if v.len() != dom.len() || f.len() != dom.len() {
        return Err(Error::SizeMismatch {
            expected: dom.len(),
            got: if v.len() != dom.len() { v.len() } else { f.len() },
        });
    }
    if params.is_linear() {
        return Ok(f.clone());
    }
    let dv = sym_grad(v, dom);
    let g = g_vector(&dv, &sym_grad_gradient(v, dom), params);
    let values = dv
        .values
        .iter()
        .zip(&g.values)
        .zip(&f.values)
        .map(|((d, gi), fi)| {
            let w = b_inverse(d, params);
            let c = params.p - 2.0;
            [c * gi[0] + w * fi[0], c * gi[1] + w * fi[1]]
        })
        .collect();
    Ok(VectorField { values, tangent: false })
}

/// Residual of the expansion
/// `div(B Du) = B div(Du) + (p-2)(mu + |Du|^2)^{(p-4)/2} I(u)`
/// with every term evaluated by the nodal difference operators.
pub fn expansion_residual(u: &VectorField, params: &StressParams, dom: &Domain) -> Result<VectorField> {
    if params.mu <= 0.0 && !params.is_linear() {
        return Err(Error::Domain("the expansion needs mu > 0".into()));
    }
    let du = sym_grad(u, dom);
    let lhs = div_tensor(&b_times_d_field(&du, params), dom);
    let div_d = div_tensor(&du, dom);
    let i = i_vector(&du, &grad_tensor(&du, dom));
    let values = (0..dom.len())
        .map(|n| {
            let d = &du.values[n];
            let s = params.mu + frob2(d);
            let b = s.powf((params.p - 2.0) / 2.0);
            let c = (params.p - 2.0) * s.powf((params.p - 4.0) / 2.0);
            [
                lhs.values[n][0] - (b * div_d.values[n][0] + c * i.values[n][0]),
                lhs.values[n][1] - (b * div_d.values[n][1] + c * i.values[n][1]),
            ]
        })
        .collect();
    Ok(VectorField { values, tangent: false })
}

/// `(a + b)^alpha <= a^alpha + b^alpha` for `a, b >= 0`, `0 < alpha < 1`.
///
/// The comparison allows four units of rounding on the right-hand side.
pub fn check_subadditivity(a: f64, b: f64, alpha: f64) -> bool {
    let lhs = (a + b).powf(alpha);
    let rhs = a.powf(alpha) + b.powf(alpha);
    lhs <= rhs * (1.0 + 4.0 * f64::EPSILON)
}

/// `|B(A)A - B(B)B| (mu + |A| + |B|)^{2-p} / |A - B|`, or `0` when `A = B`.
pub fn check_difference_bound(a: &Mat2, b: &Mat2, mu: f64, p: f64) -> f64 {
    let diff = frob2(&mat_sub(a, b)).sqrt();
    if diff == 0.0 {
        return 0.0;
    }
    let params = StressParams { p, mu };
    let num = frob2(&mat_sub(&b_times_d(a, &params), &b_times_d(b, &params))).sqrt();
    let scale = (mu + frob2(a).sqrt() + frob2(b).sqrt()).powf(2.0 - p);
    num * scale / diff
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{diff_x, diff_y, lq_norm, FieldClass, SmoothFieldSampler};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sym(a: f64, b: f64, c: f64) -> Mat2 {
        [[a, b], [b, c]]
    }

    #[test]
    fn b_coeff_examples() {
        let p15 = StressParams::new(1.5, 0.0).unwrap();
        let unit = sym(1.0, 0.0, 0.0);
        for p in [1.1, 1.5, 1.9] {
            let params = StressParams::new(p, 0.0).unwrap();
            assert!((b_coeff(&unit, &params).unwrap() - 1.0).abs() < 1e-15);
        }
        let zero = sym(0.0, 0.0, 0.0);
        assert_eq!(b_coeff(&zero, &StressParams::new(1.5, 1.0).unwrap()).unwrap(), 1.0);
        // |D|^2 = 4
        let d = sym(1.0, 1.0, 1.0);
        let v = b_coeff(&d, &p15).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(b_coeff(&zero, &p15), Err(Error::Singular)));
        assert_eq!(b_coeff(&zero, &StressParams::new(2.0, 0.0).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn b_times_d_guards_and_linear_case() {
        let zero = sym(0.0, 0.0, 0.0);
        for mu in [0.0, 0.1] {
            let params = StressParams::new(1.3, mu).unwrap();
            assert_eq!(b_times_d(&zero, &params), zero);
        }
        let d = sym(0.3, -1.2, 2.5);
        assert_eq!(b_times_d(&d, &StressParams::new(2.0, 7.0).unwrap()), d);
    }

    #[test]
    fn affine_fields_have_zero_i_and_g() {
        let dom = Domain::rectangle(6).unwrap();
        let u = VectorField::from_fn(&dom, |x, y| [3.0 * x - y, x + 2.0 * y]);
        let du = sym_grad(&u, &dom);
        let g = grad_tensor(&du, &dom);
        assert!(i_vector(&du, &g).max_abs() < 1e-9);
        let params = StressParams::new(1.5, 0.0).unwrap();
        assert!(g_vector(&du, &g, &params).max_abs() < 1e-9);
    }

    #[test]
    fn i_vector_matches_half_gradient_of_squared_norm() {
        // for quadratic u, |Du|^2 is quadratic and the nodal differences are exact,
        // so 1/2 grad(|Du|^2) . Du reproduces I without the index loop
        let dom = Domain::rectangle(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let c: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let u = VectorField::from_fn(&dom, |x, y| {
                [
                    c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y,
                    c[6] + c[7] * x + c[8] * y + c[9] * x * x + c[10] * x * y + c[11] * y * y,
                ]
            });
            let du = sym_grad(&u, &dom);
            let i = i_vector(&du, &grad_tensor(&du, &dom));
            let sq: Vec<f64> = du.values.iter().map(frob2).collect();
            let (sx, sy) = (diff_x(&dom, &sq), diff_y(&dom, &sq));
            for n in 0..dom.len() {
                let d = du.values[n];
                for j in 0..2 {
                    let mut e = 0.0;
                    for (k, s) in [sx[n], sy[n]].into_iter().enumerate() {
                        e += 0.5 * s * d[k][j];
                    }
                    assert!((i.values[n][j] - e).abs() < 1e-9 * (1.0 + e.abs()));
                }
            }
        }
    }

    #[test]
    fn pointwise_i_bound_on_random_fields() {
        let dom = Domain::rectangle(20).unwrap();
        let sampler = SmoothFieldSampler::new(FieldClass::General, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let u = sampler.sample(&dom, &mut rng);
            let du = sym_grad(&u, &dom);
            let g = grad_tensor(&du, &dom);
            let i = i_vector(&du, &g);
            for n in 0..dom.len() {
                let lhs = i.values[n][0].hypot(i.values[n][1]);
                let rhs = frob2(&du.values[n]) * (frob2(&g.values[n][0]) + frob2(&g.values[n][1])).sqrt();
                assert!(lhs <= rhs * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn g_norm_bound_and_large_mu_decay() {
        let dom = Domain::rectangle(16).unwrap();
        let sampler = SmoothFieldSampler::new(FieldClass::Tangent, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = sampler.sample(&dom, &mut rng);
        let dv = sym_grad(&v, &dom);
        let gdv = grad_tensor(&dv, &dom);
        for mu in [0.0, 1e-4, 1.0] {
            let params = StressParams::new(1.6, mu).unwrap();
            let g = g_vector(&dv, &gdv, &params);
            for q in [2.0, 3.0, 6.0] {
                assert!(lq_norm(&g, q, &dom).unwrap() <= lq_norm(&gdv, q, &dom).unwrap());
            }
        }
        // G ~ I / mu for large mu
        let n1 = lq_norm(&g_vector(&dv, &gdv, &StressParams::new(1.6, 1e4).unwrap()), 2.0, &dom).unwrap();
        let n2 = lq_norm(&g_vector(&dv, &gdv, &StressParams::new(1.6, 1e6).unwrap()), 2.0, &dom).unwrap();
        assert!((n1 / n2 / 100.0 - 1.0).abs() < 1e-2, "{}", n1 / n2);
    }

    #[test]
    fn rhs_examples() {
        let dom = Domain::rectangle(8).unwrap();
        let v = VectorField::from_fn(&dom, |x, y| [(3.0 * x).sin(), x * y]);
        let f = VectorField::from_fn(&dom, |x, _| [x, 1.0]);
        let params = StressParams::new(2.0, 0.3).unwrap();
        assert_eq!(rhs_f(&v, &f, &params, &dom).unwrap(), f);
        let affine = VectorField::from_fn(&dom, |x, y| [x - y, 2.0 * y]);
        let zero = VectorField::zeros(&dom);
        let params = StressParams::new(1.5, 0.3).unwrap();
        assert!(rhs_f(&affine, &zero, &params, &dom).unwrap().max_abs() < 1e-9);
    }

    #[test]
    fn expansion_residual_is_second_order() {
        let params = StressParams::new(1.7, 1.0).unwrap();
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let dom = Domain::rectangle(n).unwrap();
                let u = VectorField::from_fn(&dom, |x, y| [(2.0 * x).sin() * (y + 0.5), (x * y).cos()]);
                expansion_residual(&u, &params, &dom).unwrap().max_abs()
            })
            .collect();
        assert!((errs[1] / errs[2]).log2() > 1.9, "{errs:?}");
    }

    #[test]
    fn subadditivity_examples() {
        assert!(check_subadditivity(1.0, 1.0, 0.5));
        assert!(check_subadditivity(0.0, 0.0, 0.3));
        assert!(check_subadditivity(5.0, 0.0, 0.7));
    }

    #[test]
    fn difference_bound_examples() {
        let a = sym(1.0, 0.5, -0.3);
        assert_eq!(check_difference_bound(&a, &a, 0.1, 1.5), 0.0);
        // p = 2: |A - B| (mu + ...)^0 / |A - B| = 1
        let b = sym(0.2, 0.1, 0.9);
        assert!((check_difference_bound(&a, &b, 0.3, 2.0) - 1.0).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn flux_is_monotone(
            a in prop::array::uniform3(-3.0f64..3.0),
            b in prop::array::uniform3(-3.0f64..3.0),
            p in 1.05f64..2.0,
            mu in 0.0f64..1.0,
        ) {
            let params = StressParams::new(p, mu).unwrap();
            let (ma, mb) = (sym(a[0], a[1], a[2]), sym(b[0], b[1], b[2]));
            let d = mat_sub(&b_times_d(&ma, &params), &b_times_d(&mb, &params));
            prop_assert!(ddot(&d, &mat_sub(&ma, &mb)) >= -1e-12);
        }

        #[test]
        fn flux_is_homogeneous_at_mu_zero(
            a in prop::array::uniform3(-3.0f64..3.0),
            p in 1.05f64..2.0,
            lambda in 1e-3f64..1e3,
        ) {
            let params = StressParams::new(p, 0.0).unwrap();
            let m = sym(a[0], a[1], a[2]);
            let lhs = b_times_d(&mat_scale(&m, lambda), &params);
            let rhs = mat_scale(&b_times_d(&m, &params), lambda.powf(p - 1.0));
            let err = frob2(&mat_sub(&lhs, &rhs)).sqrt();
            prop_assert!(err <= 1e-12 * (1.0 + frob2(&rhs).sqrt()));
        }

        #[test]
        fn subadditivity_holds(a in 0.0f64..100.0, b in 0.0f64..100.0, alpha in 0.01f64..0.99) {
            prop_assert!(check_subadditivity(a, b, alpha));
        }

        #[test]
        fn difference_ratio_is_bounded(
            a in prop::array::uniform3(-3.0f64..3.0),
            b in prop::array::uniform3(-3.0f64..3.0),
            mu in 0.0f64..1.0,
        ) {
            let r = check_difference_bound(&sym(a[0], a[1], a[2]), &sym(b[0], b[1], b[2]), mu, 1.5);
            prop_assert!(r.is_finite());
            prop_assert!(r < 10.0);
        }
    }
}
