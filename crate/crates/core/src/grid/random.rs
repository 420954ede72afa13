//! Seeded random smooth fields built from products of sines and cosines.

use rand::Rng;

use super::{Domain, VectorField};

/// Which boundary behaviour the sampled fields have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldClass {
    /// No boundary condition.
    General,
    /// `u.n = 0` on every face; tangential stress generally nonzero.
    Tangent,
    /// `u.n = 0` and `d_n u_tau = 0` on every face.
    Slip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy)]
struct Mode {
    comp: usize,
    x: (Kind, usize),
    y: (Kind, usize),
}

impl Mode {
    fn weight(&self) -> f64 {
        let (k, l) = (self.x.1 as f64, self.y.1 as f64);
        1.0 / (1.0 + k * k + l * l)
    }
}

/// Random fields `sum_m c_m w_m phi_m(x) psi_m(y) e_comp` with decaying weights
/// `w_m = 1 / (1 + k^2 + l^2)` and coefficients uniform in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct SmoothFieldSampler {
    pub class: FieldClass,
    modes: Vec<Mode>,
}

fn factors(k: usize, normal: bool, slip: bool) -> Vec<(Kind, usize)> {
    // `normal`: this factor must vanish on the faces it is normal to
    let sines = (1..=k).map(|m| (Kind::Sin, m));
    let cosines = (0..k).map(|m| (Kind::Cos, m));
    if normal {
        sines.collect()
    } else if slip {
        cosines.collect()
    } else {
        cosines.chain(sines).collect()
    }
}

impl SmoothFieldSampler {
    /// `frequencies` is the number of wavenumbers per factor.
    pub fn new(class: FieldClass, frequencies: usize) -> Self {
        let k = frequencies.max(1);
        let mut modes = Vec::new();
        for comp in 0..2 {
            let (xs, ys) = match class {
                FieldClass::General => (factors(k, false, false), factors(k, false, false)),
                FieldClass::Tangent | FieldClass::Slip => {
                    let slip = class == FieldClass::Slip;
                    (factors(k, comp == 0, slip), factors(k, comp == 1, slip))
                }
            };
            for &x in &xs {
                for &y in &ys {
                    modes.push(Mode { comp, x, y });
                }
            }
        }
        Self { class, modes }
    }

    /// Number of coefficients.
    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect()
    }

    /// Field for the given coefficient vector (length [`Self::dim`]).
    pub fn eval(&self, dom: &Domain, coeffs: &[f64]) -> VectorField {
        assert_eq!(coeffs.len(), self.dim());
        let table = |kind: Kind, k: usize, len: usize, l: f64, h: f64| -> Vec<f64> {
            let w = k as f64 * std::f64::consts::PI / l;
            (0..len)
                .map(|i| {
                    let t = i as f64 * h;
                    // exact zeros of sin at both ends
                    match kind {
                        Kind::Sin if i == 0 || i == len - 1 => 0.0,
                        Kind::Sin => (w * t).sin(),
                        Kind::Cos => (w * t).cos(),
                    }
                })
                .collect()
        };
        let mut u = VectorField::zeros(dom);
        for (m, &c) in self.modes.iter().zip(coeffs) {
            if c == 0.0 {
                continue;
            }
            let fx = table(m.x.0, m.x.1, dom.cols(), dom.lx, dom.hx());
            let fy = table(m.y.0, m.y.1, dom.rows(), dom.ly, dom.hy());
            let s = c * m.weight();
            for j in 0..dom.rows() {
                for i in 0..dom.cols() {
                    u.values[dom.idx(i, j)][m.comp] += s * fx[i] * fy[j];
                }
            }
        }
        u.tangent = self.class != FieldClass::General;
        u
    }

    pub fn sample<R: Rng + ?Sized>(&self, dom: &Domain, rng: &mut R) -> VectorField {
        let c = self.coefficients(rng);
        self.eval(dom, &c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sym_grad, FACES};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tangent_fields_are_tangent() {
        let dom = Domain::rectangle(9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for class in [FieldClass::Tangent, FieldClass::Slip] {
            let s = SmoothFieldSampler::new(class, 3);
            let u = s.sample(&dom, &mut rng);
            assert!(u.tangent);
            for face in FACES {
                let c = face.normal_component();
                for [b, _, _] in face.trimmed_nodes(&dom) {
                    assert_eq!(u.values[b][c], 0.0);
                }
            }
        }
    }

    #[test]
    fn slip_fields_are_nearly_stress_free_but_tangent_fields_are_not() {
        let dom = Domain::rectangle(40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let boundary_shear = |u: &VectorField| {
            let d = sym_grad(u, &dom);
            FACES
                .iter()
                .flat_map(|f| f.trimmed_nodes(&dom))
                .map(|n| d.values[n[0]][0][1].abs())
                .fold(0.0, f64::max)
        };
        let slip = SmoothFieldSampler::new(FieldClass::Slip, 3).sample(&dom, &mut rng);
        let tan = SmoothFieldSampler::new(FieldClass::Tangent, 3).sample(&dom, &mut rng);
        let (a, b) = (boundary_shear(&slip), boundary_shear(&tan));
        assert!(a < 0.05 * b, "{a} {b}");
    }

    #[test]
    fn deterministic_given_seed() {
        let dom = Domain::rectangle(6).unwrap();
        let s = SmoothFieldSampler::new(FieldClass::General, 2);
        let a = s.sample(&dom, &mut ChaCha8Rng::seed_from_u64(5));
        let b = s.sample(&dom, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
        assert!(!a.tangent);
    }

    #[test]
    fn eval_is_linear_in_coefficients() {
        let dom = Domain::rectangle(7).unwrap();
        let s = SmoothFieldSampler::new(FieldClass::Tangent, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = s.coefficients(&mut rng);
        let b = s.coefficients(&mut rng);
        let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - y).collect();
        let lhs = s.eval(&dom, &sum);
        let rhs = s.eval(&dom, &a).axpby(2.0, &s.eval(&dom, &b), -1.0);
        assert!(lhs.sub(&rhs).max_abs() < 1e-14);
    }
}
