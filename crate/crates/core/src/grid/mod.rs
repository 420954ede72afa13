//! Structured vertex-centred grid on the rectangle `[0, lx] x [0, ly]`, nodal
//! fields and the discrete differential operators acting on them.

mod bc;
mod io;
mod mms;
mod norms;
mod ops;
mod random;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use bc::{apply_slip_bc, enforce_tangency, Face, FACES};
pub use io::{read_vector_csv, vector_csv, write_tensor_csv, write_vector_csv};
pub use mms::{mms_field, mms_forcing, mms_forcing_closed_form_linear, Manufactured};
pub use norms::{lq_norm, lq_norm_masked, w1p_norm, w2q_surrogate, PointwiseMagnitude};
pub use ops::{
    curl2, curl_scalar, diff_x, diff_xx, diff_y, diff_yy, div_sym_grad, div_tensor, divergence, grad_div, grad_tensor,
    gradient, hessian, laplacian, sym_grad, sym_grad_gradient, vector_gradient,
};
pub use random::{FieldClass, SmoothFieldSampler};

pub type Vec2 = [f64; 2];
/// Row-major 2x2 matrix, `m[i][j]`.
pub type Mat2 = [[f64; 2]; 2];

/// Rectangle `[0, lx] x [0, ly]` with `nx x ny` interior nodes.
///
/// Node `(i, j)` sits at `(i hx, j hy)` for `i in 0..=nx+1`, `j in 0..=ny+1`.
/// Nodes are stored row-major: `index = j * (nx + 2) + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Domain {
    pub const DEFAULT_LX: f64 = 1.0;
    pub const DEFAULT_LY: f64 = 0.7;

    pub fn new(lx: f64, ly: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Domain(format!("side lengths must be positive, got {lx} x {ly}")));
        }
        if nx < 3 || ny < 3 {
            return Err(Error::Domain(format!(
                "need at least 3 interior nodes per axis, got {nx} x {ny}"
            )));
        }
        Ok(Self { lx, ly, nx, ny })
    }

    /// The default asymmetric rectangle `1.0 x 0.7` with `n x n` interior nodes.
    pub fn rectangle(n: usize) -> Result<Self> {
        Self::new(Self::DEFAULT_LX, Self::DEFAULT_LY, n, n)
    }

    pub fn unit_square(n: usize) -> Result<Self> {
        Self::new(1.0, 1.0, n, n)
    }

    /// `lx != ly`: a rectangle that is not a square.
    pub fn is_asymmetric(&self) -> bool {
        self.lx != self.ly
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        self.lx / (self.nx + 1) as f64
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        self.ly / (self.ny + 1) as f64
    }

    /// Largest grid spacing.
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.nx + 2
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.ny + 2
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cols() * self.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.cols() + i
    }

    #[inline]
    pub fn ij(&self, n: usize) -> (usize, usize) {
        (n % self.cols(), n / self.cols())
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (i as f64 * self.hx(), j as f64 * self.hy())
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx + 1 || j == self.ny + 1
    }

    #[inline]
    pub fn is_corner(&self, i: usize, j: usize) -> bool {
        (i == 0 || i == self.nx + 1) && (j == 0 || j == self.ny + 1)
    }

    /// Trapezoid quadrature weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let cx = if i == 0 || i == self.nx + 1 { 0.5 } else { 1.0 };
        let cy = if j == 0 || j == self.ny + 1 { 0.5 } else { 1.0 };
        cx * cy * self.hx() * self.hy()
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len())
            .map(|n| {
                let (i, j) = self.ij(n);
                self.weight(i, j)
            })
            .collect()
    }

    /// Same domain with a different resolution.
    pub fn with_resolution(&self, nx: usize, ny: usize) -> Result<Self> {
        Self::new(self.lx, self.ly, nx, ny)
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                expected: self.len(),
                got,
            })
        }
    }
}

/// Which slip condition accompanies the tangency condition `u.n = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum BcVariant {
    /// Vanishing tangential Cauchy stress `(Du n)_tau = 0`.
    #[default]
    #[serde(rename = "navier", alias = "navierstress")]
    NavierStress,
    /// Vanishing tangential vorticity `omega x n = 0`.
    #[serde(rename = "bardos", alias = "bardosvorticity")]
    BardosVorticity,
}

impl BcVariant {
    pub fn name(&self) -> &'static str {
        match self {
            BcVariant::NavierStress => "navier",
            BcVariant::BardosVorticity => "bardos",
        }
    }
}

/// Values that finite-difference stencils can combine linearly.
pub trait NodeValue: Copy {
    fn zero() -> Self;
    fn lincomb(terms: &[(f64, Self)]) -> Self;
}

impl NodeValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn lincomb(terms: &[(f64, Self)]) -> Self {
        terms.iter().map(|(c, v)| c * v).sum()
    }
}

impl NodeValue for Vec2 {
    fn zero() -> Self {
        [0.0; 2]
    }
    fn lincomb(terms: &[(f64, Self)]) -> Self {
        let mut out = [0.0; 2];
        for (c, v) in terms {
            out[0] += c * v[0];
            out[1] += c * v[1];
        }
        out
    }
}

impl NodeValue for Mat2 {
    fn zero() -> Self {
        [[0.0; 2]; 2]
    }
    fn lincomb(terms: &[(f64, Self)]) -> Self {
        let mut out = [[0.0; 2]; 2];
        for (c, v) in terms {
            for a in 0..2 {
                for b in 0..2 {
                    out[a][b] += c * v[a][b];
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(dom: &Domain) -> Self {
        Self {
            values: vec![0.0; dom.len()],
        }
    }

    pub fn from_fn(dom: &Domain, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            values: (0..dom.len())
                .map(|n| {
                    let (i, j) = dom.ij(n);
                    let (x, y) = dom.coords(i, j);
                    f(x, y)
                })
                .collect(),
        }
    }
}

/// Nodal vector field on the closed grid (boundary nodes included).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub values: Vec<Vec2>,
    /// Set once `u.n = 0` has been imposed on every face.
    pub tangent: bool,
}

impl VectorField {
    pub fn zeros(dom: &Domain) -> Self {
        Self {
            values: vec![[0.0; 2]; dom.len()],
            tangent: true,
        }
    }

    pub fn from_values(dom: &Domain, values: Vec<Vec2>) -> Result<Self> {
        dom.check_len(values.len())?;
        Ok(Self { values, tangent: false })
    }

    pub fn from_fn(dom: &Domain, f: impl Fn(f64, f64) -> Vec2) -> Self {
        Self {
            values: (0..dom.len())
                .map(|n| {
                    let (i, j) = dom.ij(n);
                    let (x, y) = dom.coords(i, j);
                    f(x, y)
                })
                .collect(),
            tangent: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| [s * v[0], s * v[1]]).collect(),
            tangent: self.tangent,
        }
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| [a * u[0] + b * v[0], a * u[1] + b * v[1]])
                .collect(),
            tangent: self.tangent && other.tangent,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.axpby(1.0, other, -1.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        self.axpby(1.0, other, 1.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().flatten().all(|x| x.is_finite())
    }
}

/// Nodal 2x2 tensor field.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub values: Vec<Mat2>,
    /// When set, `t[0][1] == t[1][0]` bitwise at every node.
    pub symmetric: bool,
}

impl TensorField {
    pub fn from_fn(dom: &Domain, f: impl Fn(f64, f64) -> Mat2) -> Self {
        let values: Vec<Mat2> = (0..dom.len())
            .map(|n| {
                let (i, j) = dom.ij(n);
                let (x, y) = dom.coords(i, j);
                f(x, y)
            })
            .collect();
        let symmetric = values.iter().all(|t| t[0][1] == t[1][0]);
        Self { values, symmetric }
    }

    pub fn map(&self, f: impl Fn(&Mat2) -> Mat2) -> Self {
        let values: Vec<Mat2> = self.values.iter().map(f).collect();
        let symmetric = self.symmetric && values.iter().all(|t| t[0][1] == t[1][0]);
        Self { values, symmetric }
    }
}

/// Nodal gradient of a tensor field: `values[n][k][l][m] = d_k T_lm` at node `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGradient {
    pub values: Vec<[Mat2; 2]>,
}

/// Frobenius inner product `a : b`.
#[inline]
pub fn ddot(a: &Mat2, b: &Mat2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Squared Frobenius norm `|a|^2 = sum a_ij^2`.
#[inline]
pub fn frob2(a: &Mat2) -> f64 {
    ddot(a, a)
}

#[inline]
pub fn mat_scale(a: &Mat2, s: f64) -> Mat2 {
    [[s * a[0][0], s * a[0][1]], [s * a[1][0], s * a[1][1]]]
}

#[inline]
pub fn mat_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ]
}

/// `g + g^T` for a gradient `g[k][i] = d_k u_i`.
#[inline]
pub fn symmetrize(g: &Mat2) -> Mat2 {
    let off = g[0][1] + g[1][0];
    [[2.0 * g[0][0], off], [off, 2.0 * g[1][1]]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_layout() {
        let d = Domain::new(1.0, 0.7, 4, 3).unwrap();
        assert_eq!(d.cols(), 6);
        assert_eq!(d.rows(), 5);
        assert_eq!(d.len(), 30);
        assert_eq!(d.ij(d.idx(3, 2)), (3, 2));
        assert!((d.hx() - 0.2).abs() < 1e-15);
        assert!((d.hy() - 0.175).abs() < 1e-15);
        let total: f64 = d.weights().iter().sum();
        assert!((total - 0.7).abs() < 1e-14);
        assert!(d.is_asymmetric());
        assert!(!Domain::unit_square(5).unwrap().is_asymmetric());
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::new(1.0, 0.7, 2, 5).is_err());
        assert!(Domain::new(0.0, 0.7, 5, 5).is_err());
        assert!(Domain::new(1.0, f64::NAN, 5, 5).is_err());
    }

    #[test]
    fn bc_variant_serde_names() {
        let v: BcVariant = serde_json::from_str("\"bardos\"").unwrap();
        assert_eq!(v, BcVariant::BardosVorticity);
        let v: BcVariant = serde_json::from_str("\"navierstress\"").unwrap();
        assert_eq!(v, BcVariant::NavierStress);
        assert_eq!(serde_json::to_string(&v).unwrap(), "\"navier\"");
    }
}
