//! Nodal finite-difference operators.
//!
//! First derivatives use centred differences at interior nodes and
//! second-order one-sided differences on the boundary rows/columns. Higher
//! derivatives are compositions of first derivatives.

use super::{symmetrize, Domain, NodeValue, ScalarField, TensorField, TensorGradient, Vec2, VectorField};

fn diff_axis<T: NodeValue>(v: &[T], len: usize, stride: usize, h: f64, out: &mut [T], base: usize) {
    let at = |k: usize| v[base + k * stride];
    let c = 1.0 / (2.0 * h);
    for k in 0..len {
        let d = if k == 0 {
            T::lincomb(&[(-3.0 * c, at(0)), (4.0 * c, at(1)), (-c, at(2))])
        } else if k == len - 1 {
            T::lincomb(&[(3.0 * c, at(k)), (-4.0 * c, at(k - 1)), (c, at(k - 2))])
        } else {
            T::lincomb(&[(c, at(k + 1)), (-c, at(k - 1))])
        };
        out[base + k * stride] = d;
    }
}

/// `d/dx` of nodal values.
pub fn diff_x<T: NodeValue>(dom: &Domain, v: &[T]) -> Vec<T> {
    debug_assert_eq!(v.len(), dom.len());
    let mut out = vec![T::zero(); v.len()];
    for j in 0..dom.rows() {
        diff_axis(v, dom.cols(), 1, dom.hx(), &mut out, dom.idx(0, j));
    }
    out
}

/// `d/dy` of nodal values.
pub fn diff_y<T: NodeValue>(dom: &Domain, v: &[T]) -> Vec<T> {
    debug_assert_eq!(v.len(), dom.len());
    let mut out = vec![T::zero(); v.len()];
    for i in 0..dom.cols() {
        diff_axis(v, dom.rows(), dom.cols(), dom.hy(), &mut out, dom.idx(i, 0));
    }
    out
}

fn diff2_axis<T: NodeValue>(v: &[T], len: usize, stride: usize, h: f64, out: &mut [T], base: usize) {
    let at = |k: usize| v[base + k * stride];
    let c = 1.0 / (h * h);
    for k in 0..len {
        let d = if k == 0 {
            T::lincomb(&[(2.0 * c, at(0)), (-5.0 * c, at(1)), (4.0 * c, at(2)), (-c, at(3))])
        } else if k == len - 1 {
            T::lincomb(&[
                (2.0 * c, at(k)),
                (-5.0 * c, at(k - 1)),
                (4.0 * c, at(k - 2)),
                (-c, at(k - 3)),
            ])
        } else {
            T::lincomb(&[(c, at(k + 1)), (-2.0 * c, at(k)), (c, at(k - 1))])
        };
        out[base + k * stride] = d;
    }
}

/// `d^2/dx^2` with the compact three-point stencil (four-point one-sided on the boundary).
pub fn diff_xx<T: NodeValue>(dom: &Domain, v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    for j in 0..dom.rows() {
        diff2_axis(v, dom.cols(), 1, dom.hx(), &mut out, dom.idx(0, j));
    }
    out
}

/// `d^2/dy^2`, see [`diff_xx`].
pub fn diff_yy<T: NodeValue>(dom: &Domain, v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    for i in 0..dom.cols() {
        diff2_axis(v, dom.rows(), dom.cols(), dom.hy(), &mut out, dom.idx(i, 0));
    }
    out
}

/// Second derivatives `h[n][a][b] = d_a d_b u` with compact stencils.
///
/// Composing two first differences in the same direction loses one order on
/// the rows next to the boundary; the compact stencils keep second order there.
pub fn hessian(u: &VectorField, dom: &Domain) -> Vec<[[Vec2; 2]; 2]> {
    let xx = diff_xx(dom, &u.values);
    let yy = diff_yy(dom, &u.values);
    let xy = diff_x(dom, &diff_y(dom, &u.values));
    (0..dom.len()).map(|n| [[xx[n], xy[n]], [xy[n], yy[n]]]).collect()
}

/// `d_k D_lm = d_k d_l u_m + d_k d_m u_l` from [`hessian`].
pub fn sym_grad_gradient(u: &VectorField, dom: &Domain) -> TensorGradient {
    let h = hessian(u, dom);
    TensorGradient {
        values: h
            .iter()
            .map(|hn| {
                let mut g = [[[0.0; 2]; 2]; 2];
                for (k, gk) in g.iter_mut().enumerate() {
                    for l in 0..2 {
                        for m in 0..2 {
                            gk[l][m] = hn[k][l][m] + hn[k][m][l];
                        }
                    }
                }
                g
            })
            .collect(),
    }
}

/// `div(Du) = Delta u + grad(div u)` from [`hessian`].
pub fn div_sym_grad(u: &VectorField, dom: &Domain) -> VectorField {
    let h = hessian(u, dom);
    VectorField {
        values: h
            .iter()
            .map(|hn| {
                let mut out = [0.0; 2];
                for (j, o) in out.iter_mut().enumerate() {
                    for i in 0..2 {
                        *o += hn[i][i][j] + hn[i][j][i];
                    }
                }
                out
            })
            .collect(),
        tangent: false,
    }
}

/// Nodal gradient `g[k][i] = d_k u_i` (not symmetric).
pub fn vector_gradient(u: &VectorField, dom: &Domain) -> TensorField {
    let dx = diff_x(dom, &u.values);
    let dy = diff_y(dom, &u.values);
    TensorField {
        values: dx.iter().zip(&dy).map(|(a, b)| [*a, *b]).collect(),
        symmetric: false,
    }
}

/// Symmetric gradient `D_ij = d_i u_j + d_j u_i`.
pub fn sym_grad(u: &VectorField, dom: &Domain) -> TensorField {
    let g = vector_gradient(u, dom);
    TensorField {
        values: g.values.iter().map(symmetrize).collect(),
        symmetric: true,
    }
}

/// `d_k T` for `k = x, y`.
pub fn grad_tensor(t: &TensorField, dom: &Domain) -> TensorGradient {
    let dx = diff_x(dom, &t.values);
    let dy = diff_y(dom, &t.values);
    TensorGradient {
        values: dx.into_iter().zip(dy).map(|(a, b)| [a, b]).collect(),
    }
}

/// `(div T)_j = d_i T_ij`.
pub fn div_tensor(t: &TensorField, dom: &Domain) -> VectorField {
    let dx = diff_x(dom, &t.values);
    let dy = diff_y(dom, &t.values);
    VectorField {
        values: dx
            .iter()
            .zip(&dy)
            .map(|(a, b)| [a[0][0] + b[1][0], a[0][1] + b[1][1]])
            .collect(),
        tangent: false,
    }
}

/// Scalar vorticity `omega = d_1 u_2 - d_2 u_1`.
pub fn curl2(u: &VectorField, dom: &Domain) -> ScalarField {
    let dx = diff_x(dom, &u.values);
    let dy = diff_y(dom, &u.values);
    ScalarField {
        values: dx.iter().zip(&dy).map(|(a, b)| a[1] - b[0]).collect(),
    }
}

/// Curl of a scalar in the plane: `(d_2 w, -d_1 w)`.
pub fn curl_scalar(w: &ScalarField, dom: &Domain) -> VectorField {
    let dx = diff_x(dom, &w.values);
    let dy = diff_y(dom, &w.values);
    VectorField {
        values: dx.iter().zip(&dy).map(|(a, b)| [*b, -*a]).collect(),
        tangent: false,
    }
}

pub fn gradient(s: &ScalarField, dom: &Domain) -> VectorField {
    let dx = diff_x(dom, &s.values);
    let dy = diff_y(dom, &s.values);
    VectorField {
        values: dx.iter().zip(&dy).map(|(a, b)| [*a, *b]).collect(),
        tangent: false,
    }
}

pub fn divergence(u: &VectorField, dom: &Domain) -> ScalarField {
    let dx = diff_x(dom, &u.values);
    let dy = diff_y(dom, &u.values);
    ScalarField {
        values: dx.iter().zip(&dy).map(|(a, b)| a[0] + b[1]).collect(),
    }
}

pub fn grad_div(u: &VectorField, dom: &Domain) -> VectorField {
    gradient(&divergence(u, dom), dom)
}

/// Componentwise Laplacian `d_xx u + d_yy u` by composed first differences.
pub fn laplacian(u: &VectorField, dom: &Domain) -> VectorField {
    let xx = diff_x(dom, &diff_x(dom, &u.values));
    let yy = diff_y(dom, &diff_y(dom, &u.values));
    VectorField {
        values: xx
            .iter()
            .zip(&yy)
            .map(|(a, b): (&Vec2, &Vec2)| [a[0] + b[0], a[1] + b[1]])
            .collect(),
        tangent: false,
    }
}
