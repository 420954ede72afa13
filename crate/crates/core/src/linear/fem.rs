//! Bilinear nodal elements on the grid cells with 2x2 Gauss quadrature.
//!
//! Weak forms are written as `sum_g w_g sum_{k,i} P[k][i] d_k v_i` where
//! `P` is a flux evaluated from the gradient `G[k][i] = d_k u_i` at the
//! Gauss point. Loads are lumped with the trapezoid weights.

use crate::grid::{frob2, BcVariant, Domain, Mat2, Vec2, VectorField};
use crate::stress::{b_times_d, StressParams};

/// Free degrees of freedom: the normal velocity component is dropped on
/// every face, both components at corners.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    map: Vec<Option<usize>>,
    inv: Vec<usize>,
}

impl DofMap {
    pub fn new(dom: &Domain) -> Self {
        let mut map = vec![None; 2 * dom.len()];
        let mut inv = Vec::new();
        for n in 0..dom.len() {
            let (i, j) = dom.ij(n);
            let fixed = [i == 0 || i == dom.nx + 1, j == 0 || j == dom.ny + 1];
            for c in 0..2 {
                if !fixed[c] {
                    map[2 * n + c] = Some(inv.len());
                    inv.push(2 * n + c);
                }
            }
        }
        Self { map, inv }
    }

    pub fn len(&self) -> usize {
        self.inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv.is_empty()
    }

    #[inline]
    pub fn free(&self, node: usize, comp: usize) -> Option<usize> {
        self.map[2 * node + comp]
    }

    /// `(node, component)` of a free dof.
    pub fn location(&self, dof: usize) -> (usize, usize) {
        (self.inv[dof] / 2, self.inv[dof] % 2)
    }

    pub fn gather(&self, u: &VectorField) -> Vec<f64> {
        self.inv.iter().map(|&k| u.values[k / 2][k % 2]).collect()
    }

    /// Nodal values from free dofs; constrained components are zero.
    pub fn scatter(&self, x: &[f64], nodes: usize) -> VectorField {
        let mut values = vec![[0.0; 2]; nodes];
        for (&k, &v) in self.inv.iter().zip(x) {
            values[k / 2][k % 2] = v;
        }
        VectorField { values, tangent: true }
    }

    /// Restrict nodal vectors to free dofs.
    pub fn restrict(&self, r: &[Vec2]) -> Vec<f64> {
        self.inv.iter().map(|&k| r[k / 2][k % 2]).collect()
    }
}

const GAUSS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Shape-function gradients and values at the four Gauss points of a cell.
#[derive(Debug, Clone, Copy)]
pub struct CellQuadrature {
    /// `grad[g][a] = (d_x N_a, d_y N_a)` at Gauss point `g`.
    pub grad: [[Vec2; 4]; 4],
    pub value: [[f64; 4]; 4],
    pub weight: f64,
}

impl CellQuadrature {
    pub fn new(dom: &Domain) -> Self {
        let (hx, hy) = (dom.hx(), dom.hy());
        let mut grad = [[[0.0; 2]; 4]; 4];
        let mut value = [[0.0; 4]; 4];
        let mut g = 0;
        for &eta in &GAUSS {
            for &xi in &GAUSS {
                // local nodes (0,0), (1,0), (0,1), (1,1)
                let px = [1.0 - xi, xi];
                let py = [1.0 - eta, eta];
                let dpx = [-1.0 / hx, 1.0 / hx];
                let dpy = [-1.0 / hy, 1.0 / hy];
                for a in 0..4 {
                    let (ax, ay) = (a % 2, a / 2);
                    grad[g][a] = [dpx[ax] * py[ay], px[ax] * dpy[ay]];
                    value[g][a] = px[ax] * py[ay];
                }
                g += 1;
            }
        }
        Self {
            grad,
            value,
            weight: hx * hy / 4.0,
        }
    }
}

/// Node indices of cell `(ci, cj)` in local order.
#[inline]
pub fn cell_nodes(dom: &Domain, ci: usize, cj: usize) -> [usize; 4] {
    let n0 = dom.idx(ci, cj);
    let c = dom.cols();
    [n0, n0 + 1, n0 + c, n0 + c + 1]
}

/// Gradient `G[k][i] = d_k u_i` at Gauss point `g` of a cell.
#[inline]
pub fn gauss_gradient(q: &CellQuadrature, g: usize, u: &[Vec2; 4]) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for a in 0..4 {
        for k in 0..2 {
            for i in 0..2 {
                out[k][i] += q.grad[g][a][k] * u[a][i];
            }
        }
    }
    out
}

/// Iterate over all cells and Gauss points, calling `f(cell nodes, g, G)`.
pub fn for_each_gauss(dom: &Domain, u: &VectorField, mut f: impl FnMut(&[usize; 4], usize, &Mat2)) {
    let q = CellQuadrature::new(dom);
    for cj in 0..=dom.ny {
        for ci in 0..=dom.nx {
            let nodes = cell_nodes(dom, ci, cj);
            let loc = nodes.map(|n| u.values[n]);
            for g in 0..4 {
                let grad = gauss_gradient(&q, g, &loc);
                f(&nodes, g, &grad);
            }
        }
    }
}

/// Nodal residual `r_{a,i} = sum_g w_g sum_k P[k][i] d_k N_a` for the flux `P(G)`.
/// Returned on every node; callers restrict to free dofs.
pub fn assemble_flux(dom: &Domain, u: &VectorField, flux: impl Fn(&Mat2) -> Mat2) -> Vec<Vec2> {
    let q = CellQuadrature::new(dom);
    let mut r = vec![[0.0; 2]; dom.len()];
    for_each_gauss(dom, u, |nodes, g, grad| {
        let p = flux(grad);
        for (a, &n) in nodes.iter().enumerate() {
            let dn = q.grad[g][a];
            for i in 0..2 {
                r[n][i] += q.weight * (p[0][i] * dn[0] + p[1][i] * dn[1]);
            }
        }
    });
    r
}

/// `D = G + G^T`.
#[inline]
pub fn sym_of(g: &Mat2) -> Mat2 {
    crate::grid::symmetrize(g)
}

/// Linear flux of the chosen bilinear form.
///
/// Navier: `P = Du`, i.e. `1/2 Du : Dv`. Vorticity form:
/// `P = 2 div u I + omega J`, i.e. `2 div u div v + omega(u) omega(v)`.
pub fn linear_flux(variant: BcVariant) -> impl Fn(&Mat2) -> Mat2 {
    move |g: &Mat2| match variant {
        BcVariant::NavierStress => sym_of(g),
        BcVariant::BardosVorticity => {
            let div = g[0][0] + g[1][1];
            let w = g[0][1] - g[1][0];
            [[2.0 * div, w], [-w, 2.0 * div]]
        }
    }
}

/// Nonlinear flux `B(Du) Du`.
pub fn nonlinear_flux(params: StressParams) -> impl Fn(&Mat2) -> Mat2 {
    move |g: &Mat2| b_times_d(&sym_of(g), &params)
}

/// Discrete weak operator `v -> 1/2 sum_g w B(Du):Dv` as a nodal vector.
pub fn weak_operator(u: &VectorField, params: &StressParams, dom: &Domain) -> Vec<Vec2> {
    assemble_flux(dom, u, nonlinear_flux(*params))
}

/// `sum_g w (mu + |Du|^2)^{p/2} / (2p)`.
pub fn energy_density_sum(u: &VectorField, params: &StressParams, dom: &Domain) -> f64 {
    let w = CellQuadrature::new(dom).weight;
    let mut s = 0.0;
    for_each_gauss(dom, u, |_, _, g| {
        let d2 = frob2(&sym_of(g));
        s += w * (params.mu + d2).powf(params.p / 2.0);
    });
    s / (2.0 * params.p)
}

/// Lumped load `w_n f_n` on every node.
pub fn lumped_load(f: &VectorField, dom: &Domain) -> Vec<Vec2> {
    f.values
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let (i, j) = dom.ij(n);
            let w = dom.weight(i, j);
            [w * v[0], w * v[1]]
        })
        .collect()
}
