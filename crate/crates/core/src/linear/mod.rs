//! The linear slip problem `-div(Du) = F`: assembly, solution and the
//! empirical constants of the linear estimate.
//!
//! The operator is the stiffness matrix of the bilinear form `1/2 (Du, Dv)`
//! (or `2 (div u, div v) + (omega(u), omega(v))` for the vorticity variant)
//! over the tangent nodal fields, with the load lumped by the trapezoid
//! weights. The tangential slip condition is natural. On a uniform grid each
//! boundary row coincides with one half of the interior stencil applied to
//! the field reflected across the face (odd normal, even tangential
//! component), which is the ghost-node form of the condition.

mod cg;
mod cholesky;
mod constants;
pub mod fem;
mod sparse;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::grid::{BcVariant, Domain, VectorField};
use crate::{Error, Result};

pub use cg::{pcg, CgOutcome};
pub use cholesky::BandCholesky;
pub use constants::{
    estimate_chat, estimate_constants, estimate_cq, estimate_korn, smallest_eigenvalue, ConstantsEstimate, CqOptions,
};
pub use fem::DofMap;
pub use sparse::{dot, norm2, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LinearMethod {
    /// Jacobi-preconditioned conjugate gradients.
    #[default]
    Cg,
    /// Banded Cholesky, factored once per operator and cached.
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub method: LinearMethod,
}

impl Default for LinearSolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 20_000,
            method: LinearMethod::Cg,
        }
    }
}

/// Statistics of one algebraic solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug)]
pub struct LinearOperator {
    pub dom: Domain,
    pub variant: BcVariant,
    pub dofs: DofMap,
    pub matrix: CsrMatrix,
    factor: OnceLock<BandCholesky>,
}

impl Clone for LinearOperator {
    fn clone(&self) -> Self {
        Self {
            dom: self.dom,
            variant: self.variant,
            dofs: self.dofs.clone(),
            matrix: self.matrix.clone(),
            factor: OnceLock::new(),
        }
    }
}

/// Element stiffness `K[(a,i)][(b,j)]` on one cell, row/col index `2a + i`.
fn element_matrix(dom: &Domain, variant: BcVariant) -> [[f64; 8]; 8] {
    let q = fem::CellQuadrature::new(dom);
    let flux = fem::linear_flux(variant);
    let mut k = [[0.0; 8]; 8];
    for b in 0..4 {
        for j in 0..2 {
            let mut loc = [[0.0; 2]; 4];
            loc[b][j] = 1.0;
            for g in 0..4 {
                let p = flux(&fem::gauss_gradient(&q, g, &loc));
                for a in 0..4 {
                    let dn = q.grad[g][a];
                    for i in 0..2 {
                        k[2 * a + i][2 * b + j] += q.weight * (p[0][i] * dn[0] + p[1][i] * dn[1]);
                    }
                }
            }
        }
    }
    // exact symmetry; the two halves agree to rounding already
    for r in 0..8 {
        for c in r + 1..8 {
            let m = 0.5 * (k[r][c] + k[c][r]);
            k[r][c] = m;
            k[c][r] = m;
        }
    }
    k
}

pub fn assemble(dom: &Domain, variant: BcVariant) -> LinearOperator {
    let dofs = DofMap::new(dom);
    let ke = element_matrix(dom, variant);
    let mut trip = Vec::with_capacity(64 * (dom.nx + 1) * (dom.ny + 1));
    for cj in 0..=dom.ny {
        for ci in 0..=dom.nx {
            let nodes = fem::cell_nodes(dom, ci, cj);
            for a in 0..4 {
                for i in 0..2 {
                    let Some(r) = dofs.free(nodes[a], i) else { continue };
                    for b in 0..4 {
                        for j in 0..2 {
                            if let Some(c) = dofs.free(nodes[b], j) {
                                trip.push((r, c, ke[2 * a + i][2 * b + j]));
                            }
                        }
                    }
                }
            }
        }
    }
    let mut matrix = CsrMatrix::from_triplets(dofs.len(), trip);
    matrix.symmetrize();
    LinearOperator {
        dom: *dom,
        variant,
        dofs,
        matrix,
        factor: OnceLock::new(),
    }
}

impl LinearOperator {
    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    /// `A u` on free dofs, scattered to nodes (constrained components zero).
    pub fn apply(&self, u: &VectorField) -> VectorField {
        let x = self.dofs.gather(u);
        self.dofs.scatter(&self.matrix.mul(&x), self.dom.len())
    }

    /// `1/2 sum Du:Du`-type quadratic form `x^T A x` of a nodal field.
    pub fn quadratic_form(&self, u: &VectorField) -> f64 {
        let x = self.dofs.gather(u);
        dot(&x, &self.matrix.mul(&x))
    }

    /// Lumped load vector `W F` on free dofs.
    pub fn load(&self, f: &VectorField) -> Vec<f64> {
        self.dofs.restrict(&fem::lumped_load(f, &self.dom))
    }

    pub fn cholesky(&self) -> Result<&BandCholesky> {
        if let Some(f) = self.factor.get() {
            return Ok(f);
        }
        let f = BandCholesky::factor(&self.matrix)?;
        Ok(self.factor.get_or_init(|| f))
    }

    /// Solve `A x = rhs` on free dofs.
    pub fn solve_system(
        &self,
        rhs: &[f64],
        guess: Option<&[f64]>,
        opts: &LinearSolveOptions,
    ) -> Result<(Vec<f64>, LinearStats)> {
        if rhs.len() != self.n_dofs() {
            return Err(Error::SizeMismatch {
                expected: self.n_dofs(),
                got: rhs.len(),
            });
        }
        if !(opts.tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
        }
        match opts.method {
            LinearMethod::Cg => {
                let out = pcg(&self.matrix, rhs, guess, opts.tol, opts.max_iter)?;
                Ok((
                    out.x,
                    LinearStats {
                        iterations: out.iterations,
                        relative_residual: *out.history.last().unwrap(),
                    },
                ))
            }
            LinearMethod::Cholesky => {
                let x = self.cholesky()?.solve(rhs);
                let bn = norm2(rhs);
                let res = if bn == 0.0 {
                    0.0
                } else {
                    let ax = self.matrix.mul(&x);
                    let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
                    norm2(&r) / bn
                };
                Ok((
                    x,
                    LinearStats {
                        iterations: 1,
                        relative_residual: res,
                    },
                ))
            }
        }
    }
}

/// Discrete solution of `-div(Du) = F` with the slip conditions.
pub fn solve_linear(op: &LinearOperator, f: &VectorField, tol: f64) -> Result<VectorField> {
    let opts = LinearSolveOptions {
        tol,
        ..LinearSolveOptions::default()
    };
    solve_linear_with(op, f, &opts).map(|(u, _)| u)
}

pub fn solve_linear_with(
    op: &LinearOperator,
    f: &VectorField,
    opts: &LinearSolveOptions,
) -> Result<(VectorField, LinearStats)> {
    if f.len() != op.dom.len() {
        return Err(Error::SizeMismatch {
            expected: op.dom.len(),
            got: f.len(),
        });
    }
    let (x, stats) = op.solve_system(&op.load(f), None, opts)?;
    Ok((op.dofs.scatter(&x, op.dom.len()), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{enforce_tangency, mms_field, mms_forcing_closed_form_linear};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matrix_is_symmetric_and_positive() {
        let dom = Domain::rectangle(10).unwrap();
        for variant in [BcVariant::NavierStress, BcVariant::BardosVorticity] {
            let op = assemble(&dom, variant);
            assert_eq!(op.matrix.asymmetry(), 0.0);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..20 {
                let x: Vec<f64> = (0..op.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                assert!(dot(&x, &op.matrix.mul(&x)) > 0.0);
            }
        }
    }

    #[test]
    fn variants_give_the_same_matrix_on_flat_faces() {
        let dom = Domain::rectangle(9).unwrap();
        let a = assemble(&dom, BcVariant::NavierStress);
        let b = assemble(&dom, BcVariant::BardosVorticity);
        let scale = a.matrix.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..a.n_dofs() {
            for (c, v) in a.matrix.row(r) {
                assert!((v - b.matrix.get(r, c)).abs() < 1e-13 * scale);
            }
        }
    }

    #[test]
    fn rotation_is_not_in_the_kernel() {
        let dom = Domain::rectangle(12).unwrap();
        let op = assemble(&dom, BcVariant::NavierStress);
        let rot = enforce_tangency(&VectorField::from_fn(&dom, |x, y| [-(y - 0.35), x - 0.5]), &dom);
        assert!(op.apply(&rot).max_abs() > 1e-3);
        assert!(op.quadratic_form(&rot) > 1e-3);
    }

    #[test]
    fn boundary_rows_are_reflected_interior_rows() {
        // on the left face the row of u_2 equals half the interior stencil
        // applied to the field reflected with u_1 odd and u_2 even
        let dom = Domain::rectangle(8).unwrap();
        let op = assemble(&dom, BcVariant::NavierStress);
        let u = enforce_tangency(
            &VectorField::from_fn(&dom, |x, y| [(2.0 * x + y).sin() * x, (x - 3.0 * y).cos()]),
            &dom,
        );
        let au = op.apply(&u);
        // reflected field on a grid with one extra column on the left
        let big = Domain::new(dom.lx + dom.hx(), dom.ly, dom.nx + 1, dom.ny).unwrap();
        let mut v = VectorField::zeros(&big);
        for j in 0..big.rows() {
            for i in 0..big.cols() {
                let src = |ii: usize| u.values[dom.idx(ii, j)];
                v.values[big.idx(i, j)] = if i == 0 {
                    let s = src(1);
                    [-s[0], s[1]]
                } else {
                    src(i - 1)
                };
            }
        }
        let bv = fem::assemble_flux(&big, &v, fem::linear_flux(BcVariant::NavierStress));
        for j in 1..=dom.ny {
            let half = 0.5 * bv[big.idx(1, j)][1];
            let row = au.values[dom.idx(0, j)][1];
            assert!((half - row).abs() < 1e-12 * (1.0 + row.abs()), "{half} {row}");
        }
    }

    #[test]
    fn action_on_mms_matches_forcing() {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let dom = Domain::unit_square(n).unwrap();
                let op = assemble(&dom, BcVariant::NavierStress);
                let au = op.apply(&mms_field(&dom, 1.0));
                let f = mms_forcing_closed_form_linear(&dom, 1.0);
                let mut m = 0.0f64;
                for j in 1..=dom.ny {
                    for i in 1..=dom.nx {
                        let k = dom.idx(i, j);
                        let w = dom.weight(i, j);
                        for c in 0..2 {
                            m = m.max((au.values[k][c] / w - f.values[k][c]).abs());
                        }
                    }
                }
                m
            })
            .collect();
        assert!(
            (errs[0] / errs[1]).log2() > 1.8 && (errs[1] / errs[2]).log2() > 1.9,
            "{errs:?}"
        );
    }

    #[test]
    fn zero_load_and_linearity() {
        let dom = Domain::rectangle(12).unwrap();
        let op = assemble(&dom, BcVariant::NavierStress);
        let zero = solve_linear(&op, &VectorField::zeros(&dom), 1e-12).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
        let f1 = VectorField::from_fn(&dom, |x, y| [x * y, (3.0 * x).sin()]);
        let f2 = VectorField::from_fn(&dom, |x, y| [y.cos(), x - y]);
        let u1 = solve_linear(&op, &f1, 1e-13).unwrap();
        let u2 = solve_linear(&op, &f2, 1e-13).unwrap();
        let u12 = solve_linear(&op, &f1.add(&f2), 1e-13).unwrap();
        assert!(u12.sub(&u1.add(&u2)).max_abs() < 1e-9 * u12.max_abs());
    }

    #[test]
    fn cholesky_and_cg_agree() {
        let dom = Domain::rectangle(14).unwrap();
        let op = assemble(&dom, BcVariant::NavierStress);
        let f = VectorField::from_fn(&dom, |x, y| [x - 0.5, y * y]);
        let cg = LinearSolveOptions::default();
        let ch = LinearSolveOptions {
            method: LinearMethod::Cholesky,
            ..cg
        };
        let (a, sa) = solve_linear_with(&op, &f, &cg).unwrap();
        let (b, sb) = solve_linear_with(&op, &f, &ch).unwrap();
        assert!(sa.relative_residual <= 1e-12 && sb.relative_residual <= 1e-12);
        assert!(a.sub(&b).max_abs() < 1e-9 * a.max_abs());
    }
}
