//! Jacobi-preconditioned conjugate gradients.

use super::sparse::{dot, norm2, CsrMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual `|b - A x| / |b|` after each iteration.
    pub history: Vec<f64>,
}

pub fn pcg(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            history: vec![0.0],
        });
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r = b.to_vec();
    let ax = a.mul(&x);
    for (ri, axi) in r.iter_mut().zip(&ax) {
        *ri -= axi;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = vec![norm2(&r) / bnorm];
    for it in 0..max_iter {
        if *history.last().unwrap() <= tol {
            return Ok(CgOutcome {
                x,
                iterations: it,
                history,
            });
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        history.push(norm2(&r) / bnorm);
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let last = *history.last().unwrap();
    if last <= tol {
        return Ok(CgOutcome {
            x,
            iterations: history.len() - 1,
            history,
        });
    }
    Err(Error::LinearSolver {
        iterations: history.len() - 1,
        residual: last,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn solves_tridiagonal_system() {
        let a = laplace_1d(50);
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.mul(&xs);
        let out = pcg(&a, &b, None, 1e-13, 500).unwrap();
        let err = out.x.iter().zip(&xs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
        assert!(out.iterations <= 50);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplace_1d(5);
        let out = pcg(&a, &[0.0; 5], None, 1e-12, 10).unwrap();
        assert_eq!(out.x, vec![0.0; 5]);
    }

    #[test]
    fn stagnation_reports_history() {
        let a = laplace_1d(200);
        let b = vec![1.0; 200];
        match pcg(&a, &b, None, 1e-14, 3) {
            Err(Error::LinearSolver {
                iterations, history, ..
            }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 4);
            }
            other => panic!("{other:?}"),
        }
    }
}
