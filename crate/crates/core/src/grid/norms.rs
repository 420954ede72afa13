use super::{
    frob2, grad_tensor, sym_grad, vector_gradient, Domain, ScalarField, TensorField, TensorGradient, VectorField,
};
use crate::{Error, Result};

/// Pointwise magnitude used by the discrete `L^q` norms: absolute value for
/// scalars, Euclidean length for vectors, Frobenius norm for tensors.
pub trait PointwiseMagnitude {
    fn magnitude(&self, node: usize) -> f64;
    fn node_count(&self) -> usize;
}

impl PointwiseMagnitude for ScalarField {
    fn magnitude(&self, n: usize) -> f64 {
        self.values[n].abs()
    }
    fn node_count(&self) -> usize {
        self.values.len()
    }
}

impl PointwiseMagnitude for VectorField {
    fn magnitude(&self, n: usize) -> f64 {
        let v = self.values[n];
        v[0].hypot(v[1])
    }
    fn node_count(&self) -> usize {
        self.values.len()
    }
}

impl PointwiseMagnitude for TensorField {
    fn magnitude(&self, n: usize) -> f64 {
        frob2(&self.values[n]).sqrt()
    }
    fn node_count(&self) -> usize {
        self.values.len()
    }
}

impl PointwiseMagnitude for TensorGradient {
    /// `|grad D| = (sum_{k,l,m} (d_k D_lm)^2)^{1/2}`
    fn magnitude(&self, n: usize) -> f64 {
        let [a, b] = &self.values[n];
        (frob2(a) + frob2(b)).sqrt()
    }
    fn node_count(&self) -> usize {
        self.values.len()
    }
}

/// Trapezoid-weighted discrete `L^q` norm; `q = f64::INFINITY` gives the nodal maximum.
pub fn lq_norm<F: PointwiseMagnitude + ?Sized>(field: &F, q: f64, dom: &Domain) -> Result<f64> {
    lq_norm_masked(field, q, dom, |_, _| true)
}

/// [`lq_norm`] restricted to the nodes selected by `keep(i, j)`.
pub fn lq_norm_masked<F: PointwiseMagnitude + ?Sized>(
    field: &F,
    q: f64,
    dom: &Domain,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Domain(format!("L^q norm needs q >= 1, got {q}")));
    }
    if field.node_count() != dom.len() {
        return Err(Error::SizeMismatch {
            expected: dom.len(),
            got: field.node_count(),
        });
    }
    let nodes = (0..dom.len()).filter(|&n| {
        let (i, j) = dom.ij(n);
        keep(i, j)
    });
    if q.is_infinite() {
        return Ok(nodes.map(|n| field.magnitude(n)).fold(0.0, f64::max));
    }
    // scale by the max to keep large q well conditioned
    let scale = (0..dom.len()).map(|n| field.magnitude(n)).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let sum: f64 = nodes
        .map(|n| {
            let (i, j) = dom.ij(n);
            dom.weight(i, j) * (field.magnitude(n) / scale).powf(q)
        })
        .sum();
    Ok(scale * sum.powf(1.0 / q))
}

/// `||grad Du||_q`, the discrete surrogate of the `W^{2,q}` norm.
pub fn w2q_surrogate(u: &VectorField, dom: &Domain, q: f64) -> Result<f64> {
    let g = grad_tensor(&sym_grad(u, dom), dom);
    lq_norm(&g, q, dom)
}

/// `(||u||_p^p + ||grad u||_p^p)^{1/p}`.
pub fn w1p_norm(u: &VectorField, dom: &Domain, p: f64) -> Result<f64> {
    let a = lq_norm(u, p, dom)?;
    let b = lq_norm(&vector_gradient(u, dom), p, dom)?;
    Ok((a.powf(p) + b.powf(p)).powf(1.0 / p))
}
