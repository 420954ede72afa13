//! Tangency and slip boundary handling on the four flat faces.

use super::{BcVariant, Domain, Vec2, VectorField};

/// One of the four faces of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Face {
    /// `x = 0`
    Left,
    /// `x = lx`
    Right,
    /// `y = 0`
    Bottom,
    /// `y = ly`
    Top,
}

pub const FACES: [Face; 4] = [Face::Left, Face::Right, Face::Bottom, Face::Top];

impl Face {
    /// Outer unit normal.
    pub fn normal(&self) -> Vec2 {
        match self {
            Face::Left => [-1.0, 0.0],
            Face::Right => [1.0, 0.0],
            Face::Bottom => [0.0, -1.0],
            Face::Top => [0.0, 1.0],
        }
    }

    /// Index of the normal velocity component.
    pub fn normal_component(&self) -> usize {
        match self {
            Face::Left | Face::Right => 0,
            Face::Bottom | Face::Top => 1,
        }
    }

    /// Node spacing along the face.
    pub fn spacing(&self, dom: &Domain) -> f64 {
        match self {
            Face::Left | Face::Right => dom.hy(),
            Face::Bottom | Face::Top => dom.hx(),
        }
    }

    /// Face nodes with the two corner nodes trimmed, as `(boundary, first inner, second inner)`
    /// node indices along the inward normal.
    pub fn trimmed_nodes(&self, dom: &Domain) -> Vec<[usize; 3]> {
        let (nx, ny) = (dom.nx, dom.ny);
        match self {
            Face::Left => (1..=ny)
                .map(|j| [dom.idx(0, j), dom.idx(1, j), dom.idx(2, j)])
                .collect(),
            Face::Right => (1..=ny)
                .map(|j| [dom.idx(nx + 1, j), dom.idx(nx, j), dom.idx(nx - 1, j)])
                .collect(),
            Face::Bottom => (1..=nx)
                .map(|i| [dom.idx(i, 0), dom.idx(i, 1), dom.idx(i, 2)])
                .collect(),
            Face::Top => (1..=nx)
                .map(|i| [dom.idx(i, ny + 1), dom.idx(i, ny), dom.idx(i, ny - 1)])
                .collect(),
        }
    }
}

/// Zero the normal component on every face (both components at corners).
pub fn enforce_tangency(u: &VectorField, dom: &Domain) -> VectorField {
    let mut out = u.clone();
    for n in 0..dom.len() {
        let (i, j) = dom.ij(n);
        if i == 0 || i == dom.nx + 1 {
            out.values[n][0] = 0.0;
        }
        if j == 0 || j == dom.ny + 1 {
            out.values[n][1] = 0.0;
        }
    }
    out.tangent = true;
    out
}

/// Impose `u.n = 0` and the slip condition of `variant`.
///
/// On a flat face with `u.n = 0` both `(Du n)_tau = 0` and `omega x n = 0`
/// reduce to `d_n u_tau = 0`. The tangential boundary value is reset to
/// `(4 u_tau(h) - u_tau(2h)) / 3`, which makes the one-sided nodal normal
/// derivative vanish exactly and agrees with the even ghost reflection
/// `u_tau(-h) = u_tau(h)` to second order. The two variants therefore share
/// one convention.
pub fn apply_slip_bc(u: &VectorField, variant: BcVariant, dom: &Domain) -> VectorField {
    match variant {
        BcVariant::NavierStress | BcVariant::BardosVorticity => {}
    }
    let mut out = enforce_tangency(u, dom);
    for face in FACES {
        let tau = 1 - face.normal_component();
        for [b, i1, i2] in face.trimmed_nodes(dom) {
            out.values[b][tau] = (4.0 * out.values[i1][tau] - out.values[i2][tau]) / 3.0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{mms_field, sym_grad};

    #[test]
    fn constant_field_loses_normal_components() {
        let dom = Domain::rectangle(6).unwrap();
        let u = VectorField::from_fn(&dom, |_, _| [1.5, -2.0]);
        let v = apply_slip_bc(&u, BcVariant::NavierStress, &dom);
        assert!(v.tangent);
        for face in FACES {
            let c = face.normal_component();
            for [b, _, _] in face.trimmed_nodes(&dom) {
                assert_eq!(v.values[b][c], 0.0);
            }
        }
        for (i, j) in [(0, 0), (7, 0), (0, 7), (7, 7)] {
            assert_eq!(v.values[dom.idx(i, j)], [0.0, 0.0]);
        }
    }

    #[test]
    fn variants_share_the_convention() {
        let dom = Domain::rectangle(10).unwrap();
        let u = VectorField::from_fn(&dom, |x, y| [(2.0 * x + y).sin(), x * y + 0.3]);
        let a = apply_slip_bc(&u, BcVariant::NavierStress, &dom);
        let b = apply_slip_bc(&u, BcVariant::BardosVorticity, &dom);
        assert_eq!(a, b);
    }

    #[test]
    fn discrete_tangential_stress_vanishes_after_enforcement() {
        let dom = Domain::rectangle(12).unwrap();
        let u = VectorField::from_fn(&dom, |x, y| [(2.0 * x + y).sin(), (x - y).cos()]);
        let v = apply_slip_bc(&u, BcVariant::NavierStress, &dom);
        let d = sym_grad(&v, &dom);
        for face in FACES {
            for [b, _, _] in face.trimmed_nodes(&dom) {
                assert!(d.values[b][0][1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mms_field_is_nearly_unchanged() {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let dom = Domain::rectangle(n).unwrap();
                let u = mms_field(&dom, 1.0);
                apply_slip_bc(&u, BcVariant::NavierStress, &dom).sub(&u).max_abs()
            })
            .collect();
        // the reset is third-order accurate for fields that satisfy the condition
        assert!(errs[0] < 1e-3, "{errs:?}");
        assert!(errs[1] < errs[0] / 4.0 && errs[2] < errs[1] / 4.0, "{errs:?}");
    }
}
