//! Solver and verification suite for the singular p-Laplacian system
//!
//! ```text
//! -div( (mu + |Du|^2)^((p-2)/2) Du ) = f   in a rectangle,
//! u.n = 0,  (t(u))_tau = 0                 on the boundary,
//! ```
//!
//! with `Du = grad u + grad u^T` (no one-half factor), `1 < p <= 2` and `mu >= 0`.
//!
//! The crate is organised by concern:
//!
//! * [`exponents`]: closed-form exponent algebra (`r(q)`, `q_hat`, contraction gate, ball radius).
//! * [`grid`]: structured grid, nodal fields, finite-difference operators, norms,
//!   slip boundary handling and manufactured solutions.
//! * [`stress`]: pointwise nonlinear quantities `B`, `I(u)`, `G(v)`, the fixed-point
//!   right-hand side and the inequality checks.
//! * [`linear`]: the linear slip problem `-div(Du) = F`, its assembly and solvers,
//!   and empirical estimation of the constants `C_q`, `C_hat` and Korn's constant.
//! * [`solver`]: the fixed-point map `T` and its iteration for `mu > 0`.
//! * [`continuation`]: the `mu -> 0` path and the singular (`mu = 0`) checks.
//! * [`oracle`]: an independent convex-energy minimiser for cross-validation.
//! * [`identities`]: discrete checks of the Green and boundary identities.

pub mod continuation;
pub mod error;
pub mod exponents;
pub mod grid;
pub mod identities;
pub mod linear;
pub mod oracle;
pub mod solver;
pub mod stress;

pub use error::{Error, Result};
