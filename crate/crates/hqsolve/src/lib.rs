//! Solver and verification suite for Dirichlet problems of Hessian-quotient
//! curvature equations σ_k/σ_l = ψ(x, u, ϑ) on spacelike radial graphs over a
//! geodesic ball of the hyperbolic plane inside Lorentz–Minkowski space.
//!
//! The crate is layered bottom-up:
//!
//! * [`symfun`] — elementary symmetric functions, Garding cones, Hessian
//!   quotients and their inequalities, dimension-generic;
//! * [`hypgeom`] — the hyperbolic plane as the unit hyperboloid, in one global
//!   chart with closed-form metric and connection;
//! * [`graphgeom`] — pointwise geometry of the spacelike radial graph
//!   (spacelike factor, induced metric, second fundamental form, principal
//!   curvatures, support quantity);
//! * [`psispec`] — declarative right-hand sides ψ(x, u, ϑ) with analytic
//!   ϑ-derivatives and structural-condition margins;
//! * [`discretize`] — polar finite-difference grid on a geodesic ball (n = 2)
//!   with a shared pole node;
//! * [`solver`] — residual/Jacobian assembly, damped Newton with an
//!   admissibility-preserving line search, continuity-method homotopy, and the
//!   barrier problems;
//! * [`verify`] — the a priori estimates as post-solve checks plus randomized
//!   algebraic suites;
//! * [`manufactured`] — closed-form radial solutions for convergence studies.
//!
//! The `hqsolve` binary drives solve → barriers → verification from a TOML
//! configuration; see the repository README.

pub mod config;
pub mod discretize;
pub mod error;
pub mod graphgeom;
pub mod hypgeom;
pub mod manufactured;
pub mod output;
pub mod psispec;
pub mod solver;
pub mod symfun;
pub mod verify;

pub use error::{Error, Result};
