//! Damped Newton iteration and method-of-continuity driver for
//! F(λ(A(u))) = f with F = (σ_k/σ_l)^{1/(k−l)}.
//!
//! Supported quotient orders are (k, l) = (2, 0) for the main problem and
//! (1, 0) for the quasilinear lower barrier; the residual itself evaluates
//! for any admissible pair, without convergence claims.
//!
//! The Jacobian is assembled by stencil-colored central differences of the
//! residual (see [`assembly`]); the linearized systems go through a sparse LU
//! factorization with an explicit residual check, and every accepted Newton
//! iterate is positive, spacelike, and Γ_k-admissible at every node — the line
//! search rejects anything else. The homotopy marches ψ and the boundary data
//! from exact umbilic data to the target, warm-starting Newton and halving the
//! step on failure.

mod assembly;
mod newton;

pub use assembly::{eval_field, jacobian, node_residual, EvalScope, FieldEval, NodeGeometry};
pub use newton::{barrier_pair, homotopy_solve, newton_solve};

use serde::{Deserialize, Serialize};

use crate::discretize::{BoundarySpec, Grid};
use crate::error::{Error, Result};
use crate::hypgeom::ChartPoint;
use crate::psispec::PsiSpec;

/// Right-hand-side evaluation as the solver sees it. Implemented by
/// [`PsiSpec`] and by the homotopy/barrier wrappers.
pub trait PsiEval {
    fn eval(&self, x: &ChartPoint, u: f64, theta: f64) -> Result<f64>;
}

impl PsiEval for PsiSpec {
    fn eval(&self, x: &ChartPoint, u: f64, theta: f64) -> Result<f64> {
        PsiSpec::eval(self, x, u, theta)
    }
}

/// (1−t)·ψ₀ + t·ψ with constant umbilic anchor ψ₀.
pub struct BlendedPsi<'a> {
    pub t: f64,
    pub anchor: f64,
    pub target: &'a dyn PsiEval,
}

impl PsiEval for BlendedPsi<'_> {
    fn eval(&self, x: &ChartPoint, u: f64, theta: f64) -> Result<f64> {
        let target = self.target.eval(x, u, theta)?;
        let value = (1.0 - self.t) * self.anchor + self.t * target;
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidPsi { value });
        }
        Ok(value)
    }
}

/// coef · ψ^exponent, the barrier-side transforms of the right-hand side.
pub struct PowerScaledPsi<'a> {
    pub coef: f64,
    pub exponent: f64,
    pub inner: &'a dyn PsiEval,
}

impl PsiEval for PowerScaledPsi<'_> {
    fn eval(&self, x: &ChartPoint, u: f64, theta: f64) -> Result<f64> {
        let value = self.coef * self.inner.eval(x, u, theta)?.powf(self.exponent);
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidPsi { value });
        }
        Ok(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub r_chart: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

impl GridParams {
    pub fn build(&self) -> Result<Grid> {
        Grid::build(self.r_chart, self.n_rho, self.n_theta)
    }
}

/// Full configuration of one solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    pub k: usize,
    pub l: usize,
    pub grid: GridParams,
    pub psi: PsiSpec,
    pub phi: BoundarySpec,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub homotopy_steps: usize,
    pub backtrack: f64,
    pub min_step: f64,
    pub fd_jacobian_eps: f64,
}

impl SolveConfig {
    pub fn new(k: usize, l: usize, grid: GridParams, psi: PsiSpec, phi: BoundarySpec) -> Self {
        Self {
            k,
            l,
            grid,
            psi,
            phi,
            newton_tol: 1e-10,
            max_newton: 50,
            homotopy_steps: 10,
            backtrack: 0.5,
            min_step: (2.0f64).powi(-20),
            fd_jacobian_eps: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!((self.k, self.l), (2, 0) | (1, 0)) {
            return Err(Error::Config(format!(
                "unsupported quotient orders (k, l) = ({}, {}); the drivers run (2, 0) and (1, 0)",
                self.k, self.l
            )));
        }
        for (name, v) in [
            ("newton_tol", self.newton_tol),
            ("backtrack", self.backtrack),
            ("min_step", self.min_step),
            ("fd_jacobian_eps", self.fd_jacobian_eps),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.backtrack >= 1.0 {
            return Err(Error::Config(format!(
                "backtrack factor must be < 1, got {}",
                self.backtrack
            )));
        }
        if self.max_newton == 0 || self.homotopy_steps == 0 {
            return Err(Error::Config(
                "max_newton and homotopy_steps must be at least 1".into(),
            ));
        }
        self.grid.build().map(|_| ())
    }
}

/// One accepted homotopy step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomotopyRecord {
    pub t: f64,
    pub newton_iterations: usize,
    pub residual: f64,
}

/// Node-margin snapshot of one accepted Newton iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateMargins {
    pub spacelike: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// Outcome of a Newton or homotopy run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub u: Vec<f64>,
    pub converged: bool,
    pub failure: Option<String>,
    /// Newton iterations per homotopy step (single entry for a plain solve).
    pub newton_iterations: Vec<usize>,
    pub total_newton_iterations: usize,
    pub final_residual: f64,
    /// margins of the final iterate, over all nodes
    pub min_spacelike_margin: f64,
    pub min_sigma1: f64,
    pub min_sigma2: f64,
    pub homotopy_path: Vec<HomotopyRecord>,
    /// margins of every accepted iterate along the way
    pub iterate_margins: Vec<IterateMargins>,
}
