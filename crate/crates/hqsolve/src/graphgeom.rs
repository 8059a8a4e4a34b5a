//! Pointwise geometry of the spacelike radial graph over ℋⁿ(1).
//!
//! A graph function u > 0 with covariant gradient Du and covariant Hessian
//! D²u determines, wherever |Du|_σ < u (spacelikeness),
//!
//! ```text
//! v    = √(1 − u⁻² |Du|²_σ)                      ∈ (0, 1]
//! g_ij = u² σ_ij − u_i u_j                       (induced metric)
//! g^ij = u⁻² (σ^ij + uⁱ uʲ / (u² v²))
//! h_ij = (u_ij + u σ_ij − (2/u) u_i u_j) / v      (second fundamental form)
//! ϑ    = −u / v                                   (support quantity)
//! ```
//!
//! with uⁱ = σ^{ij} u_j. The principal curvatures are the eigenvalues of h
//! relative to g, computed through the symmetric reduction L⁻¹ h L⁻ᵀ with
//! g = L Lᵀ, and reported in descending order.
//!
//! All quantities are evaluated pointwise from covariant data; nothing here
//! discretizes anything.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hypgeom::ChartPoint;
use crate::symfun::EigenTuple;

/// Covariant data of the graph function at one point.
#[derive(Debug, Clone)]
pub struct GraphPointState<'a> {
    pub u: f64,
    pub du: DVector<f64>,
    pub d2u: DMatrix<f64>,
    pub point: &'a ChartPoint,
}

impl<'a> GraphPointState<'a> {
    pub fn new(u: f64, du: DVector<f64>, d2u: DMatrix<f64>, point: &'a ChartPoint) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::NonPositiveGraph { u });
        }
        Ok(Self { u, du, d2u, point })
    }

    /// |Du|²_σ = σ^{ij} u_i u_j.
    pub fn grad_norm_sq(&self) -> f64 {
        (self.point.sigma_inv() * &self.du).dot(&self.du)
    }

    /// 1 − |Du|_σ / u; positive exactly on spacelike states.
    pub fn spacelike_margin(&self) -> f64 {
        1.0 - self.grad_norm_sq().sqrt() / self.u
    }
}

/// Spacelike factor v = √(1 − u⁻²|Du|²_σ); v = 1 iff Du = 0.
pub fn spacelike_v(state: &GraphPointState) -> Result<f64> {
    let grad_sq = state.grad_norm_sq();
    let u_sq = state.u * state.u;
    if grad_sq >= u_sq {
        return Err(Error::NonSpacelike { grad_sq, u_sq });
    }
    Ok((1.0 - grad_sq / u_sq).sqrt())
}

/// Induced metric g_ij = u²σ_ij − u_i u_j and its closed-form inverse.
pub fn induced_metric(state: &GraphPointState) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let v = spacelike_v(state)?;
    let n = state.point.n();
    let u = state.u;
    let u_sq = u * u;
    let sigma = state.point.sigma();
    let sigma_inv = state.point.sigma_inv();
    let du_up = sigma_inv * &state.du;

    let mut g = DMatrix::zeros(n, n);
    let mut g_inv = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = u_sq * sigma[(i, j)] - state.du[i] * state.du[j];
            g_inv[(i, j)] = (sigma_inv[(i, j)] + du_up[i] * du_up[j] / (u_sq * v * v)) / u_sq;
        }
    }
    Ok((g, g_inv))
}

/// Second fundamental form h_ij = (u_ij + u σ_ij − (2/u) u_i u_j) / v.
pub fn second_fundamental_form(state: &GraphPointState) -> Result<DMatrix<f64>> {
    let v = spacelike_v(state)?;
    let n = state.point.n();
    let sigma = state.point.sigma();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = (state.d2u[(i, j)] + state.u * sigma[(i, j)]
                - 2.0 / state.u * state.du[i] * state.du[j])
                / v;
        }
    }
    Ok(h)
}

/// Eigenvalues of h relative to g, descending. Requires g positive definite.
pub fn principal_curvatures(g: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<EigenTuple> {
    let chol = g.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let tmp = chol.l().solve_lower_triangular(h).ok_or(Error::NotPositiveDefinite)?;
    let reduced = chol
        .l()
        .solve_lower_triangular(&tmp.transpose())
        .ok_or(Error::NotPositiveDefinite)?;
    let eig = reduced.symmetric_eigen();
    let mut lam: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    lam.sort_by(|a, b| b.partial_cmp(a).expect("eigenvalues are finite"));
    EigenTuple::new(lam)
}

/// Support quantity ϑ = −u/v; always ≤ −u < 0.
pub fn support_theta(state: &GraphPointState) -> Result<f64> {
    Ok(-state.u / spacelike_v(state)?)
}

/// Everything the curvature operator needs at one point.
#[derive(Debug, Clone)]
pub struct ShapeData {
    pub v: f64,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub lambda: EigenTuple,
    pub theta: f64,
}

/// Runs the whole pointwise pipeline: v, g, h, λ, ϑ.
pub fn shape_at(state: &GraphPointState) -> Result<ShapeData> {
    let v = spacelike_v(state)?;
    let (g, g_inv) = induced_metric(state)?;
    let h = second_fundamental_form(state)?;
    let lambda = principal_curvatures(&g, &h)?;
    Ok(ShapeData {
        v,
        g,
        g_inv,
        h,
        lambda,
        theta: -state.u / v,
    })
}
