//! The hyperbolic plane ℋⁿ(1) as the unit upper hyperboloid in Lorentz space.
//!
//! We work in a single global chart: hyperboloid-graph coordinates
//!
//! ```text
//! y ∈ ℝⁿ  ↦  x = (y, √(1 + |y|²)) ∈ ℝⁿ⁺¹₁,
//! ```
//!
//! which lands on { ⟨x, x⟩_L = −1, x_{n+1} > 0 } with the Lorentz product
//! ⟨x, y⟩_L = Σ x_i y_i − x_{n+1} y_{n+1}. Pulling the ambient metric back
//! through the chart gives, with w² = 1 + |y|²,
//!
//! ```text
//! σ_ij = δ_ij − y_i y_j / w²,      σ^{ij} = δ_ij + y_i y_j,
//! Γ^k_ij = y_k (y_i y_j / w² − δ_ij),
//! ```
//!
//! all in closed form, so the geometry layer carries no discretization error.
//! Geodesic balls about the pole y = 0 are round balls in the chart, with
//! geodesic radius arcsinh(|y|).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Lorentz inner product dx₁² + … + dxₙ² − dx_{n+1}².
pub fn lorentz_inner(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let m = a.len() - 1;
    let spatial: f64 = (0..m).map(|i| a[i] * b[i]).sum();
    spatial - a[m] * b[m]
}

/// Chart map y ↦ (y, √(1 + |y|²)) onto the upper hyperboloid.
pub fn embed(y: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(y.len() + 1);
    x.extend_from_slice(y);
    let norm_sq: f64 = y.iter().map(|v| v * v).sum();
    x.push((1.0 + norm_sq).sqrt());
    x
}

/// Chart metric and its inverse: σ_ij = δ_ij − y_i y_j/w², σ^{ij} = δ_ij + y_i y_j.
pub fn chart_metric(y: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = y.len();
    let w_sq = 1.0 + y.iter().map(|v| v * v).sum::<f64>();
    let mut sigma = DMatrix::<f64>::identity(n, n);
    let mut sigma_inv = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            sigma[(i, j)] -= y[i] * y[j] / w_sq;
            sigma_inv[(i, j)] += y[i] * y[j];
        }
    }
    (sigma, sigma_inv)
}

/// Christoffel symbols Γ^k_ij of the chart metric, flattened as k·n² + i·n + j.
pub fn christoffels(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let w_sq = 1.0 + y.iter().map(|v| v * v).sum::<f64>();
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                gamma[k * n * n + i * n + j] = y[k] * (y[i] * y[j] / w_sq - delta);
            }
        }
    }
    gamma
}

/// Geodesic distance from the pole: r = arcsinh(|y|).
pub fn geodesic_radius(y: &[f64]) -> f64 {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    norm.asinh()
}

/// A chart point with its metric data precomputed.
#[derive(Debug, Clone)]
pub struct ChartPoint {
    y: Vec<f64>,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    christoffel: Vec<f64>,
}

impl ChartPoint {
    pub fn new(y: &[f64]) -> Self {
        let (sigma, sigma_inv) = chart_metric(y);
        let christoffel = christoffels(y);
        Self {
            y: y.to_vec(),
            sigma,
            sigma_inv,
            christoffel,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    pub fn christoffel(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.y.len();
        self.christoffel[k * n * n + i * n + j]
    }

    pub fn embed(&self) -> Vec<f64> {
        embed(&self.y)
    }

    pub fn geodesic_radius(&self) -> f64 {
        geodesic_radius(&self.y)
    }
}

/// Covariant Hessian u_ij = ∂²u/∂y_i∂y_j − Γ^k_ij ∂u/∂y_k from raw chart partials.
pub fn covariant_hessian(
    partials1: &[f64],
    partials2: &DMatrix<f64>,
    point: &ChartPoint,
) -> Result<DMatrix<f64>> {
    let n = point.n();
    if partials1.len() != n || partials2.nrows() != n || partials2.ncols() != n {
        return Err(Error::Config(format!(
            "partials have wrong shape for dimension {n}"
        )));
    }
    let mut hess = partials2.clone();
    for i in 0..n {
        for j in 0..n {
            let mut corr = 0.0;
            for k in 0..n {
                corr += point.christoffel(k, i, j) * partials1[k];
            }
            hess[(i, j)] -= corr;
        }
    }
    Ok(hess)
}
