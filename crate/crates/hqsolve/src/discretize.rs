//! Finite-difference discretization of a geodesic ball about the pole, n = 2.
//!
//! The grid is polar in the chart: a single shared pole node plus `n_rho`
//! rings of `n_theta` equally spaced angular samples, the outermost ring being
//! the boundary. Chart radius `r_chart` corresponds to geodesic radius
//! arcsinh(r_chart).
//!
//! Derivatives are second-order central differences in (ρ, θ) mapped to
//! Cartesian chart partials through the polar Jacobian. The angular stencils
//! use trigonometric denominators (2 sin h and 4 sin²(h/2) instead of 2h and
//! h²), which keeps them second-order on general fields while differentiating
//! the first angular harmonics exactly; fields linear in the chart then come
//! out exact to round-off. The pole node is closed with moment sums over the
//! first ring, and the boundary ring uses one-sided second-order stencils in
//! ρ.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeom::ChartPoint;

/// Polar grid over the chart ball of radius `r_chart`.
#[derive(Debug, Clone)]
pub struct Grid {
    r_chart: f64,
    n_rho: usize,
    n_theta: usize,
    h_rho: f64,
    h_theta: f64,
    points: Vec<ChartPoint>,
}

impl Grid {
    pub fn build(r_chart: f64, n_rho: usize, n_theta: usize) -> Result<Self> {
        if !(r_chart > 0.0) || !r_chart.is_finite() {
            return Err(Error::Config(format!("r_chart must be positive, got {r_chart}")));
        }
        if n_rho < 8 {
            return Err(Error::Config(format!("n_rho must be >= 8, got {n_rho}")));
        }
        if n_theta < 16 || n_theta % 2 != 0 {
            return Err(Error::Config(format!(
                "n_theta must be even and >= 16, got {n_theta}"
            )));
        }
        let h_rho = r_chart / n_rho as f64;
        let h_theta = std::f64::consts::TAU / n_theta as f64;
        let mut points = Vec::with_capacity(1 + n_rho * n_theta);
        points.push(ChartPoint::new(&[0.0, 0.0]));
        for ring in 1..=n_rho {
            let rho = ring as f64 * h_rho;
            for j in 0..n_theta {
                let theta = j as f64 * h_theta;
                points.push(ChartPoint::new(&[rho * theta.cos(), rho * theta.sin()]));
            }
        }
        Ok(Self {
            r_chart,
            n_rho,
            n_theta,
            h_rho,
            h_theta,
            points,
        })
    }

    pub fn r_chart(&self) -> f64 {
        self.r_chart
    }

    pub fn n_rho(&self) -> usize {
        self.n_rho
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn h_rho(&self) -> f64 {
        self.h_rho
    }

    pub fn node_count(&self) -> usize {
        1 + self.n_rho * self.n_theta
    }

    /// Geodesic radius of the outermost ring.
    pub fn geodesic_radius(&self) -> f64 {
        self.r_chart.asinh()
    }

    /// Flat index of (ring, angle); the pole is ring 0 with angle 0.
    pub fn index(&self, ring: usize, angle: usize) -> usize {
        debug_assert!(ring <= self.n_rho);
        if ring == 0 {
            0
        } else {
            1 + (ring - 1) * self.n_theta + angle % self.n_theta
        }
    }

    /// Inverse of `index`.
    pub fn ring_angle(&self, idx: usize) -> (usize, usize) {
        debug_assert!(idx < self.node_count());
        if idx == 0 {
            (0, 0)
        } else {
            ((idx - 1) / self.n_theta + 1, (idx - 1) % self.n_theta)
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.ring_angle(idx).0 == self.n_rho
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        let first = self.index(self.n_rho, 0);
        first..self.node_count()
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        0..self.index(self.n_rho, 0)
    }

    pub fn interior_count(&self) -> usize {
        self.index(self.n_rho, 0)
    }

    pub fn point(&self, idx: usize) -> &ChartPoint {
        &self.points[idx]
    }

    pub fn theta(&self, angle: usize) -> f64 {
        angle as f64 * self.h_theta
    }

    pub fn rho(&self, ring: usize) -> f64 {
        ring as f64 * self.h_rho
    }
}

/// One scalar value per grid node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalField {
    values: Vec<f64>,
}

impl NodalField {
    pub fn new(values: Vec<f64>, grid: &Grid) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::Config(format!(
                "field length {} does not match grid node count {}",
                values.len(),
                grid.node_count()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("field contains non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn constant(value: f64, grid: &Grid) -> Self {
        Self {
            values: vec![value; grid.node_count()],
        }
    }

    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&ChartPoint) -> f64) -> Self {
        Self {
            values: (0..grid.node_count()).map(|i| f(grid.point(i))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Index<usize> for NodalField {
    type Output = f64;

    fn index(&self, idx: usize) -> &f64 {
        &self.values[idx]
    }
}

impl std::ops::IndexMut<usize> for NodalField {
    fn index_mut(&mut self, idx: usize) -> &mut f64 {
        &mut self.values[idx]
    }
}

/// Cartesian chart partials per node: gradient and symmetric Hessian.
#[derive(Debug, Clone)]
pub struct FieldDerivs {
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<[[f64; 2]; 2]>,
}

/// Polar first/second differences at a ring node, prior to the Cartesian map.
struct PolarDerivs {
    u_r: f64,
    u_rr: f64,
    u_t: f64,
    u_tt: f64,
    u_rt: f64,
}

fn polar_derivs(field: &NodalField, grid: &Grid, ring: usize, angle: usize) -> PolarDerivs {
    let n_rho = grid.n_rho();
    let h = grid.h_rho();
    let sin_h = grid.h_theta.sin();
    let sin_half_sq = {
        let s = (0.5 * grid.h_theta).sin();
        s * s
    };
    let val = |r: usize, a: isize| -> f64 {
        if r == 0 {
            field[0]
        } else {
            let n = grid.n_theta() as isize;
            field[grid.index(r, a.rem_euclid(n) as usize)]
        }
    };
    let a = angle as isize;
    // angular derivative at an arbitrary ring, zero at the pole
    let d_theta = |r: usize| -> f64 {
        if r == 0 {
            0.0
        } else {
            (val(r, a + 1) - val(r, a - 1)) / (2.0 * sin_h)
        }
    };

    let u_t = d_theta(ring);
    let u_tt = (val(ring, a + 1) - 2.0 * val(ring, a) + val(ring, a - 1)) / (4.0 * sin_half_sq);

    let (u_r, u_rr, u_rt) = if ring < n_rho {
        (
            (val(ring + 1, a) - val(ring - 1, a)) / (2.0 * h),
            (val(ring + 1, a) - 2.0 * val(ring, a) + val(ring - 1, a)) / (h * h),
            (d_theta(ring + 1) - d_theta(ring - 1)) / (2.0 * h),
        )
    } else {
        (
            (3.0 * val(ring, a) - 4.0 * val(ring - 1, a) + val(ring - 2, a)) / (2.0 * h),
            (2.0 * val(ring, a) - 5.0 * val(ring - 1, a) + 4.0 * val(ring - 2, a)
                - val(ring - 3, a))
                / (h * h),
            (3.0 * d_theta(ring) - 4.0 * d_theta(ring - 1) + d_theta(ring - 2)) / (2.0 * h),
        )
    };
    PolarDerivs {
        u_r,
        u_rr,
        u_t,
        u_tt,
        u_rt,
    }
}

/// Gradient and Hessian in Cartesian chart coordinates at one node.
pub fn fd_partials_at(field: &NodalField, grid: &Grid, idx: usize) -> ([f64; 2], [[f64; 2]; 2]) {
    if idx == 0 {
        // pole closure: moment sums over the first ring
        let n_theta = grid.n_theta();
        let h = grid.h_rho();
        let u0 = field[0];
        let (mut s_c, mut s_s, mut s_0, mut s_2c, mut s_2s) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for j in 0..n_theta {
            let theta = grid.theta(j);
            let d = field[grid.index(1, j)] - u0;
            s_c += d * theta.cos();
            s_s += d * theta.sin();
            s_0 += d;
            s_2c += d * (2.0 * theta).cos();
            s_2s += d * (2.0 * theta).sin();
        }
        let m = n_theta as f64;
        let grad = [2.0 * s_c / (m * h), 2.0 * s_s / (m * h)];
        let lap = 4.0 * s_0 / (m * h * h);
        let diff = 8.0 * s_2c / (m * h * h);
        let uxy = 4.0 * s_2s / (m * h * h);
        let hess = [[0.5 * (lap + diff), uxy], [uxy, 0.5 * (lap - diff)]];
        return (grad, hess);
    }

    let (ring, j) = grid.ring_angle(idx);
    let rho = grid.rho(ring);
    let pd = polar_derivs(field, grid, ring, j);
    let theta = grid.theta(j);
    let (c, s) = (theta.cos(), theta.sin());

    let grad = [
        c * pd.u_r - s / rho * pd.u_t,
        s * pd.u_r + c / rho * pd.u_t,
    ];
    let u_xx = c * c * pd.u_rr - 2.0 * c * s / rho * pd.u_rt
        + s * s / (rho * rho) * pd.u_tt
        + s * s / rho * pd.u_r
        + 2.0 * c * s / (rho * rho) * pd.u_t;
    let u_yy = s * s * pd.u_rr + 2.0 * c * s / rho * pd.u_rt
        + c * c / (rho * rho) * pd.u_tt
        + c * c / rho * pd.u_r
        - 2.0 * c * s / (rho * rho) * pd.u_t;
    let u_xy = c * s * pd.u_rr + (c * c - s * s) / rho * pd.u_rt
        - c * s / (rho * rho) * pd.u_tt
        - c * s / rho * pd.u_r
        - (c * c - s * s) / (rho * rho) * pd.u_t;
    (grad, [[u_xx, u_xy], [u_xy, u_yy]])
}

/// Gradient and Hessian in Cartesian chart coordinates at every node.
pub fn fd_partials(field: &NodalField, grid: &Grid) -> Result<FieldDerivs> {
    if field.len() != grid.node_count() {
        return Err(Error::Config(format!(
            "field length {} does not match grid node count {}",
            field.len(),
            grid.node_count()
        )));
    }
    let n = grid.node_count();
    let mut grad = vec![[0.0; 2]; n];
    let mut hess = vec![[[0.0; 2]; 2]; n];
    for idx in 0..n {
        let (g, h) = fd_partials_at(field, grid, idx);
        grad[idx] = g;
        hess[idx] = h;
    }
    Ok(FieldDerivs { grad, hess })
}

/// Dirichlet boundary data: a constant, or the restriction of an ambient
/// Lorentz-affine function ⟨a, embed(y)⟩_L + b to the boundary ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundarySpec {
    Constant(f64),
    AmbientAffine { a: [f64; 3], b: f64 },
}

impl BoundarySpec {
    pub fn eval(&self, y: &[f64]) -> f64 {
        match self {
            BoundarySpec::Constant(c) => *c,
            BoundarySpec::AmbientAffine { a, b } => {
                crate::hypgeom::lorentz_inner(a, &crate::hypgeom::embed(y)) + b
            }
        }
    }
}

/// Overwrites the boundary ring with the boundary data; interior untouched.
pub fn apply_boundary(field: &mut NodalField, phi: &BoundarySpec, grid: &Grid) -> Result<()> {
    for idx in grid.boundary_nodes() {
        let value = phi.eval(grid.point(idx).y());
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidBoundary { node: idx, value });
        }
        field[idx] = value;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n_rho: usize, n_theta: usize) -> Grid {
        Grid::build(1.0, n_rho, n_theta).unwrap()
    }

    #[test]
    fn node_counting_and_roundtrip() {
        let g = grid(8, 16);
        assert_eq!(g.node_count(), 129);
        assert_relative_eq!(g.geodesic_radius(), 1f64.asinh(), max_relative = 1e-12);
        for idx in 0..g.node_count() {
            let (ring, angle) = g.ring_angle(idx);
            assert_eq!(g.index(ring, angle), idx);
        }
        assert_eq!(g.boundary_nodes().count(), 16);
        assert_eq!(g.interior_count(), 129 - 16);
        assert!(g.boundary_nodes().all(|i| g.is_boundary(i)));
    }

    #[test]
    fn grid_rejects_bad_parameters() {
        assert!(Grid::build(0.0, 8, 16).is_err());
        assert!(Grid::build(1.0, 4, 16).is_err());
        assert!(Grid::build(1.0, 8, 15).is_err());
        assert!(Grid::build(1.0, 8, 8).is_err());
    }

    #[test]
    fn constant_field_has_exact_zero_derivatives() {
        let g = grid(8, 16);
        let f = NodalField::constant(3.25, &g);
        let d = fd_partials(&f, &g).unwrap();
        for idx in 0..g.node_count() {
            assert_eq!(d.grad[idx], [0.0, 0.0]);
            assert_eq!(d.hess[idx], [[0.0, 0.0], [0.0, 0.0]]);
        }
    }

    #[test]
    fn linear_field_is_exact() {
        let g = grid(12, 24);
        let f = NodalField::from_fn(&g, |p| p.y()[0]);
        let d = fd_partials(&f, &g).unwrap();
        for idx in 0..g.node_count() {
            assert!(
                (d.grad[idx][0] - 1.0).abs() < 1e-10 && d.grad[idx][1].abs() < 1e-10,
                "grad at {idx}: {:?}",
                d.grad[idx]
            );
            for row in d.hess[idx] {
                for v in row {
                    assert!(v.abs() < 1e-9, "hess entry {v} at {idx}");
                }
            }
        }
    }

    #[test]
    fn radial_quadratic_hessian_is_two_i() {
        let g = grid(16, 32);
        let f = NodalField::from_fn(&g, |p| {
            p.y()[0] * p.y()[0] + p.y()[1] * p.y()[1]
        });
        let d = fd_partials(&f, &g).unwrap();
        for idx in 0..g.node_count() {
            let y = g.point(idx).y();
            assert!((d.grad[idx][0] - 2.0 * y[0]).abs() < 1e-9);
            assert!((d.grad[idx][1] - 2.0 * y[1]).abs() < 1e-9);
            assert!((d.hess[idx][0][0] - 2.0).abs() < 1e-8, "u_xx {}", d.hess[idx][0][0]);
            assert!((d.hess[idx][1][1] - 2.0).abs() < 1e-8);
            assert!(d.hess[idx][0][1].abs() < 1e-8);
        }
    }

    #[test]
    fn smooth_field_derivatives_converge_second_order() {
        let f_exact = |y: &[f64]| (y[0]).exp() * (1.5 * y[1]).cos();
        let fx = |y: &[f64]| (y[0]).exp() * (1.5 * y[1]).cos();
        let fxy = |y: &[f64]| -1.5 * (y[0]).exp() * (1.5 * y[1]).sin();

        let err_at = |n_rho: usize| -> f64 {
            let g = grid(n_rho, 2 * n_rho);
            let f = NodalField::from_fn(&g, |p| f_exact(p.y()));
            let d = fd_partials(&f, &g).unwrap();
            let mut worst = 0.0f64;
            for idx in 0..g.node_count() {
                let y = g.point(idx).y();
                worst = worst.max((d.grad[idx][0] - fx(y)).abs());
                worst = worst.max((d.hess[idx][0][1] - fxy(y)).abs());
            }
            worst
        };
        let e1 = err_at(16);
        let e2 = err_at(32);
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "observed order {order} (errors {e1}, {e2})");
    }

    #[test]
    fn pole_hessian_of_radial_field_matches_analytic_limit() {
        // f = g(rho^2) with g(s) = 1 + 0.5 s - 0.125 s^2: Hessian at the pole
        // is 2 g'(0) I = I.
        let err_at = |n_rho: usize| -> f64 {
            let g = grid(n_rho, 32);
            let f = NodalField::from_fn(&g, |p| {
                let s = p.y()[0] * p.y()[0] + p.y()[1] * p.y()[1];
                1.0 + 0.5 * s - 0.125 * s * s
            });
            let d = fd_partials(&f, &g).unwrap();
            let h = d.hess[0];
            (h[0][0] - 1.0)
                .abs()
                .max((h[1][1] - 1.0).abs())
                .max(h[0][1].abs())
        };
        let e1 = err_at(16);
        let e2 = err_at(32);
        assert!(e1 < 1e-2);
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "pole closure order {order} ({e1} vs {e2})");
    }

    #[test]
    fn boundary_application() {
        let g = grid(8, 16);
        let mut f = NodalField::constant(1.0, &g);
        apply_boundary(&mut f, &BoundarySpec::Constant(2.0), &g).unwrap();
        for idx in 0..g.node_count() {
            let expected = if g.is_boundary(idx) { 2.0 } else { 1.0 };
            assert_eq!(f[idx], expected);
        }

        // a = 0 reduces the affine family to the constant one
        let mut f2 = NodalField::constant(1.0, &g);
        apply_boundary(
            &mut f2,
            &BoundarySpec::AmbientAffine {
                a: [0.0, 0.0, 0.0],
                b: 2.0,
            },
            &g,
        )
        .unwrap();
        assert_eq!(f, f2);

        // small ambient slope keeps boundary values within |a| max |embed| of b
        let a = [0.05, -0.03, 0.02];
        let mut f3 = NodalField::constant(1.0, &g);
        apply_boundary(&mut f3, &BoundarySpec::AmbientAffine { a, b: 2.0 }, &g).unwrap();
        let a_norm = (a.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let embed_norm = (1.0f64 + 1.0 + 2.0).sqrt(); // |embed| on the ring, |y| = 1
        for idx in g.boundary_nodes() {
            assert!((f3[idx] - 2.0).abs() <= a_norm * embed_norm + 1e-12);
        }

        let mut f4 = NodalField::constant(1.0, &g);
        let err = apply_boundary(&mut f4, &BoundarySpec::Constant(-1.0), &g);
        assert!(matches!(err, Err(Error::InvalidBoundary { .. })));
    }

    #[test]
    fn discrete_pipeline_converges_to_analytic_curvatures() {
        // u(y) = 2 + 0.1 sqrt(1 + |y|^2): push FD partials through the
        // covariant Hessian and the shape pipeline, compare the principal
        // curvatures against the same pipeline fed with analytic derivatives.
        use crate::graphgeom::{shape_at, GraphPointState};
        use crate::hypgeom::covariant_hessian;
        use nalgebra::{DMatrix, DVector};

        let u_of = |y: &[f64]| 2.0 + 0.1 * (1.0 + y[0] * y[0] + y[1] * y[1]).sqrt();

        let worst_on = |n_rho: usize| -> f64 {
            let g = grid(n_rho, 2 * n_rho);
            let f = NodalField::from_fn(&g, |p| u_of(p.y()));
            let d = fd_partials(&f, &g).unwrap();
            let mut worst = 0.0f64;
            for idx in 0..g.node_count() {
                let p = g.point(idx);
                let y = p.y();
                let w = (1.0 + y[0] * y[0] + y[1] * y[1]).sqrt();

                let raw = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        d.hess[idx][0][0],
                        d.hess[idx][0][1],
                        d.hess[idx][1][0],
                        d.hess[idx][1][1],
                    ],
                );
                let cov = covariant_hessian(&d.grad[idx], &raw, p).unwrap();
                let state = GraphPointState::new(
                    f[idx],
                    DVector::from_row_slice(&d.grad[idx]),
                    cov,
                    p,
                )
                .unwrap();
                let discrete = shape_at(&state).unwrap();

                let du_exact = DVector::from_row_slice(&[0.1 * y[0] / w, 0.1 * y[1] / w]);
                let d2u_exact = p.sigma() * (0.1 * w);
                let state_exact =
                    GraphPointState::new(u_of(y), du_exact, d2u_exact, p).unwrap();
                let exact = shape_at(&state_exact).unwrap();

                for i in 0..2 {
                    worst = worst.max((discrete.lambda[i] - exact.lambda[i]).abs());
                }
            }
            worst
        };

        let e1 = worst_on(16);
        let e2 = worst_on(32);
        let order = (e1 / e2).log2();
        assert!(
            order >= 1.9,
            "lambda pipeline order {order} (errors {e1} vs {e2})"
        );
    }
}
