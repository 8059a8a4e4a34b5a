//! Manufactured radial solutions for convergence studies.
//!
//! The family u(y) = a + b·√(1 + |y|²) restricts an ambient Lorentz-affine
//! function to the hyperboloid, so its covariant data is closed-form:
//! with w = √(1 + |y|²),
//!
//! ```text
//! ∂_i u = b y_i / w,        D²u = b w σ.
//! ```
//!
//! Feeding these through the pointwise shape pipeline yields analytic
//! principal curvatures at every chart point; a solve against the tabulated
//! quotient of those curvatures must then reproduce u up to discretization
//! error, which is what the refinement studies measure.

use nalgebra::{DMatrix, DVector};

use crate::discretize::{BoundarySpec, Grid, NodalField};
use crate::error::Result;
use crate::graphgeom::{shape_at, GraphPointState, ShapeData};
use crate::hypgeom::ChartPoint;
use crate::psispec::{PsiFamily, PsiSpec, PsiTable};
use crate::symfun::hessian_quotient;

#[derive(Debug, Clone, Copy)]
pub struct ManufacturedSolution {
    pub a: f64,
    pub b: f64,
}

impl ManufacturedSolution {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn u(&self, y: &[f64]) -> f64 {
        let w = (1.0 + y.iter().map(|v| v * v).sum::<f64>()).sqrt();
        self.a + self.b * w
    }

    /// Analytic covariant state at a chart point.
    pub fn state<'a>(&self, point: &'a ChartPoint) -> Result<GraphPointState<'a>> {
        let y = point.y();
        let w = (1.0 + y.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let du = DVector::from_iterator(y.len(), y.iter().map(|v| self.b * v / w));
        let d2u: DMatrix<f64> = point.sigma() * (self.b * w);
        GraphPointState::new(self.u(y), du, d2u, point)
    }

    pub fn shape(&self, point: &ChartPoint) -> Result<ShapeData> {
        shape_at(&self.state(point)?)
    }

    /// Nodal σ_k/σ_l values of the analytic curvatures.
    pub fn psi_table(&self, grid: &Grid, k: usize, l: usize) -> Result<PsiTable> {
        let mut values = Vec::with_capacity(grid.node_count());
        for idx in 0..grid.node_count() {
            let shape = self.shape(grid.point(idx))?;
            values.push(hessian_quotient(shape.lambda.values(), k, l)?);
        }
        Ok(PsiTable {
            r_chart: grid.r_chart(),
            n_rho: grid.n_rho(),
            n_theta: grid.n_theta(),
            values,
        })
    }

    pub fn psi_spec(&self, grid: &Grid, k: usize, l: usize) -> Result<PsiSpec> {
        Ok(PsiSpec::new(
            PsiFamily::Tabulated {
                table: self.psi_table(grid, k, l)?,
            },
            k,
            l,
        ))
    }

    /// Boundary data matching u exactly: ⟨(0, 0, −b), embed(y)⟩_L + a = a + b w.
    pub fn boundary_spec(&self) -> BoundarySpec {
        BoundarySpec::AmbientAffine {
            a: [0.0, 0.0, -self.b],
            b: self.a,
        }
    }

    pub fn nodal_field(&self, grid: &Grid) -> NodalField {
        NodalField::from_fn(grid, |p| self.u(p.y()))
    }

    /// Max-norm distance of a field from the analytic solution.
    pub fn max_error(&self, field: &NodalField, grid: &Grid) -> f64 {
        (0..grid.node_count())
            .map(|i| (field[i] - self.u(grid.point(i).y())).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn boundary_spec_reproduces_u() {
        let m = ManufacturedSolution::new(2.0, 0.1);
        let phi = m.boundary_spec();
        for y in [[0.0, 0.0], [1.0, 0.0], [0.3, -0.8]] {
            assert_relative_eq!(phi.eval(&y), m.u(&y), max_relative = 1e-14);
        }
    }

    #[test]
    fn curvatures_are_admissible_and_near_umbilic() {
        let m = ManufacturedSolution::new(2.0, 0.1);
        let grid = Grid::build(1.0, 8, 16).unwrap();
        for idx in 0..grid.node_count() {
            let shape = m.shape(grid.point(idx)).unwrap();
            assert!(shape.lambda.is_admissible(2), "node {idx}");
            for &l in shape.lambda.values() {
                assert!((l - 0.47).abs() < 0.05, "lambda {l} strays from 1/u");
            }
        }
    }

    #[test]
    fn psi_table_is_positive_and_radial() {
        let m = ManufacturedSolution::new(2.0, 0.1);
        let grid = Grid::build(1.0, 8, 16).unwrap();
        let table = m.psi_table(&grid, 2, 0).unwrap();
        assert!(table.values.iter().all(|&v| v > 0.0));
        // radial data: all angles on one ring share the value
        for ring in 1..=8 {
            let base = table.values[1 + (ring - 1) * 16];
            for j in 1..16 {
                assert_relative_eq!(table.values[1 + (ring - 1) * 16 + j], base, epsilon = 1e-13);
            }
        }
    }
}
