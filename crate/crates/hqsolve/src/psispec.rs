//! Declarative right-hand sides ψ(x, u, ϑ) and their structural conditions.
//!
//! Supported families:
//!
//! * `constant`    — ψ ≡ c;
//! * `power_theta` — ψ = |ϑ|^p h(x, u);
//! * `exp_theta`   — ψ = e^{p |ϑ| / u} h(x, u);
//! * `tabulated`   — nodal values on a polar grid, interpolated bilinearly
//!   (used by manufactured runs; no ϑ-derivative available).
//!
//! The support quantity ϑ = −u/v is negative, so the families enter through
//! |ϑ|; this keeps ψ positive while the condition margins below are still
//! computed against the signed ϑ.
//!
//! The structural condition asks, with m = k − l and f = ψ^{1/m},
//!
//! ```text
//! ∂f/∂ϑ · ϑ ≥ f   and   f convex in ϑ,
//! ```
//!
//! which both power and exponential families satisfy for p ≥ m. A constant ψ
//! fails the first inequality strictly; the checker reports that as a
//! diagnostic, not an error, since the solver does not need it to iterate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypgeom::ChartPoint;

/// Scalar coefficient field h(x, u): constant or a polynomial in the geodesic
/// radius r = arcsinh(|y|).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HField {
    Constant(f64),
    RadialPoly(Vec<f64>),
}

impl HField {
    pub fn eval(&self, point: &ChartPoint) -> f64 {
        match self {
            HField::Constant(c) => *c,
            HField::RadialPoly(coeffs) => {
                let r = point.geodesic_radius();
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c)
            }
        }
    }
}

/// Nodal ψ values on a polar grid (pole + rings), bilinear in (ρ, θ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiTable {
    pub r_chart: f64,
    pub n_rho: usize,
    pub n_theta: usize,
    /// pole value followed by ring-major, angle-minor nodal values
    pub values: Vec<f64>,
}

impl PsiTable {
    pub fn node_count(&self) -> usize {
        1 + self.n_rho * self.n_theta
    }

    fn value_at(&self, ring: usize, j: usize) -> f64 {
        if ring == 0 {
            self.values[0]
        } else {
            self.values[1 + (ring - 1) * self.n_theta + (j % self.n_theta)]
        }
    }

    /// Interpolates at chart coordinates y (n = 2).
    pub fn interpolate(&self, y: &[f64]) -> f64 {
        let rho = (y[0] * y[0] + y[1] * y[1]).sqrt();
        let h_rho = self.r_chart / self.n_rho as f64;
        let s = (rho / h_rho).min(self.n_rho as f64);
        let i0 = (s.floor() as usize).min(self.n_rho - 1);
        let frac_r = s - i0 as f64;

        let angular = |ring: usize| -> f64 {
            if ring == 0 {
                return self.values[0];
            }
            let theta = y[1].atan2(y[0]).rem_euclid(std::f64::consts::TAU);
            let h_theta = std::f64::consts::TAU / self.n_theta as f64;
            let t = theta / h_theta;
            let j0 = (t.floor() as usize) % self.n_theta;
            let frac = t - t.floor();
            (1.0 - frac) * self.value_at(ring, j0) + frac * self.value_at(ring, j0 + 1)
        };

        (1.0 - frac_r) * angular(i0) + frac_r * angular(i0 + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PsiFamily {
    Constant { value: f64 },
    PowerTheta { p: f64, h: HField },
    ExpTheta { p: f64, h: HField },
    Tabulated { table: PsiTable },
}

/// A prescribed right-hand side together with the quotient orders it feeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiSpec {
    pub family: PsiFamily,
    pub k: usize,
    pub l: usize,
}

impl PsiSpec {
    pub fn new(family: PsiFamily, k: usize, l: usize) -> Self {
        Self { family, k, l }
    }

    fn order(&self) -> f64 {
        (self.k - self.l) as f64
    }

    /// ψ(x, u, ϑ); strictly positive or an error.
    pub fn eval(&self, x: &ChartPoint, u: f64, theta: f64) -> Result<f64> {
        let value = match &self.family {
            PsiFamily::Constant { value } => *value,
            PsiFamily::PowerTheta { p, h } => theta.abs().powf(*p) * h.eval(x),
            PsiFamily::ExpTheta { p, h } => (p * theta.abs() / u).exp() * h.eval(x),
            PsiFamily::Tabulated { table } => table.interpolate(x.y()),
        };
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidPsi { value });
        }
        Ok(value)
    }

    /// ∂(ψ^{1/(k−l)})/∂ϑ, analytic families only.
    pub fn dpower_dtheta(&self, x: &ChartPoint, u: f64, theta: f64) -> Result<f64> {
        let m = self.order();
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        match &self.family {
            PsiFamily::Constant { .. } => Ok(0.0),
            PsiFamily::PowerTheta { p, h } => {
                let hv = h.eval(x).powf(1.0 / m);
                Ok(p / m * theta.abs().powf(p / m - 1.0) * sign * hv)
            }
            PsiFamily::ExpTheta { p, .. } => {
                let f = self.eval(x, u, theta)?.powf(1.0 / m);
                Ok(p / (m * u) * sign * f)
            }
            PsiFamily::Tabulated { .. } => Err(Error::UnsupportedDerivative),
        }
    }

    /// Margin of the growth condition ∂(ψ^{1/m})/∂ϑ · ϑ − ψ^{1/m} at one state.
    pub fn condition_margin(&self, x: &ChartPoint, u: f64, theta: f64) -> Result<f64> {
        let f = self.eval(x, u, theta)?.powf(1.0 / self.order());
        Ok(self.dpower_dtheta(x, u, theta)? * theta - f)
    }

    /// Second central difference of ψ^{1/m} in ϑ (convexity margin).
    pub fn convexity_margin(&self, x: &ChartPoint, u: f64, theta: f64) -> Result<f64> {
        let m = self.order();
        let h = 1e-4 * theta.abs().max(1.0);
        let f = |t: f64| -> Result<f64> { Ok(self.eval(x, u, t)?.powf(1.0 / m)) };
        Ok((f(theta + h)? - 2.0 * f(theta)? + f(theta - h)?) / (h * h))
    }

    /// Sweeps the provided (x, u, ϑ) samples and reports worst-case margins.
    pub fn check_structural(&self, samples: &[(ChartPoint, f64, f64)]) -> Result<StructuralReport> {
        let mut min_condition = f64::INFINITY;
        let mut min_convexity = f64::INFINITY;
        for (x, u, theta) in samples {
            min_condition = min_condition.min(self.condition_margin(x, *u, *theta)?);
            min_convexity = min_convexity.min(self.convexity_margin(x, *u, *theta)?);
        }
        Ok(StructuralReport {
            samples: samples.len(),
            min_condition_margin: min_condition,
            min_convexity_margin: min_convexity,
            condition_holds: min_condition >= -1e-8,
            convexity_holds: min_convexity >= -1e-8,
        })
    }
}

/// Worst-case structural margins over a sample sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructuralReport {
    pub samples: usize,
    pub min_condition_margin: f64,
    pub min_convexity_margin: f64,
    pub condition_holds: bool,
    pub convexity_holds: bool,
}

/// Default sample sweep for the structural check: a lattice of graph values u
/// and spacelike factors v at a few chart points, with ϑ = −u/v.
pub fn default_structural_samples(r_chart: f64) -> Vec<(ChartPoint, f64, f64)> {
    let mut samples = Vec::new();
    for &frac in &[0.0, 0.5, 1.0] {
        let point = ChartPoint::new(&[frac * r_chart, 0.0]);
        for &u in &[0.5, 1.0, 2.0, 4.0] {
            for &v in &[0.2, 0.5, 0.9, 1.0] {
                samples.push((point.clone(), u, -u / v));
            }
        }
    }
    samples
}
