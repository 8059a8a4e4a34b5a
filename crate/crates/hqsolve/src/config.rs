//! Run configuration: a flat TOML schema with typed keys, rejected on any
//! unknown key, mapped onto a [`SolveConfig`] plus run options.
//!
//! Either a `[psi]`/`[phi]` pair or a `[manufactured]` section must be given,
//! not both. A manufactured run tabulates ψ from the analytic radial solution
//! per grid and, when `refine` is on, repeats the solve on two coarsenings to
//! measure the convergence order.

use serde::{Deserialize, Serialize};

use crate::discretize::BoundarySpec;
use crate::error::{Error, Result};
use crate::manufactured::ManufacturedSolution;
use crate::psispec::{HField, PsiFamily, PsiSpec, PsiTable};
use crate::solver::{GridParams, SolveConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub k: usize,
    pub l: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub r_chart: f64,
    pub n_rho: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiSection {
    pub family: String,
    pub value: Option<f64>,
    pub p: Option<f64>,
    pub h_constant: Option<f64>,
    pub h_radial_poly: Option<Vec<f64>>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiSection {
    pub kind: String,
    pub value: Option<f64>,
    pub a: Option<[f64; 3]>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSection {
    pub a: f64,
    pub b: f64,
    #[serde(default = "default_true")]
    pub refine: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub newton_tol: f64,
    pub max_newton: usize,
    pub homotopy_steps: usize,
    pub backtrack: f64,
    pub min_step: f64,
    pub fd_jacobian_eps: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            max_newton: 50,
            homotopy_steps: 10,
            backtrack: 0.5,
            min_step: (2.0f64).powi(-20),
            fd_jacobian_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub barriers: bool,
    pub gradient_mp: bool,
    pub curvature_ratio: bool,
    pub structural: bool,
    pub suites: bool,
    pub suite_samples: usize,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            barriers: true,
            gradient_mp: true,
            curvature_ratio: true,
            structural: true,
            suites: false,
            suite_samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self { seed: 0 }
    }
}

fn default_true() -> bool {
    true
}

/// The full configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub grid: GridSection,
    pub psi: Option<PsiSection>,
    pub phi: Option<PhiSection>,
    pub manufactured: Option<ManufacturedSection>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub run: RunSection,
}

/// What a validated configuration asks the driver to do.
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub solve: SolveConfig,
    pub manufactured: Option<(ManufacturedSolution, bool)>,
    pub verify: VerifySection,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    fn psi_family(&self, section: &PsiSection) -> Result<PsiFamily> {
        let need = |opt: Option<f64>, key: &str| {
            opt.ok_or_else(|| {
                Error::Config(format!("psi family '{}' needs key '{key}'", section.family))
            })
        };
        let h_field = || -> Result<HField> {
            match (&section.h_constant, &section.h_radial_poly) {
                (Some(c), None) => Ok(HField::Constant(*c)),
                (None, Some(coeffs)) => Ok(HField::RadialPoly(coeffs.clone())),
                (None, None) => Ok(HField::Constant(1.0)),
                (Some(_), Some(_)) => Err(Error::Config(
                    "give at most one of h_constant and h_radial_poly".into(),
                )),
            }
        };
        match section.family.as_str() {
            "constant" => Ok(PsiFamily::Constant {
                value: need(section.value, "value")?,
            }),
            "power_theta" => Ok(PsiFamily::PowerTheta {
                p: need(section.p, "p")?,
                h: h_field()?,
            }),
            "exp_theta" => Ok(PsiFamily::ExpTheta {
                p: need(section.p, "p")?,
                h: h_field()?,
            }),
            "tabulated" => {
                let values = section.values.clone().ok_or_else(|| {
                    Error::Config("psi family 'tabulated' needs key 'values'".into())
                })?;
                let expected = 1 + self.grid.n_rho * self.grid.n_theta;
                if values.len() != expected {
                    return Err(Error::Config(format!(
                        "tabulated psi has {} values, grid needs {expected}",
                        values.len()
                    )));
                }
                Ok(PsiFamily::Tabulated {
                    table: PsiTable {
                        r_chart: self.grid.r_chart,
                        n_rho: self.grid.n_rho,
                        n_theta: self.grid.n_theta,
                        values,
                    },
                })
            }
            other => Err(Error::Config(format!("unknown psi family '{other}'"))),
        }
    }

    fn phi_spec(section: &PhiSection) -> Result<BoundarySpec> {
        match section.kind.as_str() {
            "constant" => section
                .value
                .map(BoundarySpec::Constant)
                .ok_or_else(|| Error::Config("phi kind 'constant' needs key 'value'".into())),
            "ambient_affine" => {
                let a = section
                    .a
                    .ok_or_else(|| Error::Config("phi kind 'ambient_affine' needs key 'a'".into()))?;
                let b = section
                    .b
                    .ok_or_else(|| Error::Config("phi kind 'ambient_affine' needs key 'b'".into()))?;
                Ok(BoundarySpec::AmbientAffine { a, b })
            }
            other => Err(Error::Config(format!("unknown phi kind '{other}'"))),
        }
    }

    /// Validates the cross-field constraints and assembles the plan.
    pub fn plan(&self) -> Result<RunPlan> {
        let grid = GridParams {
            r_chart: self.grid.r_chart,
            n_rho: self.grid.n_rho,
            n_theta: self.grid.n_theta,
        };

        let (psi, phi, manufactured) = match (&self.psi, &self.phi, &self.manufactured) {
            (Some(ps), Some(ph), None) => (
                PsiSpec::new(self.psi_family(ps)?, self.problem.k, self.problem.l),
                Self::phi_spec(ph)?,
                None,
            ),
            (None, None, Some(m)) => {
                if !(m.a > 0.0) {
                    return Err(Error::Config(format!(
                        "manufactured offset a must be positive, got {}",
                        m.a
                    )));
                }
                let solution = ManufacturedSolution::new(m.a, m.b);
                let built = grid.build()?;
                let psi = solution
                    .psi_spec(&built, self.problem.k, self.problem.l)
                    .map_err(|e| Error::Config(format!("manufactured data invalid: {e}")))?;
                (psi, solution.boundary_spec(), Some((solution, m.refine)))
            }
            (None, _, None) | (_, None, None) => {
                return Err(Error::Config(
                    "give either both [psi] and [phi], or a [manufactured] section".into(),
                ))
            }
            _ => {
                return Err(Error::Config(
                    "[manufactured] excludes [psi] and [phi]".into(),
                ))
            }
        };

        let mut solve = SolveConfig::new(self.problem.k, self.problem.l, grid, psi, phi);
        solve.newton_tol = self.solver.newton_tol;
        solve.max_newton = self.solver.max_newton;
        solve.homotopy_steps = self.solver.homotopy_steps;
        solve.backtrack = self.solver.backtrack;
        solve.min_step = self.solver.min_step;
        solve.fd_jacobian_eps = self.solver.fd_jacobian_eps;
        solve.validate()?;

        if let Some((_, true)) = manufactured {
            // refinement study halves the grid twice
            if self.grid.n_rho % 4 != 0 || self.grid.n_theta % 4 != 0 {
                return Err(Error::Config(
                    "refinement study needs n_rho and n_theta divisible by 4".into(),
                ));
            }
            if self.grid.n_rho / 4 < 8 || self.grid.n_theta / 4 < 16 {
                return Err(Error::Config(
                    "refinement study bottoms out below the minimal grid; start from at least 32 x 64".into(),
                ));
            }
        }

        Ok(RunPlan {
            solve,
            manufactured,
            verify: self.verify.clone(),
            seed: self.run.seed,
        })
    }
}
