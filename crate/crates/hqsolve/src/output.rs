//! Solution and report writers: CSV for the nodal solution, JSON for the run
//! report. Plain '.' decimals, LF line endings, deterministic field order.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::config::RunConfig;
use crate::discretize::Grid;
use crate::error::Result;
use crate::solver::{NodeGeometry, SolveReport};
use crate::verify::{EstimateReport, SuitesReport};

/// Compact view of a barrier solve for the report.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub converged: bool,
    pub final_residual: f64,
    pub total_newton_iterations: usize,
}

impl From<&SolveReport> for SolveSummary {
    fn from(r: &SolveReport) -> Self {
        Self {
            converged: r.converged,
            final_residual: r.final_residual,
            total_newton_iterations: r.total_newton_iterations,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierSummaries {
    pub s_plus: SolveSummary,
    pub s_minus: SolveSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridErrorRecord {
    pub n_rho: usize,
    pub n_theta: usize,
    pub max_error: f64,
}

/// Everything `solve` writes into report.json.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport<'a> {
    pub config: &'a RunConfig,
    pub solve: &'a SolveReport,
    pub barriers: Option<BarrierSummaries>,
    pub estimates: &'a EstimateReport,
    pub suites: Option<&'a SuitesReport>,
    pub manufactured_errors: Option<Vec<GridErrorRecord>>,
    pub convergence_order: Option<f64>,
}

/// Writes one row per node: ring and angle indices, chart coordinates, and the
/// pointwise solution data.
pub fn write_solution_csv(
    path: &Path,
    grid: &Grid,
    u: &[f64],
    geometry: &[NodeGeometry],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "ring_index,angle_index,y1,y2,u,v,lambda1,lambda2,theta\n")?;
    for idx in 0..grid.node_count() {
        let (ring, angle) = grid.ring_angle(idx);
        let y = grid.point(idx).y();
        let g = &geometry[idx];
        write!(
            out,
            "{},{},{},{},{},{},{},{},{}\n",
            ring, angle, y[0], y[1], u[idx], g.v, g.lambda[0], g.lambda[1], g.theta
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_report_json(path: &Path, report: &RunReport) -> Result<()> {
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| crate::error::Error::Io(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
