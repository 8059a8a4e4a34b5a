//! Command-line driver: solve → barriers → verification, plus the selftest
//! and standalone suite runners.
//!
//! Exit codes: 0 converged and all enabled checks pass; 1 configuration
//! error (nothing written); 2 nonconvergence; 3 check failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hqsolve::config::{RunConfig, RunPlan};
use hqsolve::discretize::NodalField;
use hqsolve::error::Result;
use hqsolve::manufactured::ManufacturedSolution;
use hqsolve::output::{
    write_report_json, write_solution_csv, BarrierSummaries, GridErrorRecord, RunReport,
    SolveSummary,
};
use hqsolve::psispec::{default_structural_samples, PsiFamily};
use hqsolve::solver::{
    barrier_pair, eval_field, homotopy_solve, EvalScope, GridParams, SolveConfig, SolveReport,
};
use hqsolve::verify::{
    algebraic_suites, barrier_check, curvature_ratio, ellipticity_min, gradient_mp_check,
    suites_for, EstimateReport,
};

#[derive(Parser)]
#[command(
    name = "hqsolve",
    about = "Dirichlet solver for Hessian-quotient curvature equations on spacelike radial graphs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem, run barriers and verification, write
    /// solution.csv and report.json
    Solve {
        /// TOML run configuration
        #[arg(long)]
        config: PathBuf,
        /// output directory (default: alongside the config)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the algebraic suites plus the umbilic and manufactured instances
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the randomized inequality suites at one (n, k, l)
    Suites {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Solve { config, out } => cmd_solve(&config, out.as_deref()),
        Command::Selftest { seed } => cmd_selftest(seed),
        Command::Suites {
            n,
            k,
            l,
            samples,
            seed,
        } => cmd_suites(n, k, l, samples, seed),
    }
}

struct SolveArtifacts {
    report: SolveReport,
    grids: Vec<GridErrorRecord>,
    order: Option<f64>,
    solve_cfg: SolveConfig,
}

/// Runs the solve, including the refinement study for manufactured plans.
fn run_solves(plan: &RunPlan) -> Result<SolveArtifacts> {
    match &plan.manufactured {
        Some((solution, true)) => run_refinement_study(plan, solution),
        _ => {
            let report = homotopy_solve(&plan.solve)?;
            let mut grids = Vec::new();
            if let Some((solution, _)) = &plan.manufactured {
                let grid = plan.solve.grid.build()?;
                let field = NodalField::new(report.u.clone(), &grid)?;
                grids.push(GridErrorRecord {
                    n_rho: grid.n_rho(),
                    n_theta: grid.n_theta(),
                    max_error: solution.max_error(&field, &grid),
                });
            }
            Ok(SolveArtifacts {
                report,
                grids,
                order: None,
                solve_cfg: plan.solve.clone(),
            })
        }
    }
}

fn run_refinement_study(plan: &RunPlan, solution: &ManufacturedSolution) -> Result<SolveArtifacts> {
    let base = plan.solve.grid;
    let levels = [
        GridParams {
            r_chart: base.r_chart,
            n_rho: base.n_rho / 4,
            n_theta: base.n_theta / 4,
        },
        GridParams {
            r_chart: base.r_chart,
            n_rho: base.n_rho / 2,
            n_theta: base.n_theta / 2,
        },
        base,
    ];
    let mut grids = Vec::new();
    let mut last: Option<(SolveReport, SolveConfig)> = None;
    for params in levels {
        let grid = params.build()?;
        let mut cfg = plan.solve.clone();
        cfg.grid = params;
        cfg.psi = solution.psi_spec(&grid, cfg.k, cfg.l)?;
        let report = homotopy_solve(&cfg)?;
        if !report.converged {
            return Ok(SolveArtifacts {
                report,
                grids,
                order: None,
                solve_cfg: cfg,
            });
        }
        let field = NodalField::new(report.u.clone(), &grid)?;
        grids.push(GridErrorRecord {
            n_rho: params.n_rho,
            n_theta: params.n_theta,
            max_error: solution.max_error(&field, &grid),
        });
        last = Some((report, cfg));
    }
    let (report, solve_cfg) = last.expect("three levels solved");
    let order = convergence_order(&grids);
    Ok(SolveArtifacts {
        report,
        grids,
        order,
        solve_cfg,
    })
}

/// Observed order between the two finest refinement levels.
fn convergence_order(grids: &[GridErrorRecord]) -> Option<f64> {
    if grids.len() < 2 {
        return None;
    }
    let coarse = grids[grids.len() - 2].max_error;
    let fine = grids[grids.len() - 1].max_error;
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

fn cmd_solve(config_path: &Path, out: Option<&Path>) -> ExitCode {
    let config = match RunConfig::from_path(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("hqsolve: configuration error: {e}");
            return ExitCode::from(1);
        }
    };
    let plan = match config.plan() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("hqsolve: configuration error: {e}");
            return ExitCode::from(1);
        }
    };
    let out_dir = out
        .map(Path::to_path_buf)
        .or_else(|| config_path.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("hqsolve: cannot create output directory: {e}");
        return ExitCode::from(1);
    }

    let artifacts = match run_solves(&plan) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("hqsolve: solve failed: {e}");
            return ExitCode::from(2);
        }
    };
    let solve_cfg = &artifacts.solve_cfg;
    let grid = match solve_cfg.grid.build() {
        Ok(g) => g,
        Err(e) => {
            eprintln!("hqsolve: {e}");
            return ExitCode::from(1);
        }
    };

    // barriers (main problem only)
    let barrier_reports = if plan.verify.barriers && (solve_cfg.k, solve_cfg.l) == (2, 0) {
        match barrier_pair(solve_cfg) {
            Ok(pair) => Some(pair),
            Err(e) => {
                eprintln!("hqsolve: barrier solve failed: {e}");
                None
            }
        }
    } else {
        None
    };

    // final-field geometry for the estimate checks
    let field = match NodalField::new(artifacts.report.u.clone(), &grid) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("hqsolve: {e}");
            return ExitCode::from(2);
        }
    };
    let geometry = match eval_field(
        &field,
        &grid,
        solve_cfg.k,
        solve_cfg.l,
        &solve_cfg.psi,
        EvalScope::AllNodes,
    ) {
        Ok(eval) => eval.geometry,
        Err(e) => {
            eprintln!("hqsolve: final field is not admissible: {e}");
            return ExitCode::from(2);
        }
    };

    let gradient_mp = plan
        .verify
        .gradient_mp
        .then(|| gradient_mp_check(&field, &geometry, &grid));
    let curvature = plan
        .verify
        .curvature_ratio
        .then(|| curvature_ratio(&geometry, &grid));
    let barrier_gaps = barrier_reports
        .as_ref()
        .map(|(sp, sm)| barrier_check(&artifacts.report.u, &sp.u, &sm.u));
    let structural = if plan.verify.structural
        && !matches!(solve_cfg.psi.family, PsiFamily::Tabulated { .. })
    {
        solve_cfg
            .psi
            .check_structural(&default_structural_samples(solve_cfg.grid.r_chart))
            .ok()
    } else {
        None
    };
    let ell_min = ellipticity_min(&geometry, solve_cfg.k, solve_cfg.l).ok();

    let suites = if plan.verify.suites {
        match algebraic_suites(plan.seed, plan.verify.suite_samples) {
            Ok(s) => Some(s),
            Err(e) => {
                eprintln!("hqsolve: suites failed: {e}");
                None
            }
        }
    } else {
        None
    };

    // gate: structural margins are diagnostics, everything else must hold
    let mut checks_pass = true;
    if let Some(g) = &gradient_mp {
        checks_pass &= g.holds;
    }
    if let Some(b) = &barrier_gaps {
        checks_pass &= b.holds;
    }
    if let Some(m) = ell_min {
        checks_pass &= m > 0.0;
    }
    if let Some(s) = &suites {
        checks_pass &= s.pass;
    }
    if let Some(order) = artifacts.order {
        checks_pass &= order >= 1.7;
    }

    let estimates = EstimateReport {
        gradient_mp,
        curvature_ratio: curvature,
        barrier_gaps,
        structural,
        ellipticity_min: ell_min,
        holds: checks_pass,
    };

    let run_report = RunReport {
        config: &config,
        solve: &artifacts.report,
        barriers: barrier_reports.as_ref().map(|(sp, sm)| BarrierSummaries {
            s_plus: SolveSummary::from(sp),
            s_minus: SolveSummary::from(sm),
        }),
        estimates: &estimates,
        suites: suites.as_ref(),
        manufactured_errors: (!artifacts.grids.is_empty()).then_some(artifacts.grids),
        convergence_order: artifacts.order,
    };

    if let Err(e) = write_solution_csv(&out_dir.join("solution.csv"), &grid, &artifacts.report.u, &geometry)
    {
        eprintln!("hqsolve: cannot write solution.csv: {e}");
        return ExitCode::from(1);
    }
    if let Err(e) = write_report_json(&out_dir.join("report.json"), &run_report) {
        eprintln!("hqsolve: cannot write report.json: {e}");
        return ExitCode::from(1);
    }

    if !artifacts.report.converged {
        eprintln!(
            "hqsolve: solver did not converge: {}",
            artifacts.report.failure.as_deref().unwrap_or("unknown")
        );
        return ExitCode::from(2);
    }
    if !checks_pass {
        eprintln!("hqsolve: verification checks failed (see report.json)");
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}

fn pass_str(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_selftest(seed: u64) -> ExitCode {
    let mut all_ok = true;
    println!("hqsolve selftest (seed {seed})");
    println!("check                          | value         | threshold     | verdict");
    println!("-------------------------------+---------------+---------------+--------");

    let mut row = |name: &str, value: f64, threshold: &str, ok: bool| {
        all_ok &= ok;
        println!("{name:<30} | {value:>13.6e} | {threshold:>13} | {}", pass_str(ok));
    };

    match algebraic_suites(seed, 10_000) {
        Ok(s) => {
            row(
                "newton-maclaurin margin",
                s.newton_maclaurin.worst_margin,
                ">= -1e-10",
                s.newton_maclaurin.pass,
            );
            row(
                "concavity probe",
                s.concavity.worst_margin,
                ">= -1e-10",
                s.concavity.pass,
            );
            row(
                "ellipticity min component",
                s.ellipticity.worst_margin,
                "> 0",
                s.ellipticity.pass,
            );
            row(
                "matrix quotient bound",
                s.lemma_quotient_bound.worst_margin,
                ">= -1e-10",
                s.lemma_quotient_bound.pass,
            );
            row("b0 seed spread", s.b0.relative_spread, "<= 0.1", s.b0.pass);
        }
        Err(e) => {
            eprintln!("hqsolve: suites failed: {e}");
            return ExitCode::from(3);
        }
    }

    // umbilic instance: phi = 2, psi = 1/4 on 32 x 64
    {
        use hqsolve::discretize::BoundarySpec;
        use hqsolve::psispec::PsiSpec;
        let cfg = SolveConfig::new(
            2,
            0,
            GridParams {
                r_chart: 1.0,
                n_rho: 32,
                n_theta: 64,
            },
            PsiSpec::new(PsiFamily::Constant { value: 0.25 }, 2, 0),
            BoundarySpec::Constant(2.0),
        );
        match homotopy_solve(&cfg) {
            Ok(report) => {
                let max_dev = report.u.iter().fold(0.0f64, |m, &v| m.max((v - 2.0).abs()));
                row("umbilic max deviation", max_dev, "<= 1e-10", max_dev <= 1e-10);
                row(
                    "umbilic newton iterations",
                    report.total_newton_iterations as f64,
                    "<= 2",
                    report.converged && report.total_newton_iterations <= 2,
                );
            }
            Err(e) => {
                eprintln!("hqsolve: umbilic instance failed: {e}");
                return ExitCode::from(3);
            }
        }
    }

    // manufactured instance: refinement study 16x32 -> 64x128
    {
        let solution = ManufacturedSolution::new(2.0, 0.1);
        let mut errors = Vec::new();
        for n_rho in [16usize, 32, 64] {
            let params = GridParams {
                r_chart: 1.0,
                n_rho,
                n_theta: 2 * n_rho,
            };
            let grid = match params.build() {
                Ok(g) => g,
                Err(e) => {
                    eprintln!("hqsolve: {e}");
                    return ExitCode::from(3);
                }
            };
            let psi = match solution.psi_spec(&grid, 2, 0) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("hqsolve: {e}");
                    return ExitCode::from(3);
                }
            };
            let cfg = SolveConfig::new(2, 0, params, psi, solution.boundary_spec());
            match homotopy_solve(&cfg) {
                Ok(report) if report.converged => {
                    let field = NodalField::new(report.u, &grid).expect("field matches grid");
                    errors.push(solution.max_error(&field, &grid));
                }
                Ok(report) => {
                    eprintln!(
                        "hqsolve: manufactured solve stalled: {}",
                        report.failure.as_deref().unwrap_or("unknown")
                    );
                    return ExitCode::from(3);
                }
                Err(e) => {
                    eprintln!("hqsolve: manufactured solve failed: {e}");
                    return ExitCode::from(3);
                }
            }
        }
        let order = (errors[1] / errors[2]).log2();
        row("manufactured error 16x32", errors[0], "finite", errors[0].is_finite());
        row("manufactured error 32x64", errors[1], "finite", errors[1].is_finite());
        row("manufactured error 64x128", errors[2], "finite", errors[2].is_finite());
        row("manufactured order", order, ">= 1.7", order >= 1.7);
    }

    println!("selftest: {}", pass_str(all_ok));
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn cmd_suites(n: usize, k: usize, l: usize, samples: usize, seed: u64) -> ExitCode {
    match suites_for(n, k, l, samples, seed) {
        Ok(s) => {
            println!("hqsolve suites (n={n}, k={k}, l={l}, samples={samples}, seed={seed})");
            if let Some(nm) = s.newton_maclaurin {
                println!(
                    "newton-maclaurin margin    {:>13.6e}  {}",
                    nm.worst_margin,
                    pass_str(nm.pass)
                );
            } else {
                println!("newton-maclaurin margin    (needs l >= 1, skipped)");
            }
            println!(
                "concavity probe            {:>13.6e}  {}",
                s.concavity.worst_margin,
                pass_str(s.concavity.pass)
            );
            println!(
                "ellipticity min component  {:>13.6e}  {}",
                s.ellipticity.worst_margin,
                pass_str(s.ellipticity.pass)
            );
            println!(
                "matrix quotient bound      {:>13.6e}  {}",
                s.lemma_quotient_bound.worst_margin,
                pass_str(s.lemma_quotient_bound.pass)
            );
            println!(
                "b0 estimate                {:>13.6e}  (seed spread {:.3e}) {}",
                s.b0.estimate,
                s.b0.relative_spread,
                pass_str(s.b0.pass)
            );
            if s.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("hqsolve: {e}");
            ExitCode::from(1)
        }
    }
}
