//! Damped Newton iteration and the continuity-method driver.

use faer::linalg::solvers::Solve;
use faer::sparse::SparseColMat;

use crate::discretize::{apply_boundary, Grid, NodalField};
use crate::error::{Error, Result};
use crate::symfun::binomial;

use super::assembly::{eval_field, jacobian, EvalScope, FieldEval};
use super::{
    BlendedPsi, HomotopyRecord, IterateMargins, PowerScaledPsi, PsiEval, SolveConfig, SolveReport,
};

struct NewtonOutcome {
    eval: FieldEval,
    iterations: usize,
    failure: Option<String>,
}

fn margins_of(eval: &FieldEval) -> IterateMargins {
    IterateMargins {
        spacelike: eval.min_spacelike_margin,
        sigma1: eval.min_sigma1,
        sigma2: eval.min_sigma2,
    }
}

/// Max row sum of absolute values.
fn inf_norm(jac: &SparseColMat<usize, f64>) -> f64 {
    let mut row_sums = vec![0.0f64; jac.nrows()];
    for col in 0..jac.ncols() {
        for (&row, &val) in jac
            .row_idx_of_col_raw(col)
            .iter()
            .zip(jac.val_of_col(col))
        {
            row_sums[row] += val.abs();
        }
    }
    row_sums.into_iter().fold(0.0, f64::max)
}

/// Solves J δ = −r, checking the backward error
/// ‖Jδ + r‖∞ ≤ 1e−12 (‖J‖∞ ‖δ‖∞ + ‖r‖∞) with iterative refinement.
fn linear_solve(jac: &SparseColMat<usize, f64>, res: &[f64]) -> Result<Vec<f64>> {
    let n = res.len();
    let lu = jac
        .sp_lu()
        .map_err(|e| Error::LinearSolve(format!("sparse LU failed: {e:?}")))?;
    let rhs = faer::col::Col::<f64>::from_fn(n, |i| -res[i]);
    let mut delta = lu.solve(&rhs);

    let res_norm = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let jac_norm = inf_norm(jac);
    let mut last_worst = f64::INFINITY;
    for _ in 0..3 {
        let jd = jac * &delta;
        let delta_norm = (0..n).fold(0.0f64, |m, i| m.max(delta[i].abs()));
        let mut lin_res = faer::col::Col::<f64>::zeros(n);
        let mut worst = 0.0f64;
        for i in 0..n {
            let r = jd[i] + res[i];
            lin_res[i] = -r;
            worst = worst.max(r.abs());
        }
        let scale = (jac_norm * delta_norm + res_norm).max(f64::MIN_POSITIVE);
        if worst <= 1e-12 * scale {
            return Ok((0..n).map(|i| delta[i]).collect());
        }
        last_worst = worst;
        let correction = lu.solve(&lin_res);
        for i in 0..n {
            delta[i] += correction[i];
        }
    }
    Err(Error::LinearSolve(format!(
        "linear residual {last_worst:e} exceeds 1e-12 of the backward-error scale after refinement"
    )))
}

/// Damped Newton loop on a fixed grid with fixed boundary values.
///
/// The initial field must evaluate cleanly (positive, spacelike, admissible
/// everywhere); that is a precondition, not a nonconvergence mode. Line-search
/// rejections and iteration exhaustion are reported through
/// `NewtonOutcome::failure`.
fn newton_loop(
    u: &mut NodalField,
    grid: &Grid,
    k: usize,
    l: usize,
    psi: &dyn PsiEval,
    cfg: &SolveConfig,
    iterate_margins: &mut Vec<IterateMargins>,
) -> Result<NewtonOutcome> {
    let interior = grid.interior_count();
    let mut eval = eval_field(u, grid, k, l, psi, EvalScope::AllNodes)?;
    iterate_margins.push(margins_of(&eval));

    let mut iterations = 0usize;
    loop {
        if eval.res_norm <= cfg.newton_tol {
            return Ok(NewtonOutcome {
                eval,
                iterations,
                failure: None,
            });
        }
        if iterations >= cfg.max_newton {
            let failure = Some(format!(
                "newton stalled at residual {:e} after {} iterations",
                eval.res_norm, iterations
            ));
            return Ok(NewtonOutcome {
                eval,
                iterations,
                failure,
            });
        }

        let jac = jacobian(u, grid, k, l, psi, cfg.fd_jacobian_eps)?;
        let delta = linear_solve(&jac, &eval.residual)?;

        let mut step = 1.0f64;
        let accepted = loop {
            let mut trial = u.clone();
            for i in 0..interior {
                trial[i] += step * delta[i];
            }
            match eval_field(&trial, grid, k, l, psi, EvalScope::AllNodes) {
                Ok(trial_eval) if trial_eval.res_norm < eval.res_norm => {
                    break Some((trial, trial_eval));
                }
                _ => {
                    step *= cfg.backtrack;
                    if step < cfg.min_step {
                        break None;
                    }
                }
            }
        };
        match accepted {
            Some((trial, trial_eval)) => {
                *u = trial;
                eval = trial_eval;
                iterations += 1;
                iterate_margins.push(margins_of(&eval));
            }
            None => {
                let failure = Some(format!(
                    "line search exhausted below step {:e} at residual {:e}",
                    cfg.min_step, eval.res_norm
                ));
                return Ok(NewtonOutcome {
                    eval,
                    iterations,
                    failure,
                });
            }
        }
    }
}

fn report_from(
    u: NodalField,
    eval: &FieldEval,
    newton_iterations: Vec<usize>,
    failure: Option<String>,
    homotopy_path: Vec<HomotopyRecord>,
    iterate_margins: Vec<IterateMargins>,
) -> SolveReport {
    SolveReport {
        u: u.into_values(),
        converged: failure.is_none(),
        failure,
        total_newton_iterations: newton_iterations.iter().sum(),
        newton_iterations,
        final_residual: eval.res_norm,
        min_spacelike_margin: eval.min_spacelike_margin,
        min_sigma1: eval.min_sigma1,
        min_sigma2: eval.min_sigma2,
        homotopy_path,
        iterate_margins,
    }
}

/// Newton iteration from a caller-supplied start; boundary values are taken
/// from the start field as-is.
pub fn newton_solve(u0: &NodalField, cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    if u0.len() != grid.node_count() {
        return Err(Error::Config(format!(
            "start field has {} values for a grid of {} nodes",
            u0.len(),
            grid.node_count()
        )));
    }
    let mut u = u0.clone();
    let mut iterate_margins = Vec::new();
    let outcome = newton_loop(
        &mut u,
        &grid,
        cfg.k,
        cfg.l,
        &cfg.psi,
        cfg,
        &mut iterate_margins,
    )?;
    Ok(report_from(
        u,
        &outcome.eval,
        vec![outcome.iterations],
        outcome.failure,
        Vec::new(),
        iterate_margins,
    ))
}

/// The continuity path: data (ψ_t, φ_t) from exact umbilic values at t = 0 to
/// the target at t = 1.
fn homotopy_driver(
    grid: &Grid,
    k: usize,
    l: usize,
    psi: &dyn PsiEval,
    cfg: &SolveConfig,
) -> Result<SolveReport> {
    let n = 2usize;
    // target boundary values and their mean, the umbilic anchor
    let boundary: Vec<(usize, f64)> = {
        let mut probe = NodalField::constant(1.0, grid);
        apply_boundary(&mut probe, &cfg.phi, grid)?;
        grid.boundary_nodes().map(|i| (i, probe[i])).collect()
    };
    let c0 = boundary.iter().map(|&(_, v)| v).sum::<f64>() / boundary.len() as f64;
    let psi0 = binomial(n, k) / binomial(n, l) * c0.powi(-((k - l) as i32));

    let mut u = NodalField::constant(c0, grid);
    let mut path: Vec<HomotopyRecord> = Vec::new();
    let mut newton_iterations = Vec::new();
    let mut iterate_margins = Vec::new();

    let mut t = 0.0f64;
    let mut dt = 1.0 / cfg.homotopy_steps as f64;
    let dt_floor = (2.0f64).powi(-10);

    loop {
        let t_next = (t + dt).min(1.0);
        let mut trial = u.clone();
        for &(idx, phi_val) in &boundary {
            trial[idx] = (1.0 - t_next) * c0 + t_next * phi_val;
        }
        let blended = BlendedPsi {
            t: t_next,
            anchor: psi0,
            target: psi,
        };
        let mut step_margins = Vec::new();
        let attempt = newton_loop(&mut trial, grid, k, l, &blended, cfg, &mut step_margins);
        match attempt {
            Ok(outcome) if outcome.failure.is_none() => {
                u = trial;
                t = t_next;
                newton_iterations.push(outcome.iterations);
                iterate_margins.extend(step_margins);
                path.push(HomotopyRecord {
                    t,
                    newton_iterations: outcome.iterations,
                    residual: outcome.eval.res_norm,
                });
                if t >= 1.0 {
                    let eval = outcome.eval;
                    return Ok(report_from(
                        u,
                        &eval,
                        newton_iterations,
                        None,
                        path,
                        iterate_margins,
                    ));
                }
            }
            Ok(_) | Err(Error::ResidualUndefined { .. }) => {
                dt *= 0.5;
                if dt < dt_floor {
                    let eval = eval_field(&u, grid, k, l, psi, EvalScope::AllNodes)
                        .unwrap_or_else(|_| FieldEval {
                            residual: Vec::new(),
                            res_norm: f64::NAN,
                            min_spacelike_margin: f64::NAN,
                            min_sigma1: f64::NAN,
                            min_sigma2: f64::NAN,
                            geometry: Vec::new(),
                        });
                    return Ok(report_from(
                        u,
                        &eval,
                        newton_iterations,
                        Some(format!("homotopy step underflow below {dt_floor:e} at t = {t}")),
                        path,
                        iterate_margins,
                    ));
                }
            }
            Err(other) => return Err(other),
        }
    }
}

/// Full continuity-method solve of the configured problem.
pub fn homotopy_solve(cfg: &SolveConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let grid = cfg.grid.build()?;
    homotopy_driver(&grid, cfg.k, cfg.l, &cfg.psi, cfg)
}

/// Barrier constant C(n,k,l) of the lower-barrier right-hand side.
fn barrier_constant(n: usize, k: usize, l: usize) -> f64 {
    let m = (k - l) as f64;
    binomial(n, l).powf(1.0 / m - 1.0)
        * binomial(n, k).powf(1.0 - 1.0 / m)
        * binomial(n, k - 1).powf(l as f64 / (k as f64 - 1.0) - 1.0)
}

/// Solves the upper/lower barrier Dirichlet problems.
///
/// The upper barrier satisfies σ₂[s] = C(n,2) ((C(n,l)/C(n,k)) ψ)^{2/(k−l)},
/// which for the supported main problem (k = 2, l = 0) is the original
/// equation itself, so s⁺ reproduces the solve bit for bit. The lower barrier
/// solves the quasilinear problem
/// σ₁[s] = ψ^{(k−1)/(k−l)} C(n,k,l)^{(k−1)/(l−k+1)}
/// through the same machinery at (k, l) = (1, 0).
pub fn barrier_pair(cfg: &SolveConfig) -> Result<(SolveReport, SolveReport)> {
    cfg.validate()?;
    if (cfg.k, cfg.l) != (2, 0) {
        return Err(Error::Config(format!(
            "barriers are defined for the (2, 0) main problem, got ({}, {})",
            cfg.k, cfg.l
        )));
    }
    let n = 2usize;
    let grid = cfg.grid.build()?;

    // upper barrier: identical operator and data for (2, 0)
    let s_plus = homotopy_driver(&grid, 2, 0, &cfg.psi, cfg)?;

    // lower barrier at (1, 0)
    let m = (cfg.k - cfg.l) as f64;
    let coef = barrier_constant(n, cfg.k, cfg.l)
        .powf((cfg.k as f64 - 1.0) / (cfg.l as f64 - cfg.k as f64 + 1.0));
    let psi_minus = PowerScaledPsi {
        coef,
        exponent: (cfg.k as f64 - 1.0) / m,
        inner: &cfg.psi,
    };
    let mut cfg_minus = cfg.clone();
    cfg_minus.k = 1;
    cfg_minus.l = 0;
    let s_minus = homotopy_driver(&grid, 1, 0, &psi_minus, &cfg_minus)?;

    Ok((s_plus, s_minus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::BoundarySpec;
    use crate::psispec::{PsiFamily, PsiSpec};
    use crate::solver::GridParams;

    fn umbilic_config(c: f64, n_rho: usize, n_theta: usize) -> SolveConfig {
        SolveConfig::new(
            2,
            0,
            GridParams {
                r_chart: 1.0,
                n_rho,
                n_theta,
            },
            PsiSpec::new(PsiFamily::Constant { value: 1.0 / (c * c) }, 2, 0),
            BoundarySpec::Constant(c),
        )
    }

    #[test]
    fn barrier_coefficient_matches_quasilinear_display() {
        // for (2, 0): sigma_1[s] = psi^{1/2} n (n(n-1)/2)^{-1/2}
        let n = 2;
        let coef = barrier_constant(n, 2, 0).powf(-1.0);
        let expected = n as f64 * (n as f64 * (n as f64 - 1.0) / 2.0).powf(-0.5);
        assert!((coef - expected).abs() < 1e-14, "{coef} vs {expected}");
    }

    #[test]
    fn newton_at_exact_umbilic_converges_immediately() {
        let cfg = umbilic_config(2.0, 8, 16);
        let grid = cfg.grid.build().unwrap();
        let u0 = NodalField::constant(2.0, &grid);
        let report = newton_solve(&u0, &cfg).unwrap();
        assert!(report.converged);
        assert!(report.total_newton_iterations <= 1);
        assert!(report.final_residual <= 1e-10);
    }

    #[test]
    fn newton_recovers_from_smooth_perturbation() {
        let cfg = umbilic_config(2.0, 8, 16);
        let grid = cfg.grid.build().unwrap();
        let mut u0 = NodalField::constant(2.0, &grid);
        for idx in grid.interior_nodes() {
            let y = grid.point(idx).y();
            u0[idx] += 1e-3 * (1.0 - y[0] * y[0] - y[1] * y[1]).max(0.0);
        }
        let report = newton_solve(&u0, &cfg).unwrap();
        assert!(report.converged, "failure: {:?}", report.failure);
        assert!(
            report.total_newton_iterations <= 6,
            "took {} iterations",
            report.total_newton_iterations
        );
        assert!(report.final_residual <= 1e-10);
        let worst = report.u.iter().fold(0.0f64, |m, &v| m.max((v - 2.0).abs()));
        assert!(worst <= 1e-9, "recovered field deviates by {worst}");
        assert!(report
            .iterate_margins
            .iter()
            .all(|m| m.spacelike > 0.0 && m.sigma1 > 0.0 && m.sigma2 > 0.0));
    }

    #[test]
    fn newton_rejects_non_spacelike_start() {
        let cfg = umbilic_config(2.0, 8, 16);
        let grid = cfg.grid.build().unwrap();
        let mut u0 = NodalField::constant(2.0, &grid);
        let idx = grid.index(4, 0);
        u0[idx] = 60.0;
        let err = newton_solve(&u0, &cfg).unwrap_err();
        assert!(matches!(err, Error::ResidualUndefined { .. }));
    }

    #[test]
    fn homotopy_on_trivial_data_stays_umbilic() {
        let cfg = umbilic_config(2.0, 8, 16);
        let report = homotopy_solve(&cfg).unwrap();
        assert!(report.converged);
        assert_eq!(report.total_newton_iterations, 0);
        let worst = report.u.iter().fold(0.0f64, |m, &v| m.max((v - 2.0).abs()));
        assert!(worst <= 1e-12);
    }

    #[test]
    fn homotopy_solves_power_theta_data() {
        // psi = |theta|^2 h with h chosen so the target stays within a factor
        // two of the umbilic anchor: at u ~ 2, |theta| ~ 2, psi0 = 1/4, so
        // h = 1/16 puts psi(t=1) right at the anchor scale.
        let mut cfg = umbilic_config(2.0, 8, 16);
        cfg.psi = PsiSpec::new(
            PsiFamily::PowerTheta {
                p: 2.0,
                h: crate::psispec::HField::Constant(1.0 / 16.0),
            },
            2,
            0,
        );
        let report = homotopy_solve(&cfg).unwrap();
        assert!(report.converged, "failure: {:?}", report.failure);
        assert!(
            report.total_newton_iterations <= 20,
            "took {} iterations",
            report.total_newton_iterations
        );
        assert!(report.final_residual <= 1e-10);
        assert!(report.min_spacelike_margin > 0.0);
        assert!(report.min_sigma1 > 0.0 && report.min_sigma2 > 0.0);
    }

    #[test]
    fn manufactured_solve_recovers_u_star() {
        use crate::manufactured::ManufacturedSolution;
        let m = ManufacturedSolution::new(2.0, 0.1);
        let err_on = |n_rho: usize| -> f64 {
            let grid = Grid::build(1.0, n_rho, 2 * n_rho).unwrap();
            let cfg = SolveConfig::new(
                2,
                0,
                GridParams {
                    r_chart: 1.0,
                    n_rho,
                    n_theta: 2 * n_rho,
                },
                m.psi_spec(&grid, 2, 0).unwrap(),
                m.boundary_spec(),
            );
            let report = homotopy_solve(&cfg).unwrap();
            assert!(report.converged, "failure: {:?}", report.failure);
            let field = NodalField::new(report.u, &grid).unwrap();
            m.max_error(&field, &grid)
        };
        let e1 = err_on(8);
        let e2 = err_on(16);
        let order = (e1 / e2).log2();
        assert!(
            order >= 1.7,
            "manufactured convergence order {order} ({e1} vs {e2})"
        );
    }

    #[test]
    fn barrier_pair_on_umbilic_data() {
        let cfg = umbilic_config(2.0, 8, 16);
        let (s_plus, s_minus) = barrier_pair(&cfg).unwrap();
        assert!(s_plus.converged && s_minus.converged);
        // both barriers coincide with the umbilic solution
        for (&p, &m) in s_plus.u.iter().zip(&s_minus.u) {
            assert!((p - 2.0).abs() <= 1e-9, "s_plus {p}");
            assert!((m - 2.0).abs() <= 1e-9, "s_minus {m}");
        }
    }

    #[test]
    fn solve_is_deterministic() {
        let mut cfg = umbilic_config(2.0, 8, 16);
        cfg.psi = PsiSpec::new(
            PsiFamily::PowerTheta {
                p: 2.0,
                h: crate::psispec::HField::Constant(1.0 / 16.0),
            },
            2,
            0,
        );
        let a = homotopy_solve(&cfg).unwrap();
        let b = homotopy_solve(&cfg).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.final_residual, b.final_residual);
        assert_eq!(a.newton_iterations, b.newton_iterations);
    }
}
