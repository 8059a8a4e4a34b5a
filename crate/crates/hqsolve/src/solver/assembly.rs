//! Residual evaluation and stencil-colored Jacobian assembly.
//!
//! The residual at an interior node is
//!
//! ```text
//! r = (σ_k/σ_l)^{1/(k−l)}(λ(u)) − ψ(x, u, ϑ)^{1/(k−l)},
//! ```
//!
//! with λ computed from the finite-difference covariant data of u. The
//! derivative stencil at a ring node touches its Moore neighborhood in the
//! (ring, θ) lattice; the pole residual touches the pole and the whole first
//! ring, and ring-1 residuals touch the pole. Jacobian columns are therefore
//! grouped by the coloring (ring mod 3, θ mod m) with m the smallest divisor
//! of n_theta that is ≥ 4 — two same-color columns never influence a common
//! residual row — while the pole column gets a color of its own and the dense
//! pole row is assembled by direct per-column differences of the pole residual
//! alone.

use faer::sparse::{SparseColMat, Triplet};
use nalgebra::{DMatrix, DVector};

use crate::discretize::{fd_partials_at, Grid, NodalField};
use crate::error::{Error, Result};
use crate::graphgeom::{principal_curvatures, GraphPointState};
use crate::hypgeom::covariant_hessian;
use crate::symfun::{cone_margin, elementary_symmetric, in_gamma_cone};

use super::PsiEval;

/// Pointwise geometry retained for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct NodeGeometry {
    pub u: f64,
    pub v: f64,
    pub theta: f64,
    pub lambda: [f64; 2],
}

/// Which nodes get the full geometry treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalScope {
    /// residual + margins + geometry at every node
    AllNodes,
    /// residual and margins at interior nodes only (Jacobian passes)
    InteriorOnly,
}

/// One sweep over the field.
#[derive(Debug, Clone)]
pub struct FieldEval {
    /// residual per interior node (indices 0..interior_count coincide with
    /// node indices)
    pub residual: Vec<f64>,
    pub res_norm: f64,
    pub min_spacelike_margin: f64,
    pub min_sigma1: f64,
    pub min_sigma2: f64,
    /// geometry per node; interior prefix only under `InteriorOnly`
    pub geometry: Vec<NodeGeometry>,
}

struct NodeOutcome {
    geometry: NodeGeometry,
    sigma1: f64,
    sigma2: f64,
    spacelike_margin: f64,
    admissible: bool,
}

/// Worker count for per-node sweeps, from `HQSOLVE_THREADS` (default 1).
/// Per-node results land in disjoint slots and the min/max reductions are
/// exact, so the outcome is bit-identical for any thread count.
pub(crate) fn thread_count() -> usize {
    std::env::var("HQSOLVE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t >= 1)
        .unwrap_or(1)
        .min(64)
}

fn parallel_eval_nodes(
    field: &NodalField,
    grid: &Grid,
    k: usize,
    node_limit: usize,
) -> Vec<Result<NodeOutcome>> {
    let threads = thread_count().min(node_limit.max(1));
    if threads <= 1 {
        return (0..node_limit).map(|i| eval_node(field, grid, k, i)).collect();
    }
    let mut out: Vec<Option<Result<NodeOutcome>>> = (0..node_limit).map(|_| None).collect();
    let chunk = node_limit.div_ceil(threads);
    std::thread::scope(|scope| {
        for (t, slots) in out.chunks_mut(chunk).enumerate() {
            let start = t * chunk;
            scope.spawn(move || {
                for (off, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(eval_node(field, grid, k, start + off));
                }
            });
        }
    });
    out.into_iter().map(|s| s.expect("all slots filled")).collect()
}

fn eval_node(
    field: &NodalField,
    grid: &Grid,
    k: usize,
    idx: usize,
) -> Result<NodeOutcome> {
    let point = grid.point(idx);
    let u = field[idx];
    if !(u > 0.0) || !u.is_finite() {
        return Err(Error::NonPositiveGraph { u });
    }
    let (grad, hess) = fd_partials_at(field, grid, idx);
    let raw = DMatrix::from_row_slice(2, 2, &[hess[0][0], hess[0][1], hess[1][0], hess[1][1]]);
    let cov = covariant_hessian(&grad, &raw, point)?;
    let state = GraphPointState::new(u, DVector::from_row_slice(&grad), cov, point)?;
    let margin = state.spacelike_margin();
    let grad_sq = state.grad_norm_sq();
    if grad_sq >= u * u {
        return Err(Error::NonSpacelike {
            grad_sq,
            u_sq: u * u,
        });
    }
    let v = (1.0 - grad_sq / (u * u)).sqrt();

    // induced metric and second fundamental form, inlined from graphgeom for
    // the n = 2 hot path
    let sigma = point.sigma();
    let du = &state.du;
    let mut g = DMatrix::zeros(2, 2);
    let mut h_form = DMatrix::zeros(2, 2);
    for i in 0..2 {
        for j in 0..2 {
            g[(i, j)] = u * u * sigma[(i, j)] - du[i] * du[j];
            h_form[(i, j)] =
                (state.d2u[(i, j)] + u * sigma[(i, j)] - 2.0 / u * du[i] * du[j]) / v;
        }
    }
    let lambda = principal_curvatures(&g, &h_form)?;
    let lam = [lambda[0], lambda[1]];
    let sigma1 = elementary_symmetric(&lam, 1)?;
    let sigma2 = elementary_symmetric(&lam, 2)?;
    Ok(NodeOutcome {
        geometry: NodeGeometry {
            u,
            v,
            theta: -u / v,
            lambda: lam,
        },
        sigma1,
        sigma2,
        spacelike_margin: margin,
        admissible: in_gamma_cone(&lam, k),
    })
}

/// Residual of the field at a single interior node.
pub fn node_residual(
    field: &NodalField,
    grid: &Grid,
    k: usize,
    l: usize,
    psi: &dyn PsiEval,
    idx: usize,
) -> Result<f64> {
    let out = eval_node(field, grid, k, idx)?;
    if !out.admissible {
        return Err(Error::NotAdmissible {
            k,
            margin: cone_margin(&out.geometry.lambda, k),
        });
    }
    residual_value(grid, k, l, psi, idx, &out.geometry)
}

fn residual_value(
    grid: &Grid,
    k: usize,
    l: usize,
    psi: &dyn PsiEval,
    idx: usize,
    geom: &NodeGeometry,
) -> Result<f64> {
    let m = (k - l) as f64;
    let quot = crate::symfun::hessian_quotient(&geom.lambda, k, l)?;
    let f_value = quot.powf(1.0 / m);
    let rhs = psi
        .eval(grid.point(idx), geom.u, geom.theta)?
        .powf(1.0 / m);
    Ok(f_value - rhs)
}

/// Evaluates residual and admissibility margins across the grid.
///
/// Any node that is non-positive, non-spacelike, or outside Γ_k makes the
/// whole evaluation fail with the offending node set.
pub fn eval_field(
    field: &NodalField,
    grid: &Grid,
    k: usize,
    l: usize,
    psi: &dyn PsiEval,
    scope: EvalScope,
) -> Result<FieldEval> {
    let node_limit = match scope {
        EvalScope::AllNodes => grid.node_count(),
        EvalScope::InteriorOnly => grid.interior_count(),
    };
    let interior = grid.interior_count();

    let mut residual = Vec::with_capacity(interior);
    let mut geometry = Vec::with_capacity(node_limit);
    let mut res_norm = 0.0f64;
    let mut min_margin = f64::INFINITY;
    let mut min_sigma1 = f64::INFINITY;
    let mut min_sigma2 = f64::INFINITY;

    let mut non_positive = Vec::new();
    let mut non_spacelike = Vec::new();
    let mut inadmissible = Vec::new();

    for (idx, outcome) in parallel_eval_nodes(field, grid, k, node_limit)
        .into_iter()
        .enumerate()
    {
        match outcome {
            Ok(out) => {
                if !out.admissible {
                    inadmissible.push(idx);
                    continue;
                }
                min_margin = min_margin.min(out.spacelike_margin);
                min_sigma1 = min_sigma1.min(out.sigma1);
                min_sigma2 = min_sigma2.min(out.sigma2);
                if idx < interior {
                    let r = residual_value(grid, k, l, psi, idx, &out.geometry)?;
                    res_norm = res_norm.max(r.abs());
                    residual.push(r);
                }
                geometry.push(out.geometry);
            }
            Err(Error::NonPositiveGraph { .. }) => non_positive.push(idx),
            // a Cholesky failure of g can only come from a state at the edge
            // of spacelikeness; classify it with the gradient violations
            Err(Error::NonSpacelike { .. }) | Err(Error::NotPositiveDefinite) => {
                non_spacelike.push(idx)
            }
            Err(other) => return Err(other),
        }
    }

    if !(non_positive.is_empty() && non_spacelike.is_empty() && inadmissible.is_empty()) {
        let mut nodes: Vec<usize> = non_positive
            .iter()
            .chain(&non_spacelike)
            .chain(&inadmissible)
            .copied()
            .collect();
        nodes.sort_unstable();
        nodes.truncate(8);
        return Err(Error::ResidualUndefined {
            non_positive: non_positive.len(),
            non_spacelike: non_spacelike.len(),
            inadmissible: inadmissible.len(),
            nodes,
        });
    }

    Ok(FieldEval {
        residual,
        res_norm,
        min_spacelike_margin: min_margin,
        min_sigma1,
        min_sigma2,
        geometry,
    })
}

/// Smallest divisor of `n` that is at least 4; the angular coloring modulus.
fn theta_modulus(n_theta: usize) -> usize {
    (4..=n_theta).find(|m| n_theta % m == 0).unwrap_or(n_theta)
}

/// Interior columns that influence the pole residual: the pole itself and the
/// first ring.
fn pole_row_columns(grid: &Grid) -> Vec<usize> {
    let mut cols = vec![0usize];
    for j in 0..grid.n_theta() {
        cols.push(grid.index(1, j));
    }
    cols
}

/// Interior residual rows (pole row excluded) that column `col` influences.
fn rows_of_column(grid: &Grid, col: usize) -> Vec<usize> {
    let interior = grid.interior_count();
    let mut rows = Vec::new();
    if col == 0 {
        // perturbing the pole moves the radial stencils of ring 1
        for j in 0..grid.n_theta() {
            let idx = grid.index(1, j);
            if idx < interior {
                rows.push(idx);
            }
        }
        return rows;
    }
    let (ring, angle) = grid.ring_angle(col);
    let n = grid.n_theta() as isize;
    for dr in -1i64..=1 {
        let r = ring as i64 + dr;
        if r < 1 || r as usize > grid.n_rho() {
            continue;
        }
        for dt in -1isize..=1 {
            let a = (angle as isize + dt).rem_euclid(n) as usize;
            let idx = grid.index(r as usize, a);
            if idx < interior {
                rows.push(idx);
            }
        }
    }
    rows
}

/// Central-difference Jacobian of the interior residual, assembled by stencil
/// coloring. `eps_rel` scales the perturbation per column.
pub fn jacobian(
    field: &NodalField,
    grid: &Grid,
    k: usize,
    l: usize,
    psi: &dyn PsiEval,
    eps_rel: f64,
) -> Result<SparseColMat<usize, f64>> {
    let interior = grid.interior_count();
    let m_theta = theta_modulus(grid.n_theta());
    let n_colors = 3 * m_theta;

    // color -> member columns (pole handled separately)
    let mut colors: Vec<Vec<usize>> = vec![Vec::new(); n_colors];
    for col in 1..interior {
        let (ring, angle) = grid.ring_angle(col);
        colors[(ring % 3) * m_theta + (angle % m_theta)].push(col);
    }

    let mut triplets: Vec<Triplet<usize, usize, f64>> = Vec::new();

    // colored batches fill every interior row except the pole row
    let mut batch = |cols: &[usize]| -> Result<()> {
        if cols.is_empty() {
            return Ok(());
        }
        let mut scale = 1.0f64;
        for halving in 0..=4 {
            let mut up = field.clone();
            let mut dn = field.clone();
            let mut eps = Vec::with_capacity(cols.len());
            for &col in cols {
                let e = scale * eps_rel * field[col].abs().max(1.0);
                up[col] += e;
                dn[col] -= e;
                eps.push(e);
            }
            let plus = eval_field(&up, grid, k, l, psi, EvalScope::InteriorOnly);
            let minus = eval_field(&dn, grid, k, l, psi, EvalScope::InteriorOnly);
            match (plus, minus) {
                (Ok(p), Ok(m)) => {
                    for (ci, &col) in cols.iter().enumerate() {
                        for row in rows_of_column(grid, col) {
                            let val = (p.residual[row] - m.residual[row]) / (2.0 * eps[ci]);
                            if val != 0.0 {
                                triplets.push(Triplet::new(row, col, val));
                            }
                        }
                    }
                    return Ok(());
                }
                _ if halving < 4 => scale *= 0.5,
                _ => return Err(Error::JacobianPerturbation { halvings: 4 }),
            }
        }
        unreachable!()
    };

    // pole column alone: fills ring-1 rows
    batch(&[0])?;
    for color in 0..n_colors {
        let cols = std::mem::take(&mut colors[color]);
        batch(&cols)?;
    }

    // dense pole row, one column at a time against the pole residual only
    for &col in &pole_row_columns(grid) {
        if col >= interior {
            continue;
        }
        let mut scale = 1.0f64;
        let entry = loop {
            let e = scale * eps_rel * field[col].abs().max(1.0);
            let mut up = field.clone();
            up[col] += e;
            let mut dn = field.clone();
            dn[col] -= e;
            let plus = node_residual(&up, grid, k, l, psi, 0);
            let minus = node_residual(&dn, grid, k, l, psi, 0);
            match (plus, minus) {
                (Ok(p), Ok(m)) => break (p - m) / (2.0 * e),
                _ if scale > (0.5f64).powi(4) => scale *= 0.5,
                _ => return Err(Error::JacobianPerturbation { halvings: 4 }),
            }
        };
        if entry != 0.0 {
            triplets.push(Triplet::new(0usize, col, entry));
        }
    }

    SparseColMat::try_new_from_triplets(interior, interior, &triplets)
        .map_err(|e| Error::LinearSolve(format!("jacobian assembly: {e:?}")))
}
