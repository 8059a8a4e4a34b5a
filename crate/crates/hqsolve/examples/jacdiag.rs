// scratch: directional Jacobian error by ring across grid sizes
use hqsolve::discretize::{Grid, NodalField};
use hqsolve::manufactured::ManufacturedSolution;
use hqsolve::solver::{eval_field, jacobian, EvalScope};

fn main() {
    for (n_rho, n_theta) in [(8usize, 16usize), (16, 32), (20, 40), (16, 64), (32, 32), (24, 48)] {
        let m = ManufacturedSolution::new(2.0, 0.1);
        let grid = Grid::build(1.0, n_rho, n_theta).unwrap();
        let psi = m.psi_spec(&grid, 2, 0).unwrap();
        let c0 = 2.0 + 0.1 * 2.0f64.sqrt();
        let field = NodalField::constant(c0, &grid);
        let interior = grid.interior_count();

        let jac = jacobian(&field, &grid, 2, 0, &psi, 1e-6).unwrap();
        let w: Vec<f64> = (0..interior)
            .map(|i| ((i.wrapping_mul(2654435761) % 1000) as f64 / 500.0) - 1.0)
            .collect();
        let eps = 1e-7;
        let mut up = field.clone();
        let mut dn = field.clone();
        for i in 0..interior {
            up[i] += eps * w[i];
            dn[i] -= eps * w[i];
        }
        let rp = eval_field(&up, &grid, 2, 0, &psi, EvalScope::InteriorOnly).unwrap();
        let rm = eval_field(&dn, &grid, 2, 0, &psi, EvalScope::InteriorOnly).unwrap();
        let wcol = faer::col::Col::<f64>::from_fn(interior, |i| w[i]);
        let jw = &jac * &wcol;
        // worst relative error per ring
        let mut per_ring: std::collections::BTreeMap<usize, f64> = Default::default();
        let mut scale = 0.0f64;
        for i in 0..interior {
            let fd = (rp.residual[i] - rm.residual[i]) / (2.0 * eps);
            scale = scale.max(fd.abs());
            let (ring, _) = grid.ring_angle(i);
            let e = (jw[i] - fd).abs();
            let slot = per_ring.entry(ring).or_insert(0.0);
            if e > *slot { *slot = e; }
        }
        let summary: Vec<String> = per_ring
            .iter()
            .filter(|(_, &e)| e > 1e-4 * scale)
            .map(|(r, e)| format!("ring {r}: {e:.2e}"))
            .collect();
        println!(
            "{n_rho}x{n_theta}: scale {scale:.3e}, rings over 1e-4*scale: {}",
            if summary.is_empty() { "none".to_string() } else { summary.join(", ") }
        );
    }
}
