//! Wasserstein-1 distances: exact on the line, transportation LP on 2-D grids.

mod one_d;
mod simplex;

pub use one_d::{w1_1d, w1_sorted_sample};
pub use simplex::{solve_transport, PlanEntry, TransportPlan};

use crate::error::{Error, Result};
use crate::measures::FiniteMeasure2D;

/// Absolute slack allowed in dual feasibility and marginal checks.
pub const CERT_TOL: f64 = 1e-9;

/// `ℓ1` distance between two points.
pub fn l1(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).abs() + (a[1] - b[1]).abs()
}

fn atoms(m: &FiniteMeasure2D) -> Vec<[f64; 2]> {
    (0..m.nx()).flat_map(|i| (0..m.ny()).map(move |j| (i, j))).map(|(i, j)| m.position(i, j)).collect()
}

/// Row-major `ℓ1` cost matrix between two point sets.
pub fn l1_cost_matrix(src: &[[f64; 2]], dst: &[[f64; 2]]) -> Vec<f64> {
    src.iter().flat_map(|&a| dst.iter().map(move |&b| l1(a, b))).collect()
}

/// W1 with `ℓ1` ground cost between arbitrary weighted point sets.
pub fn w1_points_lp(src: &[[f64; 2]], p: &[f64], dst: &[[f64; 2]], q: &[f64]) -> Result<(f64, TransportPlan)> {
    if src.len() != p.len() || dst.len() != q.len() {
        return Err(Error::InvalidArgument("points and masses differ in length".into()));
    }
    let cost = l1_cost_matrix(src, dst);
    let plan = solve_transport(p, q, &cost)?;
    Ok((plan.cost, plan))
}

/// W1 with `ℓ1` ground cost between two measures on (possibly different)
/// 2-D grids. Atom `a` is the row-major index `i · ny + j`.
pub fn w1_grid_lp(p: &FiniteMeasure2D, q: &FiniteMeasure2D) -> Result<(f64, TransportPlan)> {
    w1_points_lp(&atoms(p), p.p(), &atoms(q), q.p())
}

/// Duality gap `|primal − Σ u·p − Σ v·q|`, after checking that the potentials
/// satisfy `u_a + v_b ≤ ‖x_a − y_b‖₁` on every pair of atoms.
pub fn kr_dual_check(p: &FiniteMeasure2D, q: &FiniteMeasure2D, plan: &TransportPlan) -> Result<f64> {
    dual_check_points(&atoms(p), p.p(), &atoms(q), q.p(), plan)
}

pub fn dual_check_points(
    src: &[[f64; 2]],
    p: &[f64],
    dst: &[[f64; 2]],
    q: &[f64],
    plan: &TransportPlan,
) -> Result<f64> {
    if plan.dual_u.len() != src.len() || plan.dual_v.len() != dst.len() {
        return Err(Error::InvalidArgument("plan does not match the measures".into()));
    }
    for (a, &x) in src.iter().enumerate() {
        for (b, &y) in dst.iter().enumerate() {
            let excess = plan.dual_u[a] + plan.dual_v[b] - l1(x, y);
            if excess > CERT_TOL {
                return Err(Error::DualInfeasible { from: a, to: b, excess });
            }
        }
    }
    Ok((plan.cost - plan.dual_value(p, q)).abs())
}
