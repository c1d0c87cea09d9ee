//! Steady plane channel flow (Couette): momentum and continuity residuals
//!   u u_x + v u_y + (1/rho) p_x - (mu/rho)(u_xx + u_yy) = 0,
//!   u v_x + v v_y + (1/rho) p_y - (mu/rho)(v_xx + v_yy) = 0,
//!   u_x + v_y = 0,
//! with boundary sets: moving wall u=1, v=0 at y = +0.005; fixed wall
//! u=v=0 at y = -0.005; inlet p=0, v=0 at x=0; outlet p=0 at x=0.5.
//!
//! The exact solution (linear shear, zero pressure) satisfies the momentum
//! balance for any fluid constants, so rho and mu only scale the residual
//! during training; defaults are rho = 1, mu = 1e-4. Wall penalties carry
//! an annealed weight (50 decaying by 0.995 every 15 iterations, floored at
//! 1); inlet and outlet stay at weight 1. Bundles use inputs (x, y):
//! d1(0) = d/dx, d1(1) = d/dy, d2 in the same order.

use super::neg_sum_squares;
use crate::diff::{Bundle, Scalar};
use crate::optim::DecaySchedule;

/// Fluid constants.
#[derive(Debug, Clone, Copy)]
pub struct CouetteParams {
    pub rho: f64,
    pub mu: f64,
}

impl Default for CouetteParams {
    fn default() -> Self {
        CouetteParams { rho: 1.0, mu: 1e-4 }
    }
}

/// Annealing schedule for the wall-condition weight.
pub fn wall_weight_schedule() -> DecaySchedule {
    DecaySchedule::new(50.0, 0.995, 15, 1.0)
}

/// One side of the channel rim, with its penalty rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundarySegment {
    /// y = +0.005: u = 1, v = 0.
    MovingWall,
    /// y = -0.005: u = 0, v = 0.
    FixedWall,
    /// x = 0: p = 0, v = 0.
    Inlet,
    /// x = 0.5: p = 0.
    Outlet,
}

/// The three field imbalance rows at one interior point.
pub fn couette_rows<T: Scalar>(
    u: &Bundle<T>,
    v: &Bundle<T>,
    p: &Bundle<T>,
    par: &CouetteParams,
) -> [T; 3] {
    let c = |q: f64| T::constant(&u.value, q);
    let inv_rho = c(1.0 / par.rho);
    let nu = c(par.mu / par.rho);
    let row_u = u.value.clone() * u.d1(0).clone()
        + v.value.clone() * u.d1(1).clone()
        + inv_rho.clone() * p.d1(0).clone()
        - nu.clone() * (u.d2(0).clone() + u.d2(1).clone());
    let row_v = u.value.clone() * v.d1(0).clone()
        + v.value.clone() * v.d1(1).clone()
        + inv_rho * p.d1(1).clone()
        - nu * (v.d2(0).clone() + v.d2(1).clone());
    let row_c = u.d1(0).clone() + v.d1(1).clone();
    [row_u, row_v, row_c]
}

/// Equation reward at one point: negated sum of the squared rows.
pub fn couette_eq_reward<T: Scalar>(
    u: &Bundle<T>,
    v: &Bundle<T>,
    p: &Bundle<T>,
    par: &CouetteParams,
) -> T {
    neg_sum_squares(&u.value, &couette_rows(u, v, p, par))
}

/// Penalty rows for one rim point of the given segment.
pub fn couette_bc_rows<T: Scalar>(seg: BoundarySegment, u: &T, v: &T, p: &T) -> Vec<T> {
    let one = T::constant(u, 1.0);
    match seg {
        BoundarySegment::MovingWall => vec![u.clone() - one, v.clone()],
        BoundarySegment::FixedWall => vec![u.clone(), v.clone()],
        BoundarySegment::Inlet => vec![p.clone(), v.clone()],
        BoundarySegment::Outlet => vec![p.clone()],
    }
}

/// Batch critic: (weighted r_B summed over segments, r_Eq).
///
/// Each segment batch is a list of (u, v, p) values on that rim; `weights`
/// pairs each segment with its current annealed weight.
pub fn couette_critic(
    eq: &[(Bundle<f64>, Bundle<f64>, Bundle<f64>)],
    segments: &[(BoundarySegment, f64, Vec<(f64, f64, f64)>)],
    par: &CouetteParams,
) -> (f64, f64) {
    let mut r_eq = 0.0;
    for (u, v, p) in eq {
        r_eq += couette_eq_reward(u, v, p, par);
    }
    if !eq.is_empty() {
        r_eq /= eq.len() as f64;
    }
    let mut r_b = 0.0;
    for (seg, weight, points) in segments {
        if points.is_empty() {
            continue;
        }
        let mut seg_sum = 0.0;
        for &(u, v, p) in points {
            for row in couette_bc_rows(*seg, &u, &v, &p) {
                seg_sum -= row * row;
            }
        }
        r_b += weight * seg_sum / points.len() as f64;
    }
    (r_b, r_eq)
}

/// The exact field at a channel point: linear shear, no crossflow, zero
/// pressure.
pub fn exact_field(_x: f64, y: f64) -> (f64, f64, f64) {
    ((y + 0.005) / 0.01, 0.0, 0.0)
}
