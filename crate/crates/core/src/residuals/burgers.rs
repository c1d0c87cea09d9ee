//! Viscous Burgers' equation u_t + u u_x = nu u_xx on x in [-1, 1] with
//! u(x, 0) = -sin(pi x) and homogeneous Dirichlet walls.
//!
//! Both conditions are enforced identically by the trial wrapper
//! u = t (x + 1)(x - 1) f(x, t) - sin(pi x), so the critic consists of the
//! equation row alone. Bundles use inputs (x, t): d1(0) = d/dx,
//! d1(1) = d/dt, d2(0) = d^2/dx^2.

use super::neg_sum_squares;
use crate::diff::{Bundle, Scalar};

/// Diffusion coefficient; 0.1 resolves smoothly, smaller values steepen
/// the standing front at x = 0.
#[derive(Debug, Clone, Copy)]
pub struct BurgersParams {
    pub nu: f64,
}

impl Default for BurgersParams {
    fn default() -> Self {
        BurgersParams { nu: 0.1 }
    }
}

/// The single imbalance row u_t + u u_x - nu u_xx at one point.
pub fn burgers_row<T: Scalar>(u: &Bundle<T>, p: &BurgersParams) -> T {
    u.d1(1).clone() + u.value.clone() * u.d1(0).clone()
        - T::constant(&u.value, p.nu) * u.d2(0).clone()
}

/// Reward: negated squared row.
pub fn burgers<T: Scalar>(u: &Bundle<T>, p: &BurgersParams) -> T {
    neg_sum_squares(&u.value, &[burgers_row(u, p)])
}

/// Hard-constraint wrapper u = t (x + 1)(x - 1) f - sin(pi x).
pub fn burgers_trial<T: Scalar>(x: &T, t: &T, f: &T) -> T {
    let c = |v: f64| T::constant(x, v);
    t.clone() * (x.clone() + c(1.0)) * (x.clone() - c(1.0)) * f.clone()
        - (c(std::f64::consts::PI) * x.clone()).sin_v()
}
