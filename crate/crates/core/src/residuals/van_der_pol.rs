//! Forced Van der Pol oscillator in first-order form:
//!   x' = y,
//!   y' = alpha (1 - x^2) y - x + beta cos(omega t).
//!
//! The critic negates the squared imbalance of both rows. The oscillator
//! parameters and the starting state are conventional defaults, exposed for
//! override since only alpha, beta > 0 is prescribed.

use super::neg_sum_squares;
use crate::diff::{Bundle, Scalar};

/// Oscillator parameters and initial state.
#[derive(Debug, Clone, Copy)]
pub struct VdpParams {
    pub alpha: f64,
    pub beta: f64,
    pub omega: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Default for VdpParams {
    fn default() -> Self {
        VdpParams {
            alpha: 1.0,
            beta: 1.0,
            omega: 1.0,
            x0: 1.0,
            y0: 0.0,
        }
    }
}

/// The two imbalance rows at one time point.
pub fn van_der_pol_rows<T: Scalar>(t: &T, x: &Bundle<T>, y: &Bundle<T>, p: &VdpParams) -> [T; 2] {
    let c = |v: f64| T::constant(t, v);
    let forcing = c(p.beta) * (c(p.omega) * t.clone()).cos_v();
    let row_x = x.d1(0).clone() - y.value.clone();
    let damping = c(p.alpha) * (c(1.0) - x.value.sq()) * y.value.clone();
    let row_y = y.d1(0).clone() - damping + x.value.clone() - forcing;
    [row_x, row_y]
}

/// Reward: negated sum of squared rows.
pub fn van_der_pol<T: Scalar>(t: &T, x: &Bundle<T>, y: &Bundle<T>, p: &VdpParams) -> T {
    neg_sum_squares(t, &van_der_pol_rows(t, x, y, p))
}

/// First-order right-hand side, for reference integration.
pub fn van_der_pol_rhs(t: f64, state: &[f64], dy: &mut [f64], p: &VdpParams) {
    let (x, y) = (state[0], state[1]);
    dy[0] = y;
    dy[1] = p.alpha * (1.0 - x * x) * y - x + p.beta * (p.omega * t).cos();
}
