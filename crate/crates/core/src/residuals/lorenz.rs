//! Lorenz convection system:
//!   x' = sigma (y - x),
//!   y' = rho x - y - x z,
//!   z' = -beta z + x y.
//!
//! The equations are invariant under (x, y, z) -> (-x, -y, z); the critic
//! preserves that symmetry bitwise, which the solver diagnostics exploit to
//! separate stable from chaotic parameter regimes.

use super::neg_sum_squares;
use crate::diff::{Bundle, Scalar};

/// System parameters; rho = 15 relaxes to a fixed point, 28 is chaotic.
#[derive(Debug, Clone, Copy)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams {
            sigma: 10.0,
            rho: 15.0,
            beta: 8.0 / 3.0,
        }
    }
}

/// Rho value above the Hopf threshold, giving chaotic trajectories.
pub const CHAOTIC_RHO: f64 = 28.0;

/// The paired starting states whose trajectories mirror each other.
pub const MIRRORED_STARTS: [[f64; 3]; 2] = [[0.0, 2.0, 0.0], [0.0, -2.0, 0.0]];

/// The three imbalance rows at one time point.
pub fn lorenz_rows<T: Scalar>(
    x: &Bundle<T>,
    y: &Bundle<T>,
    z: &Bundle<T>,
    p: &LorenzParams,
) -> [T; 3] {
    let c = |v: f64| T::constant(&x.value, v);
    let row_x = x.d1(0).clone() - c(p.sigma) * (y.value.clone() - x.value.clone());
    let row_y = y.d1(0).clone() - c(p.rho) * x.value.clone()
        + y.value.clone()
        + x.value.clone() * z.value.clone();
    let row_z = z.d1(0).clone() + c(p.beta) * z.value.clone() - x.value.clone() * y.value.clone();
    [row_x, row_y, row_z]
}

/// Reward: negated sum of squared rows.
pub fn lorenz<T: Scalar>(x: &Bundle<T>, y: &Bundle<T>, z: &Bundle<T>, p: &LorenzParams) -> T {
    neg_sum_squares(&x.value, &lorenz_rows(x, y, z, p))
}

/// First-order right-hand side, for reference integration.
pub fn lorenz_rhs(_t: f64, s: &[f64], dy: &mut [f64], p: &LorenzParams) {
    dy[0] = p.sigma * (s[1] - s[0]);
    dy[1] = p.rho * s[0] - s[1] - s[0] * s[2];
    dy[2] = -p.beta * s[2] + s[0] * s[1];
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::rk45;

    fn b1(value: f64, d1: f64) -> Bundle<f64> {
        Bundle::new(value, vec![d1], vec![])
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let p = LorenzParams::default();
        let r = lorenz(&b1(0.0, 0.0), &b1(0.0, 0.0), &b1(0.0, 0.0), &p);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn nonzero_fixed_points_score_zero() {
        // x = y = +-sqrt(beta (rho - 1)), z = rho - 1 with zero derivatives.
        let p = LorenzParams::default();
        let z = p.rho - 1.0;
        for s in [1.0, -1.0] {
            let w = s * (p.beta * z).sqrt();
            let r = lorenz(&b1(w, 0.0), &b1(w, 0.0), &b1(z, 0.0), &p);
            assert!(r.abs() < 1e-26, "r = {r}");
        }
    }

    #[test]
    fn residual_is_invariant_under_the_mirror_map() {
        let p = LorenzParams::default();
        for i in 0..100 {
            let q = i as f64 * 0.173 - 8.0;
            let (x, y, z) = (q.sin() * 3.0, q.cos() * 2.0, q * 0.7);
            let (xd, yd, zd) = (q * 1.1, -q * 0.3, q.sin());
            let a = lorenz(&b1(x, xd), &b1(y, yd), &b1(z, zd), &p);
            let m = lorenz(&b1(-x, -xd), &b1(-y, -yd), &b1(z, zd), &p);
            assert_eq!(a, m, "symmetry must hold bitwise");
        }
    }

    #[test]
    fn reference_trajectory_balances_the_equation() {
        let p = LorenzParams::default();
        let h = 1e-4;
        for &t in &[1.0, 2.5, 4.0] {
            let ts = [t - h, t, t + h];
            let tr = rk45(
                |_, s, dy| lorenz_rhs(0.0, s, dy, &p),
                &MIRRORED_STARTS[0],
                0.0,
                4.5,
                1e-10,
                1e-12,
                &ts,
            )
            .unwrap();
            let d = |k: usize| (tr.states[2][k] - tr.states[0][k]) / (2.0 * h);
            let s = &tr.states[1];
            let r = lorenz(&b1(s[0], d(0)), &b1(s[1], d(1)), &b1(s[2], d(2)), &p);
            assert!(r.abs() <= 1e-6, "t = {t}: r = {r}");
        }
    }
}
