//! Reference integrator for a three-story shear frame with Bouc-Wen
//! hysteretic restoring forces under ground acceleration.
//!
//! Equations of motion (x = floor displacements relative to the ground,
//! z = hysteretic displacements per story, y = interstory drifts):
//!   M x'' + C x' + alpha K1 x + (1 - alpha) K2 z = -M 1 a_g(t),
//!   z' = A y' - beta z |y'| |z|^(n-1) - gamma y' |z|^n,
//! flattened to a 9-state first-order system (x, x', z) and integrated
//! with rk45. Matrices are written out literally from the story values
//! m = 1, c = 2, k = 100 so this file stays independent of the residual
//! definitions it is used to check.

use super::rk45::{rk45, OdeTrajectory};
use crate::error::Result;

/// Rayleigh-free structural data and hysteresis shape parameters.
#[derive(Debug, Clone)]
pub struct BoucWenParams {
    /// Post-to-pre yield stiffness ratio.
    pub alpha: f64,
    /// Hysteretic amplitude gain.
    pub a_gain: f64,
    /// Hysteresis shape parameter multiplying z |y'| |z|^(n-1).
    pub beta: f64,
    /// Hysteresis shape parameter multiplying y' |z|^n.
    pub gamma: f64,
    /// Hysteresis sharpness exponent.
    pub n_exp: f64,
    /// Damping matrix (tridiagonal, story dampers c = 2).
    pub c_mat: [[f64; 3]; 3],
    /// Elastic stiffness matrix (tridiagonal, story stiffness k = 100).
    pub k1_mat: [[f64; 3]; 3],
    /// Hysteretic stiffness matrix (upper bidiagonal in the drifts).
    pub k2_mat: [[f64; 3]; 3],
}

impl Default for BoucWenParams {
    fn default() -> Self {
        BoucWenParams {
            alpha: 0.1,
            a_gain: 1.0,
            beta: 0.5,
            gamma: 0.05,
            n_exp: 1.0,
            c_mat: [[4.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]],
            k1_mat: [
                [200.0, -100.0, 0.0],
                [-100.0, 200.0, -100.0],
                [0.0, -100.0, 100.0],
            ],
            k2_mat: [
                [100.0, -100.0, 0.0],
                [0.0, 100.0, -100.0],
                [0.0, 0.0, 100.0],
            ],
        }
    }
}

fn matvec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

/// Time derivative of the 9-state vector (x1..x3, v1..v3, z1..z3).
pub fn bouc_wen_rhs(p: &BoucWenParams, t: f64, y: &[f64], dy: &mut [f64], accel: f64) {
    let _ = t;
    let x = [y[0], y[1], y[2]];
    let v = [y[3], y[4], y[5]];
    let z = [y[6], y[7], y[8]];
    let cv = matvec(&p.c_mat, v);
    let k1x = matvec(&p.k1_mat, x);
    let k2z = matvec(&p.k2_mat, z);
    // Interstory drift rates: y1' = v1, yj' = vj - v(j-1).
    let ydot = [v[0], v[1] - v[0], v[2] - v[1]];
    for i in 0..3 {
        dy[i] = v[i];
        dy[3 + i] = -accel - cv[i] - p.alpha * k1x[i] - (1.0 - p.alpha) * k2z[i];
        let zi = z[i];
        let zn1 = zi.abs().powf(p.n_exp - 1.0);
        dy[6 + i] = p.a_gain * ydot[i]
            - p.beta * zi * ydot[i].abs() * zn1
            - p.gamma * ydot[i] * zi.abs() * zn1;
    }
}

/// Integrates the frame from rest under the given ground acceleration.
pub fn bouc_wen_reference(
    p: &BoucWenParams,
    accel: impl Fn(f64) -> f64,
    t_eval: &[f64],
) -> Result<OdeTrajectory> {
    let t_end = t_eval.last().copied().unwrap_or(0.0).max(1e-12);
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| bouc_wen_rhs(p, t, y, dy, accel(t));
    rk45(rhs, &[0.0; 9], 0.0, t_end, 1e-9, 1e-11, t_eval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rest_stays_at_rest_without_forcing() {
        let p = BoucWenParams::default();
        let tr = bouc_wen_reference(&p, |_| 0.0, &[1.0, 2.0]).unwrap();
        for s in &tr.states {
            assert!(s.iter().all(|&q| q.abs() < 1e-12));
        }
    }

    #[test]
    fn initial_response_matches_constant_forcing() {
        // From rest with a_g = 1 each dv/dt = -1 at leading order, so
        // v ~ -t and x ~ -t^2/2. The only O(t^2) velocity correction is on
        // floor 1: damping row sums are (2, 0, 0), giving dv1/dt = -1 + 2t
        // and v1 = -t + t^2. At t = 1e-3: v1 = -9.99e-4, v2 = v3 = -1e-3,
        // x = -5e-7 each, remaining corrections O(t^3) and below.
        let p = BoucWenParams::default();
        let tr = bouc_wen_reference(&p, |_| 1.0, &[1e-3]).unwrap();
        let s = &tr.states[0];
        // Floor 1 also carries the largest O(t^3) term, 46 t^3 / 3 ~ 1.5e-8.
        assert!((s[3] + 1e-3 - 1e-6).abs() < 5e-8, "v1 = {}", s[3]);
        assert!((s[4] + 1e-3).abs() < 1e-8, "v2 = {}", s[4]);
        assert!((s[5] + 1e-3).abs() < 1e-8, "v3 = {}", s[5]);
        for i in 0..3 {
            assert!((s[i] + 5e-7).abs() < 1e-9, "x{i} = {}", s[i]);
        }
    }

    #[test]
    fn motion_decays_after_the_forcing_stops() {
        let p = BoucWenParams::default();
        let forcing = |t: f64| {
            if t <= 1.0 {
                (2.0 * std::f64::consts::PI * t).sin()
            } else {
                0.0
            }
        };
        // Viscous story damping drains the free response slowly (lowest
        // mode decays at roughly 0.1/s), so compare widely spaced times.
        let tr = bouc_wen_reference(&p, forcing, &[2.0, 30.0]).unwrap();
        let norm = |s: &Vec<f64>| s[..6].iter().map(|q| q * q).sum::<f64>().sqrt();
        let early = norm(&tr.states[0]);
        let late = norm(&tr.states[1]);
        assert!(early > 1e-4, "forcing produced no motion: {early}");
        assert!(late < 0.1 * early, "no decay: {early} -> {late}");
    }
}
