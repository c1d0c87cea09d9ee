//! Three-story shear frame with Bouc-Wen hysteresis under ground motion:
//!   M x'' + C x' + alpha K1 x + (1 - alpha) K2 z = -M 1 a_g(t),
//!   z_j' = A y_j' - beta z_j |y_j'| |z_j|^(n-1) - gamma y_j' |z_j|^n,
//! with interstory drifts y_1 = x_1, y_j = x_j - x_(j-1).
//!
//! The critic stacks three equilibrium rows and three evolution rows. The
//! ground acceleration enters as a plain number: it is a known input signal,
//! never a differentiated quantity.

use super::neg_sum_squares;
use crate::diff::{Bundle, Scalar};
use crate::error::{CoreError, Result};

/// Story values and hysteresis shape parameters.
#[derive(Debug, Clone)]
pub struct EomParams {
    /// Post-to-pre yield stiffness ratio.
    pub alpha: f64,
    /// Hysteretic amplitude gain.
    pub a_gain: f64,
    /// Shape parameter on z |y'| |z|^(n-1).
    pub beta: f64,
    /// Shape parameter on y' |z|^n.
    pub gamma: f64,
    /// Hysteresis sharpness exponent.
    pub n_exp: f64,
    /// Story masses in kg.
    pub masses: [f64; 3],
    /// Story damper coefficients in N s/m.
    pub dampers: [f64; 3],
    /// Elastic story stiffnesses in N/m.
    pub stiffness: [f64; 3],
    /// Hysteretic story stiffnesses in N/m.
    pub hyst_stiffness: [f64; 3],
}

impl Default for EomParams {
    fn default() -> Self {
        EomParams {
            alpha: 0.1,
            a_gain: 1.0,
            beta: 0.5,
            gamma: 0.05,
            n_exp: 1.0,
            masses: [1.0; 3],
            dampers: [2.0; 3],
            stiffness: [100.0; 3],
            hyst_stiffness: [100.0; 3],
        }
    }
}

/// Shear-frame tridiagonal assembly from story coefficients.
fn tridiagonal(c: &[f64; 3]) -> [[f64; 3]; 3] {
    [
        [c[0] + c[1], -c[1], 0.0],
        [-c[1], c[1] + c[2], -c[2]],
        [0.0, -c[2], c[2]],
    ]
}

impl EomParams {
    /// Diagonal mass matrix.
    pub fn mass_matrix(&self) -> [[f64; 3]; 3] {
        let m = &self.masses;
        [[m[0], 0.0, 0.0], [0.0, m[1], 0.0], [0.0, 0.0, m[2]]]
    }

    /// Story-damper matrix.
    pub fn damping_matrix(&self) -> [[f64; 3]; 3] {
        tridiagonal(&self.dampers)
    }

    /// Elastic stiffness matrix.
    pub fn elastic_matrix(&self) -> [[f64; 3]; 3] {
        tridiagonal(&self.stiffness)
    }

    /// Hysteretic stiffness matrix, upper bidiagonal in the drifts.
    pub fn hysteretic_matrix(&self) -> [[f64; 3]; 3] {
        let k = &self.hyst_stiffness;
        [[k[0], -k[1], 0.0], [0.0, k[1], -k[2]], [0.0, 0.0, k[2]]]
    }
}

fn matvec_values<T: Scalar>(m: &[[f64; 3]; 3], v: [&T; 3], proto: &T) -> [T; 3] {
    let c = |v: f64| T::constant(proto, v);
    std::array::from_fn(|i| {
        c(m[i][0]) * v[0].clone() + c(m[i][1]) * v[1].clone() + c(m[i][2]) * v[2].clone()
    })
}

/// The six imbalance rows (three equilibrium, three evolution).
///
/// `x` bundles carry first and second time derivatives, `z` bundles first
/// only; `accel` is the ground acceleration already looked up at this time.
pub fn equation_of_motion_rows<T: Scalar>(
    x: &[Bundle<T>],
    z: &[Bundle<T>],
    accel: &T,
    p: &EomParams,
) -> Result<Vec<T>> {
    if x.len() != 3 {
        return Err(CoreError::ShapeMismatch {
            context: "equation of motion displacement bundles",
            expected: 3,
            got: x.len(),
        });
    }
    if z.len() != 3 {
        return Err(CoreError::ShapeMismatch {
            context: "equation of motion hysteresis bundles",
            expected: 3,
            got: z.len(),
        });
    }
    for b in x {
        if b.first.is_empty() || b.second_diag.is_empty() {
            return Err(CoreError::ShapeMismatch {
                context: "displacement bundle derivative orders",
                expected: 2,
                got: usize::from(!b.first.is_empty()),
            });
        }
    }
    if z.iter().any(|b| b.first.is_empty()) {
        return Err(CoreError::ShapeMismatch {
            context: "hysteresis bundle derivative orders",
            expected: 1,
            got: 0,
        });
    }
    let proto = &x[0].value;
    let c = |v: f64| T::constant(proto, v);

    let xv = [&x[0].value, &x[1].value, &x[2].value];
    let xd = [x[0].d1(0), x[1].d1(0), x[2].d1(0)];
    let xdd = [x[0].d2(0), x[1].d2(0), x[2].d2(0)];
    let zv = [&z[0].value, &z[1].value, &z[2].value];

    let m_xdd = matvec_values(&p.mass_matrix(), xdd, proto);
    let c_xd = matvec_values(&p.damping_matrix(), xd, proto);
    let k1_x = matvec_values(&p.elastic_matrix(), xv, proto);
    let k2_z = matvec_values(&p.hysteretic_matrix(), zv, proto);

    // Drift rates: y1' = x1', yj' = xj' - x(j-1)'.
    let ydot = [
        xd[0].clone(),
        xd[1].clone() - xd[0].clone(),
        xd[2].clone() - xd[1].clone(),
    ];

    let mut rows = Vec::with_capacity(6);
    for (i, ((m_a, c_v), (k1_v, k2_v))) in m_xdd
        .into_iter()
        .zip(c_xd)
        .zip(k1_x.into_iter().zip(k2_z))
        .enumerate()
    {
        // Forcing P_i = -m_i a_g moved to the left-hand side.
        rows.push(
            m_a + c_v
                + c(p.alpha) * k1_v
                + c(1.0 - p.alpha) * k2_v
                + c(p.masses[i]) * accel.clone(),
        );
    }
    for i in 0..3 {
        let zd = z[i].d1(0).clone();
        let zn1 = zv[i].abs_powf(p.n_exp - 1.0);
        let zn = zv[i].abs_powf(p.n_exp);
        rows.push(
            zd - c(p.a_gain) * ydot[i].clone()
                + c(p.beta) * zv[i].clone() * ydot[i].abs_v() * zn1
                + c(p.gamma) * ydot[i].clone() * zn,
        );
    }
    Ok(rows)
}

/// Reward: negated sum of the six squared rows.
pub fn equation_of_motion<T: Scalar>(
    x: &[Bundle<T>],
    z: &[Bundle<T>],
    accel: &T,
    p: &EomParams,
) -> Result<T> {
    let rows = equation_of_motion_rows(x, z, accel, p)?;
    Ok(neg_sum_squares(&x[0].value, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::excitation::Excitation;
    use crate::oracles::bouc_wen::{bouc_wen_reference, BoucWenParams};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn b2(value: f64, d1: f64, d2: f64) -> Bundle<f64> {
        Bundle::new(value, vec![d1], vec![d2])
    }

    fn b1(value: f64, d1: f64) -> Bundle<f64> {
        Bundle::new(value, vec![d1], vec![])
    }

    fn zeros() -> (Vec<Bundle<f64>>, Vec<Bundle<f64>>) {
        (vec![b2(0.0, 0.0, 0.0); 3], vec![b1(0.0, 0.0); 3])
    }

    #[test]
    fn matrices_assemble_from_story_values() {
        let p = EomParams::default();
        assert_eq!(
            p.damping_matrix(),
            [[4.0, -2.0, 0.0], [-2.0, 4.0, -2.0], [0.0, -2.0, 2.0]]
        );
        assert_eq!(
            p.elastic_matrix(),
            [
                [200.0, -100.0, 0.0],
                [-100.0, 200.0, -100.0],
                [0.0, -100.0, 100.0]
            ]
        );
        assert_eq!(
            p.hysteretic_matrix(),
            [
                [100.0, -100.0, 0.0],
                [0.0, 100.0, -100.0],
                [0.0, 0.0, 100.0]
            ]
        );
    }

    #[test]
    fn rest_without_forcing_scores_zero() {
        let p = EomParams::default();
        let (x, z) = zeros();
        assert_eq!(equation_of_motion(&x, &z, &0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn unit_acceleration_at_rest() {
        // Each equilibrium row reduces to m_i * 1 = 1; r = -(1+1+1) = -3.
        let p = EomParams::default();
        let (x, z) = zeros();
        assert_eq!(equation_of_motion(&x, &z, &1.0, &p).unwrap(), -3.0);
    }

    #[test]
    fn rejects_malformed_bundles() {
        let p = EomParams::default();
        let (x, z) = zeros();
        assert!(equation_of_motion(&x[..2].to_vec(), &z, &0.0, &p).is_err());
        let first_order_only = vec![b1(0.0, 0.0); 3];
        assert!(equation_of_motion(&first_order_only, &z, &0.0, &p).is_err());
    }

    #[test]
    fn reference_trajectory_balances_the_equations() {
        // Integrate under seeded band-limited shaking, then substitute the
        // dense states with centered differences for x'' and z'. Sample
        // times snap to midpoints of the excitation's linear segments so
        // the stencil never brackets a slope kink of the interpolant.
        let p = EomParams::default();
        let drive = Excitation::synthetic(11, 2.0, 0.01, 0.5, 3.0, 1.0);
        let op = BoucWenParams::default();
        let h = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let seg: usize = rng.gen_range(10..190);
            let t = (seg as f64 + 0.5) * 0.01;
            let ts = [t - h, t, t + h];
            let tr = bouc_wen_reference(&op, |q| drive.at(q).unwrap(), &ts).unwrap();
            let s = &tr.states[1];
            let d = |k: usize| (tr.states[2][k] - tr.states[0][k]) / (2.0 * h);
            let x: Vec<_> = (0..3).map(|i| b2(s[i], s[3 + i], d(3 + i))).collect();
            let z: Vec<_> = (0..3).map(|i| b1(s[6 + i], d(6 + i))).collect();
            let r = equation_of_motion(&x, &z, &drive.at(t).unwrap(), &p).unwrap();
            assert!(r.abs() <= 1e-5, "t = {t}: r = {r}");
        }
    }
}
