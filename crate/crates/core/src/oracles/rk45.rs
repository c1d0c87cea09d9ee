//! Adaptive Dormand-Prince 5(4) integrator with dense output.
//!
//! Classic explicit pair: six stages per step plus FSAL, embedded 4th-order
//! error estimate, and the quartic interpolant for off-step queries. States
//! are reported exactly at the requested evaluation times, so downstream
//! comparisons never re-interpolate.

use crate::error::{CoreError, Result};

/// Solution samples of one integration run.
#[derive(Clone, Debug)]
pub struct OdeTrajectory {
    pub times: Vec<f64>,
    /// `states[k]` is the state vector at `times[k]`.
    pub states: Vec<Vec<f64>>,
}

impl OdeTrajectory {
    /// Component `c` as a plain series.
    pub fn component(&self, c: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[c]).collect()
    }
}

// Butcher tableau (Dormand & Prince 1980).
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// Error weights: 5th-order minus embedded 4th-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the 5th stage polynomial.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// Integrate `dy/dt = f(t, y)` over `[t0, t1]`, sampling the dense output at
/// the sorted times `t_eval` (all must lie inside the span).
pub fn rk45<F>(
    f: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    rtol: f64,
    atol: f64,
    t_eval: &[f64],
) -> Result<OdeTrajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    assert!(t1 > t0, "integration span must be forward");
    for w in t_eval.windows(2) {
        assert!(w[0] <= w[1], "t_eval must be sorted");
    }
    if let (Some(&first), Some(&last)) = (t_eval.first(), t_eval.last()) {
        if first < t0 - 1e-12 || last > t1 + 1e-12 {
            return Err(CoreError::OutOfDomain(format!(
                "t_eval range [{first}, {last}] exceeds integration span [{t0}, {t1}]"
            )));
        }
    }

    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    f(t, &y, &mut k[0]);

    // Initial step from the scale of the first derivative.
    let mut h = {
        let sc = |i: usize| atol + rtol * y[i].abs();
        let d0 = (0..n).map(|i| (y[i] / sc(i)).powi(2)).sum::<f64>().sqrt() / (n as f64).sqrt();
        let d1 = (0..n)
            .map(|i| (k[0][i] / sc(i)).powi(2))
            .sum::<f64>()
            .sqrt()
            / (n as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0.min(t1 - t0)
    };

    let mut out_times = Vec::with_capacity(t_eval.len());
    let mut out_states = Vec::with_capacity(t_eval.len());
    let mut next_eval = 0;
    // Evaluation points that coincide with t0.
    while next_eval < t_eval.len() && t_eval[next_eval] <= t0 {
        out_times.push(t_eval[next_eval]);
        out_states.push(y.clone());
        next_eval += 1;
    }

    let mut rcont = vec![[0.0; 5]; n];
    while t < t1 {
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(CoreError::StepSizeUnderflow { t, h });
        }
        if t + h > t1 {
            h = t1 - t;
        }
        // Stages 2..6 plus the new-point stage 7 (FSAL).
        let stage = |ytmp: &mut [f64], y: &[f64], k: &[Vec<f64>], coefs: &[f64], h: f64| {
            for i in 0..ytmp.len() {
                let mut acc = 0.0;
                for (j, &a) in coefs.iter().enumerate() {
                    acc += a * k[j][i];
                }
                ytmp[i] = y[i] + h * acc;
            }
        };
        stage(&mut ytmp, &y, &k, &A2, h);
        f(t + C[0] * h, &ytmp, &mut k[1]);
        stage(&mut ytmp, &y, &k, &A3, h);
        f(t + C[1] * h, &ytmp, &mut k[2]);
        stage(&mut ytmp, &y, &k, &A4, h);
        f(t + C[2] * h, &ytmp, &mut k[3]);
        stage(&mut ytmp, &y, &k, &A5, h);
        f(t + C[3] * h, &ytmp, &mut k[4]);
        stage(&mut ytmp, &y, &k, &A6, h);
        f(t + C[4] * h, &ytmp, &mut k[5]);
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += B[j] * k[j][i];
            }
            ynew[i] = y[i] + h * acc;
        }
        f(t + h, &ynew, &mut k[6]);

        // Scaled RMS error of the embedded pair.
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
            let r = h * e / sc;
            err += r * r;
        }
        err = (err / n as f64).sqrt();
        if !err.is_finite() {
            return Err(CoreError::StepSizeUnderflow { t, h });
        }

        if err <= 1.0 {
            // Accepted: build the dense interpolant before advancing.
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k[0][i] - dy;
                let mut d_acc = 0.0;
                for j in 0..7 {
                    d_acc += D[j] * k[j][i];
                }
                rcont[i] = [y[i], dy, bspl, dy - h * k[6][i] - bspl, h * d_acc];
            }
            let t_new = t + h;
            while next_eval < t_eval.len() && t_eval[next_eval] <= t_new + 1e-14 {
                let te = t_eval[next_eval].min(t_new);
                let theta = ((te - t) / h).clamp(0.0, 1.0);
                let th1 = 1.0 - theta;
                let mut s = vec![0.0; n];
                for i in 0..n {
                    let r = &rcont[i];
                    s[i] = r[0] + theta * (r[1] + th1 * (r[2] + theta * (r[3] + th1 * r[4])));
                }
                out_times.push(t_eval[next_eval]);
                out_states.push(s);
                next_eval += 1;
            }
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            let k6 = std::mem::take(&mut k[6]);
            k[0] = k6;
            k[6] = vec![0.0; n];
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
            h *= fac;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
        }
    }
    // Any trailing requests at exactly t1.
    while next_eval < t_eval.len() {
        out_times.push(t_eval[next_eval]);
        out_states.push(y.clone());
        next_eval += 1;
    }
    Ok(OdeTrajectory {
        times: out_times,
        states: out_states,
    })
}
