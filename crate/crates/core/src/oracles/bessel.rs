//! Modified Bessel functions of the first kind, I_n(x), for x >= 0.
//!
//! Evaluated by Miller's downward recurrence and normalized through the
//! identity e^x = I_0(x) + 2 sum_{k>=1} I_k(x). The primary entry point
//! returns exponentially scaled values e^(-x) I_n(x), which stay O(1) for
//! any argument; the raw variant multiplies the scale back and therefore
//! overflows for large x, which callers may deliberately probe.

use crate::error::{CoreError, Result};

/// e^(-x) I_n(x) for n = 0..=n_max.
pub fn bessel_i_scaled(n_max: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0, "argument must be nonnegative");
    if x == 0.0 {
        let mut out = vec![0.0; n_max + 1];
        out[0] = 1.0;
        return out;
    }
    // Start the recurrence well above both the order and the turning point.
    // Power-of-two start order: calls with different n_max land on the same
    // recurrence path, so shared orders agree bitwise and downstream series
    // truncation comparisons are not polluted by start-dependent roundoff.
    let start = (n_max.max(x.ceil() as usize) + 40).next_power_of_two();
    let mut high = 0.0f64;
    let mut cur = 1e-300;
    let mut out = vec![0.0; n_max + 1];
    // norm accumulates I_0 + 2 sum I_k in the same arbitrary units.
    let mut norm = 0.0f64;
    for k in (0..=start).rev() {
        let low = 2.0 * (k as f64 + 1.0) / x * cur + high;
        high = cur;
        cur = low;
        if k <= n_max {
            out[k] = cur;
        }
        norm += if k == 0 { cur } else { 2.0 * cur };
        if cur > 1e250 {
            // Rescale everything to dodge overflow of the recurrence itself.
            let s = 1e-250;
            cur *= s;
            high *= s;
            norm *= s;
            out.iter_mut().for_each(|v| *v *= s);
        }
    }
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Unscaled I_n(x) for n = 0..=n_max. Fails once e^x leaves f64 range,
/// which documents why the scaled path exists.
pub fn bessel_i_raw(n_max: usize, x: f64) -> Result<Vec<f64>> {
    let scale = x.exp();
    if !scale.is_finite() {
        return Err(CoreError::SeriesUnstable(format!(
            "unscaled Bessel evaluation overflows at x = {x}"
        )));
    }
    Ok(bessel_i_scaled(n_max, x)
        .into_iter()
        .map(|v| v * scale)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series I_n(x) = sum_m (x/2)^(n+2m) / (m! (n+m)!), good for
    /// moderate x; an independent route for validating the recurrence.
    fn series(n: usize, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(n as i32);
        for k in 1..=n {
            term /= k as f64;
        }
        let mut sum = term;
        for m in 1..200 {
            term *= half * half / (m as f64 * (m + n) as f64);
            sum += term;
            if term < sum.abs() * 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn matches_power_series() {
        for &x in &[0.1, 1.0, 4.5, 10.0, 15.0] {
            let got = bessel_i_raw(12, x).unwrap();
            for n in 0..=12 {
                let want = series(n, x);
                let rel = (got[n] - want).abs() / want.abs().max(1e-300);
                assert!(rel < 1e-12, "n={n} x={x}: got {} want {want}", got[n]);
            }
        }
    }

    #[test]
    fn known_values() {
        // I_0(1) and I_1(1) to published precision.
        let v = bessel_i_raw(1, 1.0).unwrap();
        assert!((v[0] - 1.2660658777520084).abs() < 1e-13);
        assert!((v[1] - 0.5651591039924851).abs() < 1e-13);
    }

    #[test]
    fn scaled_values_satisfy_generating_identity() {
        // e^-x (I_0 + 2 sum I_k) = 1; the tail beyond n_max is tiny for
        // n_max well above x.
        for &x in &[0.5, 5.0, 50.0, 200.0] {
            let v = bessel_i_scaled((2.0 * x) as usize + 60, x);
            let total = v[0] + 2.0 * v[1..].iter().sum::<f64>();
            assert!((total - 1.0).abs() < 1e-12, "x={x}: {total}");
        }
    }

    #[test]
    fn scaled_stays_finite_where_raw_overflows() {
        let v = bessel_i_scaled(10, 800.0);
        assert!(v.iter().all(|x| x.is_finite()));
        // Large argument: I_n e^-x ~ 1/sqrt(2 pi x).
        let want = 1.0 / (2.0 * std::f64::consts::PI * 800.0).sqrt();
        assert!((v[0] - want).abs() / want < 1e-3);
        assert!(bessel_i_raw(10, 800.0).is_err());
    }

    #[test]
    fn at_zero_argument() {
        assert_eq!(bessel_i_scaled(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
    }
}
