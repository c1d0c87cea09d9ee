//! First-order optimization: Adam and stepped exponential decay schedules.

use crate::error::{CoreError, Result};

/// Adam moment estimates for one parameter vector.
///
/// Moments persist across marching steps by default so the optimizer carries
/// its curvature estimate into the next warm-started slab; `reset` restores
/// the fresh-start behaviour for comparison runs.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl AdamState {
    /// Standard coefficients: beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn with_coefficients(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Zero both moments and the step counter.
    pub fn reset(&mut self) {
        self.m.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
        self.t = 0;
    }

    /// One in-place Adam update with bias correction.
    ///
    /// Rejects non-finite gradient components (reporting the first offending
    /// index) so a diverging run fails loudly instead of poisoning the
    /// parameters.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(CoreError::ShapeMismatch {
                context: "adam step",
                expected: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grad.len()
                },
            });
        }
        if let Some(bad) = grad.iter().position(|g| !g.is_finite()) {
            return Err(CoreError::NonFinite {
                what: "gradient",
                iteration: self.t,
                index: bad,
            });
        }
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / b1t;
            let vhat = self.v[i] / b2t;
            params[i] -= lr * mhat / (vhat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Stepped exponential decay with a floor:
/// `value_at(i) = max(floor, initial * rate^(i / interval))` (integer division).
///
/// Used for learning rates and for the boundary-emphasis weight of the steady
/// flow problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecaySchedule {
    pub initial: f64,
    pub rate: f64,
    pub interval: u64,
    pub floor: f64,
}

impl DecaySchedule {
    pub fn new(initial: f64, rate: f64, interval: u64, floor: f64) -> Self {
        assert!(interval > 0, "decay interval must be positive");
        assert!(rate > 0.0 && rate <= 1.0, "decay rate must be in (0, 1]");
        DecaySchedule {
            initial,
            rate,
            interval,
            floor,
        }
    }

    /// Constant schedule (no decay, no floor below the value).
    pub fn constant(value: f64) -> Self {
        DecaySchedule {
            initial: value,
            rate: 1.0,
            interval: 1,
            floor: value,
        }
    }

    pub fn value_at(&self, iteration: u64) -> f64 {
        let k = (iteration / self.interval) as i32;
        (self.initial * self.rate.powi(k)).max(self.floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_moves_by_lr() {
        // With zero moments, |update| = lr * |g| / (sqrt(g^2) + eps) ~ lr.
        let mut st = AdamState::new(1);
        let mut p = vec![1.0];
        st.step(&mut p, &[0.5], 1e-3).unwrap();
        assert!((p[0] - (1.0 - 1e-3)).abs() < 1e-8);
    }

    #[test]
    fn adam_converges_on_quadratic() {
        // Minimize (p - 3)^2 from p = 0.
        let mut st = AdamState::new(1);
        let mut p = vec![0.0];
        for _ in 0..4000 {
            let g = 2.0 * (p[0] - 3.0);
            st.step(&mut p, &[g], 0.01).unwrap();
        }
        assert!((p[0] - 3.0).abs() < 1e-3, "p = {}", p[0]);
    }

    #[test]
    fn adam_rejects_non_finite_gradient() {
        let mut st = AdamState::new(2);
        let mut p = vec![0.0, 0.0];
        let err = st.step(&mut p, &[0.0, f64::NAN], 1e-3).unwrap_err();
        assert!(err.to_string().contains("component 1"));
        // Parameters are untouched after the rejected step.
        assert_eq!(p, vec![0.0, 0.0]);
    }

    #[test]
    fn adam_reset_clears_moments() {
        let mut st = AdamState::new(1);
        let mut p = vec![0.0];
        st.step(&mut p, &[1.0], 1e-3).unwrap();
        st.reset();
        assert_eq!(st.step_count(), 0);
        let mut q = vec![0.0];
        st.step(&mut q, &[1.0], 1e-3).unwrap();
        let mut fresh = AdamState::new(1);
        let mut r = vec![0.0];
        fresh.step(&mut r, &[1.0], 1e-3).unwrap();
        assert_eq!(q[0].to_bits(), r[0].to_bits());
    }

    #[test]
    fn schedule_piecewise_constant_and_floored() {
        let s = DecaySchedule::new(5e-4, 0.98, 100, 1e-5);
        assert_eq!(s.value_at(0), 5e-4);
        assert_eq!(s.value_at(99), 5e-4);
        // One decay step after the first interval.
        assert!((s.value_at(100) - 4.9e-4).abs() < 1e-19);
        assert_eq!(s.value_at(100), s.value_at(199));
        // Deep into the schedule the floor takes over.
        assert_eq!(s.value_at(10_000_000), 1e-5);
    }

    #[test]
    fn schedule_monotone_nonincreasing() {
        let s = DecaySchedule::new(50.0, 0.995, 15, 1.0);
        let mut prev = f64::INFINITY;
        for i in 0..5000 {
            let v = s.value_at(i);
            assert!(v <= prev + 1e-15);
            assert!(v >= 1.0);
            prev = v;
        }
        // First decay of the boundary weight: 50 * 0.995 = 49.75.
        assert!((s.value_at(15) - 49.75).abs() < 1e-12);
    }
}
