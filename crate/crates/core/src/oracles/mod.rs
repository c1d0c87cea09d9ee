//! Independent reference solvers used to validate the learned solutions.
//!
//! Everything here is deliberately built on classical numerics (adaptive
//! Runge-Kutta, conservative finite volumes, series solutions, method of
//! lines, closed forms) and shares no code with the training path, so
//! agreement between the two is meaningful evidence rather than a tautology.

pub mod bessel;
pub mod bouc_wen;
pub mod burgers_fd;
pub mod cole;
pub mod couette;
pub mod nls_mol;
pub mod rk45;

pub use rk45::{rk45, OdeTrajectory};

/// One time slice of a spatial field: grid points, time stamp, and one
/// value row per solution component.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub grid: Vec<f64>,
    pub time: f64,
    pub values: Vec<Vec<f64>>,
}

impl FieldSnapshot {
    /// Linear interpolation of component `k` at position `x`.
    pub fn sample(&self, k: usize, x: f64) -> f64 {
        let g = &self.grid;
        let v = &self.values[k];
        if x <= g[0] {
            return v[0];
        }
        if x >= g[g.len() - 1] {
            return v[v.len() - 1];
        }
        let j = match g.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(j) => return v[j],
            Err(j) => j,
        };
        let w = (x - g[j - 1]) / (g[j] - g[j - 1]);
        v[j - 1] + w * (v[j] - v[j - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_interpolation() {
        let s = FieldSnapshot {
            grid: vec![0.0, 1.0, 2.0],
            time: 0.0,
            values: vec![vec![0.0, 2.0, 4.0]],
        };
        // Halfway between the first two nodes: 0 + 0.5 * (2 - 0) = 1.
        assert_eq!(s.sample(0, 0.5), 1.0);
        assert_eq!(s.sample(0, 1.0), 2.0);
        assert_eq!(s.sample(0, -1.0), 0.0);
        assert_eq!(s.sample(0, 3.0), 4.0);
    }
}
