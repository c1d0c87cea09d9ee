//! Evaluation grids shared by `solve` and `oracle` so their CSV files line
//! up row for row.

use rulesolve_core::march::Problem;
use rulesolve_core::residuals::schrodinger::HALF_WIDTH;

use crate::config::OutputSection;

/// Channel dimensions of the steady flow problem (plate length, half gap).
pub const CHANNEL_X: (f64, f64) = (0.0, 0.5);
pub const CHANNEL_Y: (f64, f64) = (-0.005, 0.005);

/// `n` evenly spaced values including both endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least 2 points");
    let h = (hi - lo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
    out[n - 1] = hi;
    out
}

/// Coordinate column names and evaluation points for a problem.
/// Field problems iterate the second coordinate outermost, so rows group
/// into snapshots.
pub fn solution_grid(
    problem: &Problem,
    horizon: f64,
    out: &OutputSection,
) -> (Vec<&'static str>, Vec<Vec<f64>>) {
    match problem {
        Problem::VanDerPol(_) | Problem::Lorenz { .. } | Problem::EquationOfMotion { .. } => {
            let ts = linspace(0.0, horizon, out.time_points);
            (vec!["t"], ts.into_iter().map(|t| vec![t]).collect())
        }
        Problem::Burgers(_) | Problem::Schrodinger { .. } => {
            let half = if matches!(problem, Problem::Burgers(_)) {
                1.0
            } else {
                HALF_WIDTH
            };
            let xs = linspace(-half, half, out.space_points);
            let ts = linspace(0.0, horizon, out.time_points);
            let mut points = Vec::with_capacity(xs.len() * ts.len());
            for &t in &ts {
                for &x in &xs {
                    points.push(vec![x, t]);
                }
            }
            (vec!["x", "t"], points)
        }
        Problem::Couette(_) => {
            let xs = linspace(CHANNEL_X.0, CHANNEL_X.1, out.space_points);
            let ys = linspace(CHANNEL_Y.0, CHANNEL_Y.1, out.wall_normal_points);
            let mut points = Vec::with_capacity(xs.len() * ys.len());
            for &y in &ys {
                for &x in &xs {
                    points.push(vec![x, y]);
                }
            }
            (vec!["x", "y"], points)
        }
    }
}

/// Snapshot times of a field grid, i.e. the distinct second coordinates in
/// iteration order.
pub fn snapshot_times(horizon: f64, out: &OutputSection) -> Vec<f64> {
    linspace(0.0, horizon, out.time_points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rulesolve_core::residuals::burgers::BurgersParams;

    fn output() -> OutputSection {
        OutputSection {
            directory: "runs/test".into(),
            time_points: 3,
            space_points: 5,
            wall_normal_points: 4,
            svg: false,
            checkpoints: "none".into(),
        }
    }

    #[test]
    fn linspace_hits_both_endpoints_exactly() {
        let g = linspace(-1.0, 1.0, 5);
        assert_eq!(g, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linspace(0.0, 0.3, 4).last().copied(), Some(0.3));
    }

    #[test]
    fn field_grid_groups_rows_by_snapshot() {
        let (coords, pts) = solution_grid(&Problem::Burgers(BurgersParams::default()), 1.0, &output());
        assert_eq!(coords, vec!["x", "t"]);
        assert_eq!(pts.len(), 15);
        // First snapshot is all t = 0, spanning x in [-1, 1].
        assert!(pts[..5].iter().all(|p| p[1] == 0.0));
        assert_eq!(pts[0][0], -1.0);
        assert_eq!(pts[4][0], 1.0);
        assert_eq!(pts[5][1], 0.5);
    }
}
