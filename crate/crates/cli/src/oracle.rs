//! The `oracle` subcommand: classical reference solutions on the same grid
//! and in the same CSV layout as `solve`, so the two files compare row for
//! row.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use rulesolve_core::march::Problem;
use rulesolve_core::oracles::bouc_wen::{bouc_wen_reference, BoucWenParams};
use rulesolve_core::oracles::burgers_fd::burgers_fd;
use rulesolve_core::oracles::cole::{cole_series_grid, BesselMode};
use rulesolve_core::oracles::couette::couette_analytic;
use rulesolve_core::oracles::nls_mol::schrodinger_mol;
use rulesolve_core::oracles::{rk45, FieldSnapshot};
use rulesolve_core::residuals::lorenz::lorenz_rhs;
use rulesolve_core::residuals::van_der_pol::van_der_pol_rhs;

use crate::config::ResolvedRun;
use crate::grid::{linspace, snapshot_times, solution_grid};
use crate::solve::value_columns;
use crate::table::Table;

/// Series terms kept in the analytic convection-diffusion solution.
pub const COLE_TERMS: usize = 50;
/// Spatial resolution of the fallback finite-difference reference.
pub const FD_GRID: usize = 300;
/// Spatial resolution of the wave-envelope method-of-lines reference.
pub const MOL_GRID: usize = 512;

/// Computes the reference solution and writes `oracle.csv` into `out_dir`.
pub fn run_oracle(run: &ResolvedRun, out_dir: &Path) -> Result<PathBuf> {
    let horizon = run.march.dt * run.march.n_steps as f64;
    let (coords, points) = solution_grid(&run.problem, horizon, &run.config.output);
    let values = reference_values(run, horizon, &points)?;
    let names = value_columns(&run.problem);

    let mut cols: Vec<&str> = coords.clone();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    cols.extend(&name_refs);
    let mut t = Table::new("solution v1", &run.hash, &cols);
    t.push_meta("equation", &run.config.equation);
    t.push_meta("coords", &coords.join(","));
    t.push_meta("source", &format!("oracle {}", run.oracle));
    for (p, v) in points.iter().zip(&values) {
        let mut row = p.clone();
        row.extend_from_slice(v);
        t.push_row_f64(&row);
    }
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let path = out_dir.join("oracle.csv");
    t.save(&path)?;
    Ok(path)
}

/// Reference values for every grid point, one row per point.
pub fn reference_values(
    run: &ResolvedRun,
    horizon: f64,
    points: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    match (&run.problem, run.oracle.as_str()) {
        (Problem::VanDerPol(p), "rk45") => {
            let ts: Vec<f64> = points.iter().map(|p| p[0]).collect();
            let p = *p;
            let tr = rk45(
                move |t, y, dy| van_der_pol_rhs(t, y, dy, &p),
                &[p.x0, p.y0],
                0.0,
                horizon.max(1e-12),
                1e-10,
                1e-12,
                &ts,
            )?;
            Ok(tr.states)
        }
        (Problem::Lorenz { params, start }, "rk45") => {
            let ts: Vec<f64> = points.iter().map(|p| p[0]).collect();
            let p = *params;
            let tr = rk45(
                move |t, y, dy| lorenz_rhs(t, y, dy, &p),
                start,
                0.0,
                horizon.max(1e-12),
                1e-10,
                1e-12,
                &ts,
            )?;
            Ok(tr.states)
        }
        (Problem::EquationOfMotion { params, excitation }, "rk45") => {
            let ts: Vec<f64> = points.iter().map(|p| p[0]).collect();
            let bw = BoucWenParams {
                alpha: params.alpha,
                a_gain: params.a_gain,
                beta: params.beta,
                gamma: params.gamma,
                n_exp: params.n_exp,
                c_mat: params.damping_matrix(),
                k1_mat: params.elastic_matrix(),
                k2_mat: params.hysteretic_matrix(),
            };
            let (lo, hi) = excitation.span();
            let accel = |t: f64| excitation.at(t.clamp(lo, hi)).unwrap_or(0.0);
            let tr = bouc_wen_reference(&bw, accel, &ts)?;
            Ok(tr.states)
        }
        (Problem::Burgers(p), mode @ ("cole" | "cole_unscaled")) => {
            let bessel = if mode == "cole" {
                BesselMode::Scaled
            } else {
                BesselMode::Raw
            };
            let nx = run.config.output.space_points;
            let xs: Vec<f64> = points[..nx].iter().map(|p| p[0]).collect();
            let mut out = Vec::with_capacity(points.len());
            for &t in &snapshot_times(horizon, &run.config.output) {
                let row = cole_series_grid(&xs, t, p.nu, COLE_TERMS, bessel)
                    .with_context(|| format!("series reference failed at t = {t}"))?;
                out.extend(row.into_iter().map(|u| vec![u]));
            }
            Ok(out)
        }
        (Problem::Burgers(p), "burgers_fd") => {
            let ts = snapshot_times(horizon, &run.config.output);
            let snaps = burgers_fd(p.nu, FD_GRID, &ts)?;
            let nx = run.config.output.space_points;
            let xs: Vec<f64> = points[..nx].iter().map(|p| p[0]).collect();
            let mut out = Vec::with_capacity(points.len());
            for snap in &snaps {
                out.extend(xs.iter().map(|&x| vec![snap.sample(0, x)]));
            }
            Ok(out)
        }
        (Problem::Schrodinger { .. }, "mol") => {
            let ts = snapshot_times(horizon, &run.config.output);
            let snaps = schrodinger_mol(MOL_GRID, &ts)?;
            let nx = run.config.output.space_points;
            let xs: Vec<f64> = points[..nx].iter().map(|p| p[0]).collect();
            let mut out = Vec::with_capacity(points.len());
            for snap in &snaps {
                for &x in &xs {
                    let (re, im) = sample_periodic(snap, x);
                    out.push(vec![re, im, (re * re + im * im).sqrt()]);
                }
            }
            Ok(out)
        }
        (Problem::Couette(_), "analytic") => points
            .iter()
            .map(|p| {
                let (u, v, pr) = couette_analytic(p[0], p[1])?;
                Ok(vec![u, v, pr])
            })
            .collect(),
        (problem, oracle) => bail!(
            "oracle {oracle:?} does not apply to equation {:?}",
            problem.name()
        ),
    }
}

/// Linear interpolation on the periodic envelope grid, wrapping the gap
/// between the last node and the right edge back to the first node.
fn sample_periodic(snap: &FieldSnapshot, x: f64) -> (f64, f64) {
    let g = &snap.grid;
    let n = g.len();
    let last = g[n - 1];
    if x > last {
        let period = 10.0;
        let left = (g[0] + period) - last;
        let w = ((x - last) / left).clamp(0.0, 1.0);
        let wrap = |v: &[f64]| v[n - 1] + w * (v[0] - v[n - 1]);
        (wrap(&snap.values[0]), wrap(&snap.values[1]))
    } else {
        (snap.sample(0, x), snap.sample(1, x))
    }
}

/// Grid times for an ODE reference, exposed for reuse in tests.
pub fn ode_times(horizon: f64, n: usize) -> Vec<f64> {
    linspace(0.0, horizon, n)
}
