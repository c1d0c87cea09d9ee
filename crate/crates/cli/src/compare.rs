//! The `compare` subcommand: error metrics between two solution tables.
//!
//! The second file is treated as the reference and is linearly interpolated
//! onto the first file's points: in time for trajectories, and in x within
//! each snapshot then in t across snapshots for fields. Candidate points
//! outside the reference domain are an error, not an extrapolation. Config
//! hashes must match unless --force is given.

use std::path::Path;

use anyhow::{bail, Context, Result};

use crate::table::{fmt_f64, Table};

/// One metric row: scope ("global", "mirror", or a snapshot tag), the value
/// column it measures, the metric name, and the number.
#[derive(Clone, Debug)]
pub struct MetricRow {
    pub section: String,
    pub component: String,
    pub metric: String,
    pub value: f64,
}

/// Full comparison result.
#[derive(Debug)]
pub struct CompareReport {
    pub components: Vec<String>,
    pub rows: Vec<MetricRow>,
    pub hash: String,
}

const FUZZ_REL: f64 = 1e-9;

fn interp_sorted(ts: &[f64], vs: &[f64], t: f64, fuzz: f64) -> Result<f64> {
    let (lo, hi) = (ts[0], ts[ts.len() - 1]);
    if t < lo - fuzz || t > hi + fuzz {
        bail!("point t = {t} lies outside the reference span [{lo}, {hi}]");
    }
    let t = t.clamp(lo, hi);
    let j = match ts.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
        Ok(j) => return Ok(vs[j]),
        Err(j) => j.clamp(1, ts.len() - 1),
    };
    let w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
    Ok(vs[j - 1] + w * (vs[j] - vs[j - 1]))
}

/// Reference data reorganized for interpolation.
enum RefData {
    /// Trajectory: sorted times, value rows aligned with them.
    Curve { ts: Vec<f64>, vals: Vec<Vec<f64>> },
    /// Field: per snapshot (sorted second coord), x-sorted columns.
    Field {
        ts: Vec<f64>,
        snaps: Vec<(Vec<f64>, Vec<Vec<f64>>)>,
    },
}

impl RefData {
    fn build(coords: usize, pts: &[Vec<f64>], vals: &[Vec<f64>]) -> Result<RefData> {
        if coords == 1 {
            let mut order: Vec<usize> = (0..pts.len()).collect();
            order.sort_by(|&a, &b| pts[a][0].partial_cmp(&pts[b][0]).unwrap());
            Ok(RefData::Curve {
                ts: order.iter().map(|&i| pts[i][0]).collect(),
                vals: order.iter().map(|&i| vals[i].clone()).collect(),
            })
        } else {
            // Group rows by the exact second coordinate.
            let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
            for (i, p) in pts.iter().enumerate() {
                match groups.iter_mut().find(|(t, _)| *t == p[1]) {
                    Some((_, rows)) => rows.push(i),
                    None => groups.push((p[1], vec![i])),
                }
            }
            groups.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let ts: Vec<f64> = groups.iter().map(|(t, _)| *t).collect();
            let snaps = groups
                .into_iter()
                .map(|(_, mut rows)| {
                    rows.sort_by(|&a, &b| pts[a][0].partial_cmp(&pts[b][0]).unwrap());
                    let xs: Vec<f64> = rows.iter().map(|&i| pts[i][0]).collect();
                    let vs: Vec<Vec<f64>> = rows.iter().map(|&i| vals[i].clone()).collect();
                    (xs, vs)
                })
                .collect();
            Ok(RefData::Field { ts, snaps })
        }
    }

    /// Interpolated reference values (one per component) at a point.
    fn at(&self, point: &[f64], n_comp: usize) -> Result<Vec<f64>> {
        match self {
            RefData::Curve { ts, vals } => {
                let fuzz = (ts[ts.len() - 1] - ts[0]).abs().max(1.0) * FUZZ_REL;
                (0..n_comp)
                    .map(|k| {
                        let col: Vec<f64> = vals.iter().map(|v| v[k]).collect();
                        interp_sorted(ts, &col, point[0], fuzz)
                    })
                    .collect()
            }
            RefData::Field { ts, snaps } => {
                let (x, t) = (point[0], point[1]);
                let fuzz = (ts[ts.len() - 1] - ts[0]).abs().max(1.0) * FUZZ_REL;
                let (lo, hi) = (ts[0], ts[ts.len() - 1]);
                if t < lo - fuzz || t > hi + fuzz {
                    bail!("point t = {t} lies outside the reference span [{lo}, {hi}]");
                }
                let t = t.clamp(lo, hi);
                let j = match ts.binary_search_by(|p| p.partial_cmp(&t).unwrap()) {
                    Ok(j) => j,
                    Err(j) => j.clamp(1, ts.len() - 1),
                };
                let sample = |j: usize, k: usize| -> Result<f64> {
                    let (xs, vs) = &snaps[j];
                    let xf = (xs[xs.len() - 1] - xs[0]).abs().max(1.0) * FUZZ_REL;
                    let col: Vec<f64> = vs.iter().map(|v| v[k]).collect();
                    interp_sorted(xs, &col, x, xf)
                        .with_context(|| format!("within the snapshot at t = {}", ts[j]))
                };
                if ts[j] == t {
                    return (0..n_comp).map(|k| sample(j, k)).collect();
                }
                let w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
                (0..n_comp)
                    .map(|k| {
                        let a = sample(j - 1, k)?;
                        let b = sample(j, k)?;
                        Ok(a + w * (b - a))
                    })
                    .collect()
            }
        }
    }
}

fn numeric_block(table: &Table, names: &[String]) -> Result<Vec<Vec<f64>>> {
    let cols: Vec<Vec<f64>> = names
        .iter()
        .map(|n| table.column_f64(n))
        .collect::<Result<_>>()?;
    Ok((0..table.rows.len())
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect())
}

fn rms(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Compares candidate against reference, returning metric rows.
pub fn compare_tables(candidate: &Table, reference: &Table, force: bool) -> Result<CompareReport> {
    let ha = candidate.meta("config_hash").unwrap_or("");
    let hb = reference.meta("config_hash").unwrap_or("");
    if ha != hb && !force {
        bail!(
            "config_hash mismatch: candidate {} vs reference {} (pass --force to compare anyway)",
            if ha.is_empty() { "<missing>" } else { ha },
            if hb.is_empty() { "<missing>" } else { hb },
        );
    }
    let coords_a = candidate.meta("coords").context("candidate has no coords metadata")?;
    let coords_b = reference.meta("coords").context("reference has no coords metadata")?;
    if coords_a != coords_b {
        bail!("coordinate layouts differ: {coords_a:?} vs {coords_b:?}");
    }
    let coord_names: Vec<String> = coords_a.split(',').map(|s| s.trim().to_string()).collect();
    let n_coords = coord_names.len();
    if n_coords == 0 || n_coords > 2 {
        bail!("unsupported coordinate layout {coords_a:?}");
    }
    // Value columns: candidate order, intersected with the reference.
    let components: Vec<String> = candidate
        .columns
        .iter()
        .filter(|c| !coord_names.contains(c) && reference.columns.contains(c))
        .cloned()
        .collect();
    if components.is_empty() {
        bail!("the files share no value columns");
    }
    if candidate.rows.is_empty() || reference.rows.is_empty() {
        bail!("cannot compare empty tables");
    }

    let coord_block = |t: &Table| -> Result<Vec<Vec<f64>>> { numeric_block(t, &coord_names) };
    let pts_a = coord_block(candidate)?;
    let pts_b = coord_block(reference)?;
    let vals_a = numeric_block(candidate, &components)?;
    let vals_b = numeric_block(reference, &components)?;
    let refdata = RefData::build(n_coords, &pts_b, &vals_b)?;

    let n_comp = components.len();
    let mut errors: Vec<Vec<f64>> = vec![Vec::with_capacity(pts_a.len()); n_comp];
    let mut interped: Vec<Vec<f64>> = Vec::with_capacity(pts_a.len());
    for (p, v) in pts_a.iter().zip(&vals_a) {
        let r = refdata
            .at(p, n_comp)
            .context("the reference does not cover the candidate domain")?;
        for k in 0..n_comp {
            errors[k].push(v[k] - r[k]);
        }
        interped.push(r);
    }

    let mut rows = Vec::new();
    for (k, name) in components.iter().enumerate() {
        let max_abs = errors[k].iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        rows.push(MetricRow {
            section: "global".into(),
            component: name.clone(),
            metric: "max_abs_err".into(),
            value: max_abs,
        });
        rows.push(MetricRow {
            section: "global".into(),
            component: name.clone(),
            metric: "rms_err".into(),
            value: rms(&errors[k]),
        });
    }

    // Per-snapshot maxima for fields, grouped by the second coordinate.
    if n_coords == 2 {
        let mut tags: Vec<f64> = Vec::new();
        for p in &pts_a {
            if !tags.contains(&p[1]) {
                tags.push(p[1]);
            }
        }
        for tag in tags {
            for (k, name) in components.iter().enumerate() {
                let max_abs = pts_a
                    .iter()
                    .zip(&errors[k])
                    .filter(|(p, _)| p[1] == tag)
                    .fold(0.0_f64, |m, (_, e)| m.max(e.abs()));
                rows.push(MetricRow {
                    section: format!("{}={}", coord_names[1], fmt_f64(tag)),
                    component: name.clone(),
                    metric: "max_abs_err".into(),
                    value: max_abs,
                });
            }
        }
    }

    // Mirrored-trajectory residuals: two convection-cell runs started from
    // opposite sides should satisfy x1 = -x2, y1 = -y2, z1 = z2.
    let both_lorenz = candidate.meta("equation") == Some("lorenz")
        && reference.meta("equation") == Some("lorenz");
    if both_lorenz && n_coords == 1 {
        for (k, name) in components.iter().enumerate() {
            let (metric, sign) = if name == "z" {
                ("rms_mirror_diff", -1.0)
            } else {
                ("rms_mirror_sum", 1.0)
            };
            let resid: Vec<f64> = vals_a
                .iter()
                .zip(&interped)
                .map(|(a, r)| a[k] + sign * r[k])
                .collect();
            rows.push(MetricRow {
                section: "mirror".into(),
                component: name.clone(),
                metric: metric.into(),
                value: rms(&resid),
            });
        }
    }

    Ok(CompareReport {
        components,
        rows,
        hash: ha.to_string(),
    })
}

/// Renders the report as a versioned CSV table.
pub fn report_table(report: &CompareReport, candidate: &Path, reference: &Path) -> Table {
    let mut t = Table::new(
        "compare v1",
        &report.hash,
        &["section", "component", "metric", "value"],
    );
    t.push_meta("candidate", &candidate.display().to_string());
    t.push_meta("reference", &reference.display().to_string());
    for row in &report.rows {
        t.push_row(vec![
            row.section.clone(),
            row.component.clone(),
            row.metric.clone(),
            fmt_f64(row.value),
        ]);
    }
    t
}

/// Human-readable digest: global metrics, mirror rows, a few snapshots.
pub fn summarize(report: &CompareReport) -> String {
    let mut out = String::new();
    for row in report.rows.iter().filter(|r| r.section == "global") {
        out.push_str(&format!(
            "{}: {} = {:.6e}\n",
            row.component, row.metric, row.value
        ));
    }
    for row in report.rows.iter().filter(|r| r.section == "mirror") {
        out.push_str(&format!(
            "mirror {}: {} = {:.6e}\n",
            row.component, row.metric, row.value
        ));
    }
    let snapshot_rows: Vec<&MetricRow> = report
        .rows
        .iter()
        .filter(|r| r.section != "global" && r.section != "mirror")
        .collect();
    if !snapshot_rows.is_empty() {
        let shown = 4 * report.components.len();
        let stride = (snapshot_rows.len() / shown).max(1);
        for row in snapshot_rows.iter().step_by(stride) {
            let t: f64 = row
                .section
                .split('=')
                .nth(1)
                .and_then(|s| s.parse().ok())
                .unwrap_or(f64::NAN);
            out.push_str(&format!(
                "snapshot {}={:.4}: {} {} = {:.6e}\n",
                row.section.split('=').next().unwrap_or("t"),
                t,
                row.component,
                row.metric,
                row.value
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve_table(hash: &str, shift: f64) -> Table {
        let mut t = Table::new("solution v1", hash, &["t", "x", "y"]);
        t.push_meta("equation", "van_der_pol");
        t.push_meta("coords", "t");
        for i in 0..11 {
            let tt = i as f64 * 0.1;
            t.push_row_f64(&[tt, tt.sin() + shift, tt.cos()]);
        }
        t
    }

    #[test]
    fn identical_tables_give_zero_errors() {
        let a = curve_table("h", 0.0);
        let report = compare_tables(&a, &a, false).unwrap();
        assert!(report
            .rows
            .iter()
            .filter(|r| r.section == "global")
            .all(|r| r.value == 0.0));
    }

    #[test]
    fn constant_shift_is_recovered_exactly() {
        let a = curve_table("h", 0.1);
        let b = curve_table("h", 0.0);
        let report = compare_tables(&a, &b, false).unwrap();
        let x_max = report
            .rows
            .iter()
            .find(|r| r.component == "x" && r.metric == "max_abs_err")
            .unwrap();
        assert!((x_max.value - 0.1).abs() < 1e-15, "{}", x_max.value);
        let x_rms = report
            .rows
            .iter()
            .find(|r| r.component == "x" && r.metric == "rms_err")
            .unwrap();
        assert!((x_rms.value - 0.1).abs() < 1e-15);
        // y is untouched.
        let y_max = report
            .rows
            .iter()
            .find(|r| r.component == "y" && r.metric == "max_abs_err")
            .unwrap();
        assert_eq!(y_max.value, 0.0);
    }

    #[test]
    fn hash_mismatch_requires_force() {
        let a = curve_table("aaa", 0.0);
        let b = curve_table("bbb", 0.0);
        let err = format!("{}", compare_tables(&a, &b, false).unwrap_err());
        assert!(err.contains("config_hash mismatch"), "{err}");
        assert!(compare_tables(&a, &b, true).is_ok());
    }

    #[test]
    fn disjoint_domains_are_rejected() {
        let a = curve_table("h", 0.0);
        let mut b = Table::new("solution v1", "h", &["t", "x", "y"]);
        b.push_meta("coords", "t");
        for i in 0..5 {
            let tt = 5.0 + i as f64 * 0.1;
            b.push_row_f64(&[tt, 0.0, 0.0]);
        }
        let err = format!("{:#}", compare_tables(&a, &b, false).unwrap_err());
        assert!(err.contains("does not cover"), "{err}");
    }

    #[test]
    fn reference_is_interpolated_between_rows() {
        // Candidate samples t = 0.05 between reference rows at 0.0 and 0.1;
        // the reference column x = 2t interpolates exactly.
        let mut a = Table::new("solution v1", "h", &["t", "x"]);
        a.push_meta("coords", "t");
        a.push_row_f64(&[0.05, 0.1]);
        let mut b = Table::new("solution v1", "h", &["t", "x"]);
        b.push_meta("coords", "t");
        b.push_row_f64(&[0.0, 0.0]);
        b.push_row_f64(&[0.1, 0.2]);
        let report = compare_tables(&a, &b, false).unwrap();
        assert_eq!(report.rows[0].value, 0.0);
    }

    #[test]
    fn field_tables_interpolate_in_x_then_t() {
        // Reference u = x + 10 t on snapshots t = 0 and 1, x in {0, 1, 2}.
        let mut b = Table::new("solution v1", "h", &["x", "t", "u"]);
        b.push_meta("coords", "x,t");
        for &t in &[0.0, 1.0] {
            for &x in &[0.0, 1.0, 2.0] {
                b.push_row_f64(&[x, t, x + 10.0 * t]);
            }
        }
        let mut a = Table::new("solution v1", "h", &["x", "t", "u"]);
        a.push_meta("coords", "x,t");
        a.push_row_f64(&[0.5, 0.5, 5.5]);
        a.push_row_f64(&[1.5, 1.0, 11.5]);
        let report = compare_tables(&a, &b, false).unwrap();
        let max = report
            .rows
            .iter()
            .find(|r| r.metric == "max_abs_err")
            .unwrap();
        assert!(max.value < 1e-12, "{}", max.value);
    }

    #[test]
    fn mirrored_trajectories_report_symmetry_residuals() {
        let mk = |sx: f64, sz: f64| {
            let mut t = Table::new("solution v1", "h", &["t", "x", "y", "z"]);
            t.push_meta("equation", "lorenz");
            t.push_meta("coords", "t");
            for i in 0..6 {
                let tt = i as f64 * 0.2;
                t.push_row_f64(&[tt, sx * tt.sin(), sx * tt.cos(), sz * (1.0 + tt)]);
            }
            t
        };
        // Perfect mirror: x, y negate, z matches.
        let report = compare_tables(&mk(1.0, 1.0), &mk(-1.0, 1.0), false).unwrap();
        let mirror: Vec<&MetricRow> = report
            .rows
            .iter()
            .filter(|r| r.section == "mirror")
            .collect();
        assert_eq!(mirror.len(), 3);
        assert!(mirror.iter().all(|r| r.value < 1e-15));
        assert!(mirror
            .iter()
            .any(|r| r.component == "z" && r.metric == "rms_mirror_diff"));
        // Broken mirror shows up in the z difference.
        let broken = compare_tables(&mk(1.0, 1.0), &mk(-1.0, 2.0), false).unwrap();
        let z = broken
            .rows
            .iter()
            .find(|r| r.section == "mirror" && r.component == "z")
            .unwrap();
        assert!(z.value > 0.5, "{}", z.value);
    }
}
