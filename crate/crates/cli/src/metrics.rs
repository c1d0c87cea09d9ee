//! The `metrics` subcommand: post-run training diagnostics from a run
//! directory, including the warm-start speedup ratio.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::svg::{line_plot, Series};
use crate::table::Table;

/// Summary of training effort across the march.
#[derive(Debug)]
pub struct MetricsReport {
    pub out_dir: PathBuf,
    pub first_step_iterations: f64,
    pub median_late_iterations: f64,
    /// Median late-half iterations over step-1 iterations; None for a
    /// single-step run or a zero-iteration first step.
    pub ratio: Option<f64>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Reads metrics_steps.csv and metrics_iterations.csv from `run_dir` and
/// writes derived tables and plots into `out_dir`.
pub fn run_metrics(run_dir: &Path, out_dir: &Path) -> Result<MetricsReport> {
    let steps_path = run_dir.join("metrics_steps.csv");
    let iters_path = run_dir.join("metrics_iterations.csv");
    for p in [&steps_path, &iters_path] {
        if !p.exists() {
            bail!(
                "run directory {} is missing {}",
                run_dir.display(),
                p.file_name().unwrap().to_string_lossy()
            );
        }
    }
    let steps = Table::load(&steps_path)?;
    let iters = Table::load(&iters_path)?;
    let hash = steps.meta("config_hash").unwrap_or("").to_string();
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let step_ids = steps.column_f64("step")?;
    let step_iters = steps.column_f64("iterations")?;
    if step_ids.is_empty() {
        bail!("metrics_steps.csv has no step rows");
    }

    let mut t = Table::new("iterations_vs_step v1", &hash, &["step", "iterations"]);
    for (s, n) in step_ids.iter().zip(&step_iters) {
        t.push_row(vec![format!("{}", *s as u64), format!("{}", *n as u64)]);
    }
    t.save(&out_dir.join("iterations_vs_step.csv"))?;

    // Loss curves: every residual column against the global iteration.
    let global = iters.column_f64("global_iter")?;
    let loss_cols: Vec<&String> = iters
        .columns
        .iter()
        .filter(|c| c.starts_with("r_"))
        .collect();
    let mut cols: Vec<&str> = vec!["global_iter"];
    cols.extend(loss_cols.iter().map(|c| c.as_str()));
    let mut loss_table = Table::new("loss_vs_iteration v1", &hash, &cols);
    let loss_data: Vec<Vec<f64>> = loss_cols
        .iter()
        .map(|c| iters.column_f64(c))
        .collect::<Result<_>>()?;
    for i in 0..global.len() {
        let mut row = vec![global[i]];
        row.extend(loss_data.iter().map(|c| c[i]));
        loss_table.push_row_f64(&row);
    }
    loss_table.save(&out_dir.join("loss_vs_iteration.csv"))?;

    // Warm-start ratio: how much cheaper late slabs are than the first one.
    let first = step_iters[0];
    let n = step_iters.len();
    let (median_late, ratio) = if n < 2 {
        (f64::NAN, None)
    } else {
        let mut late: Vec<f64> = step_iters[n - n / 2..].to_vec();
        late.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let m = median(&late);
        (m, if first > 0.0 { Some(m / first) } else { None })
    };
    let mut ratio_table = Table::new(
        "warm_start_ratio v1",
        &hash,
        &[
            "first_step_iterations",
            "median_late_half_iterations",
            "ratio",
        ],
    );
    ratio_table.push_row(vec![
        format!("{}", first as u64),
        if median_late.is_nan() {
            "undefined".into()
        } else {
            format!("{median_late}")
        },
        match ratio {
            Some(r) => format!("{r}"),
            None => "undefined".into(),
        },
    ]);
    ratio_table.save(&out_dir.join("warm_start_ratio.csv"))?;

    let step_series = [Series {
        label: "iterations".into(),
        points: step_ids.iter().copied().zip(step_iters.iter().copied()).collect(),
    }];
    fs::write(
        out_dir.join("iterations_vs_step.svg"),
        line_plot(
            "training effort per slab",
            "step",
            "iterations",
            false,
            &step_series,
        ),
    )?;
    let loss_series: Vec<Series> = loss_cols
        .iter()
        .zip(&loss_data)
        .map(|(name, col)| Series {
            label: (*name).clone(),
            points: global.iter().copied().zip(col.iter().copied()).collect(),
        })
        .collect();
    fs::write(
        out_dir.join("loss_vs_iteration.svg"),
        line_plot(
            "mean squared residuals",
            "global iteration",
            "log10 loss",
            true,
            &loss_series,
        ),
    )?;

    Ok(MetricsReport {
        out_dir: out_dir.to_path_buf(),
        first_step_iterations: first,
        median_late_iterations: median_late,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_run(dir: &Path, iters: &[u64]) {
        let mut steps = Table::new(
            "steps v1",
            "hash",
            &[
                "step",
                "t_start",
                "t_end",
                "iterations",
                "global_iter_end",
                "converged",
                "wall_ms",
                "r_equation",
            ],
        );
        for (i, &n) in iters.iter().enumerate() {
            steps.push_row(vec![
                format!("{}", i + 1),
                format!("{}", i as f64 * 0.1),
                format!("{}", (i + 1) as f64 * 0.1),
                format!("{n}"),
                "0".into(),
                "1".into(),
                "0.0".into(),
                "1e-5".into(),
            ]);
        }
        steps.save(&dir.join("metrics_steps.csv")).unwrap();
        let mut it = Table::new(
            "iterations v1",
            "hash",
            &["global_iter", "step", "lr", "r_equation"],
        );
        it.push_row_f64(&[0.0, 1.0, 0.01, 0.5]);
        it.push_row_f64(&[1.0, 1.0, 0.01, 0.1]);
        it.save(&dir.join("metrics_iterations.csv")).unwrap();
    }

    #[test]
    fn ratio_uses_the_median_of_the_late_half() {
        let dir = tempfile::tempdir().unwrap();
        // Steps: 100, 50, 9, 11, 10 -> late half = last 2 = [11, 10],
        // median = 10.5, ratio = 0.105.
        write_run(dir.path(), &[100, 50, 9, 11, 10]);
        let report = run_metrics(dir.path(), dir.path()).unwrap();
        assert_eq!(report.first_step_iterations, 100.0);
        assert_eq!(report.median_late_iterations, 10.5);
        assert!((report.ratio.unwrap() - 0.105).abs() < 1e-15);
        assert!(dir.path().join("warm_start_ratio.csv").exists());
        assert!(dir.path().join("loss_vs_iteration.svg").exists());
    }

    #[test]
    fn single_step_ratio_is_undefined() {
        let dir = tempfile::tempdir().unwrap();
        write_run(dir.path(), &[42]);
        let report = run_metrics(dir.path(), dir.path()).unwrap();
        assert!(report.ratio.is_none());
        let text = fs::read_to_string(dir.path().join("warm_start_ratio.csv")).unwrap();
        assert!(text.contains("undefined"), "{text}");
    }

    #[test]
    fn missing_log_is_rejected_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let err = format!("{}", run_metrics(dir.path(), dir.path()).unwrap_err());
        assert!(err.contains("metrics_steps.csv"), "{err}");
    }
}
