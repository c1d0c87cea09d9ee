//! The `solve` subcommand: run a march and write every artifact.

use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};

use rulesolve_core::march::{default_policies, march, MarchOutcome, Problem};

use crate::config::ResolvedRun;
use crate::grid::solution_grid;
use crate::svg::{heatmap, line_plot, Series};
use crate::table::{fmt_f64, Table};

/// What happened, for exit-code and console reporting.
pub struct SolveReport {
    pub out_dir: PathBuf,
    pub n_steps: usize,
    pub flagged: Vec<usize>,
    pub total_iterations: u64,
    pub all_converged: bool,
}

/// Residual column name for a monitored condition set.
fn r_col(name: &str) -> String {
    format!("r_{name}")
}

/// Runs the march and writes config, metrics, solution, checkpoints, SVG.
pub fn run_solve(run: &ResolvedRun) -> Result<SolveReport> {
    fs::create_dir_all(&run.out_dir)
        .with_context(|| format!("creating {}", run.out_dir.display()))?;
    let policies = default_policies(
        &run.problem,
        &run.march,
        &run.hidden,
        run.sigma,
        run.march.seed,
    )?;
    let outcome = march(&run.problem, policies, &run.march)?;

    fs::write(run.out_dir.join("config.toml"), &run.toml_text)
        .context("writing config.toml")?;
    write_iteration_metrics(run, &outcome)?;
    write_step_metrics(run, &outcome)?;
    write_run_summary(run, &outcome)?;
    let (coords, names, points, values) = write_solution(run, &outcome)?;
    if run.config.output.svg {
        let svg = solution_svg(run, &coords, &names, &points, &values);
        fs::write(run.out_dir.join("solution.svg"), svg).context("writing solution.svg")?;
    }
    write_checkpoints(run, &outcome)?;

    let flagged: Vec<usize> = outcome
        .records
        .iter()
        .filter(|r| !r.converged)
        .map(|r| r.step)
        .collect();
    Ok(SolveReport {
        out_dir: run.out_dir.clone(),
        n_steps: outcome.records.len(),
        total_iterations: outcome.records.iter().map(|r| r.iterations).sum(),
        all_converged: outcome.all_converged,
        flagged,
    })
}

fn write_iteration_metrics(run: &ResolvedRun, outcome: &MarchOutcome) -> Result<()> {
    let mut cols: Vec<String> = vec!["global_iter".into(), "step".into(), "lr".into()];
    cols.extend(outcome.log.component_names.iter().map(|n| r_col(n)));
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut t = Table::new("iterations v1", &run.hash, &col_refs);
    t.push_meta("equation", &run.config.equation);
    for row in &outcome.log.rows {
        let mut cells = vec![
            row.global_iter.to_string(),
            row.step.to_string(),
            fmt_f64(row.lr),
        ];
        cells.extend(row.components.iter().map(|&v| fmt_f64(v)));
        t.push_row(cells);
    }
    t.save(&run.out_dir.join("metrics_iterations.csv"))
}

fn write_step_metrics(run: &ResolvedRun, outcome: &MarchOutcome) -> Result<()> {
    let mut cols: Vec<String> = [
        "step",
        "t_start",
        "t_end",
        "iterations",
        "global_iter_end",
        "converged",
        "wall_ms",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    cols.extend(outcome.log.component_names.iter().map(|n| r_col(n)));
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut t = Table::new("steps v1", &run.hash, &col_refs);
    t.push_meta("equation", &run.config.equation);
    for r in &outcome.records {
        let mut cells = vec![
            r.step.to_string(),
            fmt_f64(r.t_start),
            fmt_f64(r.t_end),
            r.iterations.to_string(),
            r.global_iter_end.to_string(),
            if r.converged { "1" } else { "0" }.into(),
            fmt_f64(r.wall_ms),
        ];
        cells.extend(r.components.iter().map(|&v| fmt_f64(v)));
        t.push_row(cells);
    }
    t.save(&run.out_dir.join("metrics_steps.csv"))
}

fn write_run_summary(run: &ResolvedRun, outcome: &MarchOutcome) -> Result<()> {
    let mut t = Table::new(
        "run v1",
        &run.hash,
        &[
            "equation",
            "profile",
            "oracle",
            "seed",
            "n_steps",
            "converged_steps",
            "all_converged",
            "total_iterations",
            "config_hash",
        ],
    );
    let converged = outcome.records.iter().filter(|r| r.converged).count();
    let total: u64 = outcome.records.iter().map(|r| r.iterations).sum();
    t.push_row(vec![
        run.config.equation.clone(),
        run.config.profile.clone(),
        run.oracle.clone(),
        run.march.seed.to_string(),
        outcome.records.len().to_string(),
        converged.to_string(),
        if outcome.all_converged { "1" } else { "0" }.into(),
        total.to_string(),
        run.hash.clone(),
    ]);
    t.save(&run.out_dir.join("run_summary.csv"))
}

/// Value column names: solved components, plus the modulus for complex
/// fields so envelope comparisons need no recomputation.
pub fn value_columns(problem: &Problem) -> Vec<String> {
    let mut names: Vec<String> = problem
        .solution_names()
        .iter()
        .map(|s| s.to_string())
        .collect();
    if matches!(problem, Problem::Schrodinger { .. }) {
        names.push("u_abs".into());
    }
    names
}

/// Appends the modulus column for complex fields.
pub fn augment_values(problem: &Problem, values: &mut [Vec<f64>]) {
    if matches!(problem, Problem::Schrodinger { .. }) {
        for row in values.iter_mut() {
            let abs = (row[0] * row[0] + row[1] * row[1]).sqrt();
            row.push(abs);
        }
    }
}

type SolutionData = (Vec<&'static str>, Vec<String>, Vec<Vec<f64>>, Vec<Vec<f64>>);

fn write_solution(run: &ResolvedRun, outcome: &MarchOutcome) -> Result<SolutionData> {
    let horizon = outcome.evaluator.horizon();
    let (coords, points) = solution_grid(&run.problem, horizon, &run.config.output);
    let mut values = outcome.evaluator.evaluate_batch(&points)?;
    augment_values(&run.problem, &mut values);
    let names = value_columns(&run.problem);
    let mut cols: Vec<&str> = coords.clone();
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    cols.extend(&name_refs);
    let mut t = Table::new("solution v1", &run.hash, &cols);
    t.push_meta("equation", &run.config.equation);
    t.push_meta("coords", &coords.join(","));
    t.push_meta("source", "march");
    for (p, v) in points.iter().zip(&values) {
        let mut row = p.clone();
        row.extend_from_slice(v);
        t.push_row_f64(&row);
    }
    t.save(&run.out_dir.join("solution.csv"))?;
    Ok((coords, names, points, values))
}

fn write_checkpoints(run: &ResolvedRun, outcome: &MarchOutcome) -> Result<()> {
    let steps: Vec<usize> = match run.config.output.checkpoints.as_str() {
        "none" => return Ok(()),
        "final" => vec![outcome.evaluator.n_steps()],
        _ => (1..=outcome.evaluator.n_steps()).collect(),
    };
    let last = outcome.evaluator.n_steps();
    for step in steps {
        let policies = outcome.evaluator.step_policies(step)?;
        for (k, policy) in policies.iter().enumerate() {
            let name = if step == last {
                format!("policy_final_{k}.rspn")
            } else {
                format!("policy_step_{step}_{k}.rspn")
            };
            let file = fs::File::create(run.out_dir.join(&name))
                .with_context(|| format!("creating {name}"))?;
            policy.save_checkpoint(BufWriter::new(file))?;
        }
    }
    Ok(())
}

/// Picks `count` roughly evenly spaced indices including both ends.
fn spread(n: usize, count: usize) -> Vec<usize> {
    if n <= count {
        return (0..n).collect();
    }
    (0..count)
        .map(|i| i * (n - 1) / (count - 1))
        .collect()
}

fn solution_svg(
    run: &ResolvedRun,
    coords: &[&str],
    names: &[String],
    points: &[Vec<f64>],
    values: &[Vec<f64>],
) -> String {
    let title = format!("{} ({})", run.config.equation, run.config.profile);
    match &run.problem {
        Problem::VanDerPol(_) | Problem::Lorenz { .. } | Problem::EquationOfMotion { .. } => {
            // Displacement components only for the frame; everything else whole.
            let shown: Vec<usize> = if matches!(run.problem, Problem::EquationOfMotion { .. }) {
                vec![0, 1, 2]
            } else {
                (0..names.len()).collect()
            };
            let series: Vec<Series> = shown
                .into_iter()
                .map(|k| Series {
                    label: names[k].clone(),
                    points: points
                        .iter()
                        .zip(values)
                        .map(|(p, v)| (p[0], v[k]))
                        .collect(),
                })
                .collect();
            line_plot(&title, "t", "solution", false, &series)
        }
        Problem::Burgers(_) | Problem::Schrodinger { .. } => {
            // One curve per selected snapshot; field rows group by time.
            let nx = run.config.output.space_points;
            let nt = run.config.output.time_points;
            let k = if matches!(run.problem, Problem::Burgers(_)) {
                0
            } else {
                names.len() - 1
            };
            let series: Vec<Series> = spread(nt, 5)
                .into_iter()
                .map(|it| {
                    let rows = it * nx..(it + 1) * nx;
                    Series {
                        label: format!("t={:.3}", points[it * nx][1]),
                        points: points[rows.clone()]
                            .iter()
                            .zip(&values[rows])
                            .map(|(p, v)| (p[0], v[k]))
                            .collect(),
                    }
                })
                .collect();
            let y_label = if k == 0 { "u" } else { "|u|" };
            line_plot(&title, coords[0], y_label, false, &series)
        }
        Problem::Couette(_) => {
            let nx = run.config.output.space_points;
            let ny = run.config.output.wall_normal_points;
            let xs: Vec<f64> = points[..nx].iter().map(|p| p[0]).collect();
            let ys: Vec<f64> = (0..ny).map(|iy| points[iy * nx][1]).collect();
            let cells: Vec<Vec<f64>> = (0..ny)
                .map(|iy| (0..nx).map(|ix| values[iy * nx + ix][0]).collect())
                .collect();
            heatmap(&format!("{title}: u"), "x", "y", &xs, &ys, &cells)
        }
    }
}
