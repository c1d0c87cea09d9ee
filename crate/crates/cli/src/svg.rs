//! Minimal static SVG plots: multi-series line charts and a field heatmap.
//! Hand-rolled so artifacts stay dependency-free and deterministic.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 770.0;
const TOP: f64 = 46.0;
const BOTTOM: f64 = 458.0;

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// One labelled curve.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Tick label: plain decimals near unit scale, scientific elsewhere.
fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:.2e}")
    }
}

fn pad_range(lo: f64, hi: f64) -> (f64, f64) {
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.04;
    (lo - pad, hi + pad)
}

fn header(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.0}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>
<text x="{:.0}" y="500" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>
<text x="20" y="{:.0}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 20 {:.0})">{}</text>
"#,
        (LEFT + RIGHT) / 2.0,
        escape(title),
        (LEFT + RIGHT) / 2.0,
        escape(x_label),
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        escape(y_label),
    );
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes_and_ticks(s: &mut String, xr: (f64, f64), yr: (f64, f64), log_y: bool) {
    let _ = write!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{:.1}" height="{:.1}" fill="none" stroke="#333" stroke-width="1"/>
"##,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = xr.0 + f * (xr.1 - xr.0);
        let xp = LEFT + f * (RIGHT - LEFT);
        let _ = write!(
            s,
            r##"<line x1="{xp:.1}" y1="{BOTTOM}" x2="{xp:.1}" y2="{:.1}" stroke="#333"/>
<text x="{xp:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>
"##,
            BOTTOM + 5.0,
            BOTTOM + 20.0,
            fmt_tick(xv)
        );
        let yv = yr.0 + f * (yr.1 - yr.0);
        let yp = BOTTOM - f * (BOTTOM - TOP);
        let label = if log_y {
            format!("1e{}", fmt_tick(yv))
        } else {
            fmt_tick(yv)
        };
        let _ = write!(
            s,
            r##"<line x1="{:.1}" y1="{yp:.1}" x2="{LEFT}" y2="{yp:.1}" stroke="#333"/>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">{label}</text>
"##,
            LEFT - 5.0,
            LEFT - 8.0,
            yp + 4.0
        );
    }
}

/// Multi-series line chart; `log_y` plots log10(y) and drops y <= 0 points.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    log_y: bool,
    series: &[Series],
) -> String {
    let mapped: Vec<(usize, Vec<(f64, f64)>)> = series
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let pts = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite() && (!log_y || *y > 0.0))
                .map(|&(x, y)| (x, if log_y { y.log10() } else { y }))
                .collect();
            (i, pts)
        })
        .collect();
    let all: Vec<(f64, f64)> = mapped.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let mut out = header(title, x_label, y_label);
    if all.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let xr = pad_range(
        all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let yr = pad_range(
        all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    axes_and_ticks(&mut out, xr, yr, log_y);
    let px = |x: f64| LEFT + (x - xr.0) / (xr.1 - xr.0) * (RIGHT - LEFT);
    let py = |y: f64| BOTTOM - (y - yr.0) / (yr.1 - yr.0) * (BOTTOM - TOP);
    for (i, pts) in &mapped {
        if pts.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = write!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>
"#,
            coords.join(" ")
        );
        let ly = TOP + 16.0 + 16.0 * *i as f64;
        let _ = write!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>
"#,
            RIGHT - 150.0,
            RIGHT - 126.0,
            RIGHT - 120.0,
            ly + 4.0,
            escape(&series[*i].label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Five-stop perceptual color ramp for t in [0, 1].
fn ramp(t: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [0.267, 0.005, 0.329],
        [0.229, 0.322, 0.545],
        [0.127, 0.566, 0.551],
        [0.369, 0.789, 0.383],
        [0.993, 0.906, 0.144],
    ];
    let t = t.clamp(0.0, 1.0) * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let mix = |a: f64, b: f64| ((a + (b - a) * f) * 255.0).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(STOPS[i][0], STOPS[i + 1][0]),
        mix(STOPS[i][1], STOPS[i + 1][1]),
        mix(STOPS[i][2], STOPS[i + 1][2])
    )
}

/// Heatmap of `cells[iy][ix]` over grid points `xs` x `ys`.
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    cells: &[Vec<f64>],
) -> String {
    let mut out = header(title, x_label, y_label);
    let finite: Vec<f64> = cells
        .iter()
        .flatten()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    if xs.len() < 2 || ys.len() < 2 || finite.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let vmin = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let vmax = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if vmax > vmin { vmax - vmin } else { 1.0 };
    let xr = (xs[0], xs[xs.len() - 1]);
    let yr = (ys[0], ys[ys.len() - 1]);
    // Reserve room for the colorbar on the right.
    let right = RIGHT - 60.0;
    let px = |x: f64| LEFT + (x - xr.0) / (xr.1 - xr.0) * (right - LEFT);
    let py = |y: f64| BOTTOM - (y - yr.0) / (yr.1 - yr.0) * (BOTTOM - TOP);
    // Cell edges at midpoints between grid values.
    let edges = |g: &[f64]| -> Vec<f64> {
        let mut e = Vec::with_capacity(g.len() + 1);
        e.push(g[0]);
        for w in g.windows(2) {
            e.push(0.5 * (w[0] + w[1]));
        }
        e.push(g[g.len() - 1]);
        e
    };
    let xe = edges(xs);
    let ye = edges(ys);
    for (iy, row) in cells.iter().enumerate() {
        for (ix, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let (x0, x1) = (px(xe[ix]), px(xe[ix + 1]));
            let (y1, y0) = (py(ye[iy]), py(ye[iy + 1]));
            let _ = write!(
                out,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>
"#,
                x1 - x0,
                y1 - y0,
                ramp((v - vmin) / span)
            );
        }
    }
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xp = LEFT + f * (right - LEFT);
        let yp = BOTTOM - f * (BOTTOM - TOP);
        let _ = write!(
            out,
            r#"<text x="{xp:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>
"#,
            BOTTOM + 20.0,
            fmt_tick(xr.0 + f * (xr.1 - xr.0)),
            LEFT - 8.0,
            yp + 4.0,
            fmt_tick(yr.0 + f * (yr.1 - yr.0))
        );
    }
    // Colorbar.
    for i in 0..64 {
        let f = i as f64 / 63.0;
        let y0 = BOTTOM - (f64::from(i) + 1.0) / 64.0 * (BOTTOM - TOP);
        let _ = write!(
            out,
            r#"<rect x="{:.1}" y="{y0:.2}" width="16" height="{:.2}" fill="{}"/>
"#,
            right + 16.0,
            (BOTTOM - TOP) / 64.0 + 0.5,
            ramp(f)
        );
    }
    let _ = write!(
        out,
        r#"<text x="{0:.1}" y="{1:.1}" font-family="sans-serif" font-size="11">{2}</text>
<text x="{0:.1}" y="{3:.1}" font-family="sans-serif" font-size="11">{4}</text>
"#,
        right + 36.0,
        BOTTOM,
        fmt_tick(vmin),
        TOP + 10.0,
        fmt_tick(vmax)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_emits_one_polyline_per_series() {
        let s = vec![
            Series {
                label: "x".into(),
                points: vec![(0.0, 1.0), (1.0, 2.0)],
            },
            Series {
                label: "y".into(),
                points: vec![(0.0, -1.0), (1.0, 0.5)],
            },
        ];
        let svg = line_plot("test", "t", "value", false, &s);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn log_plot_drops_nonpositive_points() {
        let s = vec![Series {
            label: "loss".into(),
            points: vec![(0.0, 1.0), (1.0, 0.0), (2.0, 1e-3)],
        }];
        let svg = line_plot("test", "iter", "loss", true, &s);
        // Two survivors -> a polyline with exactly two coordinate pairs.
        let seg = svg.split("points=\"").nth(1).unwrap();
        let coords = seg.split('"').next().unwrap();
        assert_eq!(coords.split(' ').count(), 2);
    }

    #[test]
    fn heatmap_covers_the_grid() {
        let xs = vec![0.0, 0.5, 1.0];
        let ys = vec![0.0, 1.0];
        let cells = vec![vec![0.0, 0.5, 1.0], vec![1.0, 0.5, 0.0]];
        let svg = heatmap("field", "x", "y", &xs, &ys, &cells);
        // 6 data cells + 64 colorbar strips.
        assert_eq!(svg.matches("<rect").count(), 6 + 64 + 1);
    }

    #[test]
    fn ramp_ends_are_the_stop_colors() {
        // 0.267*255 = 68.085 -> 0x44, 0.005*255 = 1.275 -> 0x01,
        // 0.329*255 = 83.895 -> 0x54; top stop likewise.
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
    }
}
