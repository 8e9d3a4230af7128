//! Static SVG curve plots: one mean polyline per series, a shaded one
//! standard deviation band where the spread is nonzero, labeled axes, and
//! a legend. Self-contained markup with no external assets.

use crate::HarnessError;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 58.0;
const PALETTE: [&str; 6] = [
    "#1b6ca8", "#d1495b", "#3a7d44", "#8d6a9f", "#c77d2e", "#4a4a4a",
];

fn esc(s: &str) -> String {
    s.chars()
        .map(|c| match c {
            '&' => "&amp;".to_string(),
            '<' => "&lt;".to_string(),
            '>' => "&gt;".to_string(),
            '"' => "&quot;".to_string(),
            '\'' => "&apos;".to_string(),
            other => other.to_string(),
        })
        .collect()
}

fn fmt_tick(v: f64) -> String {
    if v.abs() < 1e-12 {
        return "0".to_string();
    }
    if v.abs() >= 1000.0 {
        return format!("{v:.0}");
    }
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn validate(series: &[Series]) -> Result<(), HarnessError> {
    if series.is_empty() {
        return Err(HarnessError::Plot("no series to plot".into()));
    }
    for s in series {
        if s.xs.is_empty() {
            return Err(HarnessError::Plot(format!("series `{}` has no points", s.label)));
        }
        if s.xs.len() != s.mean.len() || s.xs.len() != s.std.len() {
            return Err(HarnessError::Plot(format!(
                "series `{}` has mismatched lengths",
                s.label
            )));
        }
        for (&x, (&m, &sd)) in s.xs.iter().zip(s.mean.iter().zip(s.std.iter())) {
            if !x.is_finite() || !m.is_finite() || !sd.is_finite() {
                return Err(HarnessError::Plot(format!(
                    "series `{}` has non-finite values",
                    s.label
                )));
            }
        }
    }
    Ok(())
}

/// Renders the complete SVG document.
pub fn render_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<String, HarnessError> {
    validate(series)?;

    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for s in series {
        for i in 0..s.xs.len() {
            xmin = xmin.min(s.xs[i]);
            xmax = xmax.max(s.xs[i]);
            ymin = ymin.min(s.mean[i] - s.std[i]);
            ymax = ymax.max(s.mean[i] + s.std[i]);
        }
    }
    if xmax - xmin < 1e-12 {
        let pad = xmin.abs().max(1.0);
        xmin -= pad;
        xmax += pad;
    }
    if ymax - ymin < 1e-12 {
        let pad = ymin.abs().max(1.0);
        ymin -= pad;
        ymax += pad;
    }
    let ypad = (ymax - ymin) * 0.05;
    ymin -= ypad;
    ymax += ypad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - xmin) / (xmax - xmin) * plot_w;
    let py = |y: f64| HEIGHT - MARGIN_BOTTOM - (y - ymin) / (ymax - ymin) * plot_h;

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(w, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    );

    // Axes with 5 ticks each.
    for k in 0..5 {
        let t = k as f64 / 4.0;
        let xv = xmin + t * (xmax - xmin);
        let yv = ymin + t * (ymax - ymin);
        let xp = px(xv);
        let yp = py(yv);
        let _ = writeln!(
            w,
            r##"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_TOP,
            HEIGHT - MARGIN_BOTTOM
        );
        let _ = writeln!(
            w,
            r##"<line x1="{:.2}" y1="{yp:.2}" x2="{:.2}" y2="{yp:.2}" stroke="#dddddd" stroke-width="1"/>"##,
            MARGIN_LEFT,
            WIDTH - MARGIN_RIGHT
        );
        let _ = writeln!(
            w,
            r#"<text x="{xp:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            HEIGHT - MARGIN_BOTTOM + 16.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            yp + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        w,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333" stroke-width="1"/>"##,
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM,
        WIDTH - MARGIN_RIGHT,
        HEIGHT - MARGIN_BOTTOM
    );
    let _ = writeln!(
        w,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333" stroke-width="1"/>"##,
        MARGIN_LEFT,
        MARGIN_TOP,
        MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0,
        esc(x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        esc(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.std.iter().any(|&sd| sd > 1e-12) {
            let mut pts = String::new();
            for j in 0..s.xs.len() {
                let _ = write!(pts, "{:.2},{:.2} ", px(s.xs[j]), py(s.mean[j] + s.std[j]));
            }
            for j in (0..s.xs.len()).rev() {
                let _ = write!(pts, "{:.2},{:.2} ", px(s.xs[j]), py(s.mean[j] - s.std[j]));
            }
            let _ = writeln!(
                w,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
                pts.trim_end()
            );
        }
        let mut pts = String::new();
        for j in 0..s.xs.len() {
            let _ = write!(pts, "{:.2},{:.2} ", px(s.xs[j]), py(s.mean[j]));
        }
        let _ = writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.8"/>"#,
            pts.trim_end()
        );
    }

    // Legend, top-right inside the plot area.
    let lx = WIDTH - MARGIN_RIGHT - 168.0;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = MARGIN_TOP + 10.0 + i as f64 * 18.0;
        let _ = writeln!(
            w,
            r#"<rect x="{lx:.2}" y="{:.2}" width="14" height="10" fill="{color}"/>"#,
            ly - 9.0
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{ly:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 20.0,
            esc(&s.label)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(out)
}

/// Renders and writes the plot to `path`.
pub fn write_svg(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<(), HarnessError> {
    let doc = render_svg(title, x_label, y_label, series)?;
    std::fs::write(path, doc)?;
    Ok(())
}
