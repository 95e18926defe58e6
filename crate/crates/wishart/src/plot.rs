//! Minimal SVG line plots built from already-written CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::RunError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Plots every numeric column against the first one; `None` if the file has
/// fewer than two numeric columns or rows.
pub fn svg_from_csv(path: &Path) -> Result<Option<String>, RunError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for rec in rdr.records() {
        let rec = rec?;
        for (i, field) in rec.iter().enumerate() {
            cols[i].push(field.parse().unwrap_or(f64::NAN));
        }
    }
    let numeric: Vec<usize> = (0..headers.len())
        .filter(|&i| cols[i].iter().any(|v| v.is_finite()))
        .collect();
    if numeric.len() < 2 || cols[numeric[0]].len() < 2 {
        return Ok(None);
    }
    let x = &cols[numeric[0]];
    let ys = &numeric[1..];
    let finite = |v: &&f64| v.is_finite();
    let (x0, x1) = bounds(x.iter().filter(finite));
    let (y0, y1) = bounds(ys.iter().flat_map(|&i| cols[i].iter()).filter(finite));
    let sx = |v: f64| MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, headers[numeric[0]]);
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{}">{x0:.3e}</text>"#, HEIGHT - MARGIN + 15.0);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{x1:.3e}</text>"#, WIDTH - MARGIN, HEIGHT - MARGIN + 15.0);
    let _ = writeln!(svg, r#"<text x="5" y="{}">{y0:.3e}</text>"#, HEIGHT - MARGIN);
    let _ = writeln!(svg, r#"<text x="5" y="{}">{y1:.3e}</text>"#, MARGIN + 4.0);
    for (c, &i) in ys.iter().enumerate() {
        let color = COLORS[c % COLORS.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(&cols[i])
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(&a, &b)| format!("{:.2},{:.2}", sx(a), sy(b)))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            MARGIN + 10.0,
            MARGIN + 16.0 * (c + 1) as f64,
            headers[i]
        );
    }
    svg.push_str("</svg>\n");
    Ok(Some(svg))
}

fn bounds<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Writes `<name>.svg` next to every plottable `<name>.csv` in `dir`.
pub fn plot_directory(dir: &Path) -> Result<(), RunError> {
    let mut csvs: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    csvs.sort();
    for path in csvs {
        if let Some(svg) = svg_from_csv(&path)? {
            fs::write(path.with_extension("svg"), svg)?;
        }
    }
    Ok(())
}
