//! Static SVG scatterplot matrix of embedding coordinates.

use std::fmt::Write;

use nalgebra::DMatrix;

const PANEL: f64 = 150.0;
const MARGIN: f64 = 24.0;
const PAD: f64 = 8.0;
const UNIFORM_FILL: &str = "#4c72b0";

/// Average-rank quantiles in `[0, 1]`.
fn quantiles(scores: &[f64]) -> Vec<f64> {
    let n = scores.len();
    if n < 2 {
        return vec![0.5; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut q = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            q[k] = rank / (n - 1) as f64;
        }
        i = j + 1;
    }
    q
}

/// Light yellow for low score quantiles to dark red for high ones.
fn shade(q: f64) -> String {
    let lo = [255.0, 237.0, 160.0];
    let hi = [128.0, 0.0, 38.0];
    let c: Vec<u8> = lo.iter().zip(hi).map(|(a, b)| (a + (b - a) * q).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn scale(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 1.0, lo + 1.0)
    }
}

/// Renders the first `dims` columns of `coords` as a `dims x dims` panel
/// grid. Points are shaded by score quantile when `scores` is given and drawn
/// as triangles when labeled as outliers.
pub fn scatterplot_matrix(
    coords: &DMatrix<f64>,
    dims: usize,
    scores: Option<&[f64]>,
    labels: Option<&[bool]>,
) -> Result<String, String> {
    let n = coords.nrows();
    if dims == 0 || dims > coords.ncols() {
        return Err(format!("cannot plot {dims} of {} dimensions", coords.ncols()));
    }
    if let Some(s) = scores {
        if s.len() != n {
            return Err(format!("{} scores for {n} embedded points", s.len()));
        }
    }
    if let Some(l) = labels {
        if l.len() != n {
            return Err(format!("{} labels for {n} embedded points", l.len()));
        }
    }
    let fills: Vec<String> = match scores {
        Some(s) => quantiles(s).into_iter().map(shade).collect(),
        None => vec![UNIFORM_FILL.to_string(); n],
    };
    let ranges: Vec<(f64, f64)> = (0..dims).map(|k| scale(coords.column(k).iter().copied())).collect();
    let size = 2.0 * MARGIN + dims as f64 * PANEL;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{size}" height="{size}" fill="white"/>"#);
    for row in 0..dims {
        for col in 0..dims {
            let x0 = MARGIN + col as f64 * PANEL;
            let y0 = MARGIN + row as f64 * PANEL;
            let kind = if row == col { "diagonal" } else { "scatter" };
            let _ = writeln!(
                svg,
                r#"<g class="panel {kind}" data-row="{}" data-col="{}">"#,
                row + 1,
                col + 1
            );
            let _ = writeln!(
                svg,
                r##"<rect x="{x0}" y="{y0}" width="{PANEL}" height="{PANEL}" fill="none" stroke="#999"/>"##
            );
            if row == col {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">dim{}</text>"#,
                    x0 + PANEL / 2.0,
                    y0 + PANEL / 2.0,
                    row + 1
                );
            } else {
                let (xl, xh) = ranges[col];
                let (yl, yh) = ranges[row];
                let inner = PANEL - 2.0 * PAD;
                for i in 0..n {
                    let px = x0 + PAD + (coords[(i, col)] - xl) / (xh - xl) * inner;
                    let py = y0 + PANEL - PAD - (coords[(i, row)] - yl) / (yh - yl) * inner;
                    let outlier = labels.is_some_and(|l| l[i]);
                    if outlier {
                        let _ = writeln!(
                            svg,
                            r##"<polygon class="outlier" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="{}" stroke="#222" stroke-width="0.5"/>"##,
                            px,
                            py - 3.5,
                            px - 3.0,
                            py + 2.0,
                            px + 3.0,
                            py + 2.0,
                            fills[i]
                        );
                    } else {
                        let _ = writeln!(
                            svg,
                            r#"<circle class="inlier" cx="{px:.2}" cy="{py:.2}" r="2.5" fill="{}"/>"#,
                            fills[i]
                        );
                    }
                }
            }
            svg.push_str("</g>\n");
        }
    }
    let legend = match scores {
        Some(_) => "shade: LOF score quantile (dark = high); triangles: labeled outliers",
        None => "triangles: labeled outliers",
    };
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="{:.2}">{legend}</text>"#, size - 6.0);
    svg.push_str("</svg>\n");
    Ok(svg)
}
