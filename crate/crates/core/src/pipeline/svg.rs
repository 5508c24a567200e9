//! Minimal deterministic SVG plots: box plots, heat maps, line plots and
//! histograms. Coordinates are printed with two decimals so identical inputs
//! give identical bytes.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::stats::FiveNumber;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    s
}

/// Linear map of `[lo, hi]` onto `[a, b]`; a degenerate range maps to the midpoint.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

fn finite_range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values
        .filter(|v| v.is_finite())
        .fold(None, |acc, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
}

fn y_axis(s: &mut String, lo: f64, hi: f64) {
    let (top, bottom) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN:.2}" y1="{top:.2}" x2="{MARGIN:.2}" y2="{bottom:.2}" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = scale(v, lo, hi, bottom, top);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
            MARGIN - 4.0,
            y + 3.0,
            tick(v)
        );
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// One box per group (whiskers at min/max).
pub fn boxplot(title: &str, groups: &[(String, FiveNumber)]) -> Result<String> {
    if groups.is_empty() {
        return Err(Error::InvalidArgument("box plot of an empty table".into()));
    }
    let (lo, hi) = finite_range(groups.iter().flat_map(|(_, f)| [f.min, f.max]))
        .ok_or(Error::NonFinite("box plot values"))?;
    let mut s = header(WIDTH, HEIGHT, title);
    y_axis(&mut s, lo, hi);
    let slot = (WIDTH - 2.0 * MARGIN) / groups.len() as f64;
    let y = |v: f64| scale(v, lo, hi, HEIGHT - MARGIN, MARGIN);
    for (k, (label, f)) in groups.iter().enumerate() {
        let cx = MARGIN + slot * (k as f64 + 0.5);
        let half = (slot * 0.35).min(20.0);
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            y(f.max),
            y(f.min)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#9ecae1" stroke="black"/>"##,
            cx - half,
            y(f.q3),
            2.0 * half,
            (y(f.q1) - y(f.q3)).max(0.0)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            y(f.median),
            cx + half,
            y(f.median)
        );
        if groups.len() <= 40 || k % (groups.len() / 20).max(1) == 0 {
            let _ = writeln!(
                s,
                r#"<text x="{cx:.2}" y="{:.2}" font-family="sans-serif" font-size="9" text-anchor="middle">{}</text>"#,
                HEIGHT - MARGIN + 14.0,
                escape(label)
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Blue (low) - white - red (high) colour for `t` in `[0, 1]`.
pub fn diverging(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0);
    if t < 0.5 {
        let c = (510.0 * t).round() as u8;
        (c, c, 255)
    } else {
        let c = (510.0 * (1.0 - t)).round() as u8;
        (255, c, c)
    }
}

/// Square heat map over `[lo, hi]`. With `lower`, cells below the diagonal are
/// taken from it and cells on or above the diagonal from `upper`.
pub fn heatmap(title: &str, upper: &DMatrix<f64>, lower: Option<&DMatrix<f64>>, lo: f64, hi: f64) -> Result<String> {
    let p = upper.nrows();
    if p == 0 || upper.ncols() != p {
        return Err(Error::InvalidArgument("heat map needs a non-empty square matrix".into()));
    }
    if lower.is_some_and(|l| l.shape() != upper.shape()) {
        return Err(Error::Shape("heat map triangles differ in shape".into()));
    }
    if !(hi > lo) {
        return Err(Error::InvalidArgument("heat map range is empty".into()));
    }
    let side = HEIGHT - 2.0 * MARGIN;
    let cell = side / p as f64;
    let mut s = header(side + 2.0 * MARGIN, HEIGHT, title);
    for i in 0..p {
        for j in 0..p {
            let v = match lower {
                Some(l) if j < i => l[(i, j)],
                _ => upper[(i, j)],
            };
            let fill = if v.is_finite() {
                let (r, g, b) = diverging((v - lo) / (hi - lo));
                format!("rgb({r},{g},{b})")
            } else {
                "rgb(128,128,128)".to_string()
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="{fill}"/>"#,
                MARGIN + j as f64 * cell,
                MARGIN + i as f64 * cell
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Polylines of `(x, y)` series, plus optional horizontal reference lines.
pub fn line_plot(title: &str, series: &[(String, Vec<(f64, f64)>)], hlines: &[f64]) -> Result<String> {
    if series.iter().all(|(_, pts)| pts.is_empty()) {
        return Err(Error::InvalidArgument("line plot of an empty table".into()));
    }
    let pts = || series.iter().flat_map(|(_, p)| p.iter().copied());
    let (x0, x1) = finite_range(pts().map(|p| p.0)).ok_or(Error::NonFinite("line plot x"))?;
    let (y0, y1) = finite_range(pts().map(|p| p.1).chain(hlines.iter().copied()))
        .ok_or(Error::NonFinite("line plot y"))?;
    let mut s = header(WIDTH, HEIGHT, title);
    y_axis(&mut s, y0, y1);
    let x = |v: f64| scale(v, x0, x1, MARGIN, WIDTH - MARGIN);
    let y = |v: f64| scale(v, y0, y1, HEIGHT - MARGIN, MARGIN);
    for h in hlines {
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            y(*h),
            WIDTH - MARGIN,
            y(*h)
        );
    }
    for (k, (name, p)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = p
            .iter()
            .filter(|q| q.0.is_finite() && q.1.is_finite())
            .map(|q| format!("{:.2},{:.2}", x(q.0), y(q.1)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" fill="{color}">{}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 12.0 * k as f64,
            escape(name)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN:.2}" y="{:.2}" font-family="sans-serif" font-size="10">{}</text>"#,
        HEIGHT - MARGIN + 14.0,
        tick(x0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 14.0,
        tick(x1)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Bar chart of `(label, count)` pairs, e.g. a histogram.
pub fn histogram(title: &str, bins: &[(String, usize)]) -> Result<String> {
    if bins.is_empty() {
        return Err(Error::InvalidArgument("histogram of an empty table".into()));
    }
    let max = bins.iter().map(|b| b.1).max().unwrap_or(0).max(1) as f64;
    let mut s = header(WIDTH, HEIGHT, title);
    y_axis(&mut s, 0.0, max);
    let slot = (WIDTH - 2.0 * MARGIN) / bins.len() as f64;
    for (k, (label, count)) in bins.iter().enumerate() {
        let h = *count as f64 / max * (HEIGHT - 2.0 * MARGIN);
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#6baed6" stroke="black"/>"##,
            MARGIN + slot * k as f64 + slot * 0.1,
            HEIGHT - MARGIN - h,
            slot * 0.8
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="9" text-anchor="middle">{}</text>"#,
            MARGIN + slot * (k as f64 + 0.5),
            HEIGHT - MARGIN + 14.0,
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Equal-width bins over the range of `values`.
pub fn bin_values(values: &[f64], bins: usize) -> Result<Vec<(String, usize)>> {
    let (lo, hi) = finite_range(values.iter().copied()).ok_or(Error::InvalidArgument("no finite values to bin".into()))?;
    let bins = bins.max(1);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in values.iter().filter(|v| v.is_finite()) {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (tick(lo + width * (k as f64 + 0.5)), c))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fills(svg: &str) -> Vec<(u8, u8, u8)> {
        svg.match_indices("fill=\"rgb(")
            .map(|(i, m)| {
                let rest = &svg[i + m.len()..];
                let inner = &rest[..rest.find(')').unwrap()];
                let c: Vec<u8> = inner.split(',').map(|x| x.parse().unwrap()).collect();
                (c[0], c[1], c[2])
            })
            .collect()
    }

    #[test]
    fn heatmap_fill_is_monotone() {
        let m = DMatrix::from_row_slice(2, 2, &[-0.8, 0.1, 0.4, 0.9]);
        let svg = heatmap("t", &m, None, -1.0, 1.0).unwrap();
        let f = fills(&svg);
        assert_eq!(f.len(), 4);
        let key = |c: &(u8, u8, u8)| c.0 as i32 - c.2 as i32;
        let mut order: Vec<(f64, i32)> = m.transpose().iter().zip(&f).map(|(v, c)| (*v, key(c))).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(order.windows(2).all(|w| w[0].1 < w[1].1));
    }

    #[test]
    fn heatmap_triangles() {
        let up = DMatrix::from_element(2, 2, 1.0);
        let low = DMatrix::from_element(2, 2, -1.0);
        let f = fills(&heatmap("t", &up, Some(&low), -1.0, 1.0).unwrap());
        assert_eq!(f, vec![(255, 0, 0), (255, 0, 0), (0, 0, 255), (255, 0, 0)]);
    }

    #[test]
    fn empty_inputs_fail_and_output_is_stable() {
        assert!(boxplot("x", &[]).is_err());
        assert!(histogram("x", &[]).is_err());
        assert!(line_plot("x", &[], &[]).is_err());
        assert!(heatmap("x", &DMatrix::zeros(0, 0), None, 0.0, 1.0).is_err());
        let g = vec![("a".to_string(), FiveNumber::from_values(&[1.0, 2.0, 5.0]).unwrap())];
        assert_eq!(boxplot("<t>", &g).unwrap(), boxplot("<t>", &g).unwrap());
        assert!(boxplot("<t>", &g).unwrap().contains("&lt;t&gt;"));
        let l = vec![("s".to_string(), vec![(0.0, 1.0), (1.0, 2.0)])];
        assert_eq!(line_plot("l", &l, &[1.5]).unwrap(), line_plot("l", &l, &[1.5]).unwrap());
    }

    #[test]
    fn binning_counts_everything() {
        let b = bin_values(&[0.0, 0.1, 0.5, 1.0, 1.0], 2).unwrap();
        assert_eq!(b.iter().map(|x| x.1).collect::<Vec<_>>(), vec![2, 3]);
    }
}
