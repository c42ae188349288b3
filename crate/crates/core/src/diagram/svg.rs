use std::fmt::Write;

use super::{MotifDiagram, Passage, Patch, Point};

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SvgStyle {
    /// Pixels per lattice unit.
    pub scale: f64,
    pub stroke: f64,
    /// Half-length of the gap left in an under-passing strand.
    pub gap: f64,
    pub markers: bool,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle { scale: 400.0, stroke: 0.012, gap: 0.02, markers: false }
    }
}

fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn pt(p: Point, scale: f64, height: f64) -> String {
    format!("{},{}", num(p[0] * scale), num((height - p[1]) * scale))
}

/// Sub-polylines of `points` (with arc length `total`) outside the given
/// arc intervals.
fn split(points: &[Point], cuts: &[(f64, f64)]) -> Vec<Vec<Point>> {
    let mut out = Vec::new();
    let mut cur: Vec<Point> = Vec::new();
    let mut arc = 0.0;
    let inside = |a: f64| cuts.iter().any(|(lo, hi)| *lo < a && a < *hi);
    let lerp = |a: Point, b: Point, t: f64| [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
    if !inside(0.0) {
        cur.push(points[0]);
    }
    for w in points.windows(2) {
        let len = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        let mut events: Vec<(f64, bool)> = Vec::new();
        for (lo, hi) in cuts {
            if *lo > arc && *lo < arc + len {
                events.push((*lo, true));
            }
            if *hi > arc && *hi < arc + len {
                events.push((*hi, false));
            }
        }
        events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (a, start_cut) in events {
            let p = lerp(w[0], w[1], (a - arc) / len);
            if start_cut {
                if !cur.is_empty() {
                    cur.push(p);
                    out.push(std::mem::take(&mut cur));
                }
            } else if !inside(a) {
                cur.push(p);
            }
        }
        arc += len;
        if !inside(arc) && !cur.is_empty() {
            cur.push(w[1]);
        }
    }
    if cur.len() >= 2 {
        out.push(cur);
    }
    out.retain(|p| p.len() >= 2);
    out
}

fn cuts_for(passages: &[Passage], length: Option<f64>, gap: f64) -> Vec<(f64, f64)> {
    let mut cuts = Vec::new();
    for p in passages.iter().filter(|p| !p.over) {
        let (lo, hi) = (p.arc - gap, p.arc + gap);
        cuts.push((lo, hi));
        if let Some(l) = length {
            if lo < 0.0 {
                cuts.push((lo + l, hi + l));
            }
            if hi > l {
                cuts.push((lo - l, hi - l));
            }
        }
    }
    cuts
}

fn polyline(svg: &mut String, pts: &[Point], color: &str, style: &SvgStyle, height: f64) {
    let coords: Vec<String> = pts.iter().map(|p| pt(*p, style.scale, height)).collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{}" stroke-linecap="round" stroke-linejoin="round"/>"#,
        coords.join(" "),
        num(style.stroke * style.scale)
    );
}

fn header(svg: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{1}" viewBox="0 0 {0} {1}">"#,
        num(w),
        num(h)
    );
}

fn marker(svg: &mut String, p: Point, twist: bool, style: &SvgStyle, height: f64) {
    let c = pt(p, style.scale, height);
    let (x, y) = c.split_once(',').unwrap();
    let _ = writeln!(
        svg,
        r#"<circle class="{}" cx="{x}" cy="{y}" r="{}" fill="none" stroke="black" stroke-width="{}"/>"#,
        if twist { "twist" } else { "vertex" },
        num(style.gap * 1.5 * style.scale),
        num(style.stroke * 0.25 * style.scale)
    );
}

/// The motif on one torus cell, clipped to the unit square.
pub fn emit_svg(d: &MotifDiagram, style: &SvgStyle) -> String {
    let s = style.scale;
    let mut svg = String::new();
    header(&mut svg, s, s);
    let _ = writeln!(
        svg,
        r#"<defs><clipPath id="cell"><rect x="0" y="0" width="{0}" height="{0}"/></clipPath></defs>"#,
        num(s)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="0" y="0" width="{0}" height="{0}" fill="none" stroke="#999999" stroke-width="1"/>"##,
        num(s)
    );
    svg.push_str("<g clip-path=\"url(#cell)\">\n");
    for (i, strand) in d.strands.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let period = strand.period_points();
        let cuts = cuts_for(&strand.passages, Some(strand.length), style.gap);
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &period {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let pieces = split(&period, &cuts);
        for sy in (-hi[1]).floor() as i64..=(1.0 - lo[1]).ceil() as i64 {
            for sx in (-hi[0]).floor() as i64..=(1.0 - lo[0]).ceil() as i64 {
                for piece in &pieces {
                    let moved: Vec<Point> =
                        piece.iter().map(|p| [p[0] + sx as f64, p[1] + sy as f64]).collect();
                    polyline(&mut svg, &moved, color, style, 1.0);
                }
            }
        }
    }
    svg.push_str("</g>\n");
    if style.markers {
        for c in &d.crossings {
            marker(&mut svg, c.position, matches!(c.site, super::CrossingSite::Twist { .. }), style, 1.0);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

/// An unfolded patch, drawn with the y axis pointing up.
pub fn emit_patch_svg(p: &Patch, style: &SvgStyle) -> String {
    let (w, h) = (p.nx as f64, p.ny as f64);
    let mut svg = String::new();
    header(&mut svg, w * style.scale, h * style.scale);
    for (i, strand) in p.strands.iter().enumerate() {
        let color = PALETTE[strand.component % PALETTE.len()];
        let mut pts = strand.points.clone();
        let length = if strand.closed {
            pts.push(pts[0]);
            Some(pts.windows(2).map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt()).sum())
        } else {
            None
        };
        let cuts = cuts_for(&strand.passages, length, style.gap);
        let _ = writeln!(svg, r#"<g class="strand" data-index="{i}">"#);
        for piece in split(&pts, &cuts) {
            polyline(&mut svg, &piece, color, style, h);
        }
        svg.push_str("</g>\n");
    }
    if style.markers {
        for c in &p.crossings {
            marker(&mut svg, c.position, c.twist, style, h);
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_removes_intervals() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        let parts = split(&pts, &[(0.4, 0.6), (1.8, 2.5)]);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0], vec![[0.0, 0.0], [0.4, 0.0]]);
        assert!((parts[1].last().unwrap()[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn no_negative_zero() {
        assert_eq!(num(-0.0001), "0.000");
    }
}
