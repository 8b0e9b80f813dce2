//! Minimal SVG line plots for sweep curves.

use std::fmt::Write as _;

use super::sweep::{SweepCurve, SweepKind};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn polyline(out: &mut String, f: &Frame, xs: &[f64], ys: &[f64], color: &str, dashed: bool) {
    let pts: Vec<String> = xs
        .iter()
        .zip(ys)
        .filter(|(_, y)| y.is_finite())
        .map(|(&x, &y)| format!("{:.2},{:.2}", f.px(x), f.py(y)))
        .collect();
    let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
        pts.join(" ")
    );
}

/// Inclusive index runs of consecutive `true` entries.
pub fn ambiguous_runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                runs.push((a, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        runs.push((a, flags.len() - 1));
    }
    runs
}

/// Exact and predicted curves, with the offset ranges where d is not
/// invertible shaded.
///
/// Direct sweeps plot d against Δ. Inverse sweeps plot Δ̂ against Δ with the
/// identity as the exact curve.
pub fn render_sweep(curve: &SweepCurve) -> String {
    let (exact, label): (Vec<f64>, &str) = match curve.kind {
        SweepKind::Direct => (curve.exact.clone(), "d"),
        SweepKind::Inverse => (curve.grid.clone(), "estimated offset"),
    };
    let mut lo = exact.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = exact.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(p) = &curve.predicted {
        for &v in p.iter().filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let f = Frame {
        x0: curve.grid[0],
        x1: *curve.grid.last().unwrap(),
        y0: lo - pad,
        y1: hi + pad,
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    for (a, b) in ambiguous_runs(&curve.ambiguous()) {
        let a = f.px(curve.grid[a]);
        let b = f.px(curve.grid[b]);
        let _ = writeln!(
            s,
            r##"<rect class="non-monotone" x="{a:.2}" y="{MARGIN}" width="{:.2}" height="{}" fill="#f4c7c3" fill-opacity="0.6"/>"##,
            (b - a).max(1.0),
            HEIGHT - 2.0 * MARGIN
        );
    }

    let (bx, by) = (MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{bx},{MARGIN} L{bx},{by} L{},{by}" fill="none" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    for t in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * t as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * t as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-size="11" text-anchor="middle">{fx:.2}</text>"#,
            f.px(fx),
            by + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{fy:.3}</text>"#,
            bx - 6.0,
            f.py(fy) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">offset</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(s, r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">{label}</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    let _ = writeln!(s, r#"<text x="{}" y="20" font-size="12" text-anchor="middle">control {}</text>"#, WIDTH / 2.0, curve.control);

    polyline(&mut s, &f, &curve.grid, &exact, "#1f4e9c", false);
    if let Some(p) = &curve.predicted {
        polyline(&mut s, &f, &curve.grid, p, "#c0392b", true);
    }
    s.push_str("</svg>\n");
    s
}
