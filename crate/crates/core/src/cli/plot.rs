//! Static SVG of a trajectory projected onto a coordinate plane.

use std::fmt::Write as _;

use crate::dynamics::{turning_points, Sample};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;

/// `|ξ|²` recovered from a reduced sample: `|q ∧ q̇|² + |φ|²`.
fn mu2_of(s: &Sample) -> f64 {
    let l2 = s.q.norm_squared() * s.v.norm_squared() - s.q.dot(&s.v).powi(2);
    l2.max(0.0) + s.casimir
}

/// Renders the `(q_i, q_j)` projection (1-based indices) with the annulus
/// circles when the orbit is bounded and has a centrifugal barrier.
pub fn render_svg(n: usize, samples: &[Sample], plane: (usize, usize)) -> Result<String, String> {
    let (i, j) = plane;
    if !(1 <= i && i < j && j <= n) {
        return Err(format!("plane: indices must satisfy 1 <= i < j <= n (got {i},{j} with n = {n})"));
    }
    let first = samples.first().ok_or("trajectory has no samples")?;
    let mu2 = mu2_of(first);
    let annulus = if first.energy < 0.0 && mu2 > 1e-14 {
        turning_points(first.energy, mu2).ok().filter(|tp| tp.bounded())
    } else {
        None
    };
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.q[i - 1], s.q[j - 1])).collect();
    let mut extent = pts.iter().map(|(x, y)| x.abs().max(y.abs())).fold(0.0, f64::max);
    if let Some(tp) = &annulus {
        extent = extent.max(tp.r_max);
    }
    if !(extent > 0.0 && extent.is_finite()) {
        extent = 1.0;
    }
    let scale = (SIZE / 2.0 - MARGIN) / extent;
    let c = SIZE / 2.0;
    let map = |x: f64, y: f64| (c + x * scale, c - y * scale);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<line x1="{m}" y1="{c}" x2="{e}" y2="{c}" stroke="#bbb"/><line x1="{c}" y1="{m}" x2="{c}" y2="{e}" stroke="#bbb"/>"##,
        m = MARGIN,
        e = SIZE - MARGIN
    );
    if let Some(tp) = &annulus {
        for (r, label) in [(tp.r_min, "r_min"), (tp.r_max, "r_max")] {
            let _ = writeln!(
                svg,
                r##"<circle cx="{c}" cy="{c}" r="{:.6}" fill="none" stroke="#d62728" stroke-dasharray="6 4"><title>{label} = {r}</title></circle>"##,
                r * scale
            );
        }
    }
    let mut path = String::new();
    for (k, &(x, y)) in pts.iter().enumerate() {
        let (px, py) = map(x, y);
        let _ = write!(path, "{}{px:.6},{py:.6}", if k == 0 { "" } else { " " });
    }
    let _ = writeln!(svg, r##"<polyline points="{path}" fill="none" stroke="#1f77b4" stroke-width="1.2"/>"##);
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="14">q_{i} vs q_{j}</text>"#
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
