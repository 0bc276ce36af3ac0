//! SVG rendering of a two-dimensional result: F1 brown, F2 teal, unexplored
//! yellow, certificate trajectories dark blue.

use std::fmt::Write;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::order::{Lattice, LowerSet};
use crate::solver::SolverResult;

const FEASIBLE: &str = "#8b4513";
const UNSAFE: &str = "#008080";
const UNEXPLORED: &str = "#f2d024";
const TRAJECTORY: &str = "#1a237e";
const MARGIN: f64 = 50.0;
const WIDTH: f64 = 600.0;

pub fn render(constraint: &LowerSet, result: &SolverResult, trajectories: &[Trajectory]) -> Result<String> {
    if constraint.dim() != 2 {
        return Err(Error::InvalidArgument(format!("plot needs a 2-D model, got {} dimensions", constraint.dim())));
    }
    let amb = constraint.ambient();
    let (x0, y0) = (amb.lower()[0], amb.lower()[1]);
    let (w, h) = (amb.extent(0), amb.extent(1));
    let scale = WIDTH / w.max(h);
    let (pw, ph) = (w * scale, h * scale);
    let sx = |x: f64| MARGIN + (x - x0) * scale;
    let sy = |y: f64| MARGIN + ph - (y - y0) * scale;

    let mut svg = String::new();
    let total_w = pw + 2.0 * MARGIN;
    let total_h = ph + 2.0 * MARGIN;
    // writing to a String cannot fail
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.1} {total_h:.1}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let lattice = Lattice::new(amb, result.resolution)?;
    let r = result.resolution;
    for k in 0..lattice.len() {
        let p = lattice.point_at(k);
        if !constraint.contains(&p) {
            continue;
        }
        let fill = if result.f1.contains(&p) {
            FEASIBLE
        } else if result.f2.contains(&p) {
            UNSAFE
        } else {
            UNEXPLORED
        };
        let left = sx((p[0] - r / 2.0).max(x0));
        let right = sx((p[0] + r / 2.0).min(x0 + w));
        let top = sy((p[1] + r / 2.0).min(y0 + h));
        let bottom = sy((p[1] - r / 2.0).max(y0));
        let _ = writeln!(
            svg,
            r#"<rect x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            right - left,
            bottom - top
        );
    }

    for traj in trajectories {
        let points: Vec<String> = traj.states.iter().map(|s| format!("{:.2},{:.2}", sx(s[0]), sy(s[1]))).collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{TRAJECTORY}" stroke-width="1" points="{}"/>"#, points.join(" "));
    }

    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" font-size="14" text-anchor="middle">x1</text>"#, MARGIN + pw / 2.0, total_h - 15.0);
    let _ = writeln!(svg, r#"<text x="15" y="{:.1}" font-size="14" text-anchor="middle">x2</text>"#, MARGIN + ph / 2.0);
    for (value, x, y, anchor) in [
        (x0, sx(x0), total_h - 32.0, "middle"),
        (x0 + w, sx(x0 + w), total_h - 32.0, "middle"),
        (y0, MARGIN - 6.0, sy(y0), "end"),
        (y0 + h, MARGIN - 6.0, sy(y0 + h), "end"),
    ] {
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{y:.1}" font-size="12" text-anchor="{anchor}">{value}</text>"#);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::solver::{compute_invariant, SolverConfig};

    #[test]
    fn colours_follow_the_legend() {
        let (m, x) = models::by_name("coupled_tanks", None).unwrap();
        let r = compute_invariant(&m, &x, &SolverConfig { epsilon: 2.0, ..Default::default() }).unwrap();
        let svg = render(&x, &r, &[]).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(FEASIBLE));
        assert!(svg.contains(UNSAFE));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn one_dimensional_is_rejected() {
        let m = models::drift();
        let x = models::oracle_safety_set("drift").unwrap();
        let r = compute_invariant(&m, &x, &SolverConfig { epsilon: 0.5, ..Default::default() }).unwrap();
        assert!(render(&x, &r, &[]).is_err());
    }
}
