//! Minimal static SVG line plots of error curves.

use std::fmt::Write as _;

use crate::harness::compare::{Method, TrialResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn color(m: Method) -> &'static str {
    match m {
        Method::Asg => "#1f77b4",
        Method::Pi2Cma => "#2ca02c",
        Method::Cem => "#ff7f0e",
    }
}

/// Error per episode for each run in `runs`, with the convergence threshold
/// as a dashed line.
pub fn error_curves_svg(runs: &[TrialResult], epsilon: f64) -> String {
    let max_x = runs.iter().map(|r| r.error_curve.len()).max().unwrap_or(1).max(1) as f64;
    let max_y = runs
        .iter()
        .flat_map(|r| r.error_curve.iter().copied())
        .chain([epsilon])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        * 1.05;
    let max_y = if max_y > 0.0 { max_y } else { 1.0 };
    let px = |x: f64| MARGIN + (x - 1.0).max(0.0) / (max_x - 1.0).max(1.0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - y / max_y * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(s, r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">episode</text>"#, WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{}" font-size="12" transform="rotate(-90 15 {})" text-anchor="middle">error</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" font-size="10" text-anchor="middle">1</text>"#, y0 + 14.0);
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" font-size="10" text-anchor="middle">{}</text>"#, y0 + 14.0, max_x);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{:.3}</text>"#, x0 - 4.0, y1 + 4.0, max_y);
    let ey = py(epsilon);
    let _ = writeln!(s, r##"<line x1="{x0}" y1="{ey:.2}" x2="{x1}" y2="{ey:.2}" stroke="#d62728" stroke-dasharray="6 4"/>"##);
    for (i, r) in runs.iter().enumerate() {
        let pts: Vec<String> = r
            .error_curve
            .iter()
            .enumerate()
            .map(|(k, e)| format!("{:.2},{:.2}", px(k as f64 + 1.0), py(e.min(max_y))))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                pts.join(" "),
                color(r.method)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{}">{} ({} episodes)</text>"#,
            x1 - 150.0,
            y1 + 14.0 * (i as f64 + 1.0),
            color(r.method),
            r.method.label(),
            r.episodes_to_converge
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_has_one_polyline_per_nonempty_curve() {
        let run = |method, curve: Vec<f64>| TrialResult {
            trial: 0,
            seed: 0,
            method,
            target: vec![],
            start: vec![],
            episodes_to_converge: curve.len(),
            converged: true,
            final_error: 0.0,
            error_curve: curve,
        };
        let svg = error_curves_svg(&[run(Method::Asg, vec![3.0, 0.5]), run(Method::Pi2Cma, vec![])], 1.0);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("stroke-dasharray"));
    }
}
