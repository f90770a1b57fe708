//! SVG plots of atom paths in the tube frame: axial coordinate across,
//! lateral offset up, one polyline per attempt, tube walls as grey bars.

use std::fmt::Write;

use demoforge_core::md::TubeGeometry;
use demoforge_core::Vec3;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub label: String,
    /// Lab-frame positions.
    pub points: Vec<Vec3>,
}

/// `(axial, lateral)` per point, lateral being the signed offset along the
/// tube's first transverse axis.
fn project(tube: &TubeGeometry, p: Vec3) -> (f64, f64) {
    let t = tube.point_to_tube(p);
    (t[2], t[0])
}

pub fn trajectory_svg(series: &[Series], tube: &TubeGeometry, title: &str) -> String {
    let projected: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().map(|p| project(tube, *p)).collect())
        .collect();
    let (mut x0, mut x1) = (tube.entrance() - 0.2, tube.exit() + 0.2);
    let (mut y0, mut y1) = (-tube.radius - 0.2, tube.radius + 0.2);
    for &(x, y) in projected.iter().flatten() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let sx = (WIDTH - 2.0 * MARGIN) / (x1 - x0);
    let sy = (HEIGHT - 2.0 * MARGIN) / (y1 - y0);
    let px = |x: f64| MARGIN + (x - x0) * sx;
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) * sy;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    for wall in [tube.radius, -tube.radius] {
        let _ = writeln!(
            s,
            r##"<line class="tube-wall" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-width="6"/>"##,
            px(tube.entrance()),
            py(wall),
            px(tube.exit()),
            py(wall)
        );
    }
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ccc" stroke-dasharray="4 4"/>"##,
        px(x0),
        py(0.0),
        px(x1),
        py(0.0)
    );
    for (k, (pts, ser)) in projected.iter().zip(series).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="attempt" fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(&ser.label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 120.0,
            MARGIN + 14.0 * k as f64,
            escape(&ser.label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">axial position (nm)</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">lateral offset (nm)</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use demoforge_core::md::tube_geometry;

    #[test]
    fn one_polyline_per_attempt() {
        let tube = tube_geometry();
        let line = |dx: f64| Series {
            label: format!("a<{dx}>"),
            points: (0..10)
                .map(|k| tube.point_to_lab([dx, 0.0, -1.0 + 0.2 * k as f64]))
                .collect(),
        };
        let svg = trajectory_svg(&[line(0.0), line(0.1), line(-0.1)], &tube, "C61");
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("tube-wall").count(), 2);
        assert!(svg.contains("a&lt;0.1&gt;"));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
