use std::fmt::Write as _;

use orlicz_capacity::bodies::BodyKind;

pub const FRAME: f64 = 512.0;
/// Fraction of the frame spanned by the larger extent of the body.
pub const FILL: f64 = 0.8;

pub fn body_name(kind: BodyKind) -> &'static str {
    match kind {
        BodyKind::OrliczBall => "kphi",
        BodyKind::ConjugateBall => "kphistar",
        BodyKind::PolarDual => "kpolar",
    }
}

/// `theta,x1,x2` rows in shortest round-trip form.
pub fn curve_csv(curve: &[[f64; 3]]) -> String {
    let mut out = String::from("theta,x1,x2\n");
    for [t, x, y] in curve {
        let _ = writeln!(out, "{t},{x},{y}");
    }
    out
}

/// Boundary curve on mathematical axes (y up), centred in a 512 x 512
/// frame with the body spanning 80% of it.
pub fn curve_svg(curve: &[[f64; 3]], half_widths: [f64; 2], title: &str) -> String {
    let c = FRAME / 2.0;
    let scale = FILL * c / half_widths[0].max(half_widths[1]);
    let px = |x: f64| c + scale * x;
    let py = |y: f64| c - scale * y;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{FRAME}" height="{FRAME}" viewBox="0 0 {FRAME} {FRAME}">"#
    );
    let _ = writeln!(s, "<title>{}</title>", escape(title));
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{FRAME}" height="{FRAME}" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r##"<g stroke="#888888" stroke-width="1"><line x1="0" y1="{c}" x2="{FRAME}" y2="{c}"/><line x1="{c}" y1="0" x2="{c}" y2="{FRAME}"/></g>"##
    );
    let (a, b) = (half_widths[0], half_widths[1]);
    let _ = writeln!(
        s,
        r##"<g font-family="monospace" font-size="11" fill="#444444"><text x="{:.3}" y="{:.3}">{a:.6}</text><text x="{:.3}" y="{:.3}">{b:.6}</text></g>"##,
        px(a) + 3.0,
        c - 4.0,
        c + 4.0,
        py(b) - 4.0
    );
    let mut points = String::new();
    for (k, [_, x, y]) in curve.iter().enumerate() {
        if k > 0 {
            points.push(' ');
        }
        let _ = write!(points, "{:.3},{:.3}", px(*x), py(*y));
    }
    let _ = writeln!(
        s,
        r##"<polygon points="{points}" fill="none" stroke="#1f4e99" stroke-width="2"/>"##
    );
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Largest `|p(theta + pi) + p(theta)|` over the curve; needs an even count.
pub fn symmetry_defect(curve: &[[f64; 3]]) -> Option<f64> {
    let n = curve.len();
    if !n.is_multiple_of(2) {
        return None;
    }
    Some(
        (0..n / 2)
            .map(|k| {
                let (p, q) = (curve[k], curve[k + n / 2]);
                (p[1] + q[1]).abs().max((p[2] + q[2]).abs())
            })
            .fold(0.0, f64::max),
    )
}

/// True when every turn of the closed polygon is counterclockwise up to `tol`.
pub fn is_convex(curve: &[[f64; 3]], tol: f64) -> bool {
    let n = curve.len();
    (0..n).all(|k| {
        let (a, b, c) = (curve[k], curve[(k + 1) % n], curve[(k + 2) % n]);
        let cross = (b[1] - a[1]) * (c[2] - b[2]) - (b[2] - a[2]) * (c[1] - b[1]);
        cross >= -tol
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(n: usize, r: f64) -> Vec<[f64; 3]> {
        (0..n)
            .map(|k| {
                let t = TAU * k as f64 / n as f64;
                [t, r * t.cos(), r * t.sin()]
            })
            .collect()
    }

    #[test]
    fn circle_is_convex_and_symmetric() {
        let c = circle(64, 2.0);
        assert!(is_convex(&c, 1e-12));
        assert!(symmetry_defect(&c).unwrap() < 1e-12);
        let mut dented = c.clone();
        dented[5][1] *= 0.5;
        dented[5][2] *= 0.5;
        assert!(!is_convex(&dented, 1e-12));
    }

    #[test]
    fn svg_places_intercept_at_eighty_percent() {
        let svg = curve_svg(&circle(8, 2.0), [2.0, 2.0], "t");
        // x = 2 maps to 256 + 0.8 * 256
        assert!(svg.contains("460.800,256.000"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn csv_header() {
        let csv = curve_csv(&circle(4, 1.0));
        assert!(csv.starts_with("theta,x1,x2\n0,1,0\n"));
        assert_eq!(csv.lines().count(), 5);
    }
}
