//! Static top-down SVG of one evaluated run: true vehicles, inferred boxes,
//! ground-truth tracks and pedestrian estimates.

use std::fmt::Write;

use nlos_core::{AlignedBox, Point2};

use crate::commands::Overlay;

const SCALE: f64 = 40.0;
const MARGIN: f64 = 1.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#2ca02c", "#9467bd", "#8c564b"];

struct View {
    min: Point2,
    max: Point2,
}

impl View {
    fn fit(points: impl Iterator<Item = Point2>) -> View {
        let (mut lo, mut hi) = (
            Point2::new(f64::MAX, f64::MAX),
            Point2::new(f64::MIN, f64::MIN),
        );
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        View {
            min: Point2::new(lo.x - MARGIN, lo.y - MARGIN),
            max: Point2::new(hi.x + MARGIN, hi.y + MARGIN),
        }
    }

    fn width(&self) -> f64 {
        (self.max.x - self.min.x) * SCALE
    }

    fn height(&self) -> f64 {
        (self.max.y - self.min.y) * SCALE
    }

    /// Ego x to the right, ego y up.
    fn map(&self, p: Point2) -> (f64, f64) {
        ((p.x - self.min.x) * SCALE, (self.max.y - p.y) * SCALE)
    }
}

fn rect(out: &mut String, v: &View, b: &AlignedBox, style: &str) {
    let (x0, y0) = v.map(Point2::new(b.min().x, b.max().y));
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
        b.width * SCALE,
        b.length * SCALE
    );
}

pub fn overlay_svg(o: &Overlay) -> String {
    let boxes: Vec<AlignedBox> = o
        .vehicles
        .iter()
        .filter_map(|v| v.footprint().ok())
        .collect();
    let corners = boxes.iter().chain(&o.boxes).flat_map(|b| b.corners());
    let pts = o
        .truth
        .iter()
        .map(|t| t.2)
        .chain(o.estimates.iter().map(|e| e.1));
    let view = View::fit(corners.chain(pts).chain(std::iter::once(o.ego_origin)));
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.2} {:.2}">"#,
        view.width(),
        view.height(),
        view.width(),
        view.height()
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="6" y="16" font-family="sans-serif" font-size="13">{} seed {}</text>"#,
        o.scenario, o.seed
    );
    for b in &boxes {
        rect(&mut s, &view, b, r##"fill="#dddddd" stroke="#555555""##);
    }
    for b in &o.boxes {
        rect(
            &mut s,
            &view,
            b,
            r##"fill="none" stroke="#d62728" stroke-dasharray="4 3""##,
        );
    }
    let mut names: Vec<&str> = Vec::new();
    for (n, _, _) in &o.truth {
        if !names.contains(&n.as_str()) {
            names.push(n);
        }
    }
    for (i, name) in names.iter().enumerate() {
        let path: Vec<String> = o
            .truth
            .iter()
            .filter(|t| t.0 == *name)
            .map(|t| {
                let (x, y) = view.map(t.2);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            path.join(" "),
            PALETTE[i % PALETTE.len()]
        );
    }
    for (_, p) in &o.estimates {
        let (x, y) = view.map(*p);
        let _ = writeln!(
            s,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="#ff7f0e"/>"##
        );
    }
    let (ox, oy) = view.map(o.ego_origin);
    let _ = writeln!(
        s,
        r#"<circle cx="{ox:.2}" cy="{oy:.2}" r="5" fill="black"/>"#
    );
    s.push_str("</svg>\n");
    s
}
