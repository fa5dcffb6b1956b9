//! Static SVG drawings of matchings and flip traces.
//!
//! Points are labeled dots and matching segments are solid lines. Segments
//! involved in a crossing are drawn in red. In a trace frame the two
//! segments about to be removed carry the `removed` class and the two
//! segments the flip adds are drawn dashed with the `added` class.

use std::fmt::Write;

use crate::geometry::{PointSet, Segment};
use crate::matching::{find_crossings, EngineError, FlipTrace, Matching};

const CANVAS: f64 = 480.0;
const MARGIN: f64 = 24.0;

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(ps: &PointSet) -> Self {
        let xs = ps.points().iter().map(|p| p.x as f64);
        let ys = ps.points().iter().map(|p| p.y as f64);
        let (min_x, max_x) = xs.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let (min_y, max_y) = ys.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let span = (max_x - min_x).max(max_y - min_y).max(1.0);
        let scale = CANVAS / span;
        Frame {
            min_x,
            max_y,
            scale,
            width: (max_x - min_x) * scale + 2.0 * MARGIN,
            height: (max_y - min_y) * scale + 2.0 * MARGIN,
        }
    }

    fn map(&self, ps: &PointSet, i: usize) -> (f64, f64) {
        let p = ps.point(i);
        (
            MARGIN + (p.x as f64 - self.min_x) * self.scale,
            MARGIN + (self.max_y - p.y as f64) * self.scale,
        )
    }
}

fn line(out: &mut String, frame: &Frame, ps: &PointSet, s: Segment, class: &str, stroke: &str, dashed: bool) {
    let (x1, y1) = frame.map(ps, s.a);
    let (x2, y2) = frame.map(ps, s.b);
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        out,
        r#"  <line class="{class}" data-a="{}" data-b="{}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="2"{dash}/>"#,
        s.a, s.b
    );
}

/// Draws `m`; `removed` and `added` mark the segments of a pending flip.
pub fn render(ps: &PointSet, m: &Matching, removed: &[Segment], added: &[Segment]) -> String {
    let frame = Frame::new(ps);
    let crossing: Vec<Segment> = find_crossings(ps, m).iter().flat_map(|c| [c.e1, c.e2]).collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#,
        w = frame.width,
        h = frame.height
    );
    out.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for &s in m.pairs() {
        let mut class = String::from("segment");
        if crossing.contains(&s) {
            class.push_str(" crossing");
        }
        if removed.contains(&s) {
            class.push_str(" removed");
        }
        let stroke = if crossing.contains(&s) { "#c0392b" } else { "black" };
        line(&mut out, &frame, ps, s, &class, stroke, false);
    }
    for &s in added {
        line(&mut out, &frame, ps, s, "added", "#2c3e50", true);
    }
    for i in 0..ps.len() {
        let (x, y) = frame.map(ps, i);
        let _ = writeln!(out, r#"  <circle class="point" cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#);
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif">{i}</text>"#,
            x + 6.0,
            y - 6.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One frame per matching of the trace: `len + 1` frames.
pub fn render_trace(ps: &PointSet, trace: &FlipTrace) -> Result<Vec<String>, EngineError> {
    let matchings = trace.matchings(ps)?;
    Ok(matchings
        .iter()
        .enumerate()
        .map(|(k, m)| match trace.records.get(k) {
            Some(r) => render(ps, m, &[r.crossing.e1, r.crossing.e2], &[r.new_e1, r.new_e2]),
            None => render(ps, m, &[], &[]),
        })
        .collect())
}
