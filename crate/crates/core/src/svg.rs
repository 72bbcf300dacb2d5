//! SVG 1.1 figures of Knopp chains and Lance–Thomas generations.
//!
//! Output is a pure function of the input and [`SvgOptions`]. Coordinates are
//! exact rationals rendered with [`to_decimal`] at 12 significant digits, with
//! the y axis flipped so the figure appears the right way up.

use std::fmt::Write as _;

use num_traits::Zero;

use crate::geometry::Point2;
use crate::knopp::ChainLevel;
use crate::lance_thomas::{ParamMap, Piece};
use crate::scalar::{int, ratio, to_decimal, Rational};

const DIGITS: u32 = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvgOptions {
    pub fill: String,
    /// Second fill, alternated with `fill` along the chain.
    pub alt_fill: String,
    pub stroke: String,
    pub polyline_stroke: String,
    /// Stroke width in user units, as a fraction of the figure width.
    pub stroke_width: Rational,
    pub show_polyline: bool,
    /// Lance–Thomas only: draw the Cantor stage `C_{2n}` as a strip below the
    /// square.
    pub show_cantor_stage: bool,
    /// Width of the document in pixels; the height follows the aspect ratio.
    pub pixel_width: u32,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions {
            fill: "#9ecae1".into(),
            alt_fill: "#3182bd".into(),
            stroke: "#08306b".into(),
            polyline_stroke: "#d7301f".into(),
            stroke_width: ratio(1, 400),
            show_polyline: true,
            show_cantor_stage: false,
            pixel_width: 800,
        }
    }
}

struct Frame {
    min_x: Rational,
    max_y: Rational,
    width: Rational,
    height: Rational,
    pad: Rational,
}

impl Frame {
    fn around<'a>(points: impl IntoIterator<Item = &'a Point2>) -> Frame {
        let mut it = points.into_iter();
        let first = it.next().expect("at least one point");
        let (mut min_x, mut max_x) = (first.x.clone(), first.x.clone());
        let (mut min_y, mut max_y) = (first.y.clone(), first.y.clone());
        for p in it {
            if p.x < min_x {
                min_x = p.x.clone();
            }
            if p.x > max_x {
                max_x = p.x.clone();
            }
            if p.y < min_y {
                min_y = p.y.clone();
            }
            if p.y > max_y {
                max_y = p.y.clone();
            }
        }
        let width = max_x - &min_x;
        let height = &max_y - min_y;
        let pad = &width * ratio(1, 40);
        Frame {
            min_x,
            max_y,
            width,
            height,
            pad,
        }
    }

    fn x(&self, x: &Rational) -> String {
        to_decimal(&(x - &self.min_x), DIGITS)
    }

    fn y(&self, y: &Rational) -> String {
        to_decimal(&(&self.max_y - y), DIGITS)
    }

    fn point(&self, p: &Point2) -> String {
        format!("{},{}", self.x(&p.x), self.y(&p.y))
    }

    fn open(&self, out: &mut String, opts: &SvgOptions, extra_height: &Rational) {
        let full_w = &self.width + int(2) * &self.pad;
        let full_h = &self.height + extra_height + int(2) * &self.pad;
        let px_h = &full_h / &full_w * int(opts.pixel_width as i64);
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="{} {} {} {}">"#,
            opts.pixel_width,
            to_decimal(&px_h.round(), DIGITS),
            to_decimal(&-&self.pad, DIGITS),
            to_decimal(&-&self.pad, DIGITS),
            to_decimal(&full_w, DIGITS),
            to_decimal(&full_h, DIGITS),
        );
    }

    fn stroke_width(&self, opts: &SvgOptions) -> String {
        to_decimal(&(&self.width * &opts.stroke_width), DIGITS)
    }
}

fn polyline(out: &mut String, frame: &Frame, opts: &SvgOptions, points: &[Point2]) {
    let coords: Vec<String> = points.iter().map(|p| frame.point(p)).collect();
    let _ = writeln!(
        out,
        r#"<polyline class="curve" fill="none" stroke="{}" stroke-width="{}" points="{}"/>"#,
        opts.polyline_stroke,
        frame.stroke_width(opts),
        coords.join(" ")
    );
}

/// Draws the `2ⁿ` triangles of a chain level, plus the dyadic-vertex
/// polyline when enabled.
pub fn render_knopp(chain: &ChainLevel, opts: &SvgOptions) -> String {
    let root = chain.curve().root();
    let frame = Frame::around(root.vertices());
    let mut out = String::new();
    frame.open(&mut out, opts, &Rational::zero());
    let _ = writeln!(
        out,
        r#"<g class="chain" stroke="{}" stroke-width="{}" stroke-linejoin="round">"#,
        opts.stroke,
        frame.stroke_width(opts)
    );
    for (i, t) in chain.triangles().iter().enumerate() {
        let fill = if i % 2 == 0 {
            &opts.fill
        } else {
            &opts.alt_fill
        };
        let s = &t.shape;
        let _ = writeln!(
            out,
            r#"<polygon data-address="{}" fill="{}" points="{} {} {}"/>"#,
            t.address,
            fill,
            frame.point(&s.entry),
            frame.point(&s.apex),
            frame.point(&s.exit)
        );
    }
    out.push_str("</g>\n");
    if opts.show_polyline {
        polyline(&mut out, &frame, opts, &chain.dyadic_vertices());
    }
    out.push_str("</svg>\n");
    out
}

/// Draws the `4ⁿ` cells of a Lance–Thomas generation and its polyline of
/// `2·4ⁿ − 1` segments; with `show_cantor_stage` the parameter intervals of
/// the cells appear as a strip under the unit square.
pub fn render_lt(map: &ParamMap, opts: &SvgOptions) -> String {
    let corners = [Point2::origin(), Point2::from_ratios((1, 1), (1, 1))];
    let frame = Frame::around(&corners);
    let strip = if opts.show_cantor_stage {
        ratio(1, 10)
    } else {
        Rational::zero()
    };
    let mut out = String::new();
    frame.open(&mut out, opts, &strip);
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="0" y="0" width="1" height="1" fill="none" stroke="{}" stroke-width="{}"/>"#,
        opts.stroke,
        frame.stroke_width(opts)
    );
    let _ = writeln!(
        out,
        r#"<g class="cells" fill="{}" stroke="{}" stroke-width="{}">"#,
        opts.fill,
        opts.stroke,
        frame.stroke_width(opts)
    );
    for cell in map.cells() {
        let ll = &cell.lower_left;
        let _ = writeln!(
            out,
            r#"<rect data-address="{}" x="{}" y="{}" width="{}" height="{}"/>"#,
            cell.address,
            frame.x(&ll.x),
            frame.y(&(&ll.y + &cell.side)),
            to_decimal(&cell.side, DIGITS),
            to_decimal(&cell.side, DIGITS)
        );
    }
    out.push_str("</g>\n");
    let joints: Vec<_> = map
        .iter_pieces()
        .filter(|(p, _, _)| matches!(p, Piece::Joint(_)))
        .collect();
    if !joints.is_empty() {
        let _ = writeln!(
            out,
            r#"<g class="joints" stroke="{}" stroke-width="{}">"#,
            opts.alt_fill,
            frame.stroke_width(opts)
        );
        for (piece, s, e) in joints {
            if let Piece::Joint(tag) = piece {
                let _ = writeln!(
                    out,
                    r#"<line data-joint="{}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#,
                    tag,
                    frame.x(&s.point.x),
                    frame.y(&s.point.y),
                    frame.x(&e.point.x),
                    frame.y(&e.point.y)
                );
            }
        }
        out.push_str("</g>\n");
    }
    if opts.show_polyline {
        let points: Vec<Point2> = map.breakpoints().iter().map(|b| b.point.clone()).collect();
        polyline(&mut out, &frame, opts, &points);
    }
    if opts.show_cantor_stage {
        let y = to_decimal(&(int(1) + &strip / int(2)), DIGITS);
        let _ = writeln!(
            out,
            r#"<g class="cantor-stage" stroke="{}" stroke-width="{}">"#,
            opts.stroke,
            to_decimal(&(&strip / int(3)), DIGITS)
        );
        for (lo, hi) in map.cantor_intervals() {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}"/>"#,
                to_decimal(&lo, DIGITS),
                to_decimal(&hi, DIGITS)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knopp::KnoppCurve;
    use crate::lance_thomas;
    use crate::schedules::{KnoppSchedule, LanceThomasSchedule};

    fn count(doc: &str, tag: &str) -> usize {
        doc.matches(&format!("<{tag} ")).count()
    }

    #[test]
    fn knopp_depth_one_has_two_triangles() {
        let chain = KnoppCurve::with_default_root(KnoppSchedule::new(ratio(1, 2), 1).unwrap())
            .build_chain(1)
            .unwrap();
        let doc = render_knopp(&chain, &SvgOptions::default());
        assert_eq!(count(&doc, "polygon"), 2);
        assert_eq!(count(&doc, "polyline"), 1);
        assert!(doc.contains(r#"viewBox="-0.05 -0.05 2.1 1.1""#), "{doc}");
    }

    #[test]
    fn polyline_can_be_hidden() {
        let chain = KnoppCurve::with_default_root(KnoppSchedule::new(ratio(1, 2), 2).unwrap())
            .build_chain(2)
            .unwrap();
        let opts = SvgOptions {
            show_polyline: false,
            ..SvgOptions::default()
        };
        assert_eq!(count(&render_knopp(&chain, &opts), "polyline"), 0);
    }

    #[test]
    fn lt_generation_one() {
        let sched = LanceThomasSchedule::new(ratio(1, 2), 1).unwrap();
        let map = lance_thomas::generation(&sched, 1).unwrap();
        let opts = SvgOptions {
            show_cantor_stage: true,
            ..SvgOptions::default()
        };
        let doc = render_lt(&map, &opts);
        // 4 cells plus the frame
        assert_eq!(count(&doc, "rect"), 5);
        assert_eq!(doc.matches("data-joint=").count(), 3);
        // 3 joints plus 4 Cantor stage intervals
        assert_eq!(count(&doc, "line"), 7);
    }
}
