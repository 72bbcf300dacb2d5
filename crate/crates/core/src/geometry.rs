//! Planar primitives over exact rationals.
//!
//! Points, segments, oriented triangles and affine maps, together with the
//! exact orientation and intersection predicates both constructions rely on.
//! Nothing here rounds: all predicates are decided by the sign of an exact
//! determinant.

use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_rational, int, parse_rational, ratio, Exact, Rational};

/// Serialized as `["x", "y"]` with `"num/den"` entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[String; 2]", try_from = "[String; 2]")]
pub struct Point2 {
    pub x: Rational,
    pub y: Rational,
}

impl From<Point2> for [String; 2] {
    fn from(p: Point2) -> Self {
        [format_rational(&p.x), format_rational(&p.y)]
    }
}

impl TryFrom<[String; 2]> for Point2 {
    type Error = Error;

    fn try_from([x, y]: [String; 2]) -> Result<Self> {
        Ok(Point2::new(parse_rational(&x)?, parse_rational(&y)?))
    }
}

impl Point2 {
    pub fn new(x: Rational, y: Rational) -> Self {
        Point2 { x, y }
    }

    /// Shorthand for integer-ratio coordinates, mostly for tests.
    pub fn from_ratios(x: (i64, i64), y: (i64, i64)) -> Self {
        Point2::new(ratio(x.0, x.1), ratio(y.0, y.1))
    }

    pub fn origin() -> Self {
        Point2::new(int(0), int(0))
    }

    /// `self + t * (other - self)`.
    pub fn lerp(&self, other: &Point2, t: &Rational) -> Point2 {
        Point2::new(
            &self.x + t * (&other.x - &self.x),
            &self.y + t * (&other.y - &self.y),
        )
    }

    pub fn offset(&self, dx: &Rational, dy: &Rational) -> Point2 {
        Point2::new(&self.x + dx, &self.y + dy)
    }

    pub fn dist_sq(&self, other: &Point2) -> Rational {
        let dx = &other.x - &self.x;
        let dy = &other.y - &self.y;
        &dx * &dx + &dy * &dy
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", Exact(&self.x), Exact(&self.y))
    }
}

/// Twice the signed area of `(a, b, c)`: `det(b - a, c - a)`.
pub fn cross(a: &Point2, b: &Point2, c: &Point2) -> Rational {
    (&b.x - &a.x) * (&c.y - &a.y) - (&b.y - &a.y) * (&c.x - &a.x)
}

/// Orientation of `c` relative to the directed line `a -> b`.
pub fn orient(a: &Point2, b: &Point2, c: &Point2) -> Ordering {
    cross(a, b, c).cmp(&Rational::zero())
}

/// Signed area of the triangle `(a, b, c)`; zero for collinear points.
pub fn signed_area_of(a: &Point2, b: &Point2, c: &Point2) -> Rational {
    cross(a, b, c) / int(2)
}

/// A closed segment with distinct endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Segment {
    p: Point2,
    q: Point2,
}

impl Segment {
    pub fn new(p: Point2, q: Point2) -> Result<Self> {
        if p == q {
            return Err(Error::Degenerate("segment"));
        }
        Ok(Segment { p, q })
    }

    pub fn p(&self) -> &Point2 {
        &self.p
    }

    pub fn q(&self) -> &Point2 {
        &self.q
    }

    fn has_endpoint(&self, point: &Point2) -> bool {
        &self.p == point || &self.q == point
    }

    fn other_end(&self, point: &Point2) -> &Point2 {
        if &self.p == point {
            &self.q
        } else {
            &self.p
        }
    }
}

/// `c` lies in the bounding box of `a`-`b`; combined with collinearity this
/// places it on the closed segment.
fn within_box(a: &Point2, b: &Point2, c: &Point2) -> bool {
    let (xlo, xhi) = if a.x <= b.x {
        (&a.x, &b.x)
    } else {
        (&b.x, &a.x)
    };
    let (ylo, yhi) = if a.y <= b.y {
        (&a.y, &b.y)
    } else {
        (&b.y, &a.y)
    };
    xlo <= &c.x && &c.x <= xhi && ylo <= &c.y && &c.y <= yhi
}

/// True iff the two closed segments have at least one common point.
pub fn segments_intersect(s1: &Segment, s2: &Segment) -> bool {
    let (a, b) = (&s1.p, &s1.q);
    let (c, d) = (&s2.p, &s2.q);
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    use Ordering::Equal;
    if o1 != o2 && o3 != o4 && o1 != Equal && o2 != Equal && o3 != Equal && o4 != Equal {
        return true;
    }
    (o1 == Equal && within_box(a, b, c))
        || (o2 == Equal && within_box(a, b, d))
        || (o3 == Equal && within_box(c, d, a))
        || (o4 == Equal && within_box(c, d, b))
}

/// True iff the two closed segments share a point other than a single common
/// endpoint. Consecutive pieces of a polyline that merely meet at their joint
/// are not reported; collinear overlap past the joint is.
pub fn segments_properly_intersect(s1: &Segment, s2: &Segment) -> bool {
    let shared = [&s2.p, &s2.q]
        .into_iter()
        .filter(|pt| s1.has_endpoint(pt))
        .count();
    match shared {
        0 => segments_intersect(s1, s2),
        1 => {
            let joint = if s1.has_endpoint(&s2.p) { &s2.p } else { &s2.q };
            let u = s1.other_end(joint);
            let v = s2.other_end(joint);
            if orient(joint, u, v) != Ordering::Equal {
                return false;
            }
            // Collinear: overlap beyond the joint iff both run the same way.
            let dot = (&u.x - &joint.x) * (&v.x - &joint.x) + (&u.y - &joint.y) * (&v.y - &joint.y);
            dot.is_positive()
        }
        _ => true,
    }
}

/// Closed axis-aligned bounding boxes of two segments overlap.
fn boxes_overlap(s1: &Segment, s2: &Segment) -> bool {
    let lo_hi = |a: &Rational, b: &Rational| {
        if a <= b {
            (a.clone(), b.clone())
        } else {
            (b.clone(), a.clone())
        }
    };
    let (ax0, ax1) = lo_hi(&s1.p.x, &s1.q.x);
    let (bx0, bx1) = lo_hi(&s2.p.x, &s2.q.x);
    if ax1 < bx0 || bx1 < ax0 {
        return false;
    }
    let (ay0, ay1) = lo_hi(&s1.p.y, &s1.q.y);
    let (by0, by1) = lo_hi(&s2.p.y, &s2.q.y);
    !(ay1 < by0 || by1 < ay0)
}

/// First pair `(i, j)`, `i < j`, of polyline pieces that violates simplicity:
/// consecutive pieces may only meet at their shared vertex, all others must be
/// disjoint. A zero-length piece `i` is reported as `(i, i)`. Brute force over
/// all pairs, fanned out per first index.
pub fn polyline_self_intersection(vertices: &[Point2]) -> Option<(usize, usize)> {
    let mut segments = Vec::with_capacity(vertices.len().saturating_sub(1));
    for (i, w) in vertices.windows(2).enumerate() {
        match Segment::new(w[0].clone(), w[1].clone()) {
            Ok(s) => segments.push(s),
            Err(_) => return Some((i, i)),
        }
    }
    (0..segments.len())
        .into_par_iter()
        .filter_map(|i| {
            let si = &segments[i];
            (i + 1..segments.len()).find_map(|j| {
                let sj = &segments[j];
                if !boxes_overlap(si, sj) {
                    return None;
                }
                let bad = if j == i + 1 {
                    segments_properly_intersect(si, sj)
                } else {
                    segments_intersect(si, sj)
                };
                bad.then_some((i, j))
            })
        })
        .min()
}

/// Triangle with roles: the curve enters at `entry`, leaves at `exit`, and
/// `apex` is the third vertex.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrientedTriangle {
    pub entry: Point2,
    pub exit: Point2,
    pub apex: Point2,
}

impl OrientedTriangle {
    pub fn new(entry: Point2, exit: Point2, apex: Point2) -> Result<Self> {
        if signed_area_of(&entry, &exit, &apex).is_zero() {
            return Err(Error::Degenerate("triangle"));
        }
        Ok(OrientedTriangle { entry, exit, apex })
    }

    /// `½·det(exit − entry, apex − entry)`.
    pub fn signed_area(&self) -> Rational {
        signed_area_of(&self.entry, &self.exit, &self.apex)
    }

    pub fn area(&self) -> Rational {
        self.signed_area().abs()
    }

    /// Largest squared side length.
    pub fn diameter_sq(&self) -> Rational {
        let ab = self.entry.dist_sq(&self.exit);
        let bc = self.exit.dist_sq(&self.apex);
        let ca = self.apex.dist_sq(&self.entry);
        ab.max(bc).max(ca)
    }

    /// Closed containment test (boundary included).
    pub fn contains(&self, p: &Point2) -> bool {
        if self.vertices().contains(&p) {
            return true;
        }
        let o1 = orient(&self.entry, &self.exit, p);
        let o2 = orient(&self.exit, &self.apex, p);
        let o3 = orient(&self.apex, &self.entry, p);
        let has_pos = [o1, o2, o3].contains(&Ordering::Greater);
        let has_neg = [o1, o2, o3].contains(&Ordering::Less);
        !(has_pos && has_neg)
    }

    pub fn contains_triangle(&self, other: &OrientedTriangle) -> bool {
        self.contains(&other.entry) && self.contains(&other.exit) && self.contains(&other.apex)
    }

    pub fn vertices(&self) -> [&Point2; 3] {
        [&self.entry, &self.exit, &self.apex]
    }
}

/// The default root triangle A=(0,0), B=(2,0), C=(1,1), of area exactly 1.
pub fn default_root() -> OrientedTriangle {
    OrientedTriangle {
        entry: Point2::new(int(0), int(0)),
        exit: Point2::new(int(2), int(0)),
        apex: Point2::new(int(1), int(1)),
    }
}

/// `p ↦ L·p + t` with an invertible linear part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineMap {
    linear: [[Rational; 2]; 2],
    translation: [Rational; 2],
}

impl AffineMap {
    pub fn new(linear: [[Rational; 2]; 2], translation: [Rational; 2]) -> Result<Self> {
        let map = AffineMap {
            linear,
            translation,
        };
        if map.determinant().is_zero() {
            return Err(Error::Degenerate("affine map"));
        }
        Ok(map)
    }

    /// Uniform scale by `scale` followed by translation.
    pub fn translate_scale(scale: Rational, dx: Rational, dy: Rational) -> Result<Self> {
        AffineMap::new([[scale.clone(), int(0)], [int(0), scale]], [dx, dy])
    }

    pub fn determinant(&self) -> Rational {
        let [[a, b], [c, d]] = &self.linear;
        a * d - b * c
    }

    pub fn apply(&self, p: &Point2) -> Point2 {
        let [[a, b], [c, d]] = &self.linear;
        Point2::new(
            a * &p.x + b * &p.y + &self.translation[0],
            c * &p.x + d * &p.y + &self.translation[1],
        )
    }

    pub fn apply_triangle(&self, t: &OrientedTriangle) -> OrientedTriangle {
        OrientedTriangle {
            entry: self.apply(&t.entry),
            exit: self.apply(&t.exit),
            apex: self.apply(&t.apex),
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        let [[a, b], [c, d]] = &self.linear;
        let [[e, f], [g, h]] = &inner.linear;
        let t = self.apply(&Point2::new(
            inner.translation[0].clone(),
            inner.translation[1].clone(),
        ));
        AffineMap {
            linear: [
                [a * e + b * g, a * f + b * h],
                [c * e + d * g, c * f + d * h],
            ],
            translation: [t.x, t.y],
        }
    }
}
