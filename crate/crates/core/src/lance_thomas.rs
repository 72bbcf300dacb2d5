//! Generalized Lance–Thomas curve over the unit square.
//!
//! Generation 1 places four squares of side `a₁/2` at the corners of `[0,1]²`
//! and visits them lower-left, upper-left, lower-right, upper-right, running
//! every square's diagonal from its lower-left to its upper-right corner:
//!
//! ```text
//!   +--+--------+--+
//!   | /|\      /| /|      diagonals  LL, UL, LR, UR
//!   |/ | \    / |/ |      joints     LL→UL, UL→LR (centre), LR→UR
//!   +--+  \  /  +--+
//!   |  |   \/   |  |
//!   +--+   /\   +--+
//!   | /|  /  \  | /|
//!   |/ | /    \ |/ |
//!   +--+--------+--+
//! ```
//!
//! `[0, 1]` is cut into seven intervals whose lengths are the areas of the
//! rectangles having the seven image segments as diagonals. Each later
//! generation replaces every diagonal by a translated and scaled copy of the
//! same pattern with the next coefficient; joints never move again.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveEvaluator, CurvePoint, Enclosure};
use crate::error::{out_of_range, Error, Result};
use crate::geometry::{Point2, Segment};
use crate::scalar::{format_rational, int, serde_rational, Rational};
use crate::schedules::LanceThomasSchedule;

/// Corner-square path; digit `0` lower-left, `1` upper-left, `2` lower-right,
/// `3` upper-right. Lexicographic order is curve order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuadAddress(Vec<u8>);

impl QuadAddress {
    pub fn root() -> Self {
        QuadAddress(Vec::new())
    }

    pub fn generation(&self) -> usize {
        self.0.len()
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn child(&self, digit: u8) -> Self {
        debug_assert!(digit < 4);
        let mut digits = self.0.clone();
        digits.push(digit);
        QuadAddress(digits)
    }

    /// Position in curve order among the `4ⁿ` cells of its generation.
    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &d| acc * 4 + d as usize)
    }
}

impl fmt::Display for QuadAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.0 {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl FromStr for QuadAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.bytes()
            .map(|c| match c {
                b'0'..=b'3' => Ok(c - b'0'),
                _ => Err(Error::Format(format!("quad address {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(QuadAddress)
    }
}

/// Axis-aligned square traversed along its rising diagonal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SquareCell {
    pub lower_left: Point2,
    pub side: Rational,
    pub address: QuadAddress,
}

impl SquareCell {
    pub fn entry(&self) -> Point2 {
        self.lower_left.clone()
    }

    pub fn exit(&self) -> Point2 {
        self.lower_left.offset(&self.side, &self.side)
    }

    pub fn area(&self) -> Rational {
        &self.side * &self.side
    }
}

/// A joint is identified by the cell whose refinement created it and its
/// slot (0: LL→UL, 1: centre, 2: LR→UR) inside that cell's pattern.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointTag {
    pub parent: QuadAddress,
    pub slot: u8,
}

impl fmt::Display for JointTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.parent, self.slot)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Piece {
    Diagonal(QuadAddress),
    Joint(JointTag),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Breakpoint {
    #[serde(with = "serde_rational")]
    pub t: Rational,
    pub point: Point2,
}

/// Piecewise-linear parametrization `γ_n`: breakpoints strictly increasing in
/// `t` from 0 to 1, piece `i` running from breakpoint `i` to `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamMap {
    generation: usize,
    breakpoints: Vec<Breakpoint>,
    pieces: Vec<Piece>,
}

/// Unit pattern of a refinement step, given the half coefficient `h = a/2`.
fn unit_pattern(h: &Rational) -> [(Rational, Rational); 8] {
    let one = Rational::one();
    let zero = Rational::zero();
    [
        (zero.clone(), zero.clone()),
        (h.clone(), h.clone()),
        (zero.clone(), &one - h),
        (h.clone(), one.clone()),
        (&one - h, zero),
        (one.clone(), h.clone()),
        (&one - h, &one - h),
        (one.clone(), one),
    ]
}

/// The seven interval-length fractions for coefficient `a`: rectangle areas of
/// the seven unit-pattern segments.
pub fn seven_lengths(a: &Rational) -> [Rational; 7] {
    let h = a / int(2);
    let diag = &h * &h;
    let side_joint = &h * (Rational::one() - a);
    let centre = Rational::one() - a;
    [
        diag.clone(),
        side_joint.clone(),
        diag.clone(),
        centre,
        diag.clone(),
        side_joint,
        diag,
    ]
}

impl ParamMap {
    /// Generation 0: the diagonal of the unit square over `[0, 1]`.
    pub fn initial() -> Self {
        ParamMap {
            generation: 0,
            breakpoints: vec![
                Breakpoint {
                    t: Rational::zero(),
                    point: Point2::origin(),
                },
                Breakpoint {
                    t: Rational::one(),
                    point: Point2::new(int(1), int(1)),
                },
            ],
            pieces: vec![Piece::Diagonal(QuadAddress::root())],
        }
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Mutable access for fault injection in tests and tooling.
    pub fn breakpoints_mut(&mut self) -> &mut [Breakpoint] {
        &mut self.breakpoints
    }

    pub fn segment_count(&self) -> usize {
        self.pieces.len()
    }

    /// Pieces as `(tag, start, end)` triples in curve order.
    pub fn iter_pieces(&self) -> impl Iterator<Item = (&Piece, &Breakpoint, &Breakpoint)> {
        self.pieces
            .iter()
            .zip(self.breakpoints.windows(2))
            .map(|(p, w)| (p, &w[0], &w[1]))
    }

    pub fn cells(&self) -> Vec<SquareCell> {
        self.iter_pieces()
            .filter_map(|(piece, start, end)| match piece {
                Piece::Diagonal(address) => Some(SquareCell {
                    side: &end.point.x - &start.point.x,
                    lower_left: start.point.clone(),
                    address: address.clone(),
                }),
                Piece::Joint(_) => None,
            })
            .collect()
    }

    /// Parameter intervals of the diagonal pieces: the stage `C_{2n}`.
    pub fn cantor_intervals(&self) -> Vec<(Rational, Rational)> {
        self.iter_pieces()
            .filter(|(piece, _, _)| matches!(piece, Piece::Diagonal(_)))
            .map(|(_, s, e)| (s.t.clone(), e.t.clone()))
            .collect()
    }

    pub fn joints(&self) -> Vec<(JointTag, Breakpoint, Breakpoint)> {
        self.iter_pieces()
            .filter_map(|(piece, s, e)| match piece {
                Piece::Joint(tag) => Some((tag.clone(), s.clone(), e.clone())),
                Piece::Diagonal(_) => None,
            })
            .collect()
    }

    pub fn segments(&self) -> Result<Vec<Segment>> {
        self.breakpoints
            .windows(2)
            .map(|w| Segment::new(w[0].point.clone(), w[1].point.clone()))
            .collect()
    }

    /// Index of a piece whose closed parameter interval contains `t`.
    fn locate(&self, t: &Rational) -> usize {
        let pos = self.breakpoints.partition_point(|b| &b.t <= t);
        pos.saturating_sub(1).min(self.pieces.len() - 1)
    }

    /// `γ_n(t)` with the squared uniform Cauchy bound `2·side²` inside a
    /// diagonal interval, and zero on joints and at breakpoints.
    pub fn eval(&self, t: &Rational) -> Result<CurvePoint> {
        check_unit_closed(t)?;
        let i = self.locate(t);
        let (start, end) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
        let frac = (t - &start.t) / (&end.t - &start.t);
        let point = start.point.lerp(&end.point, &frac);
        let interior = &start.t < t && t < &end.t;
        let error_radius_sq = match (&self.pieces[i], interior) {
            (Piece::Diagonal(_), true) => {
                let side = &end.point.x - &start.point.x;
                int(2) * &side * &side
            }
            _ => Rational::zero(),
        };
        Ok(CurvePoint {
            point,
            error_radius_sq,
        })
    }

    /// Refines every diagonal piece up to generation `to_generation`.
    pub fn refine(&self, schedule: &LanceThomasSchedule, to_generation: usize) -> Result<Self> {
        schedule.check_depth(to_generation)?;
        if to_generation < self.generation {
            return Err(out_of_range(
                "generation",
                to_generation,
                "[current generation, horizon]",
            ));
        }
        let mut map = self.clone();
        while map.generation < to_generation {
            map = map.refine_once(schedule.a(map.generation + 1));
        }
        Ok(map)
    }

    fn refine_once(&self, a: &Rational) -> Self {
        let h = a / int(2);
        let pattern = unit_pattern(&h);
        let fractions = seven_lengths(a);

        let expanded: Vec<(Vec<Breakpoint>, Vec<Piece>)> = self
            .pieces
            .par_iter()
            .zip(self.breakpoints.par_windows(2))
            .map(|(piece, w)| {
                let (start, end) = (&w[0], &w[1]);
                match piece {
                    Piece::Joint(_) => (vec![start.clone()], vec![piece.clone()]),
                    Piece::Diagonal(address) => {
                        expand_cell(address, start, end, &pattern, &fractions)
                    }
                }
            })
            .collect();

        let mut breakpoints = Vec::with_capacity(self.breakpoints.len() * 4);
        let mut pieces = Vec::with_capacity(self.pieces.len() * 4);
        for (bps, ps) in expanded {
            breakpoints.extend(bps);
            pieces.extend(ps);
        }
        breakpoints.push(self.breakpoints.last().expect("non-empty map").clone());
        ParamMap {
            generation: self.generation + 1,
            breakpoints,
            pieces,
        }
    }

    pub fn to_json(&self, schedule: &LanceThomasSchedule) -> String {
        let doc = MapDoc {
            generation: self.generation,
            alpha: schedule.alpha().clone(),
            beta: schedule.beta(),
            cells: self
                .iter_pieces()
                .filter_map(|(piece, s, e)| match piece {
                    Piece::Diagonal(address) => Some(CellDoc {
                        address: address.to_string(),
                        lower_left: s.point.clone(),
                        side: &e.point.x - &s.point.x,
                        t0: s.t.clone(),
                        t1: e.t.clone(),
                    }),
                    Piece::Joint(_) => None,
                })
                .collect(),
            joints: self
                .joints()
                .into_iter()
                .map(|(tag, s, e)| JointDoc {
                    tag: tag.to_string(),
                    from: s.point,
                    to: e.point,
                    t0: s.t,
                    t1: e.t,
                })
                .collect(),
            cantor_intervals: self
                .cantor_intervals()
                .into_iter()
                .map(|(a, b)| [format_rational(&a), format_rational(&b)])
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("map serializes")
    }
}

/// Breakpoints (all but the final one) and pieces replacing one diagonal.
fn expand_cell(
    address: &QuadAddress,
    start: &Breakpoint,
    end: &Breakpoint,
    pattern: &[(Rational, Rational); 8],
    fractions: &[Rational; 7],
) -> (Vec<Breakpoint>, Vec<Piece>) {
    let side = &end.point.x - &start.point.x;
    let length = &end.t - &start.t;
    let mut t = start.t.clone();
    let mut bps = Vec::with_capacity(7);
    for (k, (ux, uy)) in pattern.iter().take(7).enumerate() {
        bps.push(Breakpoint {
            t: t.clone(),
            point: start.point.offset(&(&side * ux), &(&side * uy)),
        });
        t += &length * &fractions[k];
    }
    debug_assert_eq!(t, end.t, "seven lengths must fill the parent interval");
    let pieces = (0..7u8)
        .map(|k| {
            if k % 2 == 0 {
                Piece::Diagonal(address.child(k / 2))
            } else {
                Piece::Joint(JointTag {
                    parent: address.clone(),
                    slot: k / 2,
                })
            }
        })
        .collect();
    (bps, pieces)
}

fn check_unit_closed(t: &Rational) -> Result<()> {
    if t < &Rational::zero() || t > &Rational::one() {
        return Err(out_of_range("t", format_rational(t), "[0,1]"));
    }
    Ok(())
}

impl CurveEvaluator for ParamMap {
    fn eval(&self, t: &Rational) -> Result<CurvePoint> {
        ParamMap::eval(self, t)
    }
}

/// The generation-1 map `γ₁`.
pub fn first_generation(schedule: &LanceThomasSchedule) -> Result<ParamMap> {
    ParamMap::initial().refine(schedule, 1)
}

/// `γ_n` built from scratch.
pub fn generation(schedule: &LanceThomasSchedule, n: usize) -> Result<ParamMap> {
    ParamMap::initial().refine(schedule, n)
}

/// Stage `n` of the essential image: the `4ⁿ` cells of `A_n` and the `2ⁿ`
/// intervals of the symmetric Cantor stage `K_n`, with `B_n = K_n × K_n`
/// established by exact comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EssentialImage {
    pub cells: Vec<SquareCell>,
    pub factor: Vec<(Rational, Rational)>,
}

impl EssentialImage {
    pub fn factor_measure(&self) -> Rational {
        self.factor
            .iter()
            .fold(Rational::zero(), |acc, (lo, hi)| acc + hi - lo)
    }

    pub fn area(&self) -> Rational {
        self.cells
            .iter()
            .fold(Rational::zero(), |acc, c| acc + c.area())
    }
}

/// `K_n` from the one-dimensional recursion: keep the two end pieces of
/// relative length `a_k/2` of every interval.
pub fn cantor_factor(
    schedule: &LanceThomasSchedule,
    n: usize,
) -> Result<Vec<(Rational, Rational)>> {
    schedule.check_depth(n)?;
    let mut intervals = vec![(Rational::zero(), Rational::one())];
    for k in 1..=n {
        let h = schedule.a(k) / int(2);
        intervals = intervals
            .into_iter()
            .flat_map(|(lo, hi)| {
                let keep = (&hi - &lo) * &h;
                [(lo.clone(), &lo + &keep), (&hi - &keep, hi)]
            })
            .collect();
    }
    Ok(intervals)
}

pub fn essential_image_stage(schedule: &LanceThomasSchedule, n: usize) -> Result<EssentialImage> {
    let factor = cantor_factor(schedule, n)?;
    let cells = generation(schedule, n)?.cells();
    check_product(&cells, &factor)?;
    Ok(EssentialImage { cells, factor })
}

/// Checks that `cells` is exactly the set of squares `I × J`, `I, J ∈ factor`.
pub fn check_product(cells: &[SquareCell], factor: &[(Rational, Rational)]) -> Result<()> {
    if cells.len() != factor.len() * factor.len() {
        return Err(Error::ProductMismatch(format!(
            "{} cells for a factor of {} intervals",
            cells.len(),
            factor.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for cell in cells {
        let interval_at = |lo: &Rational| factor.iter().find(|(l, _)| l == lo);
        let x = interval_at(&cell.lower_left.x);
        let y = interval_at(&cell.lower_left.y);
        let fits =
            |iv: Option<&(Rational, Rational)>| iv.is_some_and(|(lo, hi)| hi - lo == cell.side);
        if !fits(x) || !fits(y) {
            return Err(Error::ProductMismatch(format!(
                "cell {} at {} side {} is not a product of factor intervals",
                cell.address,
                cell.lower_left,
                format_rational(&cell.side)
            )));
        }
        if !seen.insert((cell.lower_left.x.clone(), cell.lower_left.y.clone())) {
            return Err(Error::ProductMismatch(format!(
                "cell {} duplicates another cell",
                cell.address
            )));
        }
    }
    Ok(())
}

/// Encloses `F(t) = λ₂(γ([0, t])) = λ₁([0, t] ∩ C)` from the generation-`n`
/// map. Each stage interval carries Cantor mass `β/4ⁿ`; the bracket is exact
/// unless `t` lies strictly inside a stage interval.
pub fn area_profile(
    map: &ParamMap,
    schedule: &LanceThomasSchedule,
    t: &Rational,
) -> Result<Enclosure> {
    check_unit_closed(t)?;
    let cells = map.cantor_intervals();
    let mass = schedule.beta() / Rational::from_integer(num_bigint::BigInt::from(cells.len()));
    let resolved = cells.partition_point(|(_, hi)| hi <= t);
    let lower = &mass * Rational::from_integer(resolved.into());
    let straddles = cells
        .get(resolved)
        .is_some_and(|(lo, _)| lo.cmp(t) == Ordering::Less);
    Ok(if straddles {
        let upper = &lower + &mass;
        Enclosure::new(lower, upper)
    } else {
        Enclosure::exact(lower)
    })
}

#[derive(Serialize)]
struct MapDoc {
    generation: usize,
    #[serde(with = "serde_rational")]
    alpha: Rational,
    #[serde(with = "serde_rational")]
    beta: Rational,
    cells: Vec<CellDoc>,
    joints: Vec<JointDoc>,
    cantor_intervals: Vec<[String; 2]>,
}

#[derive(Serialize)]
struct CellDoc {
    address: String,
    lower_left: Point2,
    #[serde(with = "serde_rational")]
    side: Rational,
    #[serde(with = "serde_rational")]
    t0: Rational,
    #[serde(with = "serde_rational")]
    t1: Rational,
}

#[derive(Serialize)]
struct JointDoc {
    tag: String,
    from: Point2,
    to: Point2,
    #[serde(with = "serde_rational")]
    t0: Rational,
    #[serde(with = "serde_rational")]
    t1: Rational,
}
