//! Homogeneous Knopp curve: nested chains of triangles.
//!
//! Each step splits a triangle `(entry P, exit Q, apex R)` by removing the
//! middle triangle `D R E` with base `DE` centred on `PQ`:
//!
//! ```text
//!             R
//!            /|\
//!           / | \
//!          /  |  \
//!         P---D-E---Q      |DE| = r·|PQ|
//! ```
//!
//! leaving child 0 `(P, R, D)` and child 1 `(R, Q, E)`, each with area
//! `(1 − r)/2` of the parent. With the ratio `r_k` at step `k`, every triangle
//! of the depth-`n` chain has area `p_n / 2ⁿ` and the limit curve satisfies
//! `λ₂(γ([j/2ⁿ, (j+1)/2ⁿ])) = β/2ⁿ`.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{CurveEvaluator, CurvePoint};
use crate::error::{out_of_range, Error, Result};
use crate::geometry::{default_root, OrientedTriangle, Point2};
use crate::scalar::{
    dyadic_floor, format_rational, int, is_dyadic_at, pow2_inv, serde_rational, Rational,
};
use crate::schedules::KnoppSchedule;

/// Path `ε₁…εₙ` from the root triangle; lexicographic order is chain order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BinaryAddress(Vec<u8>);

impl BinaryAddress {
    pub fn root() -> Self {
        BinaryAddress(Vec::new())
    }

    /// The `depth`-bit expansion of `index`, most significant bit first.
    pub fn from_index(depth: usize, index: usize) -> Self {
        debug_assert!(depth >= usize::BITS as usize || index >> depth == 0);
        BinaryAddress(
            (0..depth)
                .rev()
                .map(|shift| ((index >> shift) & 1) as u8)
                .collect(),
        )
    }

    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Format(format!("binary address digits {bits:?}")));
        }
        Ok(BinaryAddress(bits))
    }

    pub fn index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn child(&self, bit: u8) -> Self {
        let mut bits = self.0.clone();
        bits.push(bit);
        BinaryAddress(bits)
    }

    pub fn parent(&self) -> Option<Self> {
        let (_, rest) = self.0.split_last()?;
        Some(BinaryAddress(rest.to_vec()))
    }
}

impl fmt::Display for BinaryAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for BinaryAddress {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.bytes()
            .map(|c| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(Error::Format(format!("binary address {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BinaryAddress)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressedTriangle {
    pub shape: OrientedTriangle,
    pub address: BinaryAddress,
    /// Cached `|signed_area(shape)|`.
    pub area: Rational,
}

impl AddressedTriangle {
    pub fn root(shape: OrientedTriangle) -> Self {
        AddressedTriangle {
            area: shape.area(),
            shape,
            address: BinaryAddress::root(),
        }
    }
}

/// Removes the centred fraction `r` of the base and returns the two children
/// in chain order.
pub fn subdivide(
    parent: &AddressedTriangle,
    r: &Rational,
) -> Result<(AddressedTriangle, AddressedTriangle)> {
    if !(r > &Rational::zero() && r < &Rational::one()) {
        return Err(out_of_range("r", format_rational(r), "]0,1["));
    }
    if parent.shape.signed_area().is_zero() {
        return Err(Error::Degenerate("triangle"));
    }
    let OrientedTriangle { entry, exit, apex } = &parent.shape;
    let half = int(1) / int(2);
    let keep = (Rational::one() - r) * &half;
    let d = entry.lerp(exit, &keep);
    let e = entry.lerp(exit, &((Rational::one() + r) * &half));
    let child_area = &parent.area * &keep;
    let left = AddressedTriangle {
        shape: OrientedTriangle {
            entry: entry.clone(),
            exit: apex.clone(),
            apex: d,
        },
        address: parent.address.child(0),
        area: child_area.clone(),
    };
    let right = AddressedTriangle {
        shape: OrientedTriangle {
            entry: apex.clone(),
            exit: exit.clone(),
            apex: e,
        },
        address: parent.address.child(1),
        area: child_area,
    };
    Ok((left, right))
}

/// Exact arc measure at a finite horizon together with its limit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArcArea {
    #[serde(with = "serde_rational")]
    pub value: Rational,
    #[serde(with = "serde_rational")]
    pub limit: Rational,
}

impl ArcArea {
    pub fn residual(&self) -> Rational {
        &self.value - &self.limit
    }
}

/// Schedule plus root triangle: everything needed to descend to any address.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnoppCurve {
    schedule: KnoppSchedule,
    root: OrientedTriangle,
}

impl KnoppCurve {
    pub fn new(schedule: KnoppSchedule, root: OrientedTriangle) -> Result<Self> {
        let area = root.area();
        if area != Rational::one() {
            return Err(Error::RootArea(format_rational(&area)));
        }
        Ok(KnoppCurve { schedule, root })
    }

    /// Root `A=(0,0), B=(2,0), C=(1,1)`.
    pub fn with_default_root(schedule: KnoppSchedule) -> Self {
        KnoppCurve {
            schedule,
            root: default_root(),
        }
    }

    pub fn schedule(&self) -> &KnoppSchedule {
        &self.schedule
    }

    pub fn root(&self) -> &OrientedTriangle {
        &self.root
    }

    pub fn beta(&self) -> &Rational {
        self.schedule.beta()
    }

    /// The triangle at `address`, descending one subdivision per bit.
    pub fn triangle(&self, address: &BinaryAddress) -> Result<AddressedTriangle> {
        self.schedule.check_depth(address.depth())?;
        let mut current = AddressedTriangle::root(self.root.clone());
        for (k, &bit) in address.bits().iter().enumerate() {
            let (left, right) = subdivide(&current, self.schedule.r(k + 1))?;
            current = if bit == 0 { left } else { right };
        }
        Ok(current)
    }

    pub fn build_chain(&self, depth: usize) -> Result<ChainLevel> {
        let triangles = self.levels(depth)?.pop().expect("level 0 always present");
        Ok(ChainLevel {
            depth,
            curve: self.clone(),
            triangles,
        })
    }

    /// Triangle lists of `V_0, …, V_depth`.
    pub fn levels(&self, depth: usize) -> Result<Vec<Vec<AddressedTriangle>>> {
        self.schedule.check_depth(depth)?;
        let mut levels = vec![vec![AddressedTriangle::root(self.root.clone())]];
        for k in 1..=depth {
            let next = self.split_all(&levels[k - 1], k)?;
            levels.push(next);
        }
        Ok(levels)
    }

    /// Applies step `k` (ratio `r_k`) to every triangle, keeping address order.
    fn split_all(&self, level: &[AddressedTriangle], k: usize) -> Result<Vec<AddressedTriangle>> {
        let r = self.schedule.r(k);
        let pairs = level
            .par_iter()
            .map(|t| subdivide(t, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(pairs.into_iter().flat_map(|(a, b)| [a, b]).collect())
    }

    /// All depth-`m` descendants of the depth-`n` triangle `j`, in order.
    pub fn subtree(&self, n: usize, j: usize, m: usize) -> Result<Vec<AddressedTriangle>> {
        check_index(n, j, false)?;
        if m < n {
            return Err(out_of_range("horizon", m, "[n, schedule horizon]"));
        }
        self.schedule.check_depth(m)?;
        let mut level = vec![self.triangle(&BinaryAddress::from_index(n, j))?];
        for k in n + 1..=m {
            level = self.split_all(&level, k)?;
        }
        Ok(level)
    }

    /// `γ(j/2ⁿ)` exactly: the entry vertex of triangle `j` at depth `n`, or the
    /// final exit vertex for `j = 2ⁿ`.
    pub fn gamma_dyadic(&self, n: usize, j: usize) -> Result<Point2> {
        check_index(n, j, true)?;
        self.schedule.check_depth(n)?;
        if j == 1usize << n {
            return Ok(self.root.exit.clone());
        }
        Ok(self.triangle(&BinaryAddress::from_index(n, j))?.shape.entry)
    }

    /// Evaluates `γ(t)`: exact at dyadic `t` resolvable at `depth`, otherwise
    /// the entry vertex of the depth-level triangle containing `γ(t)`, with that
    /// triangle's squared diameter as error radius.
    pub fn gamma_eval(&self, t: &Rational, depth: usize) -> Result<CurvePoint> {
        check_unit_closed("t", t)?;
        self.schedule.check_depth(depth)?;
        let j = dyadic_floor(t, depth);
        if is_dyadic_at(t, depth) {
            return Ok(CurvePoint {
                point: self.gamma_dyadic(depth, j)?,
                error_radius_sq: Rational::zero(),
            });
        }
        let tri = self.triangle(&BinaryAddress::from_index(depth, j))?;
        Ok(CurvePoint {
            error_radius_sq: tri.shape.diameter_sq(),
            point: tri.shape.entry,
        })
    }

    /// Area of the horizon-`m` triangles inside triangle `(n, j)`, summed
    /// geometrically, and its limit `β/2ⁿ`.
    pub fn arc_area(&self, n: usize, j: usize, m: usize) -> Result<ArcArea> {
        let value = self
            .subtree(n, j, m)?
            .iter()
            .fold(Rational::zero(), |acc, t| acc + t.shape.area());
        Ok(ArcArea {
            value,
            limit: self.beta() * pow2_inv(n),
        })
    }

    /// Evaluator bound to a fixed resolution depth.
    pub fn at_depth(&self, depth: usize) -> KnoppEvaluator<'_> {
        KnoppEvaluator { curve: self, depth }
    }
}

pub struct KnoppEvaluator<'a> {
    curve: &'a KnoppCurve,
    depth: usize,
}

impl CurveEvaluator for KnoppEvaluator<'_> {
    fn eval(&self, t: &Rational) -> Result<CurvePoint> {
        self.curve.gamma_eval(t, self.depth)
    }
}

/// Free-function form of [`KnoppCurve::build_chain`].
pub fn build_chain(
    schedule: &KnoppSchedule,
    root: OrientedTriangle,
    depth: usize,
) -> Result<ChainLevel> {
    KnoppCurve::new(schedule.clone(), root)?.build_chain(depth)
}

fn check_index(n: usize, j: usize, inclusive: bool) -> Result<()> {
    if n >= usize::BITS as usize - 1 {
        return Err(out_of_range("n", n, "[0, 62]"));
    }
    let count = 1usize << n;
    if j > count || (j == count && !inclusive) {
        return Err(out_of_range("j", j, "[0, 2^n]"));
    }
    Ok(())
}

fn check_unit_closed(name: &'static str, t: &Rational) -> Result<()> {
    if t < &Rational::zero() || t > &Rational::one() {
        return Err(out_of_range(name, format_rational(t), "[0,1]"));
    }
    Ok(())
}

/// The ordered chain `V_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainLevel {
    depth: usize,
    curve: KnoppCurve,
    triangles: Vec<AddressedTriangle>,
}

impl ChainLevel {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn curve(&self) -> &KnoppCurve {
        &self.curve
    }

    pub fn beta(&self) -> &Rational {
        self.curve.beta()
    }

    pub fn triangles(&self) -> &[AddressedTriangle] {
        &self.triangles
    }

    /// Mutable access for fault injection in tests and tooling.
    pub fn triangles_mut(&mut self) -> &mut [AddressedTriangle] {
        &mut self.triangles
    }

    /// The total area the construction prescribes at this depth, `p_n`.
    pub fn expected_total(&self) -> &Rational {
        self.curve.schedule.p(self.depth)
    }

    /// Sum of the exact triangle areas.
    pub fn total_area(&self) -> Rational {
        self.triangles
            .iter()
            .fold(Rational::zero(), |acc, t| acc + t.shape.area())
    }

    /// The `2ⁿ + 1` points `γ(j/2ⁿ)`.
    pub fn dyadic_vertices(&self) -> Vec<Point2> {
        let mut out: Vec<Point2> = self
            .triangles
            .iter()
            .map(|t| t.shape.entry.clone())
            .collect();
        if let Some(last) = self.triangles.last() {
            out.push(last.shape.exit.clone());
        }
        out
    }

    pub fn gamma_dyadic(&self, j: usize) -> Result<Point2> {
        check_index(self.depth, j, true)?;
        Ok(match self.triangles.get(j) {
            Some(t) => t.shape.entry.clone(),
            None => self.triangles[j - 1].shape.exit.clone(),
        })
    }

    pub fn max_diameter_sq(&self) -> Rational {
        self.triangles
            .iter()
            .map(|t| t.shape.diameter_sq())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// Area of the slice of this chain lying in the depth-`n` triangle `j`.
    pub fn arc_area(&self, n: usize, j: usize) -> Result<ArcArea> {
        check_index(n, j, false)?;
        if n > self.depth {
            return Err(out_of_range("n", n, "[0, chain depth]"));
        }
        let span = 1usize << (self.depth - n);
        let value = self.triangles[j * span..(j + 1) * span]
            .iter()
            .fold(Rational::zero(), |acc, t| acc + t.shape.area());
        Ok(ArcArea {
            value,
            limit: self.beta() * pow2_inv(n),
        })
    }

    pub fn to_json(&self) -> String {
        let doc = ChainDoc {
            depth: self.depth,
            beta: self.beta().clone(),
            r: self.curve.schedule.ratios()[..self.depth].to_vec(),
            root: self.curve.root.clone(),
            triangles: self
                .triangles
                .iter()
                .map(|t| TriangleDoc {
                    address: t.address.to_string(),
                    entry: t.shape.entry.clone(),
                    exit: t.shape.exit.clone(),
                    apex: t.shape.apex.clone(),
                    area: t.area.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("chain serializes")
    }

    /// Parses a chain dump. Structure is validated (count, address order,
    /// cached areas); geometric checks are left to the verify harness.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ChainDoc = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if doc.r.len() != doc.depth {
            return Err(Error::Format("ratio list length must equal depth".into()));
        }
        let tolerance = (doc
            .r
            .iter()
            .fold(Rational::one(), |acc, r| acc * (Rational::one() - r))
            - &doc.beta)
            .abs();
        let schedule = KnoppSchedule::from_ratios(doc.beta, doc.r, &tolerance)?;
        let curve = KnoppCurve::new(schedule, doc.root)?;
        if doc.depth >= 40 || doc.triangles.len() != 1usize << doc.depth {
            return Err(Error::Format("triangle count must be 2^depth".into()));
        }
        let triangles = doc
            .triangles
            .into_iter()
            .enumerate()
            .map(|(i, t)| {
                let address: BinaryAddress = t.address.parse()?;
                if address != BinaryAddress::from_index(doc.depth, i) {
                    return Err(Error::Format(format!("triangle {i} has address {address}")));
                }
                let shape = OrientedTriangle {
                    entry: t.entry,
                    exit: t.exit,
                    apex: t.apex,
                };
                if shape.area() != t.area {
                    return Err(Error::Format(format!("cached area mismatch at {address}")));
                }
                Ok(AddressedTriangle {
                    shape,
                    address,
                    area: t.area,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainLevel {
            depth: doc.depth,
            curve,
            triangles,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ChainDoc {
    depth: usize,
    #[serde(with = "serde_rational")]
    beta: Rational,
    #[serde(with = "serde_rational::vec")]
    r: Vec<Rational>,
    root: OrientedTriangle,
    triangles: Vec<TriangleDoc>,
}

#[derive(Serialize, Deserialize)]
struct TriangleDoc {
    address: String,
    entry: Point2,
    exit: Point2,
    apex: Point2,
    #[serde(with = "serde_rational")]
    area: Rational,
}
