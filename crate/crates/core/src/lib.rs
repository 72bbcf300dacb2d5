//! Exact construction, evaluation and verification of area-filling curves.
//!
//! Two families are provided:
//!
//! * [`knopp`]: the homogeneous Knopp curve, built from nested chains of
//!   triangles whose areas follow a [`schedules::KnoppSchedule`]. Every
//!   parameter interval of length `ℓ` maps onto an arc of area `β·ℓ`.
//! * [`lance_thomas`]: corner-square chains over the unit square, parametrized
//!   on a symmetric Cantor set, with essential image `K × K`.
//!
//! [`reparam`] turns any positive curve with a computable area profile into a
//! homogeneously parametrized one, [`verify`] runs the exact invariants of
//! both constructions, and [`svg`] draws them.
//!
//! All geometry is exact rational arithmetic; floating point never appears.

pub mod curve;
pub mod error;
pub mod geometry;
pub mod knopp;
pub mod lance_thomas;
pub mod reparam;
pub mod scalar;
pub mod schedules;
pub mod svg;
pub mod verify;

pub use curve::{CurveEvaluator, CurvePoint, Enclosure};
pub use error::{Error, Result};
pub use geometry::{AffineMap, OrientedTriangle, Point2, Segment};
pub use knopp::{ArcArea, BinaryAddress, ChainLevel, KnoppCurve};
pub use lance_thomas::{ParamMap, QuadAddress, SquareCell};
pub use scalar::{parse_rational, Rational};
pub use schedules::{KnoppSchedule, LanceThomasSchedule};
pub use svg::{render_knopp, render_lt, SvgOptions};
pub use verify::{check_knopp, check_lance_thomas, CheckReport, Status};
