//! Invariant harness for both constructions.
//!
//! Each family has a fixed registry of named checks. Every check is an exact
//! comparison; the only finite-window check is the Knopp diameter decay, whose
//! window is stated in the check's detail. Reports list every registered check
//! once, sorted by name, and carry a reproducible witness on failure.

use std::collections::HashSet;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::geometry::{polyline_self_intersection, Point2};
use crate::knopp::{AddressedTriangle, ChainLevel};
use crate::lance_thomas::{self, cantor_factor, check_product, ParamMap, Piece};
use crate::scalar::{format_rational, int, pow2_inv, ratio, Exact, Rational};
use crate::schedules::LanceThomasSchedule;

/// Knopp polylines above this depth are not brute-forced for simplicity.
pub const KNOPP_INJECTIVITY_MAX_DEPTH: usize = 8;
/// Lance–Thomas polylines above this generation are not brute-forced.
pub const LT_INJECTIVITY_MAX_GENERATION: usize = 4;
/// Number of consecutive levels checked for diameter decay past `n₀`.
pub const DECAY_WINDOW: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_us: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub family: &'static str,
    pub generation: usize,
    pub parameter: String,
    pub checks: Vec<CheckResult>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    /// Copy with timing removed; two runs on the same input compare equal.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        for c in &mut out.checks {
            c.elapsed_us = None;
        }
        out
    }

    pub fn to_json(&self, include_timing: bool) -> String {
        let report = if include_timing {
            self.clone()
        } else {
            self.without_timing()
        };
        serde_json::to_string_pretty(&report).expect("report serializes")
    }
}

enum Outcome {
    Pass(String),
    Fail { detail: String, witness: String },
    Skipped(String),
}

fn fail(detail: impl Into<String>, witness: impl Into<String>) -> Outcome {
    Outcome::Fail {
        detail: detail.into(),
        witness: witness.into(),
    }
}

type Check<C> = (&'static str, fn(&C) -> Outcome);

fn run<C: Sync>(registry: &[Check<C>], ctx: &C) -> Vec<CheckResult> {
    let mut results: Vec<CheckResult> = registry
        .par_iter()
        .map(|(name, check)| {
            let started = Instant::now();
            let outcome = check(ctx);
            let elapsed_us = Some(started.elapsed().as_micros() as u64);
            let (status, detail, witness) = match outcome {
                Outcome::Pass(d) => (Status::Pass, d, None),
                Outcome::Fail { detail, witness } => (Status::Fail, detail, Some(witness)),
                Outcome::Skipped(d) => (Status::Skipped, d, None),
            };
            CheckResult {
                name,
                status,
                detail,
                witness,
                elapsed_us,
            }
        })
        .collect();
    results.sort_by_key(|r| r.name);
    results
}

struct KnoppContext<'a> {
    chain: &'a ChainLevel,
    /// Levels `0..depth` rebuilt from the schedule; the chain itself is the
    /// final level.
    coarser: Vec<Vec<AddressedTriangle>>,
}

impl KnoppContext<'_> {
    fn level(&self, k: usize) -> &[AddressedTriangle] {
        if k == self.chain.depth() {
            self.chain.triangles()
        } else {
            &self.coarser[k]
        }
    }
}

fn knopp_registry<'a>() -> [Check<KnoppContext<'a>>; 6] {
    [
        ("chain_connectivity", knopp_connectivity),
        ("diameter_decay", knopp_diameter_decay),
        ("nesting", knopp_nesting),
        ("polyline_injectivity", knopp_injectivity),
        ("total_area", knopp_total_area),
        ("triangle_area", knopp_triangle_area),
    ]
}

pub fn knopp_check_names() -> Vec<&'static str> {
    knopp_registry().iter().map(|(n, _)| *n).collect()
}

/// Runs every registered Knopp check on `chain`.
pub fn check_knopp(chain: &ChainLevel) -> CheckReport {
    let curve = chain.curve();
    let mut coarser = curve.levels(chain.depth()).unwrap_or_default();
    coarser.pop();
    let ctx = KnoppContext { chain, coarser };
    CheckReport {
        family: "knopp",
        generation: chain.depth(),
        parameter: format!("beta={}", Exact(chain.beta())),
        checks: run(&knopp_registry(), &ctx),
    }
}

fn knopp_connectivity(ctx: &KnoppContext) -> Outcome {
    let tris = ctx.chain.triangles();
    let root = ctx.chain.curve().root();
    if tris.first().map(|t| &t.shape.entry) != Some(&root.entry) {
        return fail("chain does not start at the root entry", "address 0…0");
    }
    if tris.last().map(|t| &t.shape.exit) != Some(&root.exit) {
        return fail("chain does not end at the root exit", "address 1…1");
    }
    for w in tris.windows(2) {
        if w[0].shape.exit != w[1].shape.entry {
            return fail(
                "exit vertex differs from the next entry vertex",
                format!("{} -> {}", w[0].address, w[1].address),
            );
        }
    }
    Outcome::Pass(format!(
        "{} consecutive pairs connected",
        tris.len().saturating_sub(1)
    ))
}

fn knopp_nesting(ctx: &KnoppContext) -> Outcome {
    let depth = ctx.chain.depth();
    if depth == 0 {
        return Outcome::Pass("depth 0: nothing nested".into());
    }
    for k in 1..=depth {
        let (parents, children) = (ctx.level(k - 1), ctx.level(k));
        if children.len() != 2 * parents.len() {
            return fail("wrong triangle count", format!("level {k}"));
        }
        if let Some(child) = children
            .par_iter()
            .enumerate()
            .find_first(|(i, c)| !parents[i / 2].shape.contains_triangle(&c.shape))
            .map(|(_, c)| c)
        {
            return fail(
                "child triangle leaves its parent",
                format!("address {}", child.address),
            );
        }
    }
    Outcome::Pass(format!("levels 1..={depth} nested in their parents"))
}

fn knopp_total_area(ctx: &KnoppContext) -> Outcome {
    let total = ctx
        .chain
        .triangles()
        .iter()
        .fold(Rational::zero(), |acc, t| acc + t.shape.area());
    let expected = ctx.chain.expected_total();
    if &total == expected {
        Outcome::Pass(format!("total area = p_n = {}", Exact(expected)))
    } else {
        fail(
            format!("total area {} != p_n = {}", Exact(&total), Exact(expected)),
            format!("depth {}", ctx.chain.depth()),
        )
    }
}

fn knopp_triangle_area(ctx: &KnoppContext) -> Outcome {
    let depth = ctx.chain.depth();
    let expected = ctx.chain.expected_total() * pow2_inv(depth);
    let bad = ctx
        .chain
        .triangles()
        .par_iter()
        .find_first(|t| t.shape.area() != expected || t.area != expected);
    match bad {
        Some(t) => fail(
            format!(
                "area {} (cached {}) != p_n/2^n = {}",
                Exact(&t.shape.area()),
                Exact(&t.area),
                Exact(&expected)
            ),
            format!("address {}", t.address),
        ),
        None => Outcome::Pass(format!("every triangle has area {}", Exact(&expected))),
    }
}

fn knopp_injectivity(ctx: &KnoppContext) -> Outcome {
    let depth = ctx.chain.depth();
    if depth > KNOPP_INJECTIVITY_MAX_DEPTH {
        return Outcome::Skipped(format!(
            "depth {depth} above brute-force limit {KNOPP_INJECTIVITY_MAX_DEPTH}"
        ));
    }
    let vertices = ctx.chain.dyadic_vertices();
    match polyline_self_intersection(&vertices) {
        Some((i, j)) => fail(
            "dyadic-vertex polyline is not simple",
            format!("segments {i} and {j} (depth {depth})"),
        ),
        None => Outcome::Pass(format!(
            "{} segments, no intersecting pair",
            vertices.len() - 1
        )),
    }
}

fn knopp_diameter_decay(ctx: &KnoppContext) -> Outcome {
    let schedule = ctx.chain.curve().schedule();
    let depth = ctx.chain.depth();
    let n0 = match schedule.first_small_index(&ratio(1, 8)) {
        Ok(n0) => n0,
        Err(e) => return Outcome::Skipped(format!("no n0 in range: {e}")),
    };
    if depth < n0 + 3 {
        return Outcome::Skipped(format!("window empty: n0 = {n0}, depth = {depth}"));
    }
    let last = (n0 + DECAY_WINDOW - 1).min(depth - 3);
    let max_diam = |k: usize| {
        ctx.level(k)
            .iter()
            .map(|t| t.shape.diameter_sq())
            .max()
            .unwrap_or_else(Rational::zero)
    };
    let factor = ratio(9, 16);
    let diams: Vec<Rational> = (n0..=last + 3).map(max_diam).collect();
    for n in n0..=last {
        let (now, later) = (&diams[n - n0], &diams[n + 3 - n0]);
        if later > &(&factor * now) {
            return fail(
                format!(
                    "max diam² {} at level {} exceeds 9/16 · {} at level {n}",
                    Exact(later),
                    n + 3,
                    Exact(now)
                ),
                format!("level {n}"),
            );
        }
    }
    Outcome::Pass(format!(
        "window n in [{n0}, {last}]: max diam²(V_(n+3)) <= 9/16 max diam²(V_n)"
    ))
}

struct LtContext<'a> {
    map: &'a ParamMap,
    schedule: &'a LanceThomasSchedule,
    /// Generations `0..n` rebuilt from the schedule; `map` is generation `n`.
    coarser: Vec<ParamMap>,
}

impl LtContext<'_> {
    fn gen(&self, k: usize) -> &ParamMap {
        if k == self.map.generation() {
            self.map
        } else {
            &self.coarser[k]
        }
    }
}

fn lt_registry<'a>() -> [Check<LtContext<'a>>; 7] {
    [
        ("cauchy_bound", lt_cauchy),
        ("joint_stability", lt_joint_stability),
        ("measure_chain", lt_measure_chain),
        ("polyline_injectivity", lt_injectivity),
        ("product_structure", lt_product),
        ("segment_count", lt_segment_count),
        ("seven_length_identity", lt_seven_lengths),
    ]
}

pub fn lance_thomas_check_names() -> Vec<&'static str> {
    lt_registry().iter().map(|(n, _)| *n).collect()
}

/// Runs every registered Lance–Thomas check on `map`.
pub fn check_lance_thomas(map: &ParamMap, schedule: &LanceThomasSchedule) -> CheckReport {
    let n = map.generation();
    let coarser = (0..n)
        .into_par_iter()
        .map(|k| lance_thomas::generation(schedule, k).unwrap_or_else(|_| ParamMap::initial()))
        .collect();
    let ctx = LtContext {
        map,
        schedule,
        coarser,
    };
    CheckReport {
        family: "lance-thomas",
        generation: n,
        parameter: format!("alpha={}", Exact(schedule.alpha())),
        checks: run(&lt_registry(), &ctx),
    }
}

fn piece_len(s: &lance_thomas::Breakpoint, e: &lance_thomas::Breakpoint) -> Rational {
    &e.t - &s.t
}

fn lt_seven_lengths(ctx: &LtContext) -> Outcome {
    let n = ctx.map.generation();
    if n > ctx.schedule.horizon() {
        return fail(
            "generation beyond schedule horizon",
            format!("generation {n}"),
        );
    }
    for k in 0..=n {
        let map = ctx.gen(k);
        let total = map
            .iter_pieces()
            .fold(Rational::zero(), |acc, (_, s, e)| acc + piece_len(s, e));
        if total != Rational::one() {
            return fail(
                format!("lengths sum to {}", Exact(&total)),
                format!("generation {k}"),
            );
        }
        for (i, (piece, s, e)) in map.iter_pieces().enumerate() {
            let rect = (&e.point.x - &s.point.x) * (&e.point.y - &s.point.y);
            let rect = if rect < Rational::zero() { -rect } else { rect };
            if rect != piece_len(s, e) {
                return fail(
                    "interval length differs from the area of the rectangle spanned by its segment",
                    format!("generation {k}, piece {i} ({})", describe(piece)),
                );
            }
        }
    }
    for k in 0..n {
        let (parent, child) = (ctx.gen(k), ctx.gen(k + 1));
        let child_pieces: Vec<_> = child.iter_pieces().collect();
        let mut c = 0;
        for (piece, s, e) in parent.iter_pieces() {
            let span = if matches!(piece, Piece::Diagonal(_)) {
                7
            } else {
                1
            };
            let Some(group) = child_pieces.get(c..c + span) else {
                return fail(
                    "child generation too short",
                    format!("generation {}", k + 1),
                );
            };
            let sum = group
                .iter()
                .fold(Rational::zero(), |acc, (_, cs, ce)| acc + piece_len(cs, ce));
            if sum != piece_len(s, e) || group[0].1.t != s.t {
                return fail(
                    format!(
                        "{} parts sum to {} instead of {}",
                        span,
                        Exact(&sum),
                        Exact(&piece_len(s, e))
                    ),
                    format!("generation {k} -> {}, {}", k + 1, describe(piece)),
                );
            }
            c += span;
        }
    }
    Outcome::Pass(format!(
        "seven-part sums and rectangle lengths exact for generations 0..={n}"
    ))
}

fn describe(piece: &Piece) -> String {
    match piece {
        Piece::Diagonal(a) => format!("cell {a}"),
        Piece::Joint(j) => format!("joint {j}"),
    }
}

fn lt_measure_chain(ctx: &LtContext) -> Outcome {
    let n = ctx.map.generation();
    let stage = ctx
        .map
        .cantor_intervals()
        .iter()
        .fold(Rational::zero(), |acc, (lo, hi)| acc + hi - lo);
    let chain = ctx
        .map
        .cells()
        .iter()
        .fold(Rational::zero(), |acc, c| acc + c.area());
    let q = ctx.schedule.q(n);
    let expected = q * q;
    if stage == expected && chain == expected {
        Outcome::Pass(format!("λ₁(C_2n) = λ₂(A_n) = q_n² = {}", Exact(&expected)))
    } else {
        fail(
            format!(
                "λ₁(C_2n) = {}, λ₂(A_n) = {}, q_n² = {}",
                Exact(&stage),
                Exact(&chain),
                Exact(&expected)
            ),
            format!("generation {n}"),
        )
    }
}

fn lt_joint_stability(ctx: &LtContext) -> Outcome {
    let n = ctx.map.generation();
    let current: HashSet<_> = ctx.map.joints().into_iter().collect();
    for k in 1..n {
        for (idx, joint) in ctx.gen(k).joints().iter().enumerate() {
            if !current.contains(joint) {
                return fail(
                    "joint moved between generations",
                    format!("generation {k} joint index {idx} (tag {})", joint.0),
                );
            }
        }
    }
    Outcome::Pass(format!("{} joints, earlier ones unchanged", current.len()))
}

fn lt_segment_count(ctx: &LtContext) -> Outcome {
    let n = ctx.map.generation() as u32;
    let expected = BigInt::from(2) * BigInt::from(4).pow(n) - 1;
    let got = BigInt::from(ctx.map.segment_count());
    if got == expected {
        Outcome::Pass(format!("{got} segments = 2·4^n − 1"))
    } else {
        fail(
            format!("{got} segments, expected {expected}"),
            format!("generation {n}"),
        )
    }
}

fn lt_injectivity(ctx: &LtContext) -> Outcome {
    let n = ctx.map.generation();
    if n > LT_INJECTIVITY_MAX_GENERATION {
        return Outcome::Skipped(format!(
            "generation {n} above brute-force limit {LT_INJECTIVITY_MAX_GENERATION}"
        ));
    }
    let vertices: Vec<Point2> = ctx
        .map
        .breakpoints()
        .iter()
        .map(|b| b.point.clone())
        .collect();
    match polyline_self_intersection(&vertices) {
        Some((i, j)) => fail(
            "polyline is not simple",
            format!("segments {i} and {j} (generation {n})"),
        ),
        None => Outcome::Pass(format!(
            "{} segments, no intersecting pair",
            vertices.len() - 1
        )),
    }
}

fn lt_cauchy(ctx: &LtContext) -> Outcome {
    let n = ctx.map.generation();
    let mut worst = Rational::zero();
    for k in 0..n {
        let (coarse, fine) = (ctx.gen(k), ctx.gen(k + 1));
        let side = ctx.schedule.side(k);
        let bound = int(2) * &side * &side;
        for b in fine.breakpoints() {
            let Ok(p) = coarse.eval(&b.t) else {
                return fail("breakpoint outside [0,1]", format!("t = {}", Exact(&b.t)));
            };
            let d = p.point.dist_sq(&b.point);
            if d > bound {
                return fail(
                    format!(
                        "displacement² {} exceeds 2·side² = {}",
                        Exact(&d),
                        Exact(&bound)
                    ),
                    format!(
                        "generations {k} -> {}, t = {}",
                        k + 1,
                        format_rational(&b.t)
                    ),
                );
            }
            if d > worst {
                worst = d;
            }
        }
    }
    Outcome::Pass(format!(
        "max breakpoint displacement² {} within bound for generations 0..{n}",
        Exact(&worst)
    ))
}

fn lt_product(ctx: &LtContext) -> Outcome {
    let n = ctx.map.generation();
    let factor = match cantor_factor(ctx.schedule, n) {
        Ok(f) => f,
        Err(e) => return fail(e.to_string(), format!("generation {n}")),
    };
    match check_product(&ctx.map.cells(), &factor) {
        Ok(()) => Outcome::Pass(format!(
            "B_n = K_n × K_n with {} factor intervals",
            factor.len()
        )),
        Err(e) => fail(e.to_string(), format!("generation {n}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knopp::KnoppCurve;
    use crate::schedules::KnoppSchedule;

    fn knopp_chain(depth: usize, horizon: usize) -> ChainLevel {
        KnoppCurve::with_default_root(KnoppSchedule::new(ratio(1, 2), horizon).unwrap())
            .build_chain(depth)
            .unwrap()
    }

    #[test]
    fn knopp_depth_six_passes() {
        let report = check_knopp(&knopp_chain(6, 6));
        assert!(report.passed(), "{}", report.to_json(false));
        assert_eq!(report.checks.len(), knopp_check_names().len());
        assert_eq!(report.get("diameter_decay").unwrap().status, Status::Pass);
    }

    #[test]
    fn knopp_depth_zero() {
        let report = check_knopp(&knopp_chain(0, 0));
        assert!(report.passed());
        assert_eq!(report.get("nesting").unwrap().status, Status::Pass);
        assert_eq!(report.get("total_area").unwrap().status, Status::Pass);
        assert_eq!(
            report.get("diameter_decay").unwrap().status,
            Status::Skipped
        );
    }

    #[test]
    fn knopp_corrupted_apex_is_caught() {
        let mut chain = knopp_chain(4, 4);
        chain.triangles_mut()[5].shape.apex.y += ratio(1, 3);
        let report = check_knopp(&chain);
        assert!(!report.passed());
        let area = report.get("triangle_area").unwrap();
        assert_eq!(area.status, Status::Fail);
        assert_eq!(area.witness.as_deref(), Some("address 0101"));
        let nest = report.get("nesting").unwrap();
        assert_eq!(nest.status, Status::Fail);
        assert_eq!(nest.witness.as_deref(), Some("address 0101"));
    }

    #[test]
    fn reports_are_deterministic() {
        let chain = knopp_chain(5, 5);
        assert_eq!(
            check_knopp(&chain).to_json(false),
            check_knopp(&chain).to_json(false)
        );
        let sched = LanceThomasSchedule::new(ratio(1, 2), 2).unwrap();
        let map = lance_thomas::generation(&sched, 2).unwrap();
        assert_eq!(
            check_lance_thomas(&map, &sched).without_timing(),
            check_lance_thomas(&map, &sched).without_timing()
        );
    }

    #[test]
    fn lance_thomas_generation_three_passes() {
        let sched = LanceThomasSchedule::new(ratio(1, 2), 3).unwrap();
        let map = lance_thomas::generation(&sched, 3).unwrap();
        let report = check_lance_thomas(&map, &sched);
        assert!(report.passed(), "{}", report.to_json(false));
        assert_eq!(report.checks.len(), lance_thomas_check_names().len());
        assert!(report
            .get("segment_count")
            .unwrap()
            .detail
            .starts_with("127 "));
    }

    #[test]
    fn lance_thomas_corrupted_joint_is_caught() {
        let sched = LanceThomasSchedule::new(ratio(1, 2), 3).unwrap();
        let mut map = lance_thomas::generation(&sched, 3).unwrap();
        // endpoint of the generation-1 central joint
        let idx = map
            .iter_pieces()
            .position(|(p, _, _)| {
                matches!(p, Piece::Joint(j) if j.parent.generation() == 0 && j.slot == 1)
            })
            .unwrap();
        map.breakpoints_mut()[idx + 1].point.y += ratio(1, 100);
        let report = check_lance_thomas(&map, &sched);
        let joint = report.get("joint_stability").unwrap();
        assert_eq!(joint.status, Status::Fail);
        assert_eq!(
            joint.witness.as_deref(),
            Some("generation 1 joint index 1 (tag :1)")
        );
        assert!(!report.passed());
    }

    #[test]
    fn check_names_are_sorted_and_unique() {
        for names in [knopp_check_names(), lance_thomas_check_names()] {
            let mut sorted = names.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted, names);
        }
    }
}
