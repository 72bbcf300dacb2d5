//! Homogeneous reparametrization.
//!
//! For a curve with total area `β` and arc-area profile
//! `F(t) = λ₂(γ([0, t]))`, the map `h⁻¹(t) = F(t)/β` is increasing; with `h`
//! its inverse, `γ ∘ h` satisfies `λ₂(γ(h([0, s]))) = β·s`.
//!
//! Profiles are breakpoint tables: exact at the breakpoints, enclosed between
//! them. A profile may declare zero-area arcs (flat pieces), which is how the
//! Lance–Thomas joints appear; on such a profile `h` maps a breakpoint value to
//! the whole flat parameter interval.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::curve::{CurveEvaluator, CurvePoint, Enclosure};
use crate::error::{out_of_range, Error, Result};
use crate::knopp::KnoppCurve;
use crate::lance_thomas::{self, ParamMap};
use crate::scalar::{format_rational, pow2_inv, serde_rational, to_decimal, Rational};
use crate::schedules::LanceThomasSchedule;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProfilePoint {
    #[serde(with = "serde_rational")]
    pub t: Rational,
    #[serde(with = "serde_rational")]
    pub mass: Rational,
}

/// Monotone table `t_i ↦ F(t_i)` with `t_0 = 0`, `t_last = 1`, `F(0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AreaProfile {
    points: Vec<ProfilePoint>,
    positive: bool,
}

impl AreaProfile {
    /// Profile of a positive curve: `F` must be strictly increasing.
    pub fn positive(points: Vec<ProfilePoint>) -> Result<Self> {
        Self::validate(&points)?;
        if let Some(w) = points.windows(2).find(|w| w[1].mass <= w[0].mass) {
            return Err(Error::NotPositive(format!(
                "F({}) = F({}) = {}",
                format_rational(&w[0].t),
                format_rational(&w[1].t),
                format_rational(&w[1].mass)
            )));
        }
        Ok(AreaProfile {
            points,
            positive: true,
        })
    }

    /// Profile whose flat pieces are declared arcs of zero area.
    pub fn with_null_arcs(points: Vec<ProfilePoint>) -> Result<Self> {
        Self::validate(&points)?;
        if let Some(w) = points.windows(2).find(|w| w[1].mass < w[0].mass) {
            return Err(Error::InvalidProfile(format!(
                "F decreases after t = {}",
                format_rational(&w[0].t)
            )));
        }
        let positive = points.windows(2).all(|w| w[1].mass > w[0].mass);
        Ok(AreaProfile { points, positive })
    }

    fn validate(points: &[ProfilePoint]) -> Result<()> {
        let (first, last) = match (points.first(), points.last()) {
            (Some(f), Some(l)) if points.len() >= 2 => (f, l),
            _ => {
                return Err(Error::InvalidProfile(
                    "need at least two breakpoints".into(),
                ))
            }
        };
        if !first.t.is_zero() || last.t != Rational::one() {
            return Err(Error::InvalidProfile("breakpoints must span [0, 1]".into()));
        }
        if !first.mass.is_zero() {
            return Err(Error::InvalidProfile("F(0) must be 0".into()));
        }
        if !last.mass.is_positive() {
            return Err(Error::InvalidProfile("total mass must be positive".into()));
        }
        if let Some(w) = points.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidProfile(format!(
                "breakpoints not strictly increasing at t = {}",
                format_rational(&w[1].t)
            )));
        }
        Ok(())
    }

    /// `β = F(1)`.
    pub fn total(&self) -> &Rational {
        &self.points.last().expect("validated").mass
    }

    pub fn points(&self) -> &[ProfilePoint] {
        &self.points
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    /// `F(t)`: exact at breakpoints, the neighbouring values otherwise.
    pub fn value_at(&self, t: &Rational) -> Result<Enclosure> {
        check_unit(t)?;
        let pos = self.points.partition_point(|p| &p.t < t);
        let p = &self.points[pos];
        if &p.t == t {
            return Ok(Enclosure::exact(p.mass.clone()));
        }
        Ok(Enclosure::new(
            self.points[pos - 1].mass.clone(),
            p.mass.clone(),
        ))
    }

    /// Limit profile of the homogeneous Knopp curve at the dyadic breakpoints
    /// `j/2ⁿ`: the sum of the limits of the arcs to the left.
    pub fn knopp_limit(curve: &KnoppCurve, n: usize) -> Result<Self> {
        let count = 1usize << n;
        let mut points = Vec::with_capacity(count + 1);
        let mut mass = Rational::zero();
        points.push(ProfilePoint {
            t: Rational::zero(),
            mass: mass.clone(),
        });
        let arc_limit = curve.beta() * pow2_inv(n);
        for j in 1..=count {
            mass += &arc_limit;
            points.push(ProfilePoint {
                t: dyadic(j, n),
                mass: mass.clone(),
            });
        }
        AreaProfile::positive(points)
    }

    /// Horizon-`m` profile of the Knopp curve at `j/2ⁿ`: exact triangle areas
    /// of `V_m` summed over the arcs to the left. Total mass is `p_m`.
    pub fn knopp_horizon(curve: &KnoppCurve, n: usize, m: usize) -> Result<Self> {
        if m < n {
            return Err(out_of_range("horizon", m, "[n, schedule horizon]"));
        }
        let chain = curve.build_chain(m)?;
        let mut points = vec![ProfilePoint {
            t: Rational::zero(),
            mass: Rational::zero(),
        }];
        let mut mass = Rational::zero();
        for j in 0..1usize << n {
            mass += chain.arc_area(n, j)?.value;
            points.push(ProfilePoint {
                t: dyadic(j + 1, n),
                mass: mass.clone(),
            });
        }
        AreaProfile::positive(points)
    }

    /// Profile of the Lance–Thomas curve at every breakpoint of `γ_n`. Joints
    /// are zero-area arcs.
    pub fn lance_thomas(map: &ParamMap, schedule: &LanceThomasSchedule) -> Result<Self> {
        let points = map
            .breakpoints()
            .iter()
            .map(|b| {
                let f = lance_thomas::area_profile(map, schedule, &b.t)?;
                let mass = f
                    .value()
                    .cloned()
                    .ok_or_else(|| Error::InvalidProfile("breakpoint mass not exact".into()))?;
                Ok(ProfilePoint {
                    t: b.t.clone(),
                    mass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        AreaProfile::with_null_arcs(points)
    }

    /// Profile of `γ(t²)` at `t = j/2ⁿ`, read off this profile at `j²/4ⁿ`.
    /// Requires breakpoints at every `k/4ⁿ`.
    pub fn square_pullback(&self, n: usize) -> Result<Self> {
        let points = (0..=1usize << n)
            .map(|j| {
                let t = dyadic(j, n);
                let mass = self
                    .value_at(&(&t * &t))?
                    .value()
                    .cloned()
                    .ok_or_else(|| Error::InvalidProfile("missing breakpoint at t²".into()))?;
                Ok(ProfilePoint { t, mass })
            })
            .collect::<Result<Vec<_>>>()?;
        AreaProfile::positive(points)
    }

    /// `t,F` rows, exact `num/den` or decimal.
    pub fn to_csv(&self, decimal: bool) -> String {
        let render = |v: &Rational| {
            if decimal {
                to_decimal(v, 12)
            } else {
                format_rational(v)
            }
        };
        let mut out = String::from("t,F\n");
        for p in &self.points {
            let _ = writeln!(out, "{},{}", render(&p.t), render(&p.mass));
        }
        out
    }
}

fn dyadic(j: usize, n: usize) -> Rational {
    Rational::from_integer(BigInt::from(j)) * pow2_inv(n)
}

fn check_unit(t: &Rational) -> Result<()> {
    if t.is_negative() || t > &Rational::one() {
        return Err(out_of_range("t", format_rational(t), "[0,1]"));
    }
    Ok(())
}

/// `h⁻¹(t) = F(t)/β`.
pub fn h_inverse(profile: &AreaProfile, t: &Rational) -> Result<Enclosure> {
    let beta = profile.total();
    Ok(profile.value_at(t)?.scale(&(Rational::one() / beta)))
}

/// Preimage of `s` under `h⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Preimage {
    /// Parameter interval containing (or equal to) the preimage.
    pub t: Enclosure,
    /// `t` is the exact preimage set: a single point, or a zero-area arc.
    pub exact: bool,
}

/// `h(s)` by lookup: exact when `β·s` is a breakpoint value.
pub fn h(profile: &AreaProfile, s: &Rational) -> Result<Preimage> {
    check_unit(s)?;
    let target = profile.total() * s;
    let pts = profile.points();
    let first = pts.partition_point(|p| p.mass < target);
    let past = pts.partition_point(|p| p.mass <= target);
    if first < past {
        return Ok(Preimage {
            t: Enclosure::new(pts[first].t.clone(), pts[past - 1].t.clone()),
            exact: true,
        });
    }
    Ok(Preimage {
        t: Enclosure::new(pts[first - 1].t.clone(), pts[first].t.clone()),
        exact: false,
    })
}

/// Anything that can enclose `F(t)` at arbitrary `t`.
pub trait ProfileSource {
    fn total(&self) -> Rational;
    fn enclose(&self, t: &Rational) -> Result<Enclosure>;
}

impl ProfileSource for AreaProfile {
    fn total(&self) -> Rational {
        AreaProfile::total(self).clone()
    }

    fn enclose(&self, t: &Rational) -> Result<Enclosure> {
        self.value_at(t)
    }
}

/// Lance–Thomas profile resolved at a fixed generation.
pub struct LanceThomasProfile<'a> {
    pub map: &'a ParamMap,
    pub schedule: &'a LanceThomasSchedule,
}

impl ProfileSource for LanceThomasProfile<'_> {
    fn total(&self) -> Rational {
        self.schedule.beta()
    }

    fn enclose(&self, t: &Rational) -> Result<Enclosure> {
        lance_thomas::area_profile(self.map, self.schedule, t)
    }
}

/// Monotone bisection for `h(s)` over dyadic midpoints, stopping when the
/// bracket width reaches `1/denominator_bound` or the source cannot separate
/// the midpoint from `β·s`. The result always contains every `t` with
/// `F(t) = β·s`.
pub fn invert_by_bisection<S: ProfileSource>(
    source: &S,
    s: &Rational,
    denominator_bound: u64,
) -> Result<Enclosure> {
    check_unit(s)?;
    if denominator_bound == 0 {
        return Err(out_of_range("denominator_bound", 0, "[1, ∞["));
    }
    let target = source.total() * s;
    let resolution = Rational::new(BigInt::one(), BigInt::from(denominator_bound));
    let mut lo = Rational::zero();
    let mut hi = Rational::one();
    while &hi - &lo > resolution {
        let mid = (&lo + &hi) / Rational::from_integer(2.into());
        let f = source.enclose(&mid)?;
        if f.hi < target {
            lo = mid;
        } else if f.lo > target {
            hi = mid;
        } else {
            break;
        }
    }
    Ok(Enclosure::new(lo, hi))
}

/// `γ ∘ h` for a curve evaluator and its area profile.
pub struct Reparametrized<C> {
    curve: C,
    profile: AreaProfile,
}

/// One sample of `γ ∘ h`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReparamSample {
    pub preimage: Preimage,
    /// `γ(h(s))` when `h(s)` is a single exact parameter.
    pub point: Option<CurvePoint>,
}

pub fn reparametrize<C: CurveEvaluator>(curve: C, profile: AreaProfile) -> Reparametrized<C> {
    Reparametrized { curve, profile }
}

impl<C: CurveEvaluator> Reparametrized<C> {
    pub fn sample(&self, s: &Rational) -> Result<ReparamSample> {
        let preimage = h(&self.profile, s)?;
        let point = match (preimage.exact, preimage.t.value()) {
            (true, Some(t)) => Some(self.curve.eval(t)?),
            _ => None,
        };
        Ok(ReparamSample { preimage, point })
    }

    pub fn source_profile(&self) -> &AreaProfile {
        &self.profile
    }

    /// Breakpoints of `γ ∘ h`: `s_i = F(t_i)/β` with mass `F(t_i)`. Zero-area
    /// arcs collapse to a single parameter.
    pub fn profile(&self) -> Result<AreaProfile> {
        let beta = self.profile.total();
        let mut points: Vec<ProfilePoint> = Vec::with_capacity(self.profile.points().len());
        for p in self.profile.points() {
            if points.last().is_some_and(|q| q.mass == p.mass) {
                continue;
            }
            points.push(ProfilePoint {
                t: &p.mass / beta,
                mass: p.mass.clone(),
            });
        }
        AreaProfile::positive(points)
    }
}

/// Arc areas of `γ(t²)` over `[0, ½]` and `[½, 1]` at horizon `m`, with limits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SquarePullback {
    pub horizon: usize,
    #[serde(with = "serde_rational")]
    pub left: Rational,
    #[serde(with = "serde_rational")]
    pub right: Rational,
    #[serde(with = "serde_rational")]
    pub left_limit: Rational,
    #[serde(with = "serde_rational")]
    pub right_limit: Rational,
}

impl SquarePullback {
    pub fn left_residual(&self) -> Rational {
        &self.left - &self.left_limit
    }

    pub fn right_residual(&self) -> Rational {
        &self.right - &self.right_limit
    }
}

/// `γ₁(t) = γ(t²)` maps `[0, ½]` onto the arc over `[0, ¼]`, so its first half
/// carries only a quarter of the area.
pub fn square_pullback_demo(curve: &KnoppCurve, m: usize) -> Result<SquarePullback> {
    if m < 2 {
        return Err(out_of_range("horizon", m, "[2, schedule horizon]"));
    }
    let first = curve.arc_area(2, 0, m)?;
    let mut right = Rational::zero();
    let mut right_limit = Rational::zero();
    for j in 1..4 {
        let arc = curve.arc_area(2, j, m)?;
        right += arc.value;
        right_limit += arc.limit;
    }
    Ok(SquarePullback {
        horizon: m,
        left: first.value,
        right,
        left_limit: first.limit,
        right_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use crate::schedules::KnoppSchedule;

    fn knopp(beta: Rational, horizon: usize) -> KnoppCurve {
        KnoppCurve::with_default_root(KnoppSchedule::new(beta, horizon).unwrap())
    }

    fn pp(t: Rational, mass: Rational) -> ProfilePoint {
        ProfilePoint { t, mass }
    }

    #[test]
    fn rejects_flat_profile_as_not_positive() {
        let flat = vec![
            pp(int(0), int(0)),
            pp(ratio(1, 2), ratio(1, 4)),
            pp(ratio(3, 4), ratio(1, 4)),
            pp(int(1), ratio(1, 2)),
        ];
        assert!(matches!(
            AreaProfile::positive(flat.clone()),
            Err(Error::NotPositive(_))
        ));
        let p = AreaProfile::with_null_arcs(flat).unwrap();
        assert!(!p.is_positive());
    }

    #[test]
    fn rejects_malformed_profiles() {
        assert!(AreaProfile::positive(vec![pp(int(0), int(0))]).is_err());
        assert!(AreaProfile::positive(vec![pp(int(0), int(1)), pp(int(1), int(2))]).is_err());
        assert!(AreaProfile::positive(vec![pp(ratio(1, 2), int(0)), pp(int(1), int(2))]).is_err());
        assert!(AreaProfile::with_null_arcs(vec![
            pp(int(0), int(0)),
            pp(ratio(1, 2), ratio(1, 2)),
            pp(int(1), ratio(1, 4)),
        ])
        .is_err());
    }

    #[test]
    fn knopp_h_inverse_is_identity_on_dyadics() {
        let curve = knopp(ratio(1, 2), 4);
        let profile = AreaProfile::knopp_limit(&curve, 4).unwrap();
        for j in 0..=16 {
            let t = dyadic(j, 4);
            assert_eq!(
                h_inverse(&profile, &t).unwrap(),
                Enclosure::exact(t.clone())
            );
            let pre = h(&profile, &t).unwrap();
            assert!(pre.exact);
            assert_eq!(pre.t, Enclosure::exact(t));
        }
        assert_eq!(
            h_inverse(&profile, &int(0)).unwrap(),
            Enclosure::exact(int(0))
        );
        assert_eq!(
            h_inverse(&profile, &int(1)).unwrap(),
            Enclosure::exact(int(1))
        );
        // between breakpoints: enclosure by neighbours
        let e = h_inverse(&profile, &ratio(1, 3)).unwrap();
        assert_eq!(e, Enclosure::new(ratio(5, 16), ratio(6, 16)));
        assert!(h_inverse(&profile, &ratio(5, 4)).is_err());
    }

    #[test]
    fn lance_thomas_first_cell() {
        let sched = LanceThomasSchedule::new(ratio(1, 2), 2).unwrap();
        let map = lance_thomas::generation(&sched, 2).unwrap();
        let profile = AreaProfile::lance_thomas(&map, &sched).unwrap();
        assert!(!profile.is_positive());
        // right endpoint of the first generation-1 interval
        let t = ratio(9, 64);
        assert_eq!(
            h_inverse(&profile, &t).unwrap(),
            Enclosure::exact(ratio(1, 4))
        );
        // h(1/4) is the whole first joint, ending where the second cell starts
        let pre = h(&profile, &ratio(1, 4)).unwrap();
        assert!(pre.exact);
        assert_eq!(pre.t.lo, t);
        assert_eq!(pre.t.hi, ratio(9, 64) + ratio(3, 32));
    }

    #[test]
    fn reparametrized_profile_is_homogeneous() {
        let sched = LanceThomasSchedule::new(ratio(2, 3), 3).unwrap();
        let map = lance_thomas::generation(&sched, 3).unwrap();
        let profile = AreaProfile::lance_thomas(&map, &sched).unwrap();
        let beta = sched.beta();
        let re = reparametrize(map.clone(), profile);
        let out = re.profile().unwrap();
        assert_eq!(out.points().len(), 4usize.pow(3) + 1);
        for p in out.points() {
            assert_eq!(p.mass, &beta * &p.t);
        }
    }

    #[test]
    fn reparametrized_samples_hit_the_curve() {
        let curve = knopp(ratio(1, 2), 6);
        let profile = AreaProfile::knopp_limit(&curve, 6).unwrap();
        let re = reparametrize(curve.at_depth(6), profile);
        for j in [0, 1, 13, 64] {
            let s = dyadic(j, 6);
            let sample = re.sample(&s).unwrap();
            assert_eq!(
                sample.point.unwrap().point,
                curve.gamma_dyadic(6, j).unwrap()
            );
        }
        let between = re.sample(&ratio(1, 3)).unwrap();
        assert!(!between.preimage.exact);
        assert!(between.point.is_none());
    }

    #[test]
    fn square_pullback_recovers_homogeneity() {
        let curve = knopp(ratio(1, 2), 8);
        let base = AreaProfile::knopp_limit(&curve, 8).unwrap();
        let pulled = base.square_pullback(4).unwrap();
        // F(t²) at t = 1/2 is β/4
        assert_eq!(
            pulled.value_at(&ratio(1, 2)).unwrap(),
            Enclosure::exact(ratio(1, 8))
        );
        let re = reparametrize(curve.at_depth(8), pulled);
        for p in re.profile().unwrap().points() {
            assert_eq!(p.mass, ratio(1, 2) * &p.t);
        }
        // h⁻¹(t) = t² at breakpoints
        let s = h(re.source_profile(), &ratio(9, 16)).unwrap();
        assert_eq!(s.t, Enclosure::exact(ratio(3, 4)));
    }

    #[test]
    fn square_pullback_examples() {
        let curve = knopp(ratio(1, 2), 3);
        let demo = square_pullback_demo(&curve, 3).unwrap();
        assert_eq!(demo.left, ratio(9, 64));
        assert_eq!(demo.right, ratio(27, 64));
        assert_eq!(demo.left_limit, ratio(1, 8));
        assert_eq!(demo.right_limit, ratio(3, 8));
        assert_eq!(&demo.left_limit / &demo.right_limit, ratio(1, 3));
        assert!(square_pullback_demo(&curve, 1).is_err());

        let curve = knopp(ratio(3, 4), 4);
        let sched = curve.schedule().clone();
        let demo = square_pullback_demo(&curve, 4).unwrap();
        assert_eq!(demo.left, sched.p(4) / int(4));
        assert_eq!(demo.right, sched.p(4) * ratio(3, 4));
        assert_eq!(demo.left + demo.right, *sched.p(4));
    }

    #[test]
    fn horizon_profile_residual_shrinks() {
        let curve = knopp(ratio(1, 2), 10);
        let mut last_gap: Option<Rational> = None;
        for m in 3..=10 {
            let prof = AreaProfile::knopp_horizon(&curve, 3, m).unwrap();
            let gap = prof
                .points()
                .iter()
                .map(|p| (&p.mass - ratio(1, 2) * &p.t).abs())
                .max()
                .unwrap();
            assert_eq!(gap, curve.schedule().p(m) - ratio(1, 2));
            if let Some(prev) = &last_gap {
                assert!(&gap < prev);
            }
            last_gap = Some(gap);
        }
    }

    #[test]
    fn bisection_brackets_the_preimage() {
        let sched = LanceThomasSchedule::new(ratio(1, 2), 4).unwrap();
        let map = lance_thomas::generation(&sched, 4).unwrap();
        let source = LanceThomasProfile {
            map: &map,
            schedule: &sched,
        };
        let s = ratio(1, 3);
        let e = invert_by_bisection(&source, &s, 1 << 20).unwrap();
        // the bracket contains a parameter whose enclosure contains β·s
        let target = sched.beta() * &s;
        let lo = source.enclose(&e.lo).unwrap();
        let hi = source.enclose(&e.hi).unwrap();
        assert!(lo.lo <= target && target <= hi.hi);

        let curve = knopp(ratio(1, 2), 10);
        let profile = AreaProfile::knopp_limit(&curve, 10).unwrap();
        let e = invert_by_bisection(&profile, &ratio(3, 8), 1 << 12).unwrap();
        assert!(e.contains(&ratio(3, 8)));
        assert!(invert_by_bisection(&profile, &ratio(3, 8), 0).is_err());
    }

    #[test]
    fn csv_export() {
        let curve = knopp(ratio(1, 2), 1);
        let p = AreaProfile::knopp_limit(&curve, 1).unwrap();
        assert_eq!(p.to_csv(false), "t,F\n0/1,0/1\n1/2,1/4\n1/1,1/2\n");
        assert_eq!(p.to_csv(true), "t,F\n0,0\n0.5,0.25\n1,0.5\n");
    }
}
