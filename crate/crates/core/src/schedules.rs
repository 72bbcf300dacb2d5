//! Reduction schedules for both constructions.
//!
//! A Knopp schedule fixes the fraction `r_k` of each triangle removed at step
//! `k`; its partial products `p_n = ∏_{k≤n} (1 − r_k)` are the total chain
//! areas. A Lance–Thomas schedule fixes the per-generation corner-square
//! coefficients `a_k`; its partial products `q_n = ∏_{k≤n} a_k` satisfy
//! `λ₂(A_n) = q_n²`.
//!
//! The default rule for both is `p_n = β + (1 − β)·2⁻ⁿ` (resp. with `α`),
//! which keeps every quantity rational and drives the ratios to zero.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{out_of_range, Error, Result};
use crate::scalar::{format_rational, pow2_inv, serde_rational, Rational};

fn check_unit_open(name: &'static str, value: &Rational) -> Result<()> {
    if value.is_positive() && value < &Rational::one() {
        Ok(())
    } else {
        Err(out_of_range(name, format_rational(value), "]0,1["))
    }
}

/// `limit + (1 − limit)·2⁻ⁿ` for `n = 0..=n_max`.
fn halving_products(limit: &Rational, n_max: usize) -> Vec<Rational> {
    let gap = Rational::one() - limit;
    (0..=n_max).map(|n| limit + &gap * pow2_inv(n)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KnoppScheduleRepr", into = "KnoppScheduleRepr")]
pub struct KnoppSchedule {
    beta: Rational,
    /// `p_0 ..= p_horizon`
    products: Vec<Rational>,
    /// `r_1 ..= r_horizon`, stored at index `k - 1`
    ratios: Vec<Rational>,
}

impl KnoppSchedule {
    /// Default schedule `p_n = β + (1 − β)·2⁻ⁿ` up to `n_max`.
    pub fn new(beta: Rational, n_max: usize) -> Result<Self> {
        check_unit_open("beta", &beta)?;
        let products = halving_products(&beta, n_max);
        let ratios = products
            .windows(2)
            .map(|w| Rational::one() - &w[1] / &w[0])
            .collect();
        Ok(KnoppSchedule {
            beta,
            products,
            ratios,
        })
    }

    /// User-supplied ratios. Every `r_k` must lie in `]0,1[` and the last
    /// partial product must be within `tolerance` of `beta`.
    pub fn from_ratios(
        beta: Rational,
        ratios: Vec<Rational>,
        tolerance: &Rational,
    ) -> Result<Self> {
        check_unit_open("beta", &beta)?;
        let mut products = vec![Rational::one()];
        for (i, r) in ratios.iter().enumerate() {
            if !(r.is_positive() && r < &Rational::one()) {
                return Err(Error::InvalidSchedule(format!(
                    "r_{} = {} is outside ]0,1[",
                    i + 1,
                    format_rational(r)
                )));
            }
            let next = products[i].clone() * (Rational::one() - r);
            products.push(next);
        }
        let gap = (products.last().unwrap() - &beta).abs();
        if &gap > tolerance {
            return Err(Error::InvalidSchedule(format!(
                "partial product at n = {} is {} away from beta, tolerance {}",
                ratios.len(),
                format_rational(&gap),
                format_rational(tolerance)
            )));
        }
        Ok(KnoppSchedule {
            beta,
            products,
            ratios,
        })
    }

    /// Same rule, longer horizon. Only meaningful for default schedules;
    /// custom schedules cannot be extended and are returned unchanged when
    /// `n_max` does not exceed their horizon.
    pub fn extended(&self, n_max: usize) -> Result<Self> {
        if n_max <= self.horizon() {
            return Ok(self.clone());
        }
        let fresh = KnoppSchedule::new(self.beta.clone(), n_max)?;
        if fresh.products[..self.products.len()] != self.products[..] {
            return Err(Error::InvalidSchedule(
                "custom schedule cannot be extended past its horizon".into(),
            ));
        }
        Ok(fresh)
    }

    pub fn beta(&self) -> &Rational {
        &self.beta
    }

    pub fn horizon(&self) -> usize {
        self.ratios.len()
    }

    /// `p_n`; panics past the horizon.
    pub fn p(&self, n: usize) -> &Rational {
        &self.products[n]
    }

    /// `r_k` for `1 ≤ k ≤ horizon`.
    pub fn r(&self, k: usize) -> &Rational {
        assert!(k >= 1, "ratios are indexed from 1");
        &self.ratios[k - 1]
    }

    pub fn products(&self) -> &[Rational] {
        &self.products
    }

    pub fn ratios(&self) -> &[Rational] {
        &self.ratios
    }

    pub fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.horizon() {
            return Err(Error::HorizonExceeded {
                requested: depth,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    /// Smallest `n₀ ≥ 1` such that `r_n < bound` for every listed `n ≥ n₀`.
    pub fn first_small_index(&self, bound: &Rational) -> Result<usize> {
        if !bound.is_positive() {
            return Err(out_of_range("bound", format_rational(bound), "]0,∞["));
        }
        let tail = self.ratios.iter().rev().take_while(|r| *r < bound).count();
        if tail == 0 {
            return Err(Error::BoundNotMet {
                bound: format_rational(bound),
                horizon: self.horizon(),
            });
        }
        Ok(self.horizon() - tail + 1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct KnoppScheduleRepr {
    #[serde(with = "serde_rational")]
    beta: Rational,
    #[serde(with = "serde_rational::vec")]
    p: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    r: Vec<Rational>,
}

impl From<KnoppSchedule> for KnoppScheduleRepr {
    fn from(s: KnoppSchedule) -> Self {
        KnoppScheduleRepr {
            beta: s.beta,
            p: s.products,
            r: s.ratios,
        }
    }
}

impl TryFrom<KnoppScheduleRepr> for KnoppSchedule {
    type Error = Error;

    fn try_from(repr: KnoppScheduleRepr) -> Result<Self> {
        // Rebuild from the ratios so p is checked against r. The tail tolerance
        // is whatever the stored products claim, since the file carries no other.
        let gap = repr
            .p
            .last()
            .map(|p| (p - &repr.beta).abs())
            .unwrap_or_else(Rational::zero);
        let sched = KnoppSchedule::from_ratios(repr.beta, repr.r, &gap)?;
        if sched.products != repr.p {
            return Err(Error::InvalidSchedule(
                "partial products disagree with ratios".into(),
            ));
        }
        Ok(sched)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LanceThomasScheduleRepr", into = "LanceThomasScheduleRepr")]
pub struct LanceThomasSchedule {
    alpha: Rational,
    /// `q_0 ..= q_horizon`
    products: Vec<Rational>,
    /// `a_1 ..= a_horizon`, stored at index `k - 1`
    coefficients: Vec<Rational>,
}

impl LanceThomasSchedule {
    /// Default schedule `q_n = α + (1 − α)·2⁻ⁿ`, `a_n = q_n / q_{n−1}`.
    pub fn new(alpha: Rational, n_max: usize) -> Result<Self> {
        check_unit_open("alpha", &alpha)?;
        let products = halving_products(&alpha, n_max);
        let coefficients = products.windows(2).map(|w| &w[1] / &w[0]).collect();
        Ok(LanceThomasSchedule {
            alpha,
            products,
            coefficients,
        })
    }

    /// User-supplied coefficients, each in `]0,1[`, whose product at the
    /// horizon is within `tolerance` of `alpha`.
    pub fn from_coefficients(
        alpha: Rational,
        coefficients: Vec<Rational>,
        tolerance: &Rational,
    ) -> Result<Self> {
        check_unit_open("alpha", &alpha)?;
        let mut products = vec![Rational::one()];
        for (i, a) in coefficients.iter().enumerate() {
            if !(a.is_positive() && a < &Rational::one()) {
                return Err(Error::InvalidSchedule(format!(
                    "a_{} = {} is outside ]0,1[",
                    i + 1,
                    format_rational(a)
                )));
            }
            let next = &products[i] * a;
            products.push(next);
        }
        let gap = (products.last().unwrap() - &alpha).abs();
        if &gap > tolerance {
            return Err(Error::InvalidSchedule(format!(
                "coefficient product at n = {} is {} away from alpha, tolerance {}",
                coefficients.len(),
                format_rational(&gap),
                format_rational(tolerance)
            )));
        }
        Ok(LanceThomasSchedule {
            alpha,
            products,
            coefficients,
        })
    }

    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    /// `β = α²`, the limit area.
    pub fn beta(&self) -> Rational {
        &self.alpha * &self.alpha
    }

    pub fn horizon(&self) -> usize {
        self.coefficients.len()
    }

    pub fn q(&self, n: usize) -> &Rational {
        &self.products[n]
    }

    /// `a_k` for `1 ≤ k ≤ horizon`.
    pub fn a(&self, k: usize) -> &Rational {
        assert!(k >= 1, "coefficients are indexed from 1");
        &self.coefficients[k - 1]
    }

    pub fn coefficients(&self) -> &[Rational] {
        &self.coefficients
    }

    /// Side of a generation-`n` corner square: `∏_{k≤n} a_k/2 = q_n / 2ⁿ`.
    pub fn side(&self, n: usize) -> Rational {
        &self.products[n] * pow2_inv(n)
    }

    /// `λ₂(A_n) = 4ⁿ·side(n)² = q_n²`.
    pub fn chain_area(&self, n: usize) -> Result<Rational> {
        self.check_depth(n)?;
        let side = self.side(n);
        let cells = Rational::from_integer(BigInt::one() << (2 * n));
        Ok(cells * &side * &side)
    }

    pub fn check_depth(&self, depth: usize) -> Result<()> {
        if depth > self.horizon() {
            return Err(Error::HorizonExceeded {
                requested: depth,
                horizon: self.horizon(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct LanceThomasScheduleRepr {
    #[serde(with = "serde_rational")]
    alpha: Rational,
    #[serde(with = "serde_rational")]
    beta: Rational,
    #[serde(with = "serde_rational::vec")]
    q: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    a: Vec<Rational>,
}

impl From<LanceThomasSchedule> for LanceThomasScheduleRepr {
    fn from(s: LanceThomasSchedule) -> Self {
        LanceThomasScheduleRepr {
            beta: s.beta(),
            alpha: s.alpha,
            q: s.products,
            a: s.coefficients,
        }
    }
}

impl TryFrom<LanceThomasScheduleRepr> for LanceThomasSchedule {
    type Error = Error;

    fn try_from(repr: LanceThomasScheduleRepr) -> Result<Self> {
        if repr.beta != &repr.alpha * &repr.alpha {
            return Err(Error::InvalidSchedule(
                "beta must equal alpha squared".into(),
            ));
        }
        let gap = repr
            .q
            .last()
            .map(|q| (q - &repr.alpha).abs())
            .unwrap_or_else(Rational::zero);
        let sched = LanceThomasSchedule::from_coefficients(repr.alpha, repr.a, &gap)?;
        if sched.products != repr.q {
            return Err(Error::InvalidSchedule(
                "partial products disagree with coefficients".into(),
            ));
        }
        Ok(sched)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, ratio};
    use proptest::prelude::*;

    #[test]
    fn knopp_half_values() {
        let s = KnoppSchedule::new(ratio(1, 2), 3).unwrap();
        assert_eq!(s.r(1), &ratio(1, 4));
        assert_eq!(s.r(2), &ratio(1, 6));
        assert_eq!(s.r(3), &ratio(1, 10));
        assert_eq!(s.p(3), &ratio(9, 16));
    }

    #[test]
    fn knopp_empty_horizon() {
        let s = KnoppSchedule::new(ratio(1, 3), 0).unwrap();
        assert_eq!(s.p(0), &int(1));
        assert!(s.ratios().is_empty());
    }

    #[test]
    fn knopp_rejects_bad_beta() {
        for bad in [int(0), int(1), ratio(-1, 2), ratio(3, 2)] {
            assert!(matches!(
                KnoppSchedule::new(bad, 4),
                Err(Error::OutOfRange { name: "beta", .. })
            ));
        }
    }

    #[test]
    fn first_small_index_examples() {
        let s = KnoppSchedule::new(ratio(1, 2), 12).unwrap();
        assert_eq!(s.first_small_index(&ratio(1, 8)).unwrap(), 3);
        assert_eq!(s.first_small_index(&int(1)).unwrap(), 1);

        // β = 1/100: scan r_n by hand against the closed form
        let s = KnoppSchedule::new(ratio(1, 100), 20).unwrap();
        let expected = (1..=20)
            .find(|&n| (n..=20).all(|k| s.r(k) < &ratio(1, 8)))
            .unwrap();
        assert_eq!(s.first_small_index(&ratio(1, 8)).unwrap(), expected);
        // r_n = (1-β)2^-n / (β + (1-β)2^-(n-1)): r_9 ≈ 0.139, r_10 ≈ 0.081
        assert_eq!(expected, 10);

        let short = KnoppSchedule::new(ratio(1, 2), 2).unwrap();
        assert!(matches!(
            short.first_small_index(&ratio(1, 8)),
            Err(Error::BoundNotMet { .. })
        ));
        assert!(s.first_small_index(&int(0)).is_err());
    }

    #[test]
    fn custom_schedule_validation() {
        let ok = KnoppSchedule::from_ratios(
            ratio(1, 2),
            vec![ratio(1, 4), ratio(1, 6), ratio(1, 10)],
            &ratio(1, 16),
        )
        .unwrap();
        assert_eq!(ok.p(3), &ratio(9, 16));
        assert!(KnoppSchedule::from_ratios(ratio(1, 2), vec![int(1)], &int(1)).is_err());
        assert!(KnoppSchedule::from_ratios(ratio(1, 2), vec![int(0)], &int(1)).is_err());
        // non-convergent tail: p_1 = 3/4 is 1/4 away from β
        assert!(KnoppSchedule::from_ratios(ratio(1, 2), vec![ratio(1, 4)], &ratio(1, 8)).is_err());
        // non-monotone ratios are accepted
        assert!(KnoppSchedule::from_ratios(
            ratio(1, 2),
            vec![ratio(1, 10), ratio(1, 3), ratio(1, 20)],
            &ratio(1, 5)
        )
        .is_ok());
    }

    #[test]
    fn extension_is_consistent() {
        let short = KnoppSchedule::new(ratio(1, 2), 3).unwrap();
        let long = short.extended(8).unwrap();
        assert_eq!(&long.products()[..4], short.products());
        assert_eq!(long.horizon(), 8);
        let custom =
            KnoppSchedule::from_ratios(ratio(1, 2), vec![ratio(1, 3), ratio(1, 4)], &int(1))
                .unwrap();
        assert!(custom.extended(5).is_err());
    }

    #[test]
    fn lance_thomas_half_values() {
        let s = LanceThomasSchedule::new(ratio(1, 2), 2).unwrap();
        assert_eq!(s.a(1), &ratio(3, 4));
        assert_eq!(s.a(2), &ratio(5, 6));
        assert_eq!(s.q(1) * s.q(1), ratio(9, 16));
        assert_eq!(s.q(2) * s.q(2), ratio(25, 64));
        assert_eq!(s.beta(), ratio(1, 4));
        assert_eq!(s.chain_area(1).unwrap(), ratio(9, 16));
        assert_eq!(s.chain_area(2).unwrap(), ratio(25, 64));
        assert!(s.chain_area(3).is_err());
        let z = LanceThomasSchedule::new(ratio(1, 2), 0).unwrap();
        assert_eq!(z.q(0), &int(1));
        assert!(z.coefficients().is_empty());
    }

    #[test]
    fn json_round_trip_and_shape() {
        let s = KnoppSchedule::new(ratio(1, 2), 3).unwrap();
        let json = s.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["beta"], "1/2");
        assert_eq!(v["p"][3], "9/16");
        assert_eq!(v["r"][0], "1/4");
        let back: KnoppSchedule = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);

        let lt = LanceThomasSchedule::new(ratio(2, 3), 4).unwrap();
        let back: LanceThomasSchedule = serde_json::from_str(&lt.to_json()).unwrap();
        assert_eq!(back, lt);

        let tampered = json.replace("9/16", "5/8");
        assert!(serde_json::from_str::<KnoppSchedule>(&tampered).is_err());
    }

    proptest! {
        #[test]
        fn knopp_telescoping(num in 1i64..99, n in 0usize..24) {
            let beta = ratio(num, 100);
            let s = KnoppSchedule::new(beta.clone(), n).unwrap();
            let mut prod = Rational::one();
            for k in 1..=n {
                let r = s.r(k);
                prop_assert!(r.is_positive() && r < &Rational::one());
                if k > 1 { prop_assert!(r < s.r(k - 1)); }
                prod *= Rational::one() - r;
                prop_assert_eq!(&prod, s.p(k));
                prop_assert_eq!(s.p(k) - &beta, (Rational::one() - &beta) * pow2_inv(k));
            }
        }

        #[test]
        fn lance_thomas_telescoping(num in 1i64..99, n in 0usize..24) {
            let alpha = ratio(num, 100);
            let s = LanceThomasSchedule::new(alpha, n).unwrap();
            let mut prod = Rational::one();
            for k in 1..=n {
                let a = s.a(k);
                prop_assert!(a.is_positive() && a < &Rational::one());
                prod *= a;
                prop_assert_eq!(&prod, s.q(k));
                prop_assert!(s.q(k) < s.q(k - 1));
            }
            prop_assert_eq!(s.chain_area(n).unwrap(), s.q(n) * s.q(n));
        }
    }
}
