//! Closed bounded intervals, the three LU order relations, and the
//! vector-level relations used by the duality checks.
//!
//! An interval `[lo, hi]` stands for the set of reals between its endpoints.
//! Degenerate intervals `[a, a]` are permitted and behave as the real number
//! `a`. Arithmetic follows the usual endpoint formulas:
//!
//! * `A + B = [A.lo + B.lo, A.hi + B.hi]`
//! * `A - B = [A.lo - B.hi, A.hi - B.lo]`
//! * `k * A = [k*A.lo, k*A.hi]` for `k >= 0`, endpoints swapped for `k < 0`
//!
//! Strict comparisons are exact by default; an optional strictness margin
//! `delta` turns `x < y` into `x < y - delta` for noisy evaluated data.

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed bounded real interval `[lo, hi]` with `lo <= hi`, both finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

/// Which LU relation to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LuMode {
    /// `A <=_LU B`: both endpoints weakly below.
    Leq,
    /// `A <_LU B`: `A <=_LU B` and `A != B`.
    Lt,
    /// `A <^s_LU B`: both endpoints strictly below.
    Lts,
}

/// Which vector relation to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VecMode {
    /// Componentwise `<=_LU` with at least one `<_LU`.
    Preceq,
    /// Componentwise `<^s_LU`.
    Precs,
}

impl Interval {
    /// Build an interval, rejecting non-finite or out-of-order endpoints.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite);
        }
        if lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// The degenerate interval `[a, a]`.
    pub fn point(a: f64) -> Result<Self> {
        Interval::new(a, a)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// `A + B` by the endpoint formula.
    pub fn add(&self, other: &Interval) -> Result<Interval> {
        Interval::new(self.lo + other.lo, self.hi + other.hi)
    }

    /// `A - B = [A.lo - B.hi, A.hi - B.lo]`.
    pub fn sub(&self, other: &Interval) -> Result<Interval> {
        Interval::new(self.lo - other.hi, self.hi - other.lo)
    }

    /// `k * A`; endpoints swap when `k < 0`.
    pub fn scale(&self, k: f64) -> Result<Interval> {
        if !k.is_finite() {
            return Err(Error::NonFinite);
        }
        if k >= 0.0 {
            Interval::new(k * self.lo, k * self.hi)
        } else {
            Interval::new(k * self.hi, k * self.lo)
        }
    }

    /// `(-1) * A`.
    pub fn neg(&self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    /// LU comparison with an exact policy (`margin = 0`).
    pub fn lu_compare(&self, other: &Interval, mode: LuMode) -> bool {
        self.lu_compare_margin(other, mode, 0.0)
    }

    /// LU comparison under a strictness margin: every strict endpoint test
    /// `x < y` becomes `x < y - margin`. With `margin = 0` this is the exact
    /// relation.
    pub fn lu_compare_margin(&self, other: &Interval, mode: LuMode, margin: f64) -> bool {
        let leq = self.lo <= other.lo && self.hi <= other.hi;
        match mode {
            LuMode::Leq => leq,
            LuMode::Lt => {
                leq && (self.lo < other.lo - margin || self.hi < other.hi - margin)
            }
            LuMode::Lts => self.lo < other.lo - margin && self.hi < other.hi - margin,
        }
    }
}

// Intervals serialize as two-element arrays [lo, hi] in problem and report
// files.
impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(2)?;
        tup.serialize_element(&self.lo)?;
        tup.serialize_element(&self.hi)?;
        tup.end()
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct IvVisitor;
        impl<'de> Visitor<'de> for IvVisitor {
            type Value = Interval;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                write!(f, "a two-element array [lo, hi]")
            }
            fn visit_seq<A: SeqAccess<'de>>(
                self,
                mut seq: A,
            ) -> std::result::Result<Interval, A::Error> {
                let lo: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let hi: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<f64>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Interval::new(lo, hi).map_err(de::Error::custom)
            }
        }
        deserializer.deserialize_tuple(2, IvVisitor)
    }
}

/// An ordered, nonempty list of intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalVector(Vec<Interval>);

impl IntervalVector {
    pub fn new(components: Vec<Interval>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Validation("interval vector must be nonempty".into()));
        }
        Ok(IntervalVector(components))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn components(&self) -> &[Interval] {
        &self.0
    }

    pub fn get(&self, i: usize) -> &Interval {
        &self.0[i]
    }

    /// Vector relation with the exact policy.
    pub fn relation(&self, other: &IntervalVector, mode: VecMode) -> Result<bool> {
        self.relation_margin(other, mode, 0.0)
    }

    /// Vector relation under a strictness margin (see
    /// [`Interval::lu_compare_margin`]).
    pub fn relation_margin(
        &self,
        other: &IntervalVector,
        mode: VecMode,
        margin: f64,
    ) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        match mode {
            VecMode::Preceq => {
                let all_leq = self
                    .0
                    .iter()
                    .zip(&other.0)
                    .all(|(a, b)| a.lu_compare_margin(b, LuMode::Leq, margin));
                let one_lt = self
                    .0
                    .iter()
                    .zip(&other.0)
                    .any(|(a, b)| a.lu_compare_margin(b, LuMode::Lt, margin));
                Ok(all_leq && one_lt)
            }
            VecMode::Precs => Ok(self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.lu_compare_margin(b, LuMode::Lts, margin))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn add_endpoint_formula() {
        assert_eq!(iv(1.0, 2.0).add(&iv(3.0, 5.0)).unwrap(), iv(4.0, 7.0));
        let a = iv(-2.5, 7.0);
        assert_eq!(iv(0.0, 0.0).add(&a).unwrap(), a);
        assert_eq!(iv(-1.0, 1.0).add(&iv(-1.0, 1.0)).unwrap(), iv(-2.0, 2.0));
    }

    #[test]
    fn sub_endpoint_formula() {
        assert_eq!(iv(1.0, 2.0).sub(&iv(3.0, 5.0)).unwrap(), iv(-4.0, -1.0));
        let a = iv(-3.0, 4.5);
        assert_eq!(a.sub(&iv(0.0, 0.0)).unwrap(), a);
        // [1/3, 4/3] - [1/5, 1/4] = [1/12, 17/15]
        let d = iv(1.0 / 3.0, 4.0 / 3.0).sub(&iv(0.2, 0.25)).unwrap();
        assert!((d.lo() - 1.0 / 12.0).abs() <= 1e-15);
        assert!((d.hi() - 17.0 / 15.0).abs() <= 1e-15);
    }

    #[test]
    fn scale_branches() {
        assert_eq!(iv(1.0, 3.0).scale(2.0).unwrap(), iv(2.0, 6.0));
        assert_eq!(iv(1.0, 3.0).scale(-2.0).unwrap(), iv(-6.0, -2.0));
        assert_eq!(iv(-4.0, 9.0).scale(0.0).unwrap(), iv(0.0, 0.0));
    }

    #[test]
    fn lu_relations() {
        // Example 4.1 comparison: [0,1] <^s_LU [1/12, 17/15].
        let shifted = iv(1.0 / 12.0, 17.0 / 15.0);
        assert!(iv(0.0, 1.0).lu_compare(&shifted, LuMode::Lts));
        assert!(!iv(1.0, 2.0).lu_compare(&iv(1.0, 2.0), LuMode::Lt));
        assert!(!iv(0.0, 3.0).lu_compare(&iv(1.0, 2.0), LuMode::Leq));
    }

    #[test]
    fn vector_relations() {
        let x = IntervalVector::new(vec![iv(0.0, 1.0)]).unwrap();
        let y = IntervalVector::new(vec![iv(1.0 / 12.0, 17.0 / 15.0)]).unwrap();
        assert!(x.relation(&y, VecMode::Precs).unwrap());
        assert!(!x.relation(&x, VecMode::Preceq).unwrap());

        let x2 = IntervalVector::new(vec![iv(0.0, 1.0), iv(0.0, 1.0)]).unwrap();
        let y2 = IntervalVector::new(vec![iv(0.0, 1.0), iv(1.0, 2.0)]).unwrap();
        assert!(x2.relation(&y2, VecMode::Preceq).unwrap());
    }

    #[test]
    fn rejects_invalid() {
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(IntervalVector::new(vec![]).is_err());
    }

    #[test]
    fn serde_two_element_array() {
        let a = iv(0.25, 1.5);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[0.25,1.5]");
        let b: Interval = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<Interval>("[2.0,1.0]").is_err());
    }

    prop_compose! {
        fn arb_interval()(a in -1e6..1e6f64, b in -1e6..1e6f64) -> Interval {
            iv(a.min(b), a.max(b))
        }
    }

    proptest! {
        #[test]
        fn ops_preserve_order(a in arb_interval(), b in arb_interval(), k in -100.0..100.0f64) {
            let s = a.add(&b).unwrap();
            prop_assert!(s.lo() <= s.hi());
            let d = a.sub(&b).unwrap();
            prop_assert!(d.lo() <= d.hi());
            let m = a.scale(k).unwrap();
            prop_assert!(m.lo() <= m.hi());
        }

        #[test]
        fn implication_chain(a in arb_interval(), b in arb_interval()) {
            if a.lu_compare(&b, LuMode::Lts) {
                prop_assert!(a.lu_compare(&b, LuMode::Lt));
            }
            if a.lu_compare(&b, LuMode::Lt) {
                prop_assert!(a.lu_compare(&b, LuMode::Leq));
            }
        }

        #[test]
        fn antisymmetry(a in arb_interval(), b in arb_interval()) {
            if a.lu_compare(&b, LuMode::Leq) && b.lu_compare(&a, LuMode::Leq) {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn scale_distributes_over_add(a in arb_interval(), b in arb_interval(), k in -100.0..100.0f64) {
            let left = a.add(&b).unwrap().scale(k).unwrap();
            let right = a.scale(k).unwrap().add(&b.scale(k).unwrap()).unwrap();
            prop_assert!((left.lo() - right.lo()).abs() <= 1e-9 * (1.0 + left.lo().abs()));
            prop_assert!((left.hi() - right.hi()).abs() <= 1e-9 * (1.0 + left.hi().abs()));
        }

        #[test]
        fn sub_is_add_neg(a in arb_interval(), b in arb_interval()) {
            let left = a.sub(&b).unwrap();
            let right = a.add(&b.scale(-1.0).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn vector_precs_implies_preceq(
            pairs in proptest::collection::vec((arb_interval(), arb_interval()), 1..6)
        ) {
            let x = IntervalVector::new(pairs.iter().map(|p| p.0).collect()).unwrap();
            let y = IntervalVector::new(pairs.iter().map(|p| p.1).collect()).unwrap();
            if x.relation(&y, VecMode::Precs).unwrap() {
                prop_assert!(x.relation(&y, VecMode::Preceq).unwrap());
            }
        }
    }
}
