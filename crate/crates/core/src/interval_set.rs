//! Finite unions of closed rational intervals.
//!
//! An [`IntervalSet`] is always kept in canonical form: intervals sorted by
//! left endpoint, pairwise disjoint and separated by gaps of positive
//! length. Touching or overlapping inputs are merged. Degenerate intervals
//! (single points) are representable; they carry no measure and are only
//! produced by exact closed-set intersections or explicit
//! [`Interval::point`] construction.
//!
//! Open and half-open distinctions are collapsed: every set is treated as
//! closed. All downstream quantities are Lebesgue measures, which ignore
//! endpoints.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rational::{cmp_fast, format_rational, parse_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    /// A degenerate interval `{x}`.
    pub fn point(x: Rational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    /// A window for operations that need a bounded, non-degenerate range.
    pub fn window(lo: Rational, hi: Rational) -> Result<Self> {
        if lo == hi {
            return Err(Error::DegenerateWindow(lo));
        }
        Interval::new(lo, hi)
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn interior_contains(&self, x: &Rational) -> bool {
        &self.lo < x && x < &self.hi
    }

    pub fn midpoint(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = if self.lo >= other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi <= other.hi { &self.hi } else { &other.hi };
        (lo <= hi).then(|| Interval { lo: lo.clone(), hi: hi.clone() })
    }

    /// `|self ∩ [a, b]|`.
    pub fn overlap_len(&self, a: &Rational, b: &Rational) -> Rational {
        let lo = if &self.lo >= a { &self.lo } else { a };
        let hi = if &self.hi <= b { &self.hi } else { b };
        if lo < hi {
            hi - lo
        } else {
            Rational::zero()
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [format_rational(&self.lo), format_rational(&self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(d)?;
        let lo = parse_rational(&lo).map_err(serde::de::Error::custom)?;
        let hi = parse_rational(&hi).map_err(serde::de::Error::custom)?;
        Interval::new(lo, hi).map_err(serde::de::Error::custom)
    }
}

/// Anything that can report the exact Lebesgue measure of its intersection
/// with a bounded interval.
pub trait MassOracle {
    /// `|self ∩ [a, b]|`, zero when `b <= a`.
    fn mass(&self, a: &Rational, b: &Rational) -> Rational;
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    pub fn single(lo: Rational, hi: Rational) -> Result<Self> {
        Ok(IntervalSet { intervals: vec![Interval::new(lo, hi)?] })
    }

    pub fn from_interval(iv: Interval) -> Self {
        IntervalSet { intervals: vec![iv] }
    }

    /// Canonical form of an arbitrary list of (already valid) intervals.
    pub fn from_intervals(mut raw: Vec<Interval>) -> Self {
        raw.sort_by(|a, b| cmp_fast(&a.lo, &b.lo).then_with(|| cmp_fast(&a.hi, &b.hi)));
        let mut out: Vec<Interval> = Vec::with_capacity(raw.len());
        for iv in raw {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        IntervalSet { intervals: out }
    }

    /// Canonicalizes raw endpoint pairs; fails if any pair has `lo > hi`.
    pub fn canonicalize<I>(raw: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Rational, Rational)>,
    {
        let ivs = raw
            .into_iter()
            .map(|(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_intervals(ivs))
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn measure(&self) -> Rational {
        self.intervals.iter().map(Interval::len).sum()
    }

    pub fn hull(&self) -> Option<Interval> {
        let first = self.intervals.first()?;
        let last = self.intervals.last()?;
        Some(Interval { lo: first.lo.clone(), hi: last.hi.clone() })
    }

    /// All interval endpoints in increasing order (points contribute once).
    pub fn endpoints(&self) -> Vec<Rational> {
        let mut v = Vec::with_capacity(2 * self.intervals.len());
        for iv in &self.intervals {
            v.push(iv.lo.clone());
            if !iv.is_degenerate() {
                v.push(iv.hi.clone());
            }
        }
        v
    }

    /// Index of the first interval with `hi >= x`.
    fn first_reaching(&self, x: &Rational) -> usize {
        self.intervals.partition_point(|iv| crate::rational::lt(&iv.hi, x))
    }

    pub fn contains(&self, x: &Rational) -> bool {
        let i = self.first_reaching(x);
        self.intervals.get(i).is_some_and(|iv| &iv.lo <= x)
    }

    /// The component containing `x`, if any.
    pub fn component_of(&self, x: &Rational) -> Option<&Interval> {
        let i = self.first_reaching(x);
        self.intervals.get(i).filter(|iv| &iv.lo <= x)
    }

    pub fn interior_contains(&self, x: &Rational) -> bool {
        self.component_of(x).is_some_and(|iv| iv.interior_contains(x))
    }

    /// `|S ∩ [a, b]|`; zero when `b <= a`.
    pub fn mass_between(&self, a: &Rational, b: &Rational) -> Rational {
        let mut total = Rational::zero();
        if b <= a {
            return total;
        }
        let start = self.intervals.partition_point(|iv| crate::rational::le(&iv.hi, a));
        for iv in &self.intervals[start..] {
            if &iv.lo >= b {
                break;
            }
            total += iv.overlap_len(a, b);
        }
        total
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.intervals.clone();
        all.extend(other.intervals.iter().cloned());
        Self::from_intervals(all)
    }

    /// Exact intersection of the two closed sets (may contain points).
    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(iv) = a[i].intersect(&b[j]) {
                out.push(iv);
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_intervals(out)
    }

    pub fn intersect_interval(&self, window: &Interval) -> IntervalSet {
        self.intersect(&IntervalSet::from_interval(window.clone()))
    }

    /// Closure of `window \ S`.
    pub fn complement_within(&self, window: &Interval) -> Result<IntervalSet> {
        if window.is_degenerate() {
            return Err(Error::DegenerateWindow(window.lo.clone()));
        }
        let mut out = Vec::new();
        let mut cursor = window.lo.clone();
        for iv in &self.intervals {
            if iv.hi < window.lo {
                continue;
            }
            if iv.lo > window.hi {
                break;
            }
            if iv.lo > cursor {
                out.push(Interval { lo: cursor.clone(), hi: iv.lo.clone() });
            }
            if iv.hi > cursor {
                cursor = iv.hi.clone();
            }
        }
        if cursor < window.hi {
            out.push(Interval { lo: cursor, hi: window.hi.clone() });
        }
        Ok(IntervalSet { intervals: out })
    }

    /// Closure of `S \ T`, restricted to the hull of `S`.
    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        let Some(h) = self.hull() else {
            return IntervalSet::empty();
        };
        if h.is_degenerate() {
            return if other.contains(&h.lo) { IntervalSet::empty() } else { self.clone() };
        }
        let comp = other.complement_within(&h).expect("non-degenerate hull");
        self.intersect(&comp).without_points_unless(self)
    }

    fn without_points_unless(self, original: &IntervalSet) -> IntervalSet {
        // keep only points that were explicit points of `original`
        let intervals = self
            .intervals
            .into_iter()
            .filter(|iv| {
                !iv.is_degenerate()
                    || original.intervals.iter().any(|o| o.is_degenerate() && o.lo == iv.lo)
            })
            .collect();
        IntervalSet { intervals }
    }

    /// Drops all degenerate components.
    pub fn without_points(&self) -> IntervalSet {
        IntervalSet {
            intervals: self.intervals.iter().filter(|iv| !iv.is_degenerate()).cloned().collect(),
        }
    }

    /// Lower distance `inf{|x - y| : x ∈ S, y ∈ T}`; `None` stands for `+∞`
    /// (either set empty).
    pub fn distance(&self, other: &IntervalSet) -> Option<Rational> {
        if self.is_empty() || other.is_empty() {
            return None;
        }
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut best: Option<Rational> = None;
        while i < a.len() && j < b.len() {
            let gap = if a[i].hi < b[j].lo {
                &b[j].lo - &a[i].hi
            } else if b[j].hi < a[i].lo {
                &a[i].lo - &b[j].hi
            } else {
                return Some(Rational::zero());
            };
            if best.as_ref().map_or(true, |g| &gap < g) {
                best = Some(gap);
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        best
    }

    pub fn distance_to_point(&self, x: &Rational) -> Option<Rational> {
        self.distance(&IntervalSet::from_interval(Interval::point(x.clone())))
    }

    /// Components of `window \ S` as open intervals `(lo, hi)` reported by
    /// their closures; these are the intervals contiguous to `S` in `window`.
    pub fn contiguous_within(&self, window: &Interval) -> Vec<Interval> {
        let mut out = Vec::new();
        let mut cursor = window.lo.clone();
        let mut first = true;
        for iv in &self.intervals {
            if iv.hi < window.lo {
                continue;
            }
            if iv.lo > window.hi {
                break;
            }
            if iv.lo > cursor || (first && iv.lo > window.lo) {
                out.push(Interval { lo: cursor.clone(), hi: iv.lo.clone() });
            }
            first = false;
            if iv.hi > cursor {
                cursor = iv.hi.clone();
            }
        }
        if cursor < window.hi {
            out.push(Interval { lo: cursor, hi: window.hi.clone() });
        }
        out
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.intervals.iter().all(|iv| {
            other.component_of(&iv.lo).is_some_and(|o| o.contains_interval(iv))
        })
    }

    pub fn translate(&self, by: &Rational) -> IntervalSet {
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .map(|iv| Interval { lo: &iv.lo + by, hi: &iv.hi + by })
                .collect(),
        }
    }

    /// Image under `x ↦ factor·x`, `factor > 0`.
    pub fn scale(&self, factor: &Rational) -> IntervalSet {
        assert!(factor.is_positive(), "scale factor must be positive");
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .map(|iv| Interval { lo: &iv.lo * factor, hi: &iv.hi * factor })
                .collect(),
        }
    }

    /// Image under `x ↦ -x`.
    pub fn reflect(&self) -> IntervalSet {
        Self::from_intervals(
            self.intervals.iter().map(|iv| Interval { lo: -&iv.hi, hi: -&iv.lo }).collect(),
        )
    }
}

impl MassOracle for IntervalSet {
    fn mass(&self, a: &Rational, b: &Rational) -> Rational {
        self.mass_between(a, b)
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{iv}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct IntervalSetRepr {
    intervals: Vec<Interval>,
}

impl Serialize for IntervalSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        IntervalSetRepr { intervals: self.intervals.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntervalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = IntervalSetRepr::deserialize(d)?;
        Ok(IntervalSet::from_intervals(repr.intervals))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn set(pairs: &[(i64, i64, i64, i64)]) -> IntervalSet {
        IntervalSet::canonicalize(pairs.iter().map(|&(a, b, c, d)| (rat(a, b), rat(c, d)))).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(set(&[(0, 1, 1, 1), (1, 1, 2, 1)]), set(&[(0, 1, 2, 1)]));
        assert_eq!(set(&[(0, 1, 1, 1), (1, 2, 3, 4)]), set(&[(0, 1, 1, 1)]));
        let s = set(&[(2, 1, 3, 1), (0, 1, 1, 1)]);
        assert_eq!(s.intervals()[0], Interval::new(int(0), int(1)).unwrap());
        assert_eq!(s.intervals()[1], Interval::new(int(2), int(3)).unwrap());
        assert!(IntervalSet::canonicalize([(int(1), int(0))]).is_err());
    }

    #[test]
    fn measure_examples() {
        assert_eq!(set(&[(0, 1, 1, 1), (2, 1, 3, 1)]).measure(), int(2));
        assert_eq!(IntervalSet::empty().measure(), int(0));
        assert_eq!(set(&[(9, 16, 5, 8)]).measure(), rat(1, 16));
    }

    #[test]
    fn set_operation_examples() {
        assert_eq!(set(&[(0, 1, 1, 1)]).intersect(&set(&[(1, 2, 2, 1)])), set(&[(1, 2, 1, 1)]));
        let w = Interval::new(int(0), int(1)).unwrap();
        assert_eq!(
            set(&[(1, 4, 1, 2)]).complement_within(&w).unwrap(),
            set(&[(0, 1, 1, 4), (1, 2, 1, 1)])
        );
        assert_eq!(
            set(&[(0, 1, 1, 4)]).union(&set(&[(3, 4, 1, 1)])),
            set(&[(0, 1, 1, 4), (3, 4, 1, 1)])
        );
        let degenerate = Interval::point(int(0));
        assert!(set(&[(0, 1, 1, 1)]).complement_within(&degenerate).is_err());
    }

    #[test]
    fn closed_intersection_keeps_touching_point() {
        let s = set(&[(0, 1, 1, 1)]).intersect(&set(&[(1, 1, 2, 1)]));
        assert_eq!(s.intervals(), &[Interval::point(int(1))]);
        assert_eq!(s.measure(), int(0));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(set(&[(0, 1, 1, 1)]).distance(&set(&[(3, 1, 5, 1)])), Some(int(2)));
        assert_eq!(set(&[(0, 1, 1, 1)]).distance(&set(&[(1, 2, 2, 1)])), Some(int(0)));
        assert_eq!(set(&[(0, 1, 1, 1)]).distance(&IntervalSet::empty()), None);
    }

    #[test]
    fn mass_between_partial_overlaps() {
        let s = set(&[(0, 1, 1, 4), (1, 2, 1, 1)]);
        assert_eq!(s.mass_between(&rat(1, 8), &rat(3, 4)), rat(1, 8) + rat(1, 4));
        assert_eq!(s.mass_between(&int(1), &int(0)), int(0));
        assert_eq!(s.mass_between(&int(-5), &int(5)), rat(3, 4));
    }

    #[test]
    fn difference_and_contiguous() {
        let e = set(&[(0, 1, 1, 1)]);
        let d = e.difference(&set(&[(1, 4, 1, 2)]));
        assert_eq!(d, set(&[(0, 1, 1, 4), (1, 2, 1, 1)]));
        let w = Interval::new(int(-1), int(2)).unwrap();
        let gaps = set(&[(0, 1, 1, 4), (1, 2, 1, 1)]).contiguous_within(&w);
        assert_eq!(gaps.len(), 3);
        assert_eq!(gaps[1], Interval::new(rat(1, 4), rat(1, 2)).unwrap());
    }

    #[test]
    fn json_form() {
        let s = set(&[(0, 1, 1, 2), (3, 4, 1, 1)]);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"intervals":[["0","1/2"],["3/4","1"]]}"#);
        let back: IntervalSet = serde_json::from_str(r#"{"intervals":[["3/4","1"],["0","0.5"],["1/4","1/2"]]}"#).unwrap();
        assert_eq!(back, set(&[(0, 1, 1, 2), (3, 4, 1, 1)]));
        assert!(serde_json::from_str::<IntervalSet>(r#"{"intervals":[["1","0"]]}"#).is_err());
    }
}
