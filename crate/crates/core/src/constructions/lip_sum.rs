//! `f = Σ f_n` with each `f_n` a small-lip sawtooth for the part `E_n`,
//! scaled down by the distance of `E_n` to the earlier parts.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constructions::small_lip::build_small_lip;
use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};
use crate::pcw::PiecewiseLinear;
use crate::rational::{self, floor_log2, int, pow2, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartDiagnostics {
    pub index: usize,
    /// Block length used for the part; also the bound on `sup f_n`.
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "rational::serde_str")]
    pub sup: Rational,
    pub skipped: bool,
    pub constant_on_contiguous: bool,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LipSum {
    pub f: PiecewiseLinear,
    pub parts: Vec<IntervalSet>,
    pub terms: Vec<PiecewiseLinear>,
    pub diagnostics: Vec<PartDiagnostics>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffSetCheck {
    #[serde(with = "rational::serde_str")]
    pub x: Rational,
    pub n1: i64,
    /// Distance from `x` to the first `n1` parts; `None` when they are empty.
    #[serde(with = "rational::serde_str_opt")]
    pub r: Option<Rational>,
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
    /// `2·2^{-n1}`.
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    pub clamped: bool,
    pub holds: bool,
}

/// `ε_1 = 1`, `ε_n = 2^{-n}·min{1, d(E_n, E_1 ∪ … ∪ E_{n-1})}`.
pub fn part_epsilon(parts: &[IntervalSet], n: usize) -> Option<Rational> {
    if n == 0 {
        return Some(Rational::one());
    }
    let earlier = parts[..n].iter().fold(IntervalSet::empty(), |acc, p| acc.union(p));
    let d = parts[n].distance(&earlier).map_or_else(Rational::one, |d| d.min(Rational::one()));
    if d.is_zero() {
        return None;
    }
    Some(pow2(-(n as i64 + 1)) * d)
}

pub fn build_lip1_sum(parts: &[IntervalSet], window: &Interval) -> Result<LipSum> {
    if parts.is_empty() {
        return Err(Error::Empty("no parts".into()));
    }
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            let m = parts[i].intersect(&parts[j]).measure();
            if m.is_positive() {
                return Err(Error::Overlap(format!("parts {} and {} share measure {m}", i + 1, j + 1)));
            }
        }
    }
    let mut f = PiecewiseLinear::zero(window);
    let mut terms = Vec::with_capacity(parts.len());
    let mut diagnostics = Vec::with_capacity(parts.len());
    for (n, part) in parts.iter().enumerate() {
        let Some(eps) = part_epsilon(parts, n) else {
            terms.push(PiecewiseLinear::zero(window));
            diagnostics.push(PartDiagnostics {
                index: n + 1,
                eps: Rational::zero(),
                sup: Rational::zero(),
                skipped: true,
                constant_on_contiguous: true,
                warning: Some(format!("part {} touches an earlier part; skipped", n + 1)),
            });
            continue;
        };
        let term = build_small_lip(part, &eps, window)?.f;
        let constant_on_contiguous = part.contiguous_within(window).iter().filter(|iv| !iv.is_degenerate()).all(|iv| {
            term.restrict(iv).map(|t| t.slopes().iter().all(Zero::is_zero)).unwrap_or(false)
        });
        f = f.add(&term)?;
        diagnostics.push(PartDiagnostics {
            index: n + 1,
            sup: term.sup_norm(),
            eps,
            skipped: false,
            constant_on_contiguous,
            warning: None,
        });
        terms.push(term);
    }
    Ok(LipSum { f: f.simplify(), parts: parts.to_vec(), terms, diagnostics })
}

impl LipSum {
    /// Off-set bound at `x ∉ E`: with `n1 = max{1, 1 - ⌊log₂ ε⌋}` and
    /// `r = d(x, E_1 ∪ … ∪ E_{n1})`, checks `M_f(x, r) ≤ 2·2^{-n1}`.
    pub fn off_set_check(&self, x: &Rational, eps: &Rational) -> Result<OffSetCheck> {
        if !eps.is_positive() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
        }
        if self.parts.iter().any(|p| p.contains(x)) {
            return Err(Error::Precondition(format!("{x} lies in the set")));
        }
        let n1 = (1 - floor_log2(eps)).max(1);
        let upto = (n1 as usize).min(self.parts.len());
        let near = self.parts[..upto].iter().fold(IntervalSet::empty(), |acc, p| acc.union(p));
        let bound = int(2) * pow2(-n1);
        let Some(r) = near.distance_to_point(x) else {
            return Ok(OffSetCheck { x: x.clone(), n1, r: None, ratio: Rational::zero(), bound, clamped: false, holds: true });
        };
        let m = self.f.m_ratio(x, &r)?;
        Ok(OffSetCheck { x: x.clone(), n1, holds: m.ratio <= bound, r: Some(r), ratio: m.ratio, bound, clamped: m.clamped })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn single_part_is_small_lip() {
        let w = Interval::new(int(-1), int(2)).unwrap();
        let e = IntervalSet::single(int(0), int(1)).unwrap();
        let s = build_lip1_sum(&[e.clone()], &w).unwrap();
        assert_eq!(s.f, build_small_lip(&e, &int(1), &w).unwrap().f);
        assert_eq!(s.diagnostics[0].eps, int(1));
    }

    #[test]
    fn two_parts_epsilon() {
        let w = Interval::new(int(-1), int(4)).unwrap();
        let parts = [IntervalSet::single(int(0), int(1)).unwrap(), IntervalSet::single(int(2), int(3)).unwrap()];
        let s = build_lip1_sum(&parts, &w).unwrap();
        assert_eq!(s.diagnostics[1].eps, rat(1, 4));
        assert!(s.diagnostics.iter().all(|d| d.sup <= d.eps && d.constant_on_contiguous));
        let c = s.off_set_check(&rat(3, 2), &rat(1, 2)).unwrap();
        assert_eq!(c.r, Some(rat(1, 2)));
        assert!(c.holds);
        assert!(s.off_set_check(&rat(1, 2), &rat(1, 2)).is_err());
    }

    #[test]
    fn touching_part_is_skipped() {
        let w = Interval::new(int(0), int(3)).unwrap();
        let parts = [IntervalSet::single(int(0), int(1)).unwrap(), IntervalSet::single(int(1), int(2)).unwrap()];
        let s = build_lip1_sum(&parts, &w).unwrap();
        assert!(s.diagnostics[1].skipped && s.diagnostics[1].warning.is_some());
        let overlap = [IntervalSet::single(int(0), int(2)).unwrap(), IntervalSet::single(int(1), int(3)).unwrap()];
        assert!(matches!(build_lip1_sum(&overlap, &w), Err(Error::Overlap(_))));
    }
}
