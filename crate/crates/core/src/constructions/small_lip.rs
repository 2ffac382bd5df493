//! The sawtooth `f = ∫ 1_{E⁺} - 1_{E⁻}` built from balance points of aligned
//! blocks of length `ε`.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constructions::envelope::balance_point;
use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};
use crate::pcw::PiecewiseLinear;
use crate::rational::{self, Rational};

const MAX_BLOCKS: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallLipBlock {
    #[serde(with = "rational::serde_str")]
    pub a_lo: Rational,
    #[serde(with = "rational::serde_str")]
    pub a_hi: Rational,
    /// Balance point: equal `E`-mass on both sides within the block.
    #[serde(with = "rational::serde_str")]
    pub x: Rational,
    #[serde(with = "rational::serde_str")]
    pub mass_left: Rational,
    #[serde(with = "rational::serde_str")]
    pub mass_right: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallLip {
    pub f: PiecewiseLinear,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    /// Blocks with positive `E`-mass, in order.
    pub blocks: Vec<SmallLipBlock>,
}

fn block_index(x: &Rational, eps: &Rational) -> BigInt {
    (x / eps).floor().to_integer()
}

/// `0 ≤ f ≤ ε/2` with slope `+1` on `E` left of each balance point and `-1`
/// right of it; zero at every block boundary `iε`.
pub fn build_small_lip(e: &IntervalSet, eps: &Rational, window: &Interval) -> Result<SmallLip> {
    if !eps.is_positive() {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    let mut idx: BTreeSet<BigInt> = BTreeSet::new();
    for iv in e.intervals() {
        if iv.hi() < window.lo() || iv.lo() > window.hi() {
            continue;
        }
        let mut i = block_index(iv.lo(), eps);
        let last = block_index(iv.hi(), eps);
        while i <= last {
            idx.insert(i.clone());
            if idx.len() > MAX_BLOCKS {
                return Err(Error::Budget(format!("more than {MAX_BLOCKS} blocks of length {eps}")));
            }
            i += 1;
        }
    }
    let mut blocks = Vec::new();
    let mut pts = vec![window.lo().clone(), window.hi().clone()];
    for i in idx {
        let a_lo = Rational::from_integer(i.clone()) * eps;
        let a_hi = Rational::from_integer(i + 1) * eps;
        let m = e.mass_between(&a_lo, &a_hi);
        if m.is_zero() {
            continue;
        }
        let x = balance_point(e, &a_lo, &a_hi, &Rational::zero(), &Rational::zero())?;
        pts.push(a_lo.clone());
        pts.push(x.clone());
        pts.push(a_hi.clone());
        pts.extend(e.endpoints().into_iter().filter(|p| p > &a_lo && p < &a_hi));
        blocks.push(SmallLipBlock {
            mass_left: e.mass_between(&a_lo, &x),
            mass_right: e.mass_between(&x, &a_hi),
            a_lo,
            a_hi,
            x,
        });
    }
    pts.retain(|p| window.contains(p));
    pts.sort();
    pts.dedup();
    let value = |p: &Rational| -> Rational {
        let k = blocks.partition_point(|b| &b.a_hi <= p);
        match blocks.get(k) {
            Some(b) if &b.a_lo <= p => {
                if p <= &b.x {
                    e.mass_between(&b.a_lo, p)
                } else {
                    e.mass_between(p, &b.a_hi)
                }
            }
            _ => Rational::zero(),
        }
    };
    let values = pts.iter().map(value).collect();
    let f = PiecewiseLinear::new(pts, values)?.simplify();
    Ok(SmallLip { f, eps: eps.clone(), blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn full_window_sawtooth() {
        let w = Interval::new(int(0), int(4)).unwrap();
        let e = IntervalSet::from_interval(w.clone());
        let s = build_small_lip(&e, &int(1), &w).unwrap();
        for i in 0..4 {
            assert_eq!(s.f.eval(&int(i)), int(0));
            assert_eq!(s.f.eval(&(int(i) + rat(1, 2))), rat(1, 2));
        }
        assert_eq!(s.f.max_value(), rat(1, 2));
        assert!(s.blocks.iter().all(|b| b.mass_left == b.mass_right));
    }

    #[test]
    fn empty_and_partial() {
        let w = Interval::new(int(0), int(2)).unwrap();
        assert_eq!(build_small_lip(&IntervalSet::empty(), &rat(1, 3), &w).unwrap().f.sup_norm(), int(0));
        let e = IntervalSet::canonicalize([(rat(1, 8), rat(1, 4)), (rat(3, 4), rat(5, 4))]).unwrap();
        let s = build_small_lip(&e, &rat(1, 2), &w).unwrap();
        assert_eq!(s.blocks.len(), 3);
        assert_eq!(s.blocks[0].x, rat(3, 16));
        assert!(s.f.min_value() >= int(0) && s.f.max_value() <= rat(1, 4));
        assert!(build_small_lip(&e, &int(0), &w).is_err());
    }
}
