//! Monotone builders: `φ = ∫ 1_E` and the density conditions under which it
//! realizes `Lip φ = 1_E` or `lip φ = 1_E`.

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::density::{
    check_strongly_dense_at, check_weakly_center_dense_at, check_weakly_dense_at, level_set_membership,
    DensityReport, Verdict,
};
use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};
use crate::pcw::PiecewiseLinear;
use crate::rational::{int, Rational};

/// `φ(x) = |E ∩ [window.lo, x]|` on the window.
pub fn build_monotone_lip1(e: &IntervalSet, window: &Interval) -> Result<PiecewiseLinear> {
    PiecewiseLinear::build_phi(e, window.lo(), Some(window))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MonotoneMode {
    /// `E` weakly dense on `E`, `E^c` strongly dense on `E^c`.
    #[serde(rename = "Lip1")]
    BigLip,
    /// `E` strongly one-sided dense on `E`, `E^c` weakly center dense on `E^c`.
    #[serde(rename = "lip1")]
    LittleLip,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub mode: MonotoneMode,
    pub verdict: Verdict,
    /// Checks of the condition on `E`, one per sampled point of `E`.
    pub on_set: Vec<DensityReport>,
    /// Checks of the condition on the complement, one per sampled point of
    /// its closure.
    pub on_complement: Vec<DensityReport>,
}

const MAX_GRID: usize = 512;

/// Endpoints of `E` in the window plus a grid of spacing `resolution`
/// (coarsened to at most 512 points).
pub(crate) fn sample_points(e: &IntervalSet, window: &Interval, resolution: &Rational) -> Vec<Rational> {
    let mut pts: Vec<Rational> = e.endpoints().into_iter().filter(|p| window.contains(p)).collect();
    let span = window.len();
    let mut step = resolution.clone();
    if &span / &step > int(MAX_GRID as i64) {
        step = &span / int(MAX_GRID as i64);
    }
    let mut x = window.lo().clone();
    while &x <= window.hi() {
        pts.push(x.clone());
        x += &step;
    }
    pts.sort();
    pts.dedup();
    pts
}

/// Finite-scale check of the monotone characterizations at scale
/// `ε = resolution`: points of `E` and of the closure of its complement are
/// sampled and each gets an exact certificate.
pub fn check_monotone_conditions(
    e: &IntervalSet,
    window: &Interval,
    mode: MonotoneMode,
    resolution: &Rational,
) -> Result<MonotoneReport> {
    if !resolution.is_positive() || resolution >= &Rational::one() {
        return Err(Error::InvalidParameter(format!("resolution must lie in (0,1), got {resolution}")));
    }
    let eps = resolution;
    let ext = Interval::new(window.lo() - int(1), window.hi() + int(1))?;
    let comp = e.complement_within(&ext)?;
    let mut on_set = Vec::new();
    let mut on_complement = Vec::new();
    for x in sample_points(e, window, resolution) {
        if e.contains(&x) {
            let rep = match mode {
                MonotoneMode::BigLip => check_weakly_dense_at(e, &x, eps)?,
                MonotoneMode::LittleLip => {
                    let m = level_set_membership(e, &x, &(Rational::one() - eps), eps)?;
                    DensityReport {
                        point: x.clone(),
                        verdict: if m.member { Verdict::Holds } else { Verdict::Fails },
                        worst_r: Some(m.worst_r),
                        ratio: m.ratio,
                        side: crate::density::Side::Max,
                        left: m.left,
                        right: m.right,
                    }
                }
            };
            on_set.push(rep);
        }
        if comp.contains(&x) {
            let rep = match mode {
                MonotoneMode::BigLip => check_strongly_dense_at(&comp, &x, eps)?,
                MonotoneMode::LittleLip => check_weakly_center_dense_at(&comp, &x, eps)?,
            };
            on_complement.push(rep);
        }
    }
    let all_hold = on_set.iter().chain(&on_complement).all(|r| r.verdict == Verdict::Holds);
    Ok(MonotoneReport {
        mode,
        verdict: if all_hold { Verdict::Holds } else { Verdict::Fails },
        on_set,
        on_complement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn phi_builders() {
        let w = Interval::new(int(0), int(1)).unwrap();
        let e = IntervalSet::single(int(0), int(1)).unwrap();
        let f = build_monotone_lip1(&e, &w).unwrap();
        assert_eq!(f.slopes(), vec![int(1)]);
        let z = build_monotone_lip1(&IntervalSet::empty(), &w).unwrap();
        assert_eq!(z.sup_norm(), int(0));
        let e2 = IntervalSet::canonicalize([(int(0), rat(1, 4)), (rat(1, 2), int(1))]).unwrap();
        assert_eq!(build_monotone_lip1(&e2, &w).unwrap().eval(&int(1)), rat(3, 4));
    }

    #[test]
    fn unit_interval_conditions() {
        let w = Interval::new(int(-1), int(2)).unwrap();
        let e = IntervalSet::single(int(0), int(1)).unwrap();
        let rep = check_monotone_conditions(&e, &w, MonotoneMode::BigLip, &rat(1, 8)).unwrap();
        assert!(rep.on_set.iter().all(|r| r.verdict == Verdict::Holds));
        let failed: Vec<_> =
            rep.on_complement.iter().filter(|r| r.verdict == Verdict::Fails).map(|r| r.point.clone()).collect();
        assert_eq!(failed, vec![int(0), int(1)]);
        assert_eq!(rep.verdict, Verdict::Fails);
        let empty = check_monotone_conditions(&IntervalSet::empty(), &w, MonotoneMode::BigLip, &rat(1, 8)).unwrap();
        assert_eq!(empty.verdict, Verdict::Holds);
    }
}
