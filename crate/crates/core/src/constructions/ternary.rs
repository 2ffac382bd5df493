//! Ternary decompositions `(E₁, E₀, E₋₁)` of a window and the integral
//! `f = ∫ 1_{E₁} - 1_{E₋₁}`.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::constructions::monotone::sample_points;
use crate::density::{check_weakly_dense_at, DensityReport, Verdict};
use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};
use crate::pcw::PiecewiseLinear;
use crate::rational::{self, int, pow2, rat, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TernaryDecomposition {
    pub e1: IntervalSet,
    pub e0: IntervalSet,
    pub em1: IntervalSet,
    pub window: Interval,
}

impl TernaryDecomposition {
    /// Validates disjointness (up to measure zero) and that the three parts
    /// cover the window.
    pub fn new(e1: IntervalSet, e0: IntervalSet, em1: IntervalSet, window: Interval) -> Result<Self> {
        let t = TernaryDecomposition { e1, e0, em1, window };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.is_degenerate() {
            return Err(Error::DegenerateWindow(self.window.lo().clone()));
        }
        let parts = [("E1", &self.e1), ("E0", &self.e0), ("E-1", &self.em1)];
        for i in 0..3 {
            for j in i + 1..3 {
                let m = parts[i].1.intersect(parts[j].1).intersect_interval(&self.window).measure();
                if m.is_positive() {
                    return Err(Error::Overlap(format!("{} and {} share measure {m}", parts[i].0, parts[j].0)));
                }
            }
        }
        let cover = self.e1.union(&self.e0).union(&self.em1).intersect_interval(&self.window);
        if cover.measure() != self.window.len() {
            return Err(Error::Precondition(format!(
                "parts cover measure {} of a window of length {}",
                cover.measure(),
                self.window.len()
            )));
        }
        Ok(())
    }
}

/// `f(x) = ∫_base^x 1_{E₁} - 1_{E₋₁}` on the window.
pub fn build_ternary_integral(t: &TernaryDecomposition, base: &Rational) -> Result<PiecewiseLinear> {
    t.validate()?;
    let w = &t.window;
    let mut pts = vec![w.lo().clone(), w.hi().clone()];
    pts.extend(t.e1.endpoints().into_iter().chain(t.em1.endpoints()).filter(|p| w.interior_contains(p)));
    pts.sort();
    pts.dedup();
    let signed = |s: &IntervalSet, x: &Rational| {
        if x >= base {
            s.mass_between(base, x)
        } else {
            -s.mass_between(x, base)
        }
    };
    let values = pts.iter().map(|x| signed(&t.e1, x) - signed(&t.em1, x)).collect();
    PiecewiseLinear::new(pts, values)
}

/// Truncation at `n ≤ n_max` of the decomposition of `E = (0, ∞)` by
/// alternating harmonic blocks, on the window `[-1, right]`:
/// `E₋₁ = ⋃ [1/(2n+1), 1/(2n)]`, `E₁ = ⋃ [1/(2n), 1/(2n-1)] ∪ [1, right]`,
/// `E₀ = [-1, 1/(2n_max+1)]`. Returns `(E, decomposition)` with
/// `E = [1/(2n_max+1), right]`.
pub fn harmonic_decomposition(n_max: u32, right: &Rational) -> Result<(IntervalSet, TernaryDecomposition)> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("need at least one block pair".into()));
    }
    if right < &Rational::one() {
        return Err(Error::InvalidParameter("window must reach 1".into()));
    }
    let n_max = n_max as i64;
    let cut = rat(1, 2 * n_max + 1);
    let mut em1 = Vec::new();
    let mut e1 = Vec::new();
    for n in 1..=n_max {
        em1.push(Interval::new(rat(1, 2 * n + 1), rat(1, 2 * n))?);
        e1.push(Interval::new(rat(1, 2 * n), rat(1, 2 * n - 1))?);
    }
    if right > &Rational::one() {
        e1.push(Interval::new(Rational::one(), right.clone())?);
    }
    let window = Interval::new(int(-1), right.clone())?;
    let e = IntervalSet::single(cut.clone(), right.clone())?;
    let t = TernaryDecomposition::new(
        IntervalSet::from_intervals(e1),
        IntervalSet::single(int(-1), cut)?,
        IntervalSet::from_intervals(em1),
        window,
    )?;
    Ok((e, t))
}

/// The balance condition at one point off `E`: the largest
/// `||E₁ ∩ I| - |E₋₁ ∩ I|| / |I|` over intervals `I ∋ x` with `|I| ≤ scale`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceCheck {
    #[serde(with = "rational::serde_str")]
    pub point: Rational,
    pub verdict: Verdict,
    /// `(scale, sup ratio, witness lo, witness hi)` per scale, coarse to fine.
    pub scales: Vec<ScaleRow>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleRow {
    #[serde(with = "rational::serde_str")]
    pub scale: Rational,
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
    #[serde(with = "rational::serde_str")]
    pub lo: Rational,
    #[serde(with = "rational::serde_str")]
    pub hi: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TernaryReport {
    pub verdict: Verdict,
    /// Weak density of `E₁` or `E₋₁` at sampled points of `E` (the better
    /// of the two certificates is kept).
    pub on_set: Vec<DensityReport>,
    pub off_set: Vec<BalanceCheck>,
}

/// Number of halvings in the scale family used for the balance condition.
pub const BALANCE_SCALES: i64 = 8;

/// Threshold above which a balance ratio at the finest scale counts as a
/// violation rather than an inconclusive reading.
pub fn balance_failure_threshold() -> Rational {
    rat(1, 2)
}

/// Largest `|D(I)| / |I|` over `I = [x-p, x+q] ∋ x`, `0 < p+q ≤ scale`, with
/// `D = |E₁ ∩ ·| - |E₋₁ ∩ ·|`. Linear-fractional on each cell of the
/// breakpoint grid, so the extremes sit at cell vertices.
pub fn balance_sup(t: &TernaryDecomposition, x: &Rational, scale: &Rational) -> Result<ScaleRow> {
    if !scale.is_positive() {
        return Err(Error::NonPositiveRadius(scale.clone()));
    }
    let side = |left: bool| {
        let mut v: Vec<Rational> = t
            .e1
            .endpoints()
            .into_iter()
            .chain(t.em1.endpoints())
            .filter_map(|p| {
                let d = if left { x - &p } else { &p - x };
                (d.is_positive() && &d <= scale).then_some(d)
            })
            .collect();
        v.push(Rational::zero());
        v.sort();
        v.dedup();
        v
    };
    let (ps, qs) = (side(true), side(false));
    let mut verts = Vec::new();
    for p in &ps {
        for q in &qs {
            let s = p + q;
            if s.is_positive() && &s <= scale {
                verts.push((p.clone(), q.clone()));
            }
        }
        verts.push((p.clone(), scale - p));
    }
    for q in &qs {
        verts.push((scale - q, q.clone()));
    }
    let mut best: Option<ScaleRow> = None;
    for (p, q) in verts {
        let (lo, hi) = (x - &p, x + &q);
        let d = t.e1.mass_between(&lo, &hi) - t.em1.mass_between(&lo, &hi);
        let ratio = d.abs() / (&hi - &lo);
        if best.as_ref().map_or(true, |b| ratio > b.ratio) {
            best = Some(ScaleRow { scale: scale.clone(), ratio, lo, hi });
        }
    }
    Ok(best.expect("at least one vertex"))
}

/// Finite-scale check of both decomposition conditions at scale
/// `ε = resolution`. On `E`: weak density of `E₁` or `E₋₁`. Off `E`: the
/// balance ratio over scales `ε·2^{-k}`, `k = 0..8`; holds when the finest
/// reading is `≤ ε`, fails when it stays `≥ 1/2`, inconclusive otherwise.
pub fn check_ternary(t: &TernaryDecomposition, e: &IntervalSet, resolution: &Rational) -> Result<TernaryReport> {
    t.validate()?;
    if !resolution.is_positive() || resolution >= &Rational::one() {
        return Err(Error::InvalidParameter(format!("resolution must lie in (0,1), got {resolution}")));
    }
    let eps = resolution;
    let mut on_set = Vec::new();
    let mut off_set = Vec::new();
    for x in sample_points(e, &t.window, resolution) {
        if e.contains(&x) {
            let a = check_weakly_dense_at(&t.e1, &x, eps)?;
            let b = check_weakly_dense_at(&t.em1, &x, eps)?;
            let keep = if a.verdict == Verdict::Holds || (b.verdict != Verdict::Holds && a.ratio >= b.ratio) {
                a
            } else {
                b
            };
            on_set.push(keep);
        } else {
            let mut rows = Vec::new();
            for k in 0..=BALANCE_SCALES {
                rows.push(balance_sup(t, &x, &(eps * pow2(-k)))?);
            }
            let finest = &rows.last().expect("non-empty").ratio;
            let verdict = if finest <= eps {
                Verdict::Holds
            } else if rows.iter().all(|r| r.ratio >= balance_failure_threshold()) {
                Verdict::Fails
            } else {
                Verdict::Inconclusive
            };
            off_set.push(BalanceCheck { point: x, verdict, scales: rows });
        }
    }
    let verdicts = on_set.iter().map(|r| r.verdict).chain(off_set.iter().map(|r| r.verdict));
    let mut verdict = Verdict::Holds;
    for v in verdicts {
        match v {
            Verdict::Fails => {
                verdict = Verdict::Fails;
                break;
            }
            Verdict::Inconclusive => verdict = Verdict::Inconclusive,
            Verdict::Holds => {}
        }
    }
    Ok(TernaryReport { verdict, on_set, off_set })
}

/// `F₁ = closure(E ∖ E₋₁)`, `F₋₁ = E₋₁ ∩ E`, `F₀ = closure(window ∖ E)`.
pub fn normalize_ternary(t: &TernaryDecomposition, e: &IntervalSet) -> Result<TernaryDecomposition> {
    t.validate()?;
    let w = &t.window;
    let e_w = e.intersect_interval(w).without_points();
    let f1 = e_w.difference(&t.em1).without_points();
    let fm1 = t.em1.intersect(&e_w).without_points();
    let f0 = e_w.complement_within(w)?;
    TernaryDecomposition::new(f1, f0, fm1, w.clone())
}
