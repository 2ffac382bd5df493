//! Density ratios, the level sets `E^{γ,δ}`, finite-scale density checks and
//! uniform-density witnesses.
//!
//! For a fixed point `x`, both `r ↦ |E ∩ [x-r, x]|` and `r ↦ |E ∩ [x, x+r]|`
//! are piecewise linear with breakpoints at the distances from `x` to the
//! endpoints of `E`. On a linear piece `a + b·r` the ratio `a/r + b` is
//! monotone, so every infimum or supremum over a range of radii is attained
//! at a breakpoint, at a range end, or where the two one-sided curves cross.
//! All checks below search exactly that finite candidate set.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{area2, clip, rect, vertex_mean, HalfPlane, Pt};
use crate::interval_set::{Interval, IntervalSet, MassOracle};
use crate::rational::{self, int, mid, pow2, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
    Max,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityQuery {
    pub x: Rational,
    pub side: Side,
    pub r: Rational,
}

/// `(|E ∩ [x-r, x]| / r, |E ∩ [x, x+r]| / r)`.
pub fn one_sided_ratios<M: MassOracle + ?Sized>(e: &M, x: &Rational, r: &Rational) -> Result<(Rational, Rational)> {
    if !r.is_positive() {
        return Err(Error::NonPositiveRadius(r.clone()));
    }
    let left = e.mass(&(x - r), x) / r;
    let right = e.mass(x, &(x + r)) / r;
    Ok((left, right))
}

pub fn density_ratio<M: MassOracle + ?Sized>(e: &M, q: &DensityQuery) -> Result<Rational> {
    let (l, r) = one_sided_ratios(e, &q.x, &q.r)?;
    Ok(match q.side {
        Side::Left => l,
        Side::Right => r,
        Side::Max => l.max(r),
    })
}

/// `|E ∩ [x-r, x+r]| / 2r`.
pub fn center_ratio<M: MassOracle + ?Sized>(e: &M, x: &Rational, r: &Rational) -> Result<Rational> {
    if !r.is_positive() {
        return Err(Error::NonPositiveRadius(r.clone()));
    }
    Ok(e.mass(&(x - r), &(x + r)) / (int(2) * r))
}

/// Sorted, deduplicated distances from `x` to endpoints of `e` lying in the
/// open range `(0, limit)`.
pub fn radius_breaks(e: &IntervalSet, x: &Rational, limit: &Rational) -> Vec<Rational> {
    let mut out: Vec<Rational> = e
        .endpoints()
        .into_iter()
        .map(|p| (p - x).abs())
        .filter(|d| d.is_positive() && d < limit)
        .collect();
    rational::sort_dedup(&mut out);
    out
}

/// Distances to endpoints strictly on one side of `x` (left when `left`),
/// restricted to `(0, limit]`.
fn side_breaks(e: &IntervalSet, x: &Rational, limit: &Rational, left: bool) -> Vec<Rational> {
    let mut out: Vec<Rational> = e
        .endpoints()
        .into_iter()
        .filter_map(|p| {
            let d = if left { x - &p } else { &p - x };
            (d.is_positive() && &d <= limit).then_some(d)
        })
        .collect();
    rational::sort_dedup(&mut out);
    out
}

/// The minimizer of `max(left, right)` over `r ∈ (0, δ]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    #[serde(with = "rational::serde_str")]
    pub worst_r: Rational,
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
    #[serde(with = "rational::serde_str")]
    pub left: Rational,
    #[serde(with = "rational::serde_str")]
    pub right: Rational,
}

/// Exact `inf_{r ∈ (0, δ]} max(left(r), right(r))` with its minimizing radius.
pub fn inf_max_ratio(e: &IntervalSet, x: &Rational, delta: &Rational) -> Result<Membership> {
    if !delta.is_positive() {
        return Err(Error::NonPositiveRadius(delta.clone()));
    }
    let mut breaks = radius_breaks(e, x, delta);
    breaks.push(delta.clone());
    let masses: Vec<(Rational, Rational)> = breaks
        .iter()
        .map(|r| (e.mass_between(&(x - r), x), e.mass_between(x, &(x + r))))
        .collect();
    let mut cands: Vec<Rational> = breaks.clone();
    for k in 1..breaks.len() {
        let (r0, r1) = (&breaks[k - 1], &breaks[k]);
        let (l0, q0) = &masses[k - 1];
        let (l1, q1) = &masses[k];
        let w = r1 - r0;
        let bl = (l1 - l0) / &w;
        let br = (q1 - q0) / &w;
        if bl != br {
            let al = l1 - &bl * r1;
            let ar = q1 - &br * r1;
            let rc = (ar - al) / (&bl - &br);
            if &rc > r0 && &rc < r1 {
                cands.push(rc);
            }
        }
    }
    let mut best: Option<Membership> = None;
    for r in cands {
        let (l, q) = one_sided_ratios(e, x, &r)?;
        let m = l.clone().max(q.clone());
        let better = match &best {
            None => true,
            Some(b) => m < b.ratio || (m == b.ratio && r < b.worst_r),
        };
        if better {
            best = Some(Membership { member: false, worst_r: r, ratio: m, left: l, right: q });
        }
    }
    Ok(best.expect("at least one candidate radius"))
}

/// Exact decision of `x ∈ E^{γ,δ}`.
pub fn level_set_membership(e: &IntervalSet, x: &Rational, gamma: &Rational, delta: &Rational) -> Result<Membership> {
    if !gamma.is_positive() {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let mut m = inf_max_ratio(e, x, delta)?;
    m.member = &m.ratio >= gamma;
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelSet {
    pub set: IntervalSet,
    /// Hausdorff margin of the reconstruction; zero means exact.
    #[serde(with = "rational::serde_str")]
    pub margin: Rational,
    /// Grid points at `resolution` spacing whose membership disagreed with
    /// `set` (always empty for a correct reconstruction).
    #[serde(with = "rational::serde_str_vec")]
    pub audit_mismatches: Vec<Rational>,
    pub audited_points: usize,
}

const MAX_AUDIT_POINTS: usize = 2048;

/// Exact reconstruction of `E^{γ,δ} ∩ window`.
///
/// Works in coordinates `u = x - r`, `v = x + r`. The lines `u = e`,
/// `v = e` and `u + v = 2e` (for endpoints `e`) cut the band
/// `0 ≤ v - u ≤ 2δ` into convex cells on which both one-sided masses are
/// affine. The complement of the level set is the projection to `x` of the
/// cells' parts where both masses fall below `γr`.
pub fn level_set(
    e: &IntervalSet,
    gamma: &Rational,
    delta: &Rational,
    window: &Interval,
    resolution: &Rational,
) -> Result<LevelSet> {
    if window.is_degenerate() {
        return Err(Error::DegenerateWindow(window.lo().clone()));
    }
    if !gamma.is_positive() {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    if !delta.is_positive() {
        return Err(Error::NonPositiveRadius(delta.clone()));
    }
    if !resolution.is_positive() {
        return Err(Error::InvalidParameter(format!("resolution must be positive, got {resolution}")));
    }
    let two = int(2);
    let (wl, wh) = (window.lo().clone(), window.hi().clone());
    let u_rng = (&wl - delta, wh.clone());
    let v_rng = (wl.clone(), &wh + delta);
    let ends = e.endpoints();
    let breaks_in = |lo: &Rational, hi: &Rational| {
        let mut b = vec![lo.clone(), hi.clone()];
        b.extend(ends.iter().filter(|p| *p > lo && *p < hi).cloned());
        rational::sort_dedup(&mut b);
        b
    };
    let ub = breaks_in(&u_rng.0, &u_rng.1);
    let vb = breaks_in(&v_rng.0, &v_rng.1);
    let diag: Vec<Rational> = ends.iter().filter(|p| **p >= wl && **p <= wh).map(|p| &two * p).collect();

    let geometric = [
        HalfPlane::new(int(-1), int(1), int(0)),
        HalfPlane::new(int(1), int(-1), &two * delta),
        HalfPlane::new(int(1), int(1), -(&two * &wl)),
        HalfPlane::new(int(-1), int(-1), &two * &wh),
    ];

    let mut bad: Vec<(Rational, Rational)> = Vec::new();
    let twod = &two * delta;
    for i in 0..ub.len() - 1 {
        let (u0, u1) = (&ub[i], &ub[i + 1]);
        let j0 = vb.partition_point(|v| rational::le(v, u0)).saturating_sub(1);
        for j in j0..vb.len() - 1 {
            let (v0, v1) = (&vb[j], &vb[j + 1]);
            if v0 >= &(u1 + &twod) {
                break;
            }
            if v1 <= u0 {
                continue;
            }
            let mut base = rect(u0, u1, v0, v1);
            for h in &geometric {
                base = clip(&base, h);
            }
            if base.len() < 3 || !area2(&base).is_positive() {
                continue;
            }
            let (smin, smax) = (u0 + v0, u1 + v1);
            let mut cuts: Vec<&Rational> = diag.iter().filter(|d| **d > smin && **d < smax).collect();
            cuts.sort_unstable_by(|a, b| rational::cmp_fast(a, b));
            cuts.dedup_by(|a, b| rational::eq_fast(a, b));
            let mut bounds: Vec<Option<&Rational>> = vec![None];
            bounds.extend(cuts.iter().map(|c| Some(*c)));
            bounds.push(None);
            for k in 0..bounds.len() - 1 {
                let mut cell = base.clone();
                if let Some(lo) = bounds[k] {
                    cell = clip(&cell, &HalfPlane::new(int(1), int(1), -lo.clone()));
                }
                if let Some(hi) = bounds[k + 1] {
                    cell = clip(&cell, &HalfPlane::new(int(-1), int(-1), hi.clone()));
                }
                if cell.len() < 3 || !area2(&cell).is_positive() {
                    continue;
                }
                if let Some(iv) = bad_projection(e, gamma, &cell) {
                    bad.push(iv);
                }
            }
        }
    }

    bad.sort();
    let mut pieces: Vec<Interval> = Vec::new();
    let mut cursor = wl.clone();
    let mut merged: Vec<(Rational, Rational)> = Vec::new();
    for (a, b) in bad {
        match merged.last_mut() {
            Some(last) if a < last.1 => {
                if b > last.1 {
                    last.1 = b;
                }
            }
            _ => merged.push((a, b)),
        }
    }
    for (a, b) in &merged {
        if a >= &cursor {
            pieces.push(Interval::new(cursor.clone(), a.clone())?);
        }
        if b > &cursor {
            cursor = b.clone();
        }
    }
    if cursor <= wh {
        pieces.push(Interval::new(cursor, wh.clone())?);
    }
    let mut kept = Vec::new();
    for p in pieces {
        if p.is_degenerate() && !level_set_membership(e, p.lo(), gamma, delta)?.member {
            continue;
        }
        kept.push(p);
    }
    let set = IntervalSet::from_intervals(kept);

    let span = &wh - &wl;
    let mut step = resolution.clone();
    let cap = int(MAX_AUDIT_POINTS as i64);
    if &span / &step > cap {
        step = &span / &cap;
    }
    let mut mismatches = Vec::new();
    let mut audited = 0;
    let mut x = wl.clone();
    while x <= wh {
        audited += 1;
        if level_set_membership(e, &x, gamma, delta)?.member != set.contains(&x) {
            mismatches.push(x.clone());
        }
        x += &step;
    }
    for p in set.endpoints() {
        audited += 1;
        if !level_set_membership(e, &p, gamma, delta)?.member {
            mismatches.push(p);
        }
    }
    Ok(LevelSet { set, margin: Rational::zero(), audit_mismatches: mismatches, audited_points: audited })
}

/// The open `x`-projection of the part of `cell` where both one-sided masses
/// are strictly below `γr`, if that part has positive area.
fn bad_projection(e: &IntervalSet, gamma: &Rational, cell: &[Pt]) -> Option<(Rational, Rational)> {
    let two = int(2);
    let (uc, vc) = vertex_mean(cell);
    let xc = (&uc + &vc) / &two;
    let ind = |t: &Rational| if e.interior_contains(t) { Rational::one() } else { Rational::zero() };
    let (su, sx, sv) = (ind(&uc), ind(&xc), ind(&vc));
    let lc = e.mass_between(&uc, &xc);
    let rc = e.mass_between(&xc, &vc);
    let g2 = gamma / &two;
    let x2 = &sx / &two;
    let left = HalfPlane::strict(
        -&g2 - &x2 + &su,
        &g2 - &x2,
        -&lc + &sx * &xc - &su * &uc,
    );
    let right = HalfPlane::strict(
        -&g2 + &x2,
        &g2 - &sv + &x2,
        -&rc + &sv * &vc - &sx * &xc,
    );
    let mut p = clip(cell, &left);
    p = clip(&p, &right);
    if p.len() < 3 || !area2(&p).is_positive() {
        return None;
    }
    let xs: Vec<Rational> = p.iter().map(|(u, v)| (u + v) / &two).collect();
    let lo = xs.iter().min()?.clone();
    let hi = xs.iter().max()?.clone();
    Some((lo, hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityReport {
    #[serde(with = "rational::serde_str")]
    pub point: Rational,
    pub verdict: Verdict,
    #[serde(with = "rational::serde_str_opt")]
    pub worst_r: Option<Rational>,
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
    pub side: Side,
    #[serde(with = "rational::serde_str")]
    pub left: Rational,
    #[serde(with = "rational::serde_str")]
    pub right: Rational,
}

fn side_of(l: &Rational, r: &Rational) -> Side {
    match l.cmp(r) {
        std::cmp::Ordering::Greater => Side::Left,
        std::cmp::Ordering::Less => Side::Right,
        std::cmp::Ordering::Equal => Side::Max,
    }
}

/// Finds some `r ∈ (0, ε)` with `ratio(r) > 1 - ε`, where `ratio` is
/// continuous, evaluated at `breaks` (sorted, inside `(0, ε)`) and at the
/// limit `r → ε⁻`.
fn open_sup_witness<F>(breaks: &[Rational], eps: &Rational, ratio: F) -> Result<(Option<Rational>, Rational)>
where
    F: Fn(&Rational) -> Result<Rational>,
{
    let target = Rational::one() - eps;
    if breaks.is_empty() {
        let r = eps / int(2);
        let v = ratio(&r)?;
        return Ok((Some(r), v));
    }
    let mut best_r = breaks[0].clone();
    let mut best = ratio(&best_r)?;
    for r in &breaks[1..] {
        let v = ratio(r)?;
        if v > best {
            best = v;
            best_r = r.clone();
        }
    }
    if best > target {
        return Ok((Some(best_r), best));
    }
    let at_eps = ratio(eps)?;
    if at_eps <= target {
        return Ok(if at_eps > best { (Some(eps.clone()), at_eps) } else { (Some(best_r), best) });
    }
    let prev = breaks.last().cloned().unwrap_or_else(Rational::zero);
    let mut r = mid(&prev, eps);
    for _ in 0..256 {
        let v = ratio(&r)?;
        if v > target {
            return Ok((Some(r), v));
        }
        r = mid(&r, eps);
    }
    Err(Error::Construction("no interior witness radius found".into()))
}

/// Weak density at `x` in the one-sided form: is there `r ∈ (0, ε)` with
/// `max(left, right) > 1 - ε`?
pub fn check_weakly_dense_at(e: &IntervalSet, x: &Rational, eps: &Rational) -> Result<DensityReport> {
    check_eps(eps)?;
    let breaks = radius_breaks(e, x, eps);
    let (r, ratio) = open_sup_witness(&breaks, eps, |r| {
        let (l, q) = one_sided_ratios(e, x, r)?;
        Ok(l.max(q))
    })?;
    let r = r.expect("witness radius");
    let (l, q) = one_sided_ratios(e, x, &r)?;
    let verdict = if ratio > Rational::one() - eps && &r < eps { Verdict::Holds } else { Verdict::Fails };
    Ok(DensityReport { point: x.clone(), verdict, side: side_of(&l, &q), worst_r: Some(r), ratio, left: l, right: q })
}

/// Weak center density at `x`: is there `r ∈ (0, ε)` with
/// `|E ∩ [x-r, x+r]| / 2r > 1 - ε`?
pub fn check_weakly_center_dense_at(e: &IntervalSet, x: &Rational, eps: &Rational) -> Result<DensityReport> {
    check_eps(eps)?;
    let breaks = radius_breaks(e, x, eps);
    let (r, ratio) = open_sup_witness(&breaks, eps, |r| center_ratio(e, x, r))?;
    let r = r.expect("witness radius");
    let (l, q) = one_sided_ratios(e, x, &r)?;
    let verdict = if ratio > Rational::one() - eps && &r < eps { Verdict::Holds } else { Verdict::Fails };
    Ok(DensityReport { point: x.clone(), verdict, side: Side::Max, worst_r: Some(r), ratio, left: l, right: q })
}

fn check_eps(eps: &Rational) -> Result<()> {
    if !eps.is_positive() || eps >= &Rational::one() {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1), got {eps}")));
    }
    Ok(())
}

/// Strong one-sided density along an explicit radius grid: holds at scale
/// when every grid radius has `max(left, right) ≥ 1 - tolerance`. The worst
/// grid radius is the certificate.
pub fn check_strongly_one_sided_dense_at<M: MassOracle + ?Sized>(
    e: &M,
    x: &Rational,
    r_grid: &[Rational],
    tolerance: &Rational,
) -> Result<DensityReport> {
    if r_grid.is_empty() {
        return Err(Error::Empty("radius grid".into()));
    }
    if r_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radius grid must be strictly descending".into()));
    }
    let mut worst: Option<(Rational, Rational, Rational, Rational)> = None;
    for r in r_grid {
        let (l, q) = one_sided_ratios(e, x, r)?;
        let m = l.clone().max(q.clone());
        if worst.as_ref().map_or(true, |w| m < w.1) {
            worst = Some((r.clone(), m, l, q));
        }
    }
    let (r, ratio, l, q) = worst.expect("non-empty grid");
    let verdict = if ratio >= Rational::one() - tolerance { Verdict::Holds } else { Verdict::Fails };
    Ok(DensityReport { point: x.clone(), verdict, side: side_of(&l, &q), worst_r: Some(r), ratio, left: l, right: q })
}

/// One row of a radius sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub r: Rational,
    pub left: Rational,
    pub right: Rational,
}

pub fn sweep<M: MassOracle + ?Sized>(e: &M, x: &Rational, r_grid: &[Rational]) -> Result<Vec<SweepRow>> {
    r_grid
        .iter()
        .map(|r| {
            let (left, right) = one_sided_ratios(e, x, r)?;
            Ok(SweepRow { r: r.clone(), left, right })
        })
        .collect()
}

/// `start, start·factor, …` (`count` terms).
pub fn geometric_grid(start: &Rational, factor: &Rational, count: usize) -> Result<Vec<Rational>> {
    if !start.is_positive() {
        return Err(Error::NonPositiveRadius(start.clone()));
    }
    if !factor.is_positive() || factor >= &Rational::one() {
        return Err(Error::InvalidParameter(format!("grid factor must lie in (0,1), got {factor}")));
    }
    let mut out = Vec::with_capacity(count);
    let mut r = start.clone();
    for _ in 0..count {
        out.push(r.clone());
        r = &r * factor;
    }
    Ok(out)
}

/// An interval `[x - p, x + q]` and its exact `E`-density.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalDensity {
    pub lo: Rational,
    pub hi: Rational,
    pub ratio: Rational,
}

/// Extremes of `|E ∩ I| / |I|` over all intervals `I ∋ x` with
/// `0 < |I| ≤ scale`; returns `(min, max)`.
pub fn interval_density_extremes(
    e: &IntervalSet,
    x: &Rational,
    scale: &Rational,
) -> Result<(IntervalDensity, IntervalDensity)> {
    if !scale.is_positive() {
        return Err(Error::NonPositiveRadius(scale.clone()));
    }
    let mut ps = side_breaks(e, x, scale, true);
    ps.insert(0, Rational::zero());
    let mut qs = side_breaks(e, x, scale, false);
    qs.insert(0, Rational::zero());
    let mut verts: Vec<(Rational, Rational)> = Vec::new();
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
    let mut lo: Option<IntervalDensity> = None;
    let mut hi: Option<IntervalDensity> = None;
    for (p, q) in verts {
        let (a, b) = (x - &p, x + &q);
        let ratio = e.mass_between(&a, &b) / (&b - &a);
        let d = IntervalDensity { lo: a, hi: b, ratio };
        if lo.as_ref().map_or(true, |c| d.ratio < c.ratio) {
            lo = Some(d.clone());
        }
        if hi.as_ref().map_or(true, |c| d.ratio > c.ratio) {
            hi = Some(d);
        }
    }
    Ok((lo.expect("vertex"), hi.expect("vertex")))
}

/// Strong density at finite scale: every interval containing `x` of length
/// at most `ε` has density `≥ 1 - ε`.
pub fn check_strongly_dense_at(e: &IntervalSet, x: &Rational, eps: &Rational) -> Result<DensityReport> {
    check_eps(eps)?;
    let (worst, _) = interval_density_extremes(e, x, eps)?;
    let verdict = if worst.ratio >= Rational::one() - eps { Verdict::Holds } else { Verdict::Fails };
    let (l, q) = (x - &worst.lo, &worst.hi - x);
    let r = l.clone().max(q.clone());
    let side = side_of(&l, &q);
    Ok(DensityReport {
        point: x.clone(),
        verdict,
        worst_r: Some(r),
        ratio: worst.ratio,
        side,
        left: worst.lo,
        right: worst.hi,
    })
}

/// Uniform density witness: `γ_1 < γ_2 < … < 1` and `δ_1 > δ_2 > … > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UdtWitness {
    #[serde(with = "rational::serde_str_vec")]
    pub gammas: Vec<Rational>,
    #[serde(with = "rational::serde_str_vec")]
    pub deltas: Vec<Rational>,
}

impl UdtWitness {
    pub fn new(gammas: Vec<Rational>, deltas: Vec<Rational>) -> Result<Self> {
        let w = UdtWitness { gammas, deltas };
        w.validate()?;
        Ok(w)
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.len() != self.deltas.len() {
            return Err(Error::InvalidParameter("gamma and delta prefixes differ in length".into()));
        }
        if self.gammas.is_empty() {
            return Err(Error::Empty("witness prefix".into()));
        }
        let one = Rational::one();
        if self.gammas.iter().any(|g| !g.is_positive() || g >= &one) {
            return Err(Error::InvalidParameter("every gamma must lie in (0,1)".into()));
        }
        if self.deltas.iter().any(|d| !d.is_positive()) {
            return Err(Error::InvalidParameter("every delta must be positive".into()));
        }
        if self.gammas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("gammas must be strictly increasing".into()));
        }
        if self.deltas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("deltas must be strictly decreasing".into()));
        }
        Ok(())
    }

    /// `γ_n = 1 - 2^{-(n+1)}`, `δ_n = ℓ / 2^{n+1}` for `n = 1..=depth`.
    /// Valid for every closed set whose components all have length `≥ ℓ`.
    pub fn for_min_length(min_len: &Rational, depth: usize) -> Result<Self> {
        if !min_len.is_positive() {
            return Err(Error::InvalidParameter(format!("component length must be positive, got {min_len}")));
        }
        if depth == 0 {
            return Err(Error::Empty("witness prefix".into()));
        }
        let gammas = (1..=depth as i64).map(|n| Rational::one() - pow2(-(n + 1))).collect();
        let deltas = (1..=depth as i64).map(|n| min_len * pow2(-(n + 1))).collect();
        UdtWitness::new(gammas, deltas)
    }

    /// Witness for a finite union of non-degenerate closed intervals.
    pub fn for_set(e: &IntervalSet, depth: usize) -> Result<Self> {
        let min_len = e
            .intervals()
            .iter()
            .map(Interval::len)
            .min()
            .ok_or_else(|| Error::Empty("set has no components".into()))?;
        if min_len.is_zero() {
            return Err(Error::Precondition("set has a degenerate component".into()));
        }
        Self::for_min_length(&min_len, depth)
    }
}

/// A single witness dominated term-wise by every input on the common prefix:
/// `γ_n = (1 - 2^{-(n+1)})·min_m γ_{m,n}`, `δ_n = min_m δ_{m,n} / 2`.
/// A single input is returned unchanged.
pub fn merge_udt_witnesses(ws: &[UdtWitness]) -> Result<UdtWitness> {
    let first = ws.first().ok_or_else(|| Error::Empty("no witnesses to merge".into()))?;
    for w in ws {
        w.validate()?;
    }
    if ws.len() == 1 {
        return Ok(first.clone());
    }
    let depth = ws.iter().map(UdtWitness::depth).min().unwrap_or(0);
    let mut gammas = Vec::with_capacity(depth);
    let mut deltas = Vec::with_capacity(depth);
    for n in 0..depth {
        let g = ws.iter().map(|w| &w.gammas[n]).min().expect("non-empty");
        let d = ws.iter().map(|w| &w.deltas[n]).min().expect("non-empty");
        gammas.push((Rational::one() - pow2(-(n as i64 + 2))) * g);
        deltas.push(d / int(2));
    }
    UdtWitness::new(gammas, deltas)
}

/// `E = ⋃_{n ∈ ℤ} [2ⁿ - 2ⁿ⁻², 2ⁿ]` with exact masses (no truncation).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DyadicShells;

impl DyadicShells {
    /// `|E ∩ [0, r]|` for `r ≥ 0`.
    pub fn cumulative(&self, r: &Rational) -> Rational {
        if !r.is_positive() {
            return Rational::zero();
        }
        let k = rational::floor_log2(r);
        let p = pow2(k);
        let start = &p * rat_3_2();
        let tail = if r > &start { r - &start } else { Rational::zero() };
        pow2(k - 1) + tail
    }
}

fn rat_3_2() -> Rational {
    rational::rat(3, 2)
}

impl MassOracle for DyadicShells {
    fn mass(&self, a: &Rational, b: &Rational) -> Rational {
        if b <= a {
            return Rational::zero();
        }
        self.cumulative(b) - self.cumulative(a)
    }
}

/// Truncation of the dyadic-shell set together with its closure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prop5Example {
    /// Blocks `n ∈ [-depth, top]` with `2^top ≤ window.hi`.
    pub truncated: IntervalSet,
    /// `truncated ∪ {0}`.
    pub closure: IntervalSet,
    pub shells: DyadicShells,
}

pub fn prop5_example(depth: u32, window: &Interval) -> Result<Prop5Example> {
    if !window.hi().is_positive() {
        return Err(Error::InvalidParameter("window must reach into (0, ∞)".into()));
    }
    let top = if window.hi() >= &Rational::one() { rational::floor_log2(window.hi()) } else { -1 };
    let mut ivs = Vec::new();
    for n in -(depth as i64)..=top {
        let hi = pow2(n);
        let lo = &hi - pow2(n - 2);
        ivs.push(Interval::new(lo, hi)?);
    }
    let truncated = IntervalSet::from_intervals(ivs).intersect_interval(window);
    let mut with_zero = truncated.intervals().to_vec();
    if window.contains(&Rational::zero()) {
        with_zero.push(Interval::point(Rational::zero()));
    }
    Ok(Prop5Example { closure: IntervalSet::from_intervals(with_zero), truncated, shells: DyadicShells })
}

/// Radii `2ⁿ - 2ⁿ⁻²` for `n` in the given range, descending.
pub fn prop5_radii(n_hi: i64, n_lo: i64) -> Vec<Rational> {
    (n_lo..=n_hi).rev().map(|n| pow2(n) - pow2(n - 2)).collect()
}

/// A two-sided set at 0 that is strongly one-sided dense there without being
/// left- or right-dense: blocks `[2^{-(2n+1)²}, n·2^{-(2n)²}]` and
/// `[-n·2^{-(2n+1)²}, -2^{-(2n+2)²}]` for `n = 1..=n_max`.
pub fn alternating_sides_example(n_max: u32) -> IntervalSet {
    let mut ivs = Vec::new();
    for n in 1..=n_max as i64 {
        let nn = int(n);
        let a = pow2(-((2 * n + 1) * (2 * n + 1)));
        let b = &nn * pow2(-((2 * n) * (2 * n)));
        let c = -(&nn * pow2(-((2 * n + 1) * (2 * n + 1))));
        let d = -pow2(-((2 * n + 2) * (2 * n + 2)));
        ivs.push(Interval::new(a, b).expect("ordered"));
        ivs.push(Interval::new(c, d).expect("ordered"));
    }
    IntervalSet::from_intervals(ivs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn set(pairs: &[(i64, i64, i64, i64)]) -> IntervalSet {
        IntervalSet::canonicalize(pairs.iter().map(|&(a, b, c, d)| (rat(a, b), rat(c, d)))).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let e = set(&[(0, 1, 1, 1)]);
        let q = |x, side, r| DensityQuery { x, side, r };
        assert_eq!(density_ratio(&e, &q(int(0), Side::Right, rat(1, 2))).unwrap(), int(1));
        assert_eq!(density_ratio(&e, &q(int(0), Side::Left, rat(1, 2))).unwrap(), int(0));
        let e2 = set(&[(0, 1, 1, 4), (1, 2, 1, 1)]);
        assert_eq!(density_ratio(&e2, &q(int(1), Side::Left, int(1))).unwrap(), rat(3, 4));
        assert!(density_ratio(&e, &q(int(0), Side::Max, int(0))).is_err());
    }

    #[test]
    fn membership_examples() {
        let e = set(&[(0, 1, 1, 1)]);
        let (g, d) = (rat(1, 2), rat(1, 4));
        assert!(level_set_membership(&e, &rat(1, 2), &g, &d).unwrap().member);
        let out = level_set_membership(&e, &rat(5, 4), &g, &d).unwrap();
        assert!(!out.member);
        assert_eq!(out.ratio, int(0));
        assert!(level_set_membership(&e, &int(0), &g, &d).unwrap().member);
        assert!(!level_set_membership(&e, &rat(-1, 64), &g, &d).unwrap().member);
        assert!(level_set_membership(&e, &int(0), &int(0), &d).is_err());
    }

    #[test]
    fn crossing_radius_is_found() {
        // left mass grows from r = 1/4, right mass shrinks relative to r
        let e = set(&[(-1, 1, -1, 4), (0, 1, 1, 8)]);
        let m = inf_max_ratio(&e, &int(0), &int(1)).unwrap();
        let brute = (1..=4096)
            .map(|k| {
                let (l, q) = one_sided_ratios(&e, &int(0), &rat(k, 4096)).unwrap();
                l.max(q)
            })
            .min()
            .unwrap();
        assert!(m.ratio <= brute);
        let (l, q) = one_sided_ratios(&e, &int(0), &m.worst_r).unwrap();
        assert_eq!(l.max(q), m.ratio);
    }

    #[test]
    fn level_set_of_unit_interval() {
        let e = set(&[(0, 1, 1, 1)]);
        let w = Interval::new(int(-1), int(2)).unwrap();
        let ls = level_set(&e, &rat(1, 2), &rat(1, 4), &w, &rat(1, 64)).unwrap();
        assert_eq!(ls.set, e);
        assert_eq!(ls.margin, int(0));
        assert!(ls.audit_mismatches.is_empty());
        let empty = level_set(&IntervalSet::empty(), &rat(1, 2), &rat(1, 4), &w, &rat(1, 8)).unwrap();
        assert!(empty.set.is_empty());
    }

    #[test]
    fn level_set_drops_short_isolated_piece() {
        let e = set(&[(0, 1, 1, 8), (1, 4, 1, 1)]);
        let w = Interval::new(int(-1), int(2)).unwrap();
        let ls = level_set(&e, &rat(3, 4), &rat(1, 2), &w, &rat(1, 128)).unwrap();
        assert!(ls.audit_mismatches.is_empty(), "{:?}", ls.audit_mismatches);
        assert!(!ls.set.contains(&int(0)));
        assert!(!ls.set.contains(&rat(3, 16)));
        assert!(ls.set.contains(&rat(1, 2)));
        assert!(ls.set.is_subset_of(&e));
    }

    #[test]
    fn weak_density_examples() {
        let e = set(&[(0, 1, 1, 1)]);
        let ok = check_weakly_dense_at(&e, &int(1), &rat(1, 10)).unwrap();
        assert_eq!(ok.verdict, Verdict::Holds);
        assert_eq!(ok.left, int(1));
        let bad = check_weakly_dense_at(&e, &rat(3, 2), &rat(1, 4)).unwrap();
        assert_eq!(bad.verdict, Verdict::Fails);
    }

    #[test]
    fn center_density_fails_at_interval_endpoint() {
        let e = set(&[(0, 1, 1, 1)]);
        let rep = check_weakly_center_dense_at(&e, &int(0), &rat(1, 10)).unwrap();
        assert_eq!(rep.verdict, Verdict::Fails);
        assert_eq!(rep.ratio, rat(1, 2));
        let inner = check_weakly_center_dense_at(&e, &rat(1, 2), &rat(1, 10)).unwrap();
        assert_eq!(inner.verdict, Verdict::Holds);
    }

    #[test]
    fn strong_density_extremes() {
        let e = set(&[(0, 1, 1, 1)]);
        let (lo, hi) = interval_density_extremes(&e, &int(0), &rat(1, 4)).unwrap();
        assert_eq!(lo.ratio, int(0));
        assert_eq!(hi.ratio, int(1));
        let rep = check_strongly_dense_at(&e, &rat(1, 2), &rat(1, 8)).unwrap();
        assert_eq!(rep.verdict, Verdict::Holds);
    }

    #[test]
    fn shells_cumulative_matches_truncation() {
        let w = Interval::new(int(-1), int(4)).unwrap();
        let ex = prop5_example(12, &w).unwrap();
        for (a, b) in [(rat(1, 8), rat(3, 2)), (rat(3, 5), int(3)), (rat(1, 3), rat(7, 8))] {
            assert_eq!(ex.shells.mass(&a, &b), ex.truncated.mass_between(&a, &b));
        }
        for n in -6..3 {
            let r = pow2(n) - pow2(n - 2);
            let (l, q) = one_sided_ratios(&ex.shells, &int(0), &r).unwrap();
            assert_eq!(q, rat(1, 3));
            assert_eq!(l, int(0));
        }
    }

    #[test]
    fn prop5_depth3_blocks() {
        let w = Interval::new(int(-1), int(2)).unwrap();
        let ex = prop5_example(3, &w).unwrap();
        let iv = ex.truncated.intervals();
        assert_eq!(iv.len(), 5);
        assert_eq!(iv[3], Interval::new(rat(3, 4), int(1)).unwrap());
        assert_eq!(iv[4], Interval::new(rat(3, 2), int(2)).unwrap());
        assert_eq!(ex.closure.intervals()[0], Interval::point(int(0)));
    }

    #[test]
    fn witnesses() {
        let w = UdtWitness::for_min_length(&int(1), 3).unwrap();
        assert_eq!(merge_udt_witnesses(&[w.clone()]).unwrap(), w);
        let m = merge_udt_witnesses(&[w.clone(), w.clone()]).unwrap();
        for n in 0..3 {
            assert!(m.gammas[n] < w.gammas[n]);
            assert!(m.deltas[n] < w.deltas[n]);
        }
        assert!(merge_udt_witnesses(&[]).is_err());
        assert!(UdtWitness::new(vec![rat(1, 2), rat(1, 3)], vec![int(1), rat(1, 2)]).is_err());
    }
}
