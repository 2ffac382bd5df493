//! Continuous piecewise-linear functions with exact rational breakpoints.
//!
//! A function is given by strictly increasing breakpoints `b_0 < … < b_k`
//! and values `v_i = f(b_i)`; it is linear between consecutive breakpoints
//! and constant (clamped) outside `[b_0, b_k]`.

use std::cmp::Ordering;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiecewiseLinear {
    breakpoints: Vec<Rational>,
    values: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    #[serde(with = "rational::serde_str_vec")]
    breakpoints: Vec<Rational>,
    #[serde(with = "rational::serde_str_vec")]
    values: Vec<Rational>,
}

impl Serialize for PiecewiseLinear {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Repr { breakpoints: self.breakpoints.clone(), values: self.values.clone() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseLinear {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = Repr::deserialize(d)?;
        PiecewiseLinear::new(r.breakpoints, r.values).map_err(serde::de::Error::custom)
    }
}

/// `M_f(x, r)` together with whether `[x-r, x+r]` left the domain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MRatio {
    pub ratio: Rational,
    pub argmax: Rational,
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LipSweep {
    pub rows: Vec<(Rational, Rational)>,
    /// Smallest ratio on the grid (finite-scale lower indicator for lip).
    pub min: Rational,
    /// Largest ratio on the grid (finite-scale upper indicator for Lip).
    pub max: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncrementViolation {
    #[serde(with = "rational::serde_str")]
    pub a: Rational,
    #[serde(with = "rational::serde_str")]
    pub b: Rational,
    /// `|f(a) - f(b)|`
    #[serde(with = "rational::serde_str")]
    pub increment: Rational,
    /// `factor·|[a,b] ∩ E|`
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    #[serde(with = "rational::serde_str")]
    pub excess: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncrementReport {
    pub checked: usize,
    #[serde(with = "rational::serde_str")]
    pub factor: Rational,
    pub violations: Vec<IncrementViolation>,
}

impl IncrementReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl PiecewiseLinear {
    pub fn new(breakpoints: Vec<Rational>, values: Vec<Rational>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::Empty("piecewise-linear function needs a breakpoint".into()));
        }
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| rational::le(&w[1], &w[0])) {
            return Err(Error::InvalidParameter("breakpoints must be strictly increasing".into()));
        }
        Ok(PiecewiseLinear { breakpoints, values })
    }

    pub fn constant(value: Rational, domain: &Interval) -> Self {
        if domain.is_degenerate() {
            return PiecewiseLinear { breakpoints: vec![domain.lo().clone()], values: vec![value] };
        }
        PiecewiseLinear {
            breakpoints: vec![domain.lo().clone(), domain.hi().clone()],
            values: vec![value.clone(), value],
        }
    }

    pub fn zero(domain: &Interval) -> Self {
        Self::constant(Rational::zero(), domain)
    }

    /// `x ↦ x` on the domain.
    pub fn identity(domain: &Interval) -> Self {
        PiecewiseLinear {
            breakpoints: vec![domain.lo().clone(), domain.hi().clone()],
            values: vec![domain.lo().clone(), domain.hi().clone()],
        }
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn domain(&self) -> Interval {
        Interval::new(self.breakpoints[0].clone(), self.breakpoints.last().expect("non-empty").clone())
            .expect("sorted breakpoints")
    }

    pub fn lo(&self) -> &Rational {
        &self.breakpoints[0]
    }

    pub fn hi(&self) -> &Rational {
        self.breakpoints.last().expect("non-empty")
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let b = &self.breakpoints;
        if rational::le(x, &b[0]) {
            return self.values[0].clone();
        }
        if rational::le(self.hi(), x) {
            return self.values.last().expect("non-empty").clone();
        }
        let i = b.partition_point(|p| rational::le(p, x));
        let (x0, x1) = (&b[i - 1], &b[i]);
        let (y0, y1) = (&self.values[i - 1], &self.values[i]);
        if rational::eq_fast(x, x0) {
            return y0.clone();
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Per-segment slopes (one fewer than breakpoints).
    pub fn slopes(&self) -> Vec<Rational> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(b, v)| (&v[1] - &v[0]) / (&b[1] - &b[0]))
            .collect()
    }

    /// Slope just left and just right of `x` (zero outside the domain).
    pub fn side_slopes(&self, x: &Rational) -> (Rational, Rational) {
        let (b, v) = (&self.breakpoints, &self.values);
        let n = b.len() - 1;
        let slope = |k: usize| (&v[k + 1] - &v[k]) / (&b[k + 1] - &b[k]);
        let left = if rational::le(x, &b[0]) || n == 0 {
            Rational::zero()
        } else {
            let i = b.partition_point(|p| rational::lt(p, x));
            slope((i - 1).min(n - 1))
        };
        let right = if rational::le(self.hi(), x) || n == 0 {
            Rational::zero()
        } else {
            let i = b.partition_point(|p| rational::le(p, x));
            slope(i - 1)
        };
        (left, right)
    }

    /// `φ(x) = ∫_base^x 1_E`, on `window` (or on the hull of `E ∪ {base}`).
    pub fn build_phi(e: &IntervalSet, base: &Rational, window: Option<&Interval>) -> Result<Self> {
        let dom = match window {
            Some(w) => w.clone(),
            None => {
                let h = e.hull().unwrap_or_else(|| Interval::point(base.clone()));
                let lo = h.lo().min(base).clone();
                let hi = h.hi().max(base).clone();
                Interval::new(lo, hi)?
            }
        };
        let mut pts = vec![dom.lo().clone(), dom.hi().clone()];
        pts.extend(e.endpoints().into_iter().filter(|p| dom.interior_contains(p)));
        rational::sort_dedup(&mut pts);
        let phi_at = |t: &Rational| match t.cmp(base) {
            Ordering::Less => -e.mass_between(t, base),
            _ => e.mass_between(base, t),
        };
        let values = pts.iter().map(phi_at).collect();
        PiecewiseLinear::new(pts, values)
    }

    /// `M_f(x, r) = sup{|f(x) - f(y)| : |x - y| ≤ r} / r`.
    pub fn m_ratio(&self, x: &Rational, r: &Rational) -> Result<MRatio> {
        if !r.is_positive() {
            return Err(Error::NonPositiveRadius(r.clone()));
        }
        let (a, b) = (x - r, x + r);
        let clamped = &a < self.lo() || &b > self.hi();
        let fx = self.eval(x);
        let mut best = (self.eval(&a) - &fx).abs();
        let mut arg = a.clone();
        let fb = (self.eval(&b) - &fx).abs();
        if fb > best {
            best = fb;
            arg = b.clone();
        }
        let start = self.breakpoints.partition_point(|p| rational::le(p, &a));
        for (p, v) in self.breakpoints[start..].iter().zip(&self.values[start..]) {
            if p >= &b {
                break;
            }
            let d = (v - &fx).abs();
            if d > best {
                best = d;
                arg = p.clone();
            }
        }
        Ok(MRatio { ratio: best / r, argmax: arg, clamped })
    }

    /// `(Lip f(x), lip f(x))`; both equal the larger adjacent `|slope|`.
    pub fn local_lip_exact(&self, x: &Rational) -> Result<(Rational, Rational)> {
        if x <= self.lo() || x >= self.hi() {
            return Err(Error::AtDomainBoundary(x.clone()));
        }
        let (l, r) = self.side_slopes(x);
        let m = l.abs().max(r.abs());
        Ok((m.clone(), m))
    }

    pub fn lip_sweep(&self, x: &Rational, r_grid: &[Rational]) -> Result<LipSweep> {
        if r_grid.is_empty() {
            return Err(Error::Empty("radius grid".into()));
        }
        let mut rows = Vec::with_capacity(r_grid.len());
        for r in r_grid {
            rows.push((r.clone(), self.m_ratio(x, r)?.ratio));
        }
        let min = rows.iter().map(|(_, m)| m).min().expect("non-empty").clone();
        let max = rows.iter().map(|(_, m)| m).max().expect("non-empty").clone();
        Ok(LipSweep { rows, min, max })
    }

    /// `|f(a) - f(b)| ≤ factor·|[a,b] ∩ E|` for each pair.
    pub fn check_increment_bound(
        &self,
        e: &IntervalSet,
        pairs: &[(Rational, Rational)],
        factor: &Rational,
    ) -> IncrementReport {
        let mut violations = Vec::new();
        for (a, b) in pairs {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let inc = (self.eval(a) - self.eval(b)).abs();
            let bound = factor * e.mass_between(lo, hi);
            if inc > bound {
                violations.push(IncrementViolation {
                    a: a.clone(),
                    b: b.clone(),
                    excess: &inc - &bound,
                    increment: inc,
                    bound,
                });
            }
        }
        IncrementReport { checked: pairs.len(), factor: factor.clone(), violations }
    }

    /// The increment bound for *all* pairs at once: `|f'| ≤ factor·1_E` on
    /// every segment of the common refinement of `f` and `E`. Violations are
    /// reported as the offending segments.
    pub fn audit_increment_exact(&self, e: &IntervalSet, factor: &Rational) -> IncrementReport {
        let dom = self.domain();
        let mut pts: Vec<Rational> = self.breakpoints.clone();
        pts.extend(e.endpoints().into_iter().filter(|p| dom.interior_contains(p)));
        rational::sort_dedup(&mut pts);
        let mut violations = Vec::new();
        for w in pts.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let inc = (self.eval(a) - self.eval(b)).abs();
            let bound = factor * e.mass_between(a, b);
            if inc > bound {
                violations.push(IncrementViolation {
                    a: a.clone(),
                    b: b.clone(),
                    excess: &inc - &bound,
                    increment: inc,
                    bound,
                });
            }
        }
        IncrementReport { checked: pts.len().saturating_sub(1), factor: factor.clone(), violations }
    }

    fn merged_points(&self, other: &PiecewiseLinear) -> Vec<Rational> {
        let (a, b) = (&self.breakpoints, &other.breakpoints);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = if j == b.len() || (i < a.len() && rational::le(&a[i], &b[j])) {
                i += 1;
                &a[i - 1]
            } else {
                j += 1;
                &b[j - 1]
            };
            if out.last().map_or(true, |l| !rational::eq_fast(l, next)) {
                out.push(next.clone());
            }
        }
        out
    }

    /// Values at sorted points, by a single walk over the breakpoints.
    pub fn eval_sorted(&self, xs: &[Rational]) -> Vec<Rational> {
        let (b, v) = (&self.breakpoints, &self.values);
        let mut i = 0;
        xs.iter()
            .map(|x| {
                if rational::le(x, &b[0]) {
                    return v[0].clone();
                }
                if rational::le(self.hi(), x) {
                    return v[v.len() - 1].clone();
                }
                while rational::le(&b[i + 1], x) {
                    i += 1;
                }
                if rational::eq_fast(x, &b[i]) {
                    return v[i].clone();
                }
                &v[i] + (&v[i + 1] - &v[i]) * (x - &b[i]) / (&b[i + 1] - &b[i])
            })
            .collect()
    }

    fn zip_with<F: Fn(&Rational, &Rational) -> Rational>(&self, other: &Self, op: F) -> Result<Self> {
        if self.domain() != other.domain() {
            return Err(Error::DomainMismatch(format!("{} vs {}", self.domain(), other.domain())));
        }
        let pts = self.merged_points(other);
        let values = self.eval_sorted(&pts).iter().zip(other.eval_sorted(&pts)).map(|(a, b)| op(a, &b)).collect();
        PiecewiseLinear::new(pts, values)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        PiecewiseLinear {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        PiecewiseLinear {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub fn shift(&self, c: &Rational) -> Self {
        PiecewiseLinear {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    /// `sup |f|`, attained at a breakpoint.
    pub fn sup_norm(&self) -> Rational {
        self.values.iter().map(|v| v.abs()).max().expect("non-empty")
    }

    pub fn max_value(&self) -> Rational {
        self.values.iter().max().expect("non-empty").clone()
    }

    pub fn min_value(&self) -> Rational {
        self.values.iter().min().expect("non-empty").clone()
    }

    /// `t ↦ f(-t)` on the reflected domain.
    pub fn reflect(&self) -> Self {
        let breakpoints = self.breakpoints.iter().rev().map(|b| -b).collect();
        let values = self.values.iter().rev().cloned().collect();
        PiecewiseLinear { breakpoints, values }
    }

    /// Smallest value on `[a, b]` (clamped outside the domain).
    pub fn min_on(&self, a: &Rational, b: &Rational) -> Rational {
        self.values_on(a, b).min().expect("non-empty")
    }

    /// Largest value on `[a, b]` (clamped outside the domain).
    pub fn max_on(&self, a: &Rational, b: &Rational) -> Rational {
        self.values_on(a, b).max().expect("non-empty")
    }

    fn values_on<'a>(&'a self, a: &Rational, b: &Rational) -> impl Iterator<Item = Rational> + 'a {
        let i = self.breakpoints.partition_point(|p| rational::le(p, a));
        let j = self.breakpoints.partition_point(|p| rational::lt(p, b));
        let inner = self.values[i..j.max(i)].iter().cloned();
        [self.eval(a), self.eval(b)].into_iter().chain(inner)
    }

    /// Restriction to `window ∩ domain`.
    pub fn restrict(&self, window: &Interval) -> Result<Self> {
        let dom = self.domain();
        let lo = dom.lo().max(window.lo()).clone();
        let hi = dom.hi().min(window.hi()).clone();
        if lo > hi {
            return Err(Error::DomainMismatch(format!("{window} misses {dom}")));
        }
        let mut pts = vec![lo.clone()];
        pts.extend(self.breakpoints.iter().filter(|p| **p > lo && **p < hi).cloned());
        if hi > lo {
            pts.push(hi);
        }
        let values = pts.iter().map(|p| self.eval(p)).collect();
        PiecewiseLinear::new(pts, values)
    }

    /// Joins `self` on `[a, c]` with `other` on `[c, b]`; requires matching
    /// value at `c`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.hi() != other.lo() {
            return Err(Error::DomainMismatch(format!(
                "{} does not end where {} starts",
                self.domain(),
                other.domain()
            )));
        }
        let (l, r) = (self.values.last().expect("non-empty"), &other.values[0]);
        if l != r {
            return Err(Error::DomainMismatch(format!("discontinuity at {}: {l} vs {r}", self.hi())));
        }
        let mut breakpoints = self.breakpoints.clone();
        let mut values = self.values.clone();
        breakpoints.extend(other.breakpoints[1..].iter().cloned());
        values.extend(other.values[1..].iter().cloned());
        PiecewiseLinear::new(breakpoints, values)
    }

    /// Replaces `self` on `[lo(piece), hi(piece)]` by `piece`; values must
    /// agree at the two junctions.
    pub fn splice(&self, piece: &Self) -> Result<Self> {
        let (a, b) = (piece.lo(), piece.hi());
        if a < self.lo() || b > self.hi() {
            return Err(Error::DomainMismatch(format!("{} outside {}", piece.domain(), self.domain())));
        }
        if self.eval(a) != piece.values[0] || &self.eval(b) != piece.values.last().expect("non-empty") {
            return Err(Error::DomainMismatch(format!("splice on {} is discontinuous", piece.domain())));
        }
        let mut bp = Vec::new();
        let mut vals = Vec::new();
        for (p, v) in self.breakpoints.iter().zip(&self.values) {
            if p < a {
                bp.push(p.clone());
                vals.push(v.clone());
            }
        }
        bp.extend(piece.breakpoints.iter().cloned());
        vals.extend(piece.values.iter().cloned());
        for (p, v) in self.breakpoints.iter().zip(&self.values) {
            if p > b {
                bp.push(p.clone());
                vals.push(v.clone());
            }
        }
        PiecewiseLinear::new(bp, vals)
    }

    /// Pointwise minimum (crossings inserted).
    pub fn min(&self, other: &Self) -> Result<Self> {
        self.envelope_with(other, |a, b| a <= b)
    }

    pub fn max(&self, other: &Self) -> Result<Self> {
        self.envelope_with(other, |a, b| a >= b)
    }

    fn envelope_with<F: Fn(&Rational, &Rational) -> bool>(&self, other: &Self, pick_self: F) -> Result<Self> {
        if self.domain() != other.domain() {
            return Err(Error::DomainMismatch(format!("{} vs {}", self.domain(), other.domain())));
        }
        let base = self.merged_points(other);
        let fa = self.eval_sorted(&base);
        let fb = other.eval_sorted(&base);
        let pick = |a: &Rational, b: &Rational| if pick_self(a, b) { a.clone() } else { b.clone() };
        let mut pts = Vec::with_capacity(base.len() * 2);
        let mut values = Vec::with_capacity(base.len() * 2);
        for i in 0..base.len() - 1 {
            pts.push(base[i].clone());
            values.push(pick(&fa[i], &fb[i]));
            let d0 = &fa[i] - &fb[i];
            let d1 = &fa[i + 1] - &fb[i + 1];
            if (d0.is_positive() && d1.is_negative()) || (d0.is_negative() && d1.is_positive()) {
                let t = &d0 / (&d0 - &d1);
                pts.push(&base[i] + (&base[i + 1] - &base[i]) * &t);
                values.push(&fa[i] + (&fa[i + 1] - &fa[i]) * t);
            }
        }
        pts.push(base.last().expect("non-empty").clone());
        values.push(pick(fa.last().expect("non-empty"), fb.last().expect("non-empty")));
        Ok(PiecewiseLinear::new(pts, values)?.simplify())
    }

    /// Removes breakpoints where the slope does not change.
    pub fn simplify(&self) -> Self {
        if self.breakpoints.len() <= 2 {
            return self.clone();
        }
        let slopes = self.slopes();
        let mut bp = vec![self.breakpoints[0].clone()];
        let mut vals = vec![self.values[0].clone()];
        for i in 1..self.breakpoints.len() - 1 {
            if !rational::eq_fast(&slopes[i - 1], &slopes[i]) {
                bp.push(self.breakpoints[i].clone());
                vals.push(self.values[i].clone());
            }
        }
        bp.push(self.hi().clone());
        vals.push(self.values.last().expect("non-empty").clone());
        PiecewiseLinear { breakpoints: bp, values: vals }
    }

    /// Adds breakpoints at the given interior points (values unchanged).
    pub fn refine(&self, points: &[Rational]) -> Self {
        let dom = self.domain();
        let mut pts = self.breakpoints.clone();
        pts.extend(points.iter().filter(|p| dom.interior_contains(p)).cloned());
        rational::sort_dedup(&mut pts);
        let values = self.eval_sorted(&pts);
        PiecewiseLinear { breakpoints: pts, values }
    }

    /// Closure of `{x ∈ domain : f(x) > 0}`.
    pub fn positive_set(&self) -> IntervalSet {
        let mut ivs = Vec::new();
        for (bw, vw) in self.breakpoints.windows(2).zip(self.values.windows(2)) {
            let (x0, x1) = (&bw[0], &bw[1]);
            let (y0, y1) = (&vw[0], &vw[1]);
            let root = |a: &Rational, b: &Rational| x0 + (x1 - x0) * a / (a - b);
            match (y0.is_positive(), y1.is_positive()) {
                (true, true) => ivs.push(Interval::new(x0.clone(), x1.clone()).expect("ordered")),
                (true, false) => ivs.push(Interval::new(x0.clone(), root(y0, y1)).expect("ordered")),
                (false, true) => ivs.push(Interval::new(root(y0, y1), x1.clone()).expect("ordered")),
                (false, false) => {}
            }
        }
        IntervalSet::from_intervals(ivs).without_points()
    }

    /// Maximal closed segments on which `f` is monotone (slope sign constant,
    /// zero slopes joining either neighbour).
    pub fn monotone_pieces(&self) -> Vec<Interval> {
        let slopes = self.slopes();
        if slopes.is_empty() {
            return vec![self.domain()];
        }
        let mut out = Vec::new();
        let mut start = 0usize;
        let mut sign = 0i32;
        for (i, s) in slopes.iter().enumerate() {
            let si = if s.is_positive() { 1 } else if s.is_negative() { -1 } else { 0 };
            if si != 0 && sign != 0 && si != sign {
                out.push(Interval::new(self.breakpoints[start].clone(), self.breakpoints[i].clone()).expect("ordered"));
                start = i;
            }
            if si != 0 {
                sign = si;
            }
        }
        out.push(Interval::new(self.breakpoints[start].clone(), self.hi().clone()).expect("ordered"));
        out
    }
}
