//! Envelopes, vicinities, and the two envelope lemmas: refining a function
//! into `K ± (1-δ)φ` zigzags, and flattening it on a closed set off `E`.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};
use crate::pcw::PiecewiseLinear;
use crate::rational::{self, int, mid, Rational};

const MAX_BLOCKS: usize = 1 << 20;
const MAX_DEPTH: usize = 256;

/// Leftmost `t ∈ [r, s]` with `(1-δ)(|E∩[r,t]| - |E∩[t,s]|) = target`.
pub fn balance_point(e: &IntervalSet, r: &Rational, s: &Rational, target: &Rational, delta: &Rational) -> Result<Rational> {
    if r >= s {
        return Err(Error::InvalidInterval { lo: r.clone(), hi: s.clone() });
    }
    if delta.is_negative() || delta >= &Rational::one() {
        return Err(Error::InvalidParameter(format!("delta must lie in [0,1), got {delta}")));
    }
    let m = e.mass_between(r, s);
    let scale = Rational::one() - delta;
    let lim = &scale * &m;
    if target.abs() > lim {
        return Err(Error::Unsolvable { target: target.clone(), min: -lim.clone(), max: lim });
    }
    if m.is_zero() {
        return Ok(mid(r, s));
    }
    let k = (target / &scale + &m) / int(2);
    if k.is_zero() {
        return Ok(r.clone());
    }
    let window = Interval::new(r.clone(), s.clone())?;
    let mut acc = Rational::zero();
    for iv in e.intersect_interval(&window).intervals() {
        let len = iv.len();
        if &acc + &len >= k {
            return Ok(iv.lo() + (&k - &acc));
        }
        acc += len;
    }
    Ok(s.clone())
}

/// Lower and upper bounds on a common interval.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub lower: PiecewiseLinear,
    pub upper: PiecewiseLinear,
}

impl Envelope {
    pub fn new(lower: PiecewiseLinear, upper: PiecewiseLinear) -> Result<Self> {
        if lower.domain() != upper.domain() {
            return Err(Error::DomainMismatch(format!("{} vs {}", lower.domain(), upper.domain())));
        }
        if upper.sub(&lower)?.min_value().is_negative() {
            return Err(Error::InvalidParameter("envelope lower bound exceeds upper bound".into()));
        }
        Ok(Envelope { lower, upper })
    }

    /// `center ± radius` on the domain of `center`.
    pub fn around(center: &PiecewiseLinear, radius: &PiecewiseLinear) -> Result<Self> {
        let r = radius.restrict(&center.domain())?;
        let r = if r.domain() == center.domain() {
            r
        } else {
            return Err(Error::DomainMismatch(format!("radius does not cover {}", center.domain())));
        };
        Envelope::new(center.sub(&r)?, center.add(&r)?)
    }

    pub fn domain(&self) -> Interval {
        self.lower.domain()
    }

    fn fit(&self, f: &PiecewiseLinear) -> Result<PiecewiseLinear> {
        let dom = self.domain();
        let g = f.restrict(&dom)?;
        if g.domain() != dom {
            return Err(Error::DomainMismatch(format!("{} does not cover {dom}", f.domain())));
        }
        Ok(g)
    }

    /// `min(f - lower, upper - f)` on the envelope's domain.
    pub fn margin(&self, f: &PiecewiseLinear) -> Result<PiecewiseLinear> {
        let g = self.fit(f)?;
        g.sub(&self.lower)?.min(&self.upper.sub(&g)?)
    }

    /// `lower < f < upper` at every point of the closed `window`.
    pub fn strictly_contains_on(&self, f: &PiecewiseLinear, window: &Interval) -> Result<bool> {
        let m = self.margin(f)?;
        Ok(m.min_on(window.lo(), window.hi()).is_positive())
    }

    /// The envelope condition proper: `lower = f = upper` at both ends and
    /// strict containment on the open interval.
    pub fn is_envelope_for(&self, f: &PiecewiseLinear) -> Result<bool> {
        let g = self.fit(f)?;
        let (a, b) = (g.lo().clone(), g.hi().clone());
        for x in [&a, &b] {
            let v = g.eval(x);
            if self.lower.eval(x) != v || self.upper.eval(x) != v {
                return Ok(false);
            }
        }
        let m = self.margin(&g)?;
        let bp = m.breakpoints();
        Ok(m.values()[1..bp.len() - 1].iter().all(Signed::is_positive) && !(bp.len() == 2 && a == b))
    }
}

/// Functions within a pointwise radius of a center.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vicinity {
    pub center: PiecewiseLinear,
    pub radius: PiecewiseLinear,
}

impl Vicinity {
    pub fn new(center: PiecewiseLinear, radius: PiecewiseLinear) -> Result<Self> {
        if radius.min_value().is_negative() {
            return Err(Error::InvalidParameter("vicinity radius must be nonnegative".into()));
        }
        let r = radius.restrict(&center.domain())?;
        if r.domain() != center.domain() {
            return Err(Error::DomainMismatch(format!("radius does not cover {}", center.domain())));
        }
        Ok(Vicinity { center, radius: r })
    }

    /// `|g - center| ≤ radius` on the center's domain, decided at the union
    /// of breakpoints.
    pub fn contains(&self, g: &PiecewiseLinear) -> Result<bool> {
        let dom = self.center.domain();
        let g = g.restrict(&dom)?;
        if g.domain() != dom {
            return Err(Error::DomainMismatch(format!("{} does not cover {dom}", g.domain())));
        }
        let d = g.sub(&self.center)?;
        Ok(!self.radius.sub(&d)?.min_value().is_negative() && !self.radius.add(&d)?.min_value().is_negative())
    }

    /// `center ± factor·radius`.
    pub fn envelope(&self, factor: &Rational) -> Result<Envelope> {
        Envelope::around(&self.center, &self.radius.scale(factor))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Partition {
    /// `n` equal blocks with `(d - c)/n < γ/3`, `γ` the least envelope margin.
    Uniform,
    /// Bisect until each block's `E`-mass is at most half its least margin.
    #[default]
    Adaptive,
}

/// One rise-fall block `[c0, c1] ∪ [c1, c2]` of a refinement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineBlock {
    #[serde(with = "rational::serde_str")]
    pub c0: Rational,
    #[serde(with = "rational::serde_str")]
    pub c1: Rational,
    #[serde(with = "rational::serde_str")]
    pub c2: Rational,
    #[serde(with = "rational::serde_str")]
    pub mass_left: Rational,
    #[serde(with = "rational::serde_str")]
    pub mass_right: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineResult {
    pub g: PiecewiseLinear,
    #[serde(with = "rational::serde_str")]
    pub delta: Rational,
    pub compacts: Vec<Interval>,
    pub blocks: Vec<RefineBlock>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineCheck {
    pub endpoints: bool,
    pub containment: bool,
    pub balance: bool,
    pub slopes: bool,
    pub increment: bool,
}

impl RefineCheck {
    pub fn passed(&self) -> bool {
        self.endpoints && self.containment && self.balance && self.slopes && self.increment
    }
}

fn check_params(eps: &Rational, delta: &Rational) -> Result<()> {
    if !delta.is_positive() || delta >= eps || eps > &Rational::one() {
        return Err(Error::InvalidParameter(format!("need 0 < delta < epsilon <= 1, got delta {delta}, epsilon {eps}")));
    }
    Ok(())
}

fn audit_precondition(f: &PiecewiseLinear, e: &IntervalSet, factor: &Rational) -> Result<()> {
    let rep = f.audit_increment_exact(e, factor);
    match rep.violations.first() {
        None => Ok(()),
        Some(v) => Err(Error::Precondition(format!(
            "|f({}) - f({})| = {} exceeds {} * |E ∩ [{}, {}]| = {}",
            v.a, v.b, v.increment, factor, v.a, v.b, v.bound
        ))),
    }
}

fn sorted_compacts(compacts: &[Interval], dom: &Interval) -> Result<Vec<Interval>> {
    let mut cs: Vec<Interval> = compacts.iter().filter(|c| !c.is_degenerate()).cloned().collect();
    cs.sort_by(|a, b| a.lo().cmp(b.lo()));
    for c in &cs {
        if c.lo() <= dom.lo() || c.hi() >= dom.hi() {
            return Err(Error::Precondition(format!("{c} is not inside the open interval of {dom}")));
        }
    }
    if cs.windows(2).any(|w| w[0].hi() > w[1].lo()) {
        return Err(Error::Overlap("refinement compacts overlap".into()));
    }
    Ok(cs)
}

fn partition_blocks(
    c: &Interval,
    e: &IntervalSet,
    margin: &PiecewiseLinear,
    mode: Partition,
) -> Result<Vec<(Rational, Rational)>> {
    match mode {
        Partition::Uniform => {
            let gamma = margin.min_on(c.lo(), c.hi());
            let n = (int(3) * c.len() / &gamma).floor() + int(1);
            if n > int(MAX_BLOCKS as i64) {
                return Err(Error::Budget(format!("uniform partition of {c} needs {n} blocks")));
            }
            let n = n.to_integer();
            let n_r = Rational::from_integer(n.clone());
            let h = c.len() / &n_r;
            let count: usize = n.try_into().map_err(|_| Error::Budget("block count".into()))?;
            Ok((0..count)
                .map(|i| {
                    let lo = c.lo() + &h * int(i as i64);
                    let hi = if i + 1 == count { c.hi().clone() } else { &lo + &h };
                    (lo, hi)
                })
                .collect())
        }
        Partition::Adaptive => {
            let mut out = Vec::new();
            let mut stack = vec![(c.lo().clone(), c.hi().clone(), 0usize)];
            while let Some((p, q, depth)) = stack.pop() {
                let m = e.mass_between(&p, &q);
                if m.is_zero() || int(2) * &m <= margin.min_on(&p, &q) {
                    out.push((p, q));
                    if out.len() > MAX_BLOCKS {
                        return Err(Error::Budget(format!("adaptive partition of {c} exceeds {MAX_BLOCKS} blocks")));
                    }
                    continue;
                }
                if depth >= MAX_DEPTH {
                    return Err(Error::Budget(format!("adaptive partition of {c} exceeds depth {MAX_DEPTH}")));
                }
                let t = mid(&p, &q);
                stack.push((t.clone(), q, depth + 1));
                stack.push((p, t, depth + 1));
            }
            Ok(out)
        }
    }
}

fn points_in(e: &IntervalSet, p: &Rational, q: &Rational) -> Vec<Rational> {
    e.endpoints().into_iter().filter(|x| x > p && x < q).collect()
}

/// Replaces `f` on each compact by rise-fall blocks of slope `±(1-δ)1_E`
/// meeting `f` at every block boundary.
pub fn envelope_refine(
    f: &PiecewiseLinear,
    env: &Envelope,
    e: &IntervalSet,
    eps: &Rational,
    delta: &Rational,
    compacts: &[Interval],
    partition: Partition,
) -> Result<RefineResult> {
    check_params(eps, delta)?;
    audit_precondition(f, e, &(Rational::one() - eps))?;
    let dom = env.domain();
    let cs = sorted_compacts(compacts, &dom)?;
    let margin = env.margin(f)?;
    for c in &cs {
        if !margin.min_on(c.lo(), c.hi()).is_positive() {
            return Err(Error::Precondition(format!("f is not strictly inside the envelope on {c}")));
        }
    }
    let scale = Rational::one() - delta;
    let mut g = f.clone();
    let mut blocks = Vec::new();
    for c in &cs {
        let mut bp: Vec<Rational> = vec![c.lo().clone()];
        let mut vals: Vec<Rational> = vec![f.eval(c.lo())];
        for (p, q) in partition_blocks(c, e, &margin, partition)? {
            let (fp, fq) = (f.eval(&p), f.eval(&q));
            let m = e.mass_between(&p, &q);
            if m.is_zero() {
                bp.push(q);
                vals.push(fq);
                continue;
            }
            let t = balance_point(e, &p, &q, &(&fq - &fp), delta)?;
            let mut pts = points_in(e, &p, &q);
            pts.push(t.clone());
            pts.push(q.clone());
            rational::sort_dedup(&mut pts);
            for x in pts {
                let v = if rational::le(&x, &t) {
                    &fp + &scale * e.mass_between(&p, &x)
                } else {
                    &fq + &scale * e.mass_between(&x, &q)
                };
                bp.push(x);
                vals.push(v);
            }
            blocks.push(RefineBlock {
                mass_left: e.mass_between(&p, &t),
                mass_right: e.mass_between(&t, &q),
                c0: p,
                c1: t,
                c2: q,
            });
        }
        let piece = PiecewiseLinear::new(bp, vals)?.simplify();
        g = g.splice(&piece)?;
    }
    Ok(RefineResult { g: g.simplify(), delta: delta.clone(), compacts: cs, blocks })
}

impl RefineResult {
    /// Exact re-verification against the inputs of `envelope_refine`.
    pub fn verify(&self, f: &PiecewiseLinear, env: &Envelope, e: &IntervalSet) -> Result<RefineCheck> {
        let g = &self.g;
        let scale = Rational::one() - &self.delta;
        let endpoints = self.compacts.iter().all(|c| g.eval(c.lo()) == f.eval(c.lo()) && g.eval(c.hi()) == f.eval(c.hi()))
            && self.blocks.iter().all(|b| g.eval(&b.c0) == f.eval(&b.c0) && g.eval(&b.c2) == f.eval(&b.c2));
        let margin = env.margin(g)?;
        let containment = self.compacts.iter().all(|c| margin.min_on(c.lo(), c.hi()).is_positive());
        let balance = self.blocks.iter().all(|b| {
            b.mass_left == e.mass_between(&b.c0, &b.c1)
                && b.mass_right == e.mass_between(&b.c1, &b.c2)
                && &scale * (&b.mass_left - &b.mass_right) == f.eval(&b.c2) - f.eval(&b.c0)
        });
        let slopes = self.blocks.iter().all(|b| {
            let (f0, f2) = (f.eval(&b.c0), f.eval(&b.c2));
            let mut pts = points_in(e, &b.c0, &b.c2);
            let gb = g.breakpoints();
            let (i, j) = (gb.partition_point(|x| rational::le(x, &b.c0)), gb.partition_point(|x| rational::lt(x, &b.c2)));
            pts.extend(gb[i..j.max(i)].iter().cloned());
            pts.push(b.c1.clone());
            pts.iter().all(|x| {
                let want = if rational::le(x, &b.c1) {
                    &f0 + &scale * e.mass_between(&b.c0, x)
                } else {
                    &f2 + &scale * e.mass_between(x, &b.c2)
                };
                g.eval(x) == want
            })
        });
        let increment = g.audit_increment_exact(e, &scale).passed();
        Ok(RefineCheck { endpoints, containment, balance, slopes, increment })
    }
}

/// One subinterval of a flattening, with its mass-selection certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlattenPiece {
    #[serde(with = "rational::serde_str")]
    pub c: Rational,
    #[serde(with = "rational::serde_str")]
    pub d: Rational,
    /// `|E ∩ [c, d]|`.
    #[serde(with = "rational::serde_str")]
    pub mass: Rational,
    /// `f(d) - f(c)`.
    #[serde(with = "rational::serde_str")]
    pub rise: Rational,
    /// Slope of `g` on `E ∩ [c, d]`.
    #[serde(with = "rational::serde_str")]
    pub gamma: Rational,
    /// `(1-δ)·mass > (1-ε)·mass ≥ |rise|`.
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlattenResult {
    pub g: PiecewiseLinear,
    #[serde(with = "rational::serde_str")]
    pub delta: Rational,
    pub pieces: Vec<FlattenPiece>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlattenCheck {
    pub endpoints: bool,
    pub containment: bool,
    pub flat_on_h: bool,
    pub increment: bool,
    pub certificates: bool,
}

impl FlattenCheck {
    pub fn passed(&self) -> bool {
        self.endpoints && self.containment && self.flat_on_h && self.increment && self.certificates
    }
}

/// `lower < min(f(c), f(d)) ≤ max(f(c), f(d)) < upper` on `[c, d]`.
fn flcdfu(f: &PiecewiseLinear, env: &Envelope, c: &Rational, d: &Rational) -> bool {
    let (fc, fd) = (f.eval(c), f.eval(d));
    let (lo, hi) = if fc <= fd { (fc, fd) } else { (fd, fc) };
    env.lower.max_on(c, d) < lo && hi < env.upper.min_on(c, d)
}

/// Makes `f` flat on `H` (a closed set missing `E`) while keeping its values
/// at the ends of the hull of `H` and the `(1-δ)` increment bound.
pub fn envelope_flatten(
    f: &PiecewiseLinear,
    env: &Envelope,
    e: &IntervalSet,
    h: &IntervalSet,
    eps: &Rational,
    delta: &Rational,
) -> Result<FlattenResult> {
    check_params(eps, delta)?;
    let meet = h.intersect(e);
    if !meet.is_empty() {
        return Err(Error::Overlap(format!("H meets E in {meet}")));
    }
    let low = Rational::one() - eps;
    audit_precondition(f, e, &low)?;
    let Some(hull) = h.hull() else {
        return Ok(FlattenResult { g: f.clone(), delta: delta.clone(), pieces: Vec::new() });
    };
    let dom = env.domain();
    if hull.lo() <= dom.lo() || hull.hi() >= dom.hi() {
        return Err(Error::Precondition(format!("H is not inside the open interval of {dom}")));
    }
    let high = Rational::one() - delta;
    let mut pieces = Vec::new();
    let mut stack = vec![(hull.lo().clone(), hull.hi().clone(), 0usize)];
    let mut bp = vec![hull.lo().clone()];
    let mut vals = vec![f.eval(hull.lo())];
    while let Some((c, d, depth)) = stack.pop() {
        let mass = e.mass_between(&c, &d);
        let rise = f.eval(&d) - f.eval(&c);
        if mass.is_zero() {
            if !rise.is_zero() {
                return Err(Error::Precondition(format!("f rises by {rise} on [{c}, {d}] where E is null")));
            }
            bp.push(d);
            vals.push(f.eval(bp.last().expect("pushed")));
            continue;
        }
        if !flcdfu(f, env, &c, &d) {
            if depth >= MAX_DEPTH {
                return Err(Error::Budget(format!("flattening cover exceeds depth {MAX_DEPTH} near {c}")));
            }
            let t = mid(&c, &d);
            stack.push((t.clone(), d, depth + 1));
            stack.push((c, t, depth + 1));
            continue;
        }
        let gamma = &rise / &mass;
        let fc = f.eval(&c);
        let mut pts = points_in(e, &c, &d);
        pts.push(d.clone());
        for x in pts {
            vals.push(&fc + &gamma * e.mass_between(&c, &x));
            bp.push(x);
        }
        let certified = &high * &mass > &low * &mass && &low * &mass >= rise.abs();
        pieces.push(FlattenPiece { c, d, mass, rise, gamma, certified });
        if pieces.len() > MAX_BLOCKS {
            return Err(Error::Budget(format!("flattening cover exceeds {MAX_BLOCKS} pieces")));
        }
    }
    let piece = PiecewiseLinear::new(bp, vals)?.simplify();
    let g = f.splice(&piece)?.simplify();
    Ok(FlattenResult { g, delta: delta.clone(), pieces })
}

impl FlattenResult {
    pub fn verify(&self, f: &PiecewiseLinear, env: &Envelope, e: &IntervalSet, h: &IntervalSet) -> Result<FlattenCheck> {
        let g = &self.g;
        let endpoints = g.eval(g.lo()) == f.eval(f.lo()) && g.eval(g.hi()) == f.eval(f.hi());
        let margin = env.margin(g)?;
        let containment = self.pieces.iter().all(|p| margin.min_on(&p.c, &p.d).is_positive());
        let flat_on_h = h
            .intervals()
            .iter()
            .filter(|iv| !iv.is_degenerate())
            .all(|iv| g.restrict(iv).map(|r| r.slopes().iter().all(Zero::is_zero)).unwrap_or(false));
        let increment = g.audit_increment_exact(e, &(Rational::one() - &self.delta)).passed();
        let certificates = self.pieces.iter().all(|p| p.certified);
        Ok(FlattenCheck { endpoints, containment, flat_on_h, increment, certificates })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn unit() -> IntervalSet {
        IntervalSet::single(int(0), int(1)).unwrap()
    }

    #[test]
    fn balance_point_examples() {
        let e = unit();
        assert_eq!(balance_point(&e, &int(0), &int(1), &int(0), &rat(1, 8)).unwrap(), rat(1, 2));
        let d = rat(1, 4);
        let t = balance_point(&e, &int(0), &int(1), &d, &rat(1, 8)).unwrap();
        assert_eq!(t, rat(1, 2) + &d / (int(2) * rat(7, 8)));
        let half = IntervalSet::single(int(0), rat(1, 2)).unwrap();
        assert_eq!(balance_point(&half, &int(0), &int(1), &int(0), &int(0)).unwrap(), rat(1, 4));
        assert!(matches!(balance_point(&e, &int(0), &int(1), &int(1), &rat(1, 8)), Err(Error::Unsolvable { .. })));
    }

    fn tent(a: i64, b: i64, h: Rational) -> PiecewiseLinear {
        let (a, b) = (int(a), int(b));
        let m = mid(&a, &b);
        PiecewiseLinear::new(vec![a, m, b], vec![int(0), h, int(0)]).unwrap()
    }

    #[test]
    fn refine_zero_in_symmetric_envelope() {
        let up = tent(-1, 2, int(1));
        let env = Envelope::new(up.neg(), up.clone()).unwrap();
        let f = PiecewiseLinear::zero(&env.domain());
        let e = unit();
        let c = Interval::new(int(0), int(1)).unwrap();
        for mode in [Partition::Adaptive, Partition::Uniform] {
            let res = envelope_refine(&f, &env, &e, &int(1), &rat(1, 8), &[c.clone()], mode).unwrap();
            assert!(res.verify(&f, &env, &e).unwrap().passed());
            for b in &res.blocks {
                assert_eq!(b.c1, mid(&b.c0, &b.c2));
                assert_eq!(res.g.eval(&b.c2), int(0));
            }
            assert!(res.g.max_value().is_positive());
            assert!(env.is_envelope_for(&res.g).unwrap());
        }
    }

    #[test]
    fn refine_leaves_null_blocks() {
        let up = tent(-1, 3, int(1));
        let env = Envelope::new(up.neg(), up.clone()).unwrap();
        let f = PiecewiseLinear::zero(&env.domain());
        let e = IntervalSet::single(int(0), rat(1, 2)).unwrap();
        let c = Interval::new(int(0), int(2)).unwrap();
        let res = envelope_refine(&f, &env, &e, &int(1), &rat(1, 8), &[c], Partition::Adaptive).unwrap();
        assert!(res.verify(&f, &env, &e).unwrap().passed());
        assert_eq!(res.g.restrict(&Interval::new(rat(1, 2), int(2)).unwrap()).unwrap().max_value(), int(0));
    }

    #[test]
    fn refine_rejects_bad_input() {
        let up = tent(-1, 2, int(1));
        let env = Envelope::new(up.neg(), up.clone()).unwrap();
        let e = unit();
        let c = Interval::new(int(0), int(1)).unwrap();
        let steep = PiecewiseLinear::identity(&env.domain()).scale(&rat(1, 100));
        let r = envelope_refine(&steep, &env, &e, &int(1), &rat(1, 8), &[c.clone()], Partition::Adaptive);
        assert!(matches!(r, Err(Error::Precondition(_))));
        let f = PiecewiseLinear::zero(&env.domain());
        assert!(envelope_refine(&f, &env, &e, &rat(1, 8), &rat(1, 4), &[c], Partition::Adaptive).is_err());
    }

    #[test]
    fn flatten_two_gap_example() {
        let e = IntervalSet::canonicalize([(int(1), int(2)), (int(3), int(4))]).unwrap();
        let h = IntervalSet::canonicalize([(rat(1, 2), rat(3, 4)), (rat(5, 2), rat(11, 4)), (rat(9, 2), int(5))]).unwrap();
        let dom = Interval::new(int(0), int(6)).unwrap();
        let f = PiecewiseLinear::build_phi(&e, &int(0), Some(&dom)).unwrap().scale(&rat(1, 2));
        let up = PiecewiseLinear::new(vec![int(0), int(1), int(5), int(6)], vec![int(0), int(3), int(3), int(1)]).unwrap();
        let lo = PiecewiseLinear::new(vec![int(0), int(1), int(5), int(6)], vec![int(0), int(-2), int(-2), int(1)]).unwrap();
        let env = Envelope::new(lo, up).unwrap();
        let res = envelope_flatten(&f, &env, &e, &h, &rat(1, 4), &rat(1, 8)).unwrap();
        let chk = res.verify(&f, &env, &e, &h).unwrap();
        assert!(chk.passed(), "{chk:?}");
        assert_eq!(res.g.eval(&int(6)), int(1));
        assert!(res.pieces.iter().all(|p| p.gamma < rat(7, 8)));
    }

    #[test]
    fn flatten_errors_and_identity() {
        let e = unit();
        let dom = Interval::new(int(-1), int(2)).unwrap();
        let f = PiecewiseLinear::zero(&dom);
        let up = tent(-1, 2, int(1));
        let env = Envelope::new(up.neg(), up).unwrap();
        let r = envelope_flatten(&f, &env, &e, &IntervalSet::single(rat(1, 2), int(1)).unwrap(), &rat(1, 2), &rat(1, 4));
        assert!(matches!(r, Err(Error::Overlap(_))));
        let id = envelope_flatten(&f, &env, &e, &IntervalSet::empty(), &rat(1, 2), &rat(1, 4)).unwrap();
        assert_eq!(id.g, f);
    }

    #[test]
    fn vicinity_membership() {
        let dom = Interval::new(int(0), int(1)).unwrap();
        let v = Vicinity::new(PiecewiseLinear::zero(&dom), PiecewiseLinear::constant(rat(1, 4), &dom)).unwrap();
        assert!(v.contains(&PiecewiseLinear::constant(rat(1, 4), &dom)).unwrap());
        assert!(!v.contains(&PiecewiseLinear::identity(&dom)).unwrap());
        assert!(Vicinity::new(PiecewiseLinear::zero(&dom), PiecewiseLinear::constant(rat(-1, 4), &dom)).is_err());
    }
}
