//! Finite-stage construction of `f` with `Lip f = 1_E` for a set with a
//! uniform density witness, presented as `E = ⋂ G_n`, `F_n = D ∖ G_n`.

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constructions::envelope::{envelope_flatten, envelope_refine, Envelope, Partition, Vicinity};
use crate::density::{level_set_membership, UdtWitness};
use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet};
use crate::pcw::PiecewiseLinear;
use crate::rational::{self, int, mid, pow2, rat, Rational};

/// Domain `D`, target `E` and increasing closed sets `F_1 ⊆ F_2 ⊆ …`
/// disjoint from `E`. The two ends of `D` are treated as belonging to every
/// `F_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedClosedSystem {
    pub domain: Interval,
    pub target: IntervalSet,
    pub flat_sets: Vec<IntervalSet>,
}

impl NestedClosedSystem {
    pub fn new(domain: Interval, target: IntervalSet, flat_sets: Vec<IntervalSet>) -> Result<Self> {
        let s = NestedClosedSystem { domain, target, flat_sets };
        s.validate()?;
        Ok(s)
    }

    pub fn stages(&self) -> usize {
        self.flat_sets.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = &self.domain;
        if d.is_degenerate() {
            return Err(Error::DegenerateWindow(d.lo().clone()));
        }
        let e = &self.target;
        let hull = e.hull().ok_or_else(|| Error::Empty("target set".into()))?;
        if hull.lo() <= d.lo() || hull.hi() >= d.hi() {
            return Err(Error::Precondition(format!("target {e} must lie inside the open interval of {d}")));
        }
        if e.intervals().iter().any(Interval::is_degenerate) {
            return Err(Error::Precondition("target has a degenerate component".into()));
        }
        let mut prev = IntervalSet::empty();
        for (i, f) in self.flat_sets.iter().enumerate() {
            let n = i + 1;
            if !f.is_subset_of(&IntervalSet::from_interval(d.clone())) {
                return Err(Error::Precondition(format!("F_{n} leaves the domain")));
            }
            if !prev.is_subset_of(f) {
                return Err(Error::Precondition(format!("F_{} is not contained in F_{n}", n - 1)));
            }
            if !f.intersect(e).is_empty() {
                return Err(Error::Overlap(format!("F_{n} meets the target")));
            }
            for c in self.components(n) {
                if !e.mass_between(c.lo(), c.hi()).is_positive() {
                    return Err(Error::Precondition(format!("component {c} of G_{n} misses the target")));
                }
            }
            prev = f.clone();
        }
        Ok(())
    }

    /// Closures of the components of `G_n = D ∖ F_n` (`G_0 = D`).
    pub fn components(&self, n: usize) -> Vec<Interval> {
        if n == 0 {
            return vec![self.domain.clone()];
        }
        match self.flat_sets[n - 1].complement_within(&self.domain) {
            Ok(s) => s.intervals().iter().filter(|c| !c.is_degenerate()).cloned().collect(),
            Err(_) => Vec::new(),
        }
    }

    pub fn component_of(&self, n: usize, x: &Rational) -> Option<Interval> {
        self.components(n).into_iter().find(|c| c.interior_contains(x))
    }

    /// Smith-Volterra-Cantor truncation: from `[0,1]` remove at level `k` the
    /// open middle interval of length `4^{-k}` of every remaining piece.
    /// `E = K_levels`; `F_n` is the union of the closed middle halves of the
    /// gaps of level `≤ n`; `D = [-1/4, 5/4]`.
    pub fn fat_cantor(levels: u32, stages: usize) -> Result<Self> {
        if levels == 0 || stages == 0 {
            return Err(Error::InvalidParameter("need at least one level and one stage".into()));
        }
        let mut pieces = vec![Interval::new(int(0), int(1))?];
        let mut gaps_by_level: Vec<Vec<Interval>> = Vec::new();
        for k in 1..=levels as i64 {
            let g = pow2(-2 * k);
            let mut next = Vec::with_capacity(pieces.len() * 2);
            let mut gaps = Vec::with_capacity(pieces.len());
            for p in &pieces {
                let m = p.midpoint();
                let (g0, g1) = (&m - &g / int(2), &m + &g / int(2));
                next.push(Interval::new(p.lo().clone(), g0.clone())?);
                next.push(Interval::new(g1.clone(), p.hi().clone())?);
                let q = &g / int(4);
                gaps.push(Interval::new(g0 + &q, g1 - &q)?);
            }
            pieces = next;
            gaps_by_level.push(gaps);
        }
        let target = IntervalSet::from_intervals(pieces);
        let mut flat_sets = Vec::with_capacity(stages);
        let mut acc: Vec<Interval> = Vec::new();
        for n in 1..=stages {
            if let Some(g) = gaps_by_level.get(n - 1) {
                acc.extend(g.iter().cloned());
            }
            flat_sets.push(IntervalSet::from_intervals(acc.clone()));
        }
        NestedClosedSystem::new(Interval::new(rat(-1, 4), rat(5, 4))?, target, flat_sets)
    }

    /// `E = window`, every `F_n` empty, `D = window` widened by a quarter of
    /// its length on each side.
    pub fn full_measure(window: &Interval, stages: usize) -> Result<Self> {
        if stages == 0 {
            return Err(Error::InvalidParameter("need at least one stage".into()));
        }
        let pad = window.len() / int(4);
        let d = Interval::new(window.lo() - &pad, window.hi() + &pad)?;
        NestedClosedSystem::new(d, IntervalSet::from_interval(window.clone()), vec![IntervalSet::empty(); stages])
    }
}

/// Piecewise-linear minorant of `d(x, F_n)²`: on each component `[a, b]`
/// of `G_n`, zero within `p/2` of the ends and the upper envelope of
/// tangents to the parabola at `p·2^k` beyond, where `p` is half the gap
/// between `E` and the ends (capped at a quarter of the component).
pub fn flat_margin(system: &NestedClosedSystem, n: usize) -> Result<PiecewiseLinear> {
    let d = &system.domain;
    let mut pts: Vec<(Rational, Rational)> = vec![(d.lo().clone(), Rational::zero()), (d.hi().clone(), Rational::zero())];
    for c in system.components(n) {
        let (a, b) = (c.lo(), c.hi());
        let inner = system.target.intersect_interval(&c).without_points();
        let Some(h) = inner.hull() else { continue };
        let gap = (h.lo() - a).min(b - h.hi());
        let p = (c.len() / int(4)).min(gap / int(2));
        if !p.is_positive() {
            continue;
        }
        let half = c.len() / int(2);
        let m = c.midpoint();
        let mut tangents = vec![p.clone()];
        while tangents.last().expect("non-empty") * int(2) <= half {
            let s = tangents.last().expect("non-empty") * int(2);
            tangents.push(s);
        }
        let lval = |t: &Rational| -> Rational {
            tangents
                .iter()
                .map(|s| int(2) * s * t - s * s)
                .fold(Rational::zero(), |acc, v| if v > acc { v } else { acc })
        };
        let mut offs = vec![Rational::zero(), &p / int(2)];
        for s in &tangents[..tangents.len() - 1] {
            let o = s * rat(3, 2);
            if o < half {
                offs.push(o);
            }
        }
        for o in &offs {
            let v = lval(o);
            pts.push((a + o, v.clone()));
            pts.push((b - o, v));
        }
        pts.push((m, lval(&half)));
    }
    pts.sort_by(|x, y| x.0.cmp(&y.0));
    pts.dedup_by(|x, y| x.0 == y.0);
    let (bp, vals) = pts.into_iter().unzip();
    Ok(PiecewiseLinear::new(bp, vals)?.simplify())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UdtOptions {
    pub samples: usize,
    pub seed: u64,
    pub partition: Partition,
}

impl Default for UdtOptions {
    fn default() -> Self {
        UdtOptions { samples: 50, seed: 0, partition: Partition::Adaptive }
    }
}

/// A pair `(x, y_n(x))` with its increment ratio under the stage function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessPair {
    #[serde(with = "rational::serde_str")]
    pub x: Rational,
    #[serde(with = "rational::serde_str")]
    pub y: Rational,
    /// `|f_n(x) - f_n(y)| / |x - y|`.
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
    /// `(1 - 2^{-2n})·γ_n`.
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    /// `r_n(x)` and `r_n(y)`.
    #[serde(with = "rational::serde_str")]
    pub radius_x: Rational,
    #[serde(with = "rational::serde_str")]
    pub radius_y: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub n: usize,
    /// `f_n` constant on every component of `F_n`, with zero one-sided
    /// slopes at its ends.
    pub flat_on_f: bool,
    #[serde(with = "rational::serde_str")]
    pub increment_factor: Rational,
    pub increment_violations: usize,
    pub refine_passed: bool,
    pub flatten_passed: bool,
    pub sampled: usize,
    pub witnesses: Vec<WitnessPair>,
    /// Every witness ratio exceeds its bound.
    pub witness_ratios_hold: bool,
    /// `r_n ≤ 2^{-n}` and `r_n ≤ q_n`.
    pub radius_bounded: bool,
    /// `r_n(x), r_n(y) < 2^{-2n}·γ_n·|x - y|` at every witness pair.
    pub radius_dips_hold: bool,
    #[serde(with = "rational::serde_str")]
    pub gamma: Rational,
    #[serde(with = "rational::serde_str")]
    pub delta: Rational,
    pub k_factor: u64,
    pub refine_blocks: usize,
    pub flatten_pieces: usize,
}

impl StageDiagnostics {
    pub fn passed(&self) -> bool {
        self.flat_on_f
            && self.increment_violations == 0
            && self.refine_passed
            && self.flatten_passed
            && self.witness_ratios_hold
            && self.radius_bounded
            && self.radius_dips_hold
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub n: usize,
    pub f: PiecewiseLinear,
    /// Vicinity radius `r_n`.
    pub radius: PiecewiseLinear,
    /// Minorant `q_n` of `d(x, F_n)²`.
    pub margin: PiecewiseLinear,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossStageChecks {
    /// `‖f_{n+1} - f_n‖_∞` for `n = 1..N-1`.
    #[serde(with = "rational::serde_str_vec")]
    pub step_norms: Vec<Rational>,
    /// `‖f_{n+1} - f_n‖_∞ ≤ 2^{-n}` for every `n`.
    pub cauchy: bool,
    /// `f_m = f_n` on `F_n` for `m ≥ n`.
    pub agree_on_f: bool,
    /// `f_m ∈ U_n` for `m ≥ n`.
    pub nested_vicinities: bool,
    /// Every stage-`n` witness pair keeps ratio `> (1 - 2^{-n})γ_n` under
    /// every later `f_m`.
    pub persistent_ratios: bool,
    /// `f_m` flat on `F_n` with zero end slopes for `m ≥ n`.
    pub persistent_flatness: bool,
}

impl CrossStageChecks {
    pub fn passed(&self) -> bool {
        self.cauchy && self.agree_on_f && self.nested_vicinities && self.persistent_ratios && self.persistent_flatness
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UdtRun {
    pub system: NestedClosedSystem,
    pub witness: UdtWitness,
    pub stages: Vec<StageRecord>,
    pub diagnostics: Vec<StageDiagnostics>,
    pub cross: CrossStageChecks,
}

impl UdtRun {
    pub fn passed(&self) -> bool {
        self.diagnostics.iter().all(StageDiagnostics::passed) && self.cross.passed()
    }

    pub fn last(&self) -> &PiecewiseLinear {
        &self.stages.last().expect("at least one stage").f
    }
}

/// `max(100, ⌊2(1-2^{-3n}) / (γ(2^{-2n} - 2^{-3n}))⌋ + 1)`.
pub fn k_factor(n: usize, gamma: &Rational) -> u64 {
    let n = n as i64;
    let num = int(2) * (Rational::one() - pow2(-3 * n));
    let den = gamma * (pow2(-2 * n) - pow2(-3 * n));
    let k = (num / den).floor().to_integer() + 1;
    u64::try_from(k).unwrap_or(u64::MAX).max(100)
}

fn flat_on(f: &PiecewiseLinear, set: &IntervalSet) -> bool {
    set.intervals().iter().all(|iv| {
        let (l, _) = f.side_slopes(iv.lo());
        let (_, r) = f.side_slopes(iv.hi());
        let inner = iv.is_degenerate() || f.restrict(iv).map(|g| g.slopes().iter().all(Zero::is_zero)).unwrap_or(false);
        let ends = if iv.is_degenerate() {
            let (a, b) = f.side_slopes(iv.lo());
            a.is_zero() && b.is_zero()
        } else {
            l.is_zero() && r.is_zero()
        };
        inner && ends
    })
}

fn agree_on(f: &PiecewiseLinear, g: &PiecewiseLinear, set: &IntervalSet) -> bool {
    set.intervals().iter().all(|iv| {
        let mut pts = vec![iv.lo().clone(), iv.hi().clone()];
        pts.extend(f.breakpoints().iter().chain(g.breakpoints()).filter(|p| iv.contains(p)).cloned());
        pts.iter().all(|p| f.eval(p) == g.eval(p))
    })
}

fn sample_target(e: &IntervalSet, rng: &mut ChaCha8Rng) -> Rational {
    let total = e.measure();
    let u: i64 = rng.gen_range(1..(1i64 << 24));
    let mut s = total * rat(u, 1 << 24);
    for iv in e.intervals() {
        let len = iv.len();
        if s <= len {
            return iv.lo() + s;
        }
        s -= len;
    }
    e.intervals().last().expect("non-empty").hi().clone()
}

/// A component of `G_n` with the stage function restricted to it, its
/// maximal monotone pieces, and the same for the reflection `t ↦ -t`.
struct ComponentView {
    comp: Interval,
    g: PiecewiseLinear,
    pieces: Vec<Interval>,
    gr: PiecewiseLinear,
    pieces_r: Vec<Interval>,
}

impl ComponentView {
    fn new(f: &PiecewiseLinear, comp: &Interval) -> Result<Self> {
        let g = f.restrict(comp)?;
        let gr = g.reflect();
        Ok(ComponentView { comp: comp.clone(), pieces: g.monotone_pieces(), pieces_r: gr.monotone_pieces(), g, gr })
    }
}

/// Index of the piece `[lo, hi)` holding `x` (the last piece for its end).
fn containing(pieces: &[Interval], x: &Rational) -> usize {
    pieces.partition_point(|p| p.hi() <= x).min(pieces.len().saturating_sub(1))
}

/// The `y_n(x)` search on a maximal monotone piece of the stage function
/// restricted to the component of `G_n` containing `x`.
fn find_witness(
    view: &ComponentView,
    x: &Rational,
    n: usize,
    gamma: &Rational,
    delta_n: &Rational,
    k: u64,
) -> Result<(Rational, Rational)> {
    let comp = &view.comp;
    let i = containing(&view.pieces, x);
    let piece = &view.pieces[i];
    if !piece.contains(x) {
        return Err(Error::Construction(format!("{x} outside {comp}")));
    }
    let reflect = x > &piece.midpoint();
    let (g, x0, pieces, a) = if reflect {
        (&view.gr, -x, &view.pieces_r, -comp.hi())
    } else {
        (&view.g, x.clone(), &view.pieces, comp.lo().clone())
    };
    let j = containing(pieces, &x0);
    if !pieces[j].contains(&x0) || x0 > pieces[j].midpoint() {
        return Err(Error::Construction(format!("no left-half piece for {x}")));
    }
    let (c1, d) = (pieces[j].lo().clone(), pieces[j].hi().clone());
    let (c, e) = if c1 == a { (&c1 + (&x0 - &c1) / int(2), a.clone()) } else { (c1.clone(), pieces[j - 1].lo().clone()) };
    let kq = Rational::from_integer(k.into());
    let step = (&c - &e).min(&d - &c).min(delta_n.clone()) / (&kq + int(1));
    let bound = (Rational::one() - pow2(-2 * n as i64)) * gamma;
    let fx = g.eval(&x0);
    let dom = g.domain();
    let mut best: Option<(Rational, Rational)> = None;
    for y in [&x0 - &step, &x0 + &step, &x0 - &kq * &step, &x0 + &kq * &step] {
        let dist = (&y - &x0).abs();
        if !dist.is_positive() || &dist > delta_n || !dom.interior_contains(&y) {
            continue;
        }
        let ratio = (g.eval(&y) - &fx).abs() / &dist;
        if ratio <= bound {
            continue;
        }
        let better = match &best {
            None => true,
            Some((by, br)) => ratio > *br || (ratio == *br && dist < (by - &x0).abs()),
        };
        if better {
            best = Some((y, ratio));
        }
    }
    match best {
        Some((y, ratio)) => Ok((if reflect { -y } else { y }, ratio)),
        None => Err(Error::Construction(format!("stage {n}: no witness y_n({x}) beats ratio {bound}"))),
    }
}

fn cone(dom: &Interval, z: &Rational, tau: &Rational) -> Result<PiecewiseLinear> {
    let mut bp = vec![dom.lo().clone()];
    if dom.interior_contains(z) {
        bp.push(z.clone());
    }
    bp.push(dom.hi().clone());
    let vals = bp.iter().map(|t| tau + (t - z).abs()).collect();
    PiecewiseLinear::new(bp, vals)
}

/// Runs `stages` steps of the construction. Stage 1 refines `0` inside
/// `±q_1`; stage `n` flattens `f_{n-1}` on `F_n` inside `f_{n-1} ± r_{n-1}/3`
/// and refines the result inside `± min(q_n, r_{n-1}/3)`.
pub fn build_udt_lip1(
    system: &NestedClosedSystem,
    witness: &UdtWitness,
    stages: usize,
    options: &UdtOptions,
) -> Result<UdtRun> {
    system.validate()?;
    witness.validate()?;
    if stages == 0 {
        return Err(Error::InvalidParameter("need at least one stage".into()));
    }
    if stages > system.stages() {
        return Err(Error::InvalidParameter(format!("system has {} flat sets, {stages} stages requested", system.stages())));
    }
    if witness.depth() < stages {
        return Err(Error::Precondition(format!("witness prefix has {} terms, {stages} stages requested", witness.depth())));
    }
    let e = &system.target;
    let dom = &system.domain;
    let mut records: Vec<StageRecord> = Vec::new();
    let mut diags: Vec<StageDiagnostics> = Vec::new();
    let mut all_pairs: Vec<Vec<WitnessPair>> = Vec::new();
    for n in 1..=stages {
        let ni = n as i64;
        let q = flat_margin(system, n)?;
        let third = rat(1, 3);
        let (fstar, env_radius, refine_eps, flatten_passed, flatten_pieces) = if n == 1 {
            (PiecewiseLinear::zero(dom), q.clone(), Rational::one(), true, 0)
        } else {
            let prev = &records[n - 2];
            let eps_flat = pow2(-3 * (ni - 1));
            let delta_p = mid(&pow2(-3 * ni), &eps_flat);
            let mut fstar = prev.f.clone();
            let mut ok = true;
            let mut count = 0;
            for c in system.components(n - 1) {
                let h_all = system.flat_sets[n - 1].intersect_interval(&c);
                let h = IntervalSet::from_intervals(
                    h_all.intervals().iter().filter(|iv| iv.lo() > c.lo() && iv.hi() < c.hi()).cloned().collect(),
                );
                if h.is_empty() {
                    continue;
                }
                let local = prev.f.restrict(&c)?;
                let env = Envelope::around(&local, &prev.radius.scale(&third))?;
                let res = envelope_flatten(&local, &env, e, &h, &eps_flat, &delta_p)?;
                ok &= res.verify(&local, &env, e, &h)?.passed();
                count += res.pieces.len();
                fstar = fstar.splice(&res.g)?;
            }
            let radius = q.min(&prev.radius.scale(&third))?;
            (fstar, radius, delta_p, ok, count)
        };
        let delta = pow2(-3 * ni);
        let env = Envelope::around(&fstar, &env_radius)?;
        let compacts: Vec<Interval> = system
            .components(n)
            .iter()
            .filter_map(|c| e.intersect_interval(c).without_points().hull())
            .collect();
        let refined = envelope_refine(&fstar, &env, e, &refine_eps, &delta, &compacts, options.partition)?;

        let refine_passed = refined.verify(&fstar, &env, e)?.passed();

        let f = refined.g.clone();

        let gamma = witness.gammas[n - 1].clone();
        let delta_n = witness.deltas[n - 1].clone();
        let k = k_factor(n, &gamma);
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(n as u64));
        let comps = system.components(n);
        let mut views: Vec<Option<ComponentView>> = (0..comps.len()).map(|_| None).collect();
        let mut pairs = Vec::new();
        let mut sampled = 0;
        let bound = (Rational::one() - pow2(-2 * ni)) * &gamma;
        while sampled < options.samples.max(1) {
            let x = sample_target(e, &mut rng);
            if !level_set_membership(e, &x, &gamma, &delta_n)?.member {
                sampled += 1;
                continue;
            }
            sampled += 1;
            let ci = comps
                .iter()
                .position(|c| c.interior_contains(&x))
                .ok_or_else(|| Error::Construction(format!("{x} is not inside a component of G_{n}")))?;
            if views[ci].is_none() {
                views[ci] = Some(ComponentView::new(&f, &comps[ci])?);
            }
            let view = views[ci].as_ref().expect("just built");
            let (y, ratio) = find_witness(view, &x, n, &gamma, &delta_n, k)?;
            pairs.push(WitnessPair {
                x,
                y,
                ratio,
                bound: bound.clone(),
                radius_x: Rational::zero(),
                radius_y: Rational::zero(),
            });
        }

        let mut radius = PiecewiseLinear::constant(pow2(-ni), dom).min(&env_radius)?;
        let pair_cap = pow2(-2 * ni) * &gamma;
        let persist = (Rational::one() - pow2(-ni)) * &gamma;
        let mut dips: Option<PiecewiseLinear> = None;
        for p in &pairs {
            let dist = (&p.x - &p.y).abs();
            let slack = (f.eval(&p.x) - f.eval(&p.y)).abs() - &persist * &dist;
            let tau = (&pair_cap * &dist).min(slack) / int(4);
            for z in [&p.x, &p.y] {
                let c = cone(dom, z, &tau)?;
                dips = Some(match dips {
                    None => c,
                    Some(w) => w.min(&c)?,
                });
            }
        }
        if let Some(w) = dips {
            radius = radius.min(&w)?;
        }
        for p in pairs.iter_mut() {
            p.radius_x = radius.eval(&p.x);
            p.radius_y = radius.eval(&p.y);
        }
        let radius_bounded =
            radius.max_value() <= pow2(-ni) && !q.sub(&radius)?.min_value().is_negative() && !radius.min_value().is_negative();
        let radius_dips_hold = pairs.iter().all(|p| {
            let cap = &pair_cap * (&p.x - &p.y).abs();
            p.radius_x < cap && p.radius_y < cap
        });

        let factor = Rational::one() - &delta;
        let audit = f.audit_increment_exact(e, &factor);
        diags.push(StageDiagnostics {
            n,
            flat_on_f: flat_on(&f, &system.flat_sets[n - 1]),
            increment_factor: factor,
            increment_violations: audit.violations.len(),
            refine_passed,
            flatten_passed,
            sampled,
            witness_ratios_hold: pairs.iter().all(|p| p.ratio > p.bound),
            witnesses: pairs.clone(),
            radius_bounded,
            radius_dips_hold,
            gamma,
            delta: delta_n,
            k_factor: k,
            refine_blocks: refined.blocks.len(),
            flatten_pieces,
        });
        all_pairs.push(pairs);
        records.push(StageRecord { n, f, radius, margin: q });
    }

    let mut step_norms = Vec::new();
    let mut cauchy = true;
    for w in records.windows(2) {
        let s = w[1].f.sub(&w[0].f)?.sup_norm();
        cauchy &= s <= pow2(-(w[0].n as i64));
        step_norms.push(s);
    }
    let mut agree_on_f = true;
    let mut nested_vicinities = true;
    let mut persistent_ratios = true;
    let mut persistent_flatness = true;
    for (i, rn) in records.iter().enumerate() {
        let fset = &system.flat_sets[i];
        let vic = Vicinity::new(rn.f.clone(), rn.radius.clone())?;
        let gamma = &witness.gammas[i];
        let persist = (Rational::one() - pow2(-(rn.n as i64))) * gamma;
        for rm in &records[i..] {
            agree_on_f &= agree_on(&rm.f, &rn.f, fset);
            persistent_flatness &= flat_on(&rm.f, fset);
            nested_vicinities &= vic.contains(&rm.f)?;
            persistent_ratios &= all_pairs[i].iter().all(|p| {
                let dist = (&p.x - &p.y).abs();
                (rm.f.eval(&p.x) - rm.f.eval(&p.y)).abs() > &persist * &dist
            });
        }
    }
    Ok(UdtRun {
        system: system.clone(),
        witness: witness.clone(),
        stages: records,
        diagnostics: diags,
        cross: CrossStageChecks { step_norms, cauchy, agree_on_f, nested_vicinities, persistent_ratios, persistent_flatness },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fat_cantor_system_shape() {
        let s = NestedClosedSystem::fat_cantor(3, 3).unwrap();
        assert_eq!(s.target.len(), 8);
        assert_eq!(s.target.measure(), int(1) - rat(1, 4) - rat(2, 16) - rat(4, 64));
        assert_eq!(s.flat_sets[0], IntervalSet::single(rat(7, 16), rat(9, 16)).unwrap());
        assert_eq!(s.components(1).len(), 2);
        assert_eq!(s.components(3).len(), 8);
    }

    #[test]
    fn margin_is_below_squared_distance() {
        let s = NestedClosedSystem::fat_cantor(2, 2).unwrap();
        for n in 1..=2 {
            let q = flat_margin(&s, n).unwrap();
            for c in s.components(n) {
                for x in q.breakpoints().iter().filter(|x| c.contains(x)) {
                    let d = (x - c.lo()).min(c.hi() - x);
                    assert!(q.eval(x) <= &d * &d);
                }
                assert!(q.eval(&c.lo()) == int(0) && q.eval(&c.hi()) == int(0));
            }
            for h in s.target.intervals() {
                assert!(q.min_on(h.lo(), h.hi()).is_positive());
            }
        }
    }

    #[test]
    fn k_factor_values() {
        assert_eq!(k_factor(1, &rat(3, 4)), 100);
        assert!(k_factor(3, &rat(15, 16)) > 100);
    }

    #[test]
    fn full_measure_two_stages() {
        let w = Interval::new(int(0), int(1)).unwrap();
        let s = NestedClosedSystem::full_measure(&w, 2).unwrap();
        let wit = UdtWitness::for_set(&s.target, 2).unwrap();
        let run = build_udt_lip1(&s, &wit, 2, &UdtOptions::default()).unwrap();
        assert!(run.passed(), "{:?} {:?}", run.diagnostics, run.cross);
        let f2 = run.last();
        let slope = Rational::one() - pow2(-6);
        let inside: Vec<_> = f2
            .breakpoints()
            .windows(2)
            .zip(f2.slopes())
            .filter(|(b, _)| b[0] >= int(0) && b[1] <= int(1))
            .map(|(_, s)| s)
            .collect();
        assert!(!inside.is_empty());
        assert!(inside.iter().all(|s| s.abs() == slope));
    }
}
