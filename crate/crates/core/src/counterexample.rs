//! A weakly dense `G_δ` set that is not Lip 1.
//!
//! `F_(1) = [0,1]`; each block `F_p` at level `n` has left half `U_p`, and its
//! right half is cut into `2·4^(n+1)` equal slots whose even-numbered slots are
//! the children `F_(p,1), …, F_(p,4^(n+1))`. The set `E` is the union of all
//! `U_p` plus the points of the nested intersections that use index `1`
//! infinitely often. `E` is not a finite union of intervals, so every check
//! here works with a sandwich `U-part ⊆ E ⊆ U-part ∪ F-cover` at finite depth.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::density::Verdict;
use crate::error::{Error, Result};
use crate::interval_set::{Interval, IntervalSet, MassOracle};
use crate::pcw::PiecewiseLinear;
use crate::rational::{self, int, rat, Rational};

/// Deepest level whose index range `1..=4^n` fits in a `u64`.
pub const MAX_LEVEL: usize = 31;

/// The ratio cap used to pick the next block.
pub fn cap() -> Rational {
    rat(9, 10)
}

/// The lower bound forced on the chosen block.
pub fn floor() -> Rational {
    rat(7, 40)
}

fn width(level: usize) -> u64 {
    4u64.pow(level as u32)
}

/// `(i_0, …, i_n)` with `i_0 = 1` and `1 ≤ i_k ≤ 4^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct SymbolPath(Vec<u64>);

impl SymbolPath {
    pub fn root() -> Self {
        SymbolPath(vec![1])
    }

    pub fn new(indices: Vec<u64>) -> Result<Self> {
        if indices.first() != Some(&1) {
            return Err(Error::InvalidPath(format!("must start with 1, got {indices:?}")));
        }
        if indices.len() - 1 > MAX_LEVEL {
            return Err(Error::InvalidPath(format!("level {} exceeds {MAX_LEVEL}", indices.len() - 1)));
        }
        for (k, &i) in indices.iter().enumerate() {
            if i == 0 || i > width(k) {
                return Err(Error::InvalidPath(format!("index {i} at level {k} outside 1..={}", width(k))));
            }
        }
        Ok(SymbolPath(indices))
    }

    pub fn indices(&self) -> &[u64] {
        &self.0
    }

    pub fn level(&self) -> usize {
        self.0.len() - 1
    }

    pub fn last(&self) -> u64 {
        *self.0.last().expect("non-empty")
    }

    pub fn parent(&self) -> Option<Self> {
        (self.0.len() > 1).then(|| SymbolPath(self.0[..self.0.len() - 1].to_vec()))
    }

    pub fn child(&self, i: u64) -> Result<Self> {
        let mut v = self.0.clone();
        v.push(i);
        SymbolPath::new(v)
    }

    /// The path followed by `count` ones.
    pub fn ones(&self, count: usize) -> Result<Self> {
        let mut v = self.0.clone();
        v.extend(std::iter::repeat(1).take(count));
        SymbolPath::new(v)
    }
}

impl TryFrom<Vec<u64>> for SymbolPath {
    type Error = Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        SymbolPath::new(v)
    }
}

impl From<SymbolPath> for Vec<u64> {
    fn from(p: SymbolPath) -> Self {
        p.0
    }
}

impl fmt::Display for SymbolPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

impl FromStr for SymbolPath {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let v = t
            .split(',')
            .map(|x| x.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad symbol path {s:?}"))))
            .collect::<Result<Vec<_>>>()?;
        SymbolPath::new(v)
    }
}

/// Child `i` (at `level`) of the block `parent`.
fn child_block(parent: &Interval, level: usize, i: u64) -> Interval {
    let max_u = parent.midpoint();
    let slot = (parent.hi() - &max_u) / Rational::from_integer(BigInt::from(2 * width(level)));
    let lo = &max_u + &slot * Rational::from_integer(BigInt::from(2 * i - 1));
    let hi = &max_u + &slot * Rational::from_integer(BigInt::from(2 * i));
    Interval::new(lo, hi).expect("child block is ordered")
}

fn left_half(block: &Interval) -> Interval {
    Interval::new(block.lo().clone(), block.midpoint()).expect("left half is ordered")
}

/// Descends `count` levels along index `1` from `block` (at `level`).
fn ones_from(block: &Interval, level: usize, count: usize) -> Interval {
    let mut b = block.clone();
    for k in level + 1..=level + count {
        b = child_block(&b, k, 1);
    }
    b
}

pub fn f_interval(path: &SymbolPath) -> Interval {
    let mut b = Interval::new(int(0), int(1)).expect("unit interval");
    for (k, &i) in path.indices().iter().enumerate().skip(1) {
        b = child_block(&b, k, i);
    }
    b
}

pub fn u_interval(path: &SymbolPath) -> Interval {
    left_half(&f_interval(path))
}

/// `F_(p,1), …, F_(p,4^(n+1))` for `p` of level `n`, left to right.
pub fn child_blocks(path: &SymbolPath) -> Vec<Interval> {
    let parent = f_interval(path);
    let level = path.level() + 1;
    let max_u = parent.midpoint();
    let slot = (parent.hi() - &max_u) / Rational::from_integer(BigInt::from(2 * width(level)));
    let two_slot = &slot * int(2);
    let mut lo = &max_u + &slot;
    let mut out = Vec::with_capacity(width(level) as usize);
    for _ in 0..width(level) {
        let hi = &lo + &slot;
        out.push(Interval::new(lo.clone(), hi).expect("child block is ordered"));
        lo += &two_slot;
    }
    out
}

/// Size guards for the `4^n` growth of the system.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest number of blocks at the deepest level of a sandwich.
    pub max_blocks: u64,
    /// Largest number of point pairs examined for one block.
    pub max_pairs: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_blocks: 1 << 16, max_pairs: 1 << 22 }
    }
}

/// Number of blocks at level `depth`: `4^(1+2+…+depth)`.
pub fn blocks_at_depth(depth: usize) -> Option<u64> {
    let exp = depth.checked_mul(depth + 1)? / 2;
    4u64.checked_pow(u32::try_from(exp).ok()?)
}

/// `U-part ⊆ E ⊆ U-part ∪ F-cover` at a fixed depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sandwich {
    pub depth: usize,
    /// Union of `U_p` over all paths of level below `depth`.
    pub u_part: IntervalSet,
    /// Union of `F_p` over all paths of level exactly `depth`.
    pub f_cover: IntervalSet,
}

impl Sandwich {
    pub fn inner(&self) -> &IntervalSet {
        &self.u_part
    }

    pub fn outer(&self) -> IntervalSet {
        self.u_part.union(&self.f_cover)
    }

    /// The U-part plus the left halves of the F-cover blocks; still inside `E`.
    pub fn deep_inner(&self) -> IntervalSet {
        let halves = self.f_cover.intervals().iter().map(left_half).collect();
        self.u_part.union(&IntervalSet::from_intervals(halves))
    }

    /// `|outer ∩ [a, b]|` without building the union.
    pub fn outer_mass(&self, a: &Rational, b: &Rational) -> Rational {
        self.u_part.mass_between(a, b) + self.f_cover.mass_between(a, b)
    }

    /// `|deep_inner ∩ [a, b]|` without building the union.
    pub fn deep_inner_mass(&self, a: &Rational, b: &Rational) -> Rational {
        let ivs = self.f_cover.intervals();
        let start = ivs.partition_point(|iv| iv.hi() <= a);
        let halves: Rational = ivs[start..]
            .iter()
            .take_while(|iv| iv.lo() < b)
            .map(|iv| left_half(iv).overlap_len(a, b))
            .sum();
        self.u_part.mass_between(a, b) + halves
    }
}

pub fn approximate_e(depth: usize, budget: &Budget) -> Result<Sandwich> {
    if depth == 0 {
        return Err(Error::InvalidParameter("depth must be at least 1".into()));
    }
    match blocks_at_depth(depth) {
        Some(b) if b <= budget.max_blocks => {}
        _ => {
            return Err(Error::Budget(format!(
                "depth {depth} needs 4^{} blocks, budget is {}",
                depth * (depth + 1) / 2,
                budget.max_blocks
            )))
        }
    }
    let mut level = vec![Interval::new(int(0), int(1)).expect("unit interval")];
    let mut u = Vec::new();
    for k in 1..=depth {
        u.extend(level.iter().map(left_half));
        level = level.iter().flat_map(|b| (1..=width(k)).map(move |i| child_block(b, k, i))).collect();
    }
    Ok(Sandwich { depth, u_part: IntervalSet::from_intervals(u), f_cover: IntervalSet::from_intervals(level) })
}

/// `|U_p| / (max F_(p,1) − min F_p)`.
pub fn wd_ratio(path: &SymbolPath) -> Rational {
    let f = f_interval(path);
    let c = child_block(&f, path.level() + 1, 1);
    left_half(&f).len() / (c.hi() - f.lo())
}

/// `4^(n+1) / (4^(n+1) + 1)`.
pub fn wd_expected(level: usize) -> Rational {
    let q = Rational::from_integer(BigInt::from(4u8).pow(level as u32 + 1));
    &q / (&q + int(1))
}

/// `(Δ+1)/(2Δ+1)`.
pub fn two_thirds_bound(dj: u64) -> Rational {
    Rational::new(BigInt::from(dj) + 1, BigInt::from(dj) * 2 + 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoThirdsReport {
    pub parent: SymbolPath,
    pub j: u64,
    pub j_prime: u64,
    #[serde(with = "rational::serde_str")]
    pub z: Rational,
    #[serde(with = "rational::serde_str")]
    pub z_prime: Rational,
    /// `|f(z) − f(z′)|`.
    #[serde(with = "rational::serde_str")]
    pub increment: Rational,
    #[serde(with = "rational::serde_str")]
    pub inner_mass: Rational,
    #[serde(with = "rational::serde_str")]
    pub outer_mass: Rational,
    /// Holds when the increment is within the inner mass, fails when it
    /// exceeds the outer mass.
    pub increment_verdict: Verdict,
    /// `outer_mass / (z′ − z)`.
    #[serde(with = "rational::serde_str")]
    pub measure_ratio: Rational,
    #[serde(with = "rational::serde_str")]
    pub bound: Rational,
    pub measure_holds: bool,
    pub bound_at_most_two_thirds: bool,
}

impl TwoThirdsReport {
    pub fn passed(&self) -> bool {
        self.increment_verdict == Verdict::Holds && self.measure_holds && self.bound_at_most_two_thirds
    }
}

/// Checks the increment and measure bounds between `z ∈ F_(p,j)` and
/// `z′ ∈ F_(p,j′)` for `j < j′`.
pub fn two_thirds_bound_check(
    f: &PiecewiseLinear,
    sandwich: &Sandwich,
    parent: &SymbolPath,
    j: u64,
    j_prime: u64,
    z: &Rational,
    z_prime: &Rational,
) -> Result<TwoThirdsReport> {
    if j >= j_prime {
        return Err(Error::InvalidParameter(format!("need j < j', got {j} and {j_prime}")));
    }
    if sandwich.depth <= parent.level() {
        return Err(Error::InvalidParameter(format!(
            "sandwich depth {} does not reach the children of {parent}",
            sandwich.depth
        )));
    }
    let a = f_interval(&parent.child(j)?);
    let b = f_interval(&parent.child(j_prime)?);
    if !a.contains(z) || !b.contains(z_prime) {
        return Err(Error::Precondition(format!("z must lie in {a} and z' in {b}")));
    }
    let span = z_prime - z;
    let increment = (f.eval(z) - f.eval(z_prime)).abs();
    let inner_mass = sandwich.deep_inner_mass(z, z_prime);
    let outer_mass = sandwich.outer_mass(z, z_prime);
    let increment_verdict = if increment <= inner_mass {
        Verdict::Holds
    } else if increment > outer_mass {
        Verdict::Fails
    } else {
        Verdict::Inconclusive
    };
    let measure_ratio = &outer_mass / &span;
    let bound = two_thirds_bound(j_prime - j);
    Ok(TwoThirdsReport {
        parent: parent.clone(),
        j,
        j_prime,
        z: z.clone(),
        z_prime: z_prime.clone(),
        increment,
        inner_mass,
        outer_mass,
        increment_verdict,
        measure_holds: measure_ratio <= bound,
        bound_at_most_two_thirds: bound <= rat(2, 3),
        measure_ratio,
        bound,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EbenWitness {
    #[serde(with = "rational::serde_str")]
    pub y: Rational,
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
}

fn slope_ratio(fx: &Rational, fy: &Rational, x: &Rational, y: &Rational) -> Rational {
    (fy - fx).abs() / (y - x).abs()
}

/// Every extreme candidate `y ∈ E` near `x`, with its ratio, sorted by `y`.
/// Candidates are endpoints of `E`, breakpoints of `f` inside `E`, and the
/// ends of the closed window of radius `(1 − 2^-10)ε`.
fn eben_candidates(f: &PiecewiseLinear, e: &IntervalSet, x: &Rational, eps: &Rational) -> Result<Vec<EbenWitness>> {
    if !eps.is_positive() || eps >= &int(1) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1), got {eps}")));
    }
    if !e.contains(x) {
        return Err(Error::Precondition(format!("{x} is not in the set")));
    }
    let rho = eps * rat(1023, 1024);
    let win = Interval::new(x - &rho, x + &rho)?;
    let local = e.intersect_interval(&win);
    let mut pts = local.endpoints();
    let bp = f.breakpoints();
    let i = bp.partition_point(|p| rational::lt(p, win.lo()));
    let j = bp.partition_point(|p| rational::le(p, win.hi()));
    pts.extend(bp[i..j].iter().filter(|p| local.contains(p)).cloned());
    pts.retain(|p| !rational::eq_fast(p, x));
    rational::sort_dedup(&mut pts);
    let fx = f.eval(x);
    let vals = f.eval_sorted(&pts);
    Ok(pts.into_iter().zip(vals).map(|(y, fy)| EbenWitness { ratio: slope_ratio(&fx, &fy, x, &y), y }).collect())
}

/// A `y ∈ E` within `ε` of `x` with `|f(x) − f(y)| > (1 − ε)|x − y|`; the
/// best ratio wins, ties go to the smallest `y`.
pub fn lemma_eben_search(
    f: &PiecewiseLinear,
    e: &IntervalSet,
    x: &Rational,
    eps: &Rational,
) -> Result<Option<EbenWitness>> {
    let thr = int(1) - eps;
    let mut best: Option<EbenWitness> = None;
    for c in eben_candidates(f, e, x, eps)? {
        if c.ratio > thr && best.as_ref().map_or(true, |b| c.ratio > b.ratio) {
            best = Some(c);
        }
    }
    Ok(best)
}

/// Endpoints of `iv` plus the breakpoints of `f` inside it.
fn candidates_in(f: &PiecewiseLinear, iv: &Interval) -> Vec<Rational> {
    let bp = f.breakpoints();
    let i = bp.partition_point(|p| rational::le(p, iv.lo()));
    let j = bp.partition_point(|p| rational::lt(p, iv.hi()));
    let mut pts = vec![iv.lo().clone()];
    pts.extend(bp[i..j.max(i)].iter().cloned());
    pts.push(iv.hi().clone());
    rational::sort_dedup(&mut pts);
    pts
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRatio {
    #[serde(with = "rational::serde_str")]
    pub x: Rational,
    #[serde(with = "rational::serde_str")]
    pub y: Rational,
    #[serde(with = "rational::serde_str")]
    pub ratio: Rational,
}

/// Largest `|f(y) − f(x)|/(y − x)` over `x ∈ left`, `y ∈ right`, where
/// `left` lies entirely before `right`. The ratio is linear-fractional on
/// every product of linear pieces, so its extremes sit at candidate pairs.
fn max_pair_ratio(f: &PiecewiseLinear, left: &Interval, right: &Interval, budget: &Budget) -> Result<PairRatio> {
    let xs = candidates_in(f, left);
    let ys = candidates_in(f, right);
    let pairs = xs.len() as u64 * ys.len() as u64;
    if pairs > budget.max_pairs {
        return Err(Error::Budget(format!("{pairs} candidate pairs exceed {}", budget.max_pairs)));
    }
    let (fx, fy) = (f.eval_sorted(&xs), f.eval_sorted(&ys));
    let mut best = PairRatio { x: xs[0].clone(), y: ys[0].clone(), ratio: int(-1) };
    for (x, vx) in xs.iter().zip(&fx) {
        for (y, vy) in ys.iter().zip(&fy) {
            let r = slope_ratio(vx, vy, x, y);
            if r > best.ratio {
                best = PairRatio { x: x.clone(), y: y.clone(), ratio: r };
            }
        }
    }
    Ok(best)
}

/// A lower bound for `|f(y) − f(v)|/(y − v)` over all `y ∈ block`.
fn min_ratio_from(f: &PiecewiseLinear, v: &Rational, block: &Interval) -> Rational {
    let ys = candidates_in(f, block);
    let fv = f.eval(v);
    let rs: Vec<Rational> = f.eval_sorted(&ys).iter().zip(&ys).map(|(fy, y)| (fy - &fv) / (y - v)).collect();
    let lo = rs.iter().min().expect("non-empty").clone();
    let hi = rs.iter().max().expect("non-empty").clone();
    if lo.is_positive() {
        lo
    } else if hi.is_negative() {
        -hi
    } else {
        Rational::zero()
    }
}

/// `(9/10·(w − v) − 2s)/(3s + (w − v))` with `s` the block length.
pub fn great_chain(v: &Rational, w: &Rational, block_len: &Rational) -> Rational {
    let d = w - v;
    (cap() * &d - int(2) * block_len) / (int(3) * block_len + d)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    /// No point of `E` near `y` has ratio above `1 − ε`.
    NoEbenWitness {
        round: usize,
        #[serde(with = "rational::serde_str")]
        point: Rational,
        #[serde(with = "rational::serde_str")]
        eps: Rational,
        #[serde(with = "rational::serde_str_opt")]
        best_ratio: Option<Rational>,
    },
    /// `|f(a) − f(b)|` exceeds the measure of the outer cover on `[a,b]`.
    IncrementViolation {
        round: usize,
        #[serde(with = "rational::serde_str")]
        a: Rational,
        #[serde(with = "rational::serde_str")]
        b: Rational,
        #[serde(with = "rational::serde_str")]
        increment: Rational,
        #[serde(with = "rational::serde_str")]
        outer_mass: Rational,
    },
    /// On `region` every ratio from `U` of its parent is at most the cap,
    /// while every ratio from `v` is at least the floor.
    Sandwich {
        round: usize,
        region: SymbolPath,
        #[serde(with = "rational::serde_str")]
        kicsi_max: Rational,
        #[serde(with = "rational::serde_str")]
        v: Rational,
        #[serde(with = "rational::serde_str")]
        w: Rational,
        #[serde(with = "rational::serde_str")]
        vw_ratio: Rational,
        #[serde(with = "rational::serde_str")]
        great_chain: Rational,
        #[serde(with = "rational::serde_str")]
        great_min: Rational,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversarialVerdict {
    ForcedFailure,
    InconclusiveAtDepth,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub n: usize,
    pub a_prev: usize,
    pub path: SymbolPath,
    #[serde(with = "rational::serde_str")]
    pub y: Rational,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "rational::serde_str_opt")]
    pub x: Option<Rational>,
    #[serde(with = "rational::serde_str_opt")]
    pub x_ratio: Option<Rational>,
    pub a: Option<usize>,
    pub index: Option<u64>,
    #[serde(with = "rational::serde_str_opt")]
    pub kicsi_max: Option<Rational>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarialOptions {
    pub depth: usize,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    pub budget: Budget,
}

impl Default for AdversarialOptions {
    fn default() -> Self {
        AdversarialOptions { depth: 3, eps: rat(1, 16), budget: Budget::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarialTrace {
    pub depth: usize,
    #[serde(with = "rational::serde_str")]
    pub eps: Rational,
    #[serde(with = "rational::serde_str")]
    pub cap: Rational,
    #[serde(with = "rational::serde_str")]
    pub floor: Rational,
    pub rounds: Vec<Round>,
    pub verdict: AdversarialVerdict,
    pub certificate: Option<Certificate>,
}

/// The level `a` at which `x` leaves the chain of first children below `p`,
/// if `x ∈ F_p` and this happens by level `depth`.
fn escape_level(p: &SymbolPath, x: &Rational, depth: usize) -> Option<usize> {
    let mut b = f_interval(p);
    if !b.contains(x) {
        return None;
    }
    for k in p.level() + 1..=depth {
        b = child_block(&b, k, 1);
        if !b.contains(x) {
            return Some(k);
        }
    }
    None
}

fn increment_violation(f: &PiecewiseLinear, outer: &IntervalSet, round: usize, p: &Rational, q: &Rational) -> Option<Certificate> {
    let (a, b) = if p <= q { (p, q) } else { (q, p) };
    let increment = (f.eval(a) - f.eval(b)).abs();
    let outer_mass = outer.mass_between(a, b);
    (increment > outer_mass).then(|| Certificate::IncrementViolation {
        round,
        a: a.clone(),
        b: b.clone(),
        increment,
        outer_mass,
    })
}

/// Runs the block-selection recursion against `f` on the depth-`d` sandwich
/// and stops at the first round that certifies a failure.
pub fn adversarial_verify(f: &PiecewiseLinear, opts: &AdversarialOptions) -> Result<AdversarialTrace> {
    if !(f.lo() <= &int(0) && f.hi() >= &int(1)) {
        return Err(Error::Precondition(format!("function domain {} does not cover [0,1]", f.domain())));
    }
    if !opts.eps.is_positive() || opts.eps >= rat(1, 10) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1/10), got {}", opts.eps)));
    }
    let depth = opts.depth;
    let sw = approximate_e(depth, &opts.budget)?;
    let outer = sw.outer();
    let inner = sw.deep_inner();
    let mut trace = AdversarialTrace {
        depth,
        eps: opts.eps.clone(),
        cap: cap(),
        floor: floor(),
        rounds: Vec::new(),
        verdict: AdversarialVerdict::InconclusiveAtDepth,
        certificate: None,
    };
    let mut p = SymbolPath::root();
    let mut a_prev = 0;
    for n in 1.. {
        let lvl = p.level();
        if lvl >= depth {
            break;
        }
        let fp = f_interval(&p);
        let y = ones_from(&fp, lvl, depth - lvl).lo().clone();
        let eps = rational::min_r(&opts.eps, &(fp.len() / int(2))).clone();
        let mut round = Round {
            n,
            a_prev,
            path: p.clone(),
            y: y.clone(),
            eps: eps.clone(),
            x: None,
            x_ratio: None,
            a: None,
            index: None,
            kicsi_max: None,
            note: None,
        };
        let cands = eben_candidates(f, &inner, &y, &eps)?;
        let thr = int(1) - &eps;
        let witnesses: Vec<&EbenWitness> = cands.iter().filter(|c| c.ratio > thr).collect();
        if witnesses.is_empty() {
            trace.certificate = Some(Certificate::NoEbenWitness {
                round: n,
                point: y,
                eps,
                best_ratio: cands.iter().map(|c| c.ratio.clone()).max(),
            });
            trace.rounds.push(round);
            trace.verdict = AdversarialVerdict::ForcedFailure;
            break;
        }
        let chosen = witnesses
            .iter()
            .filter_map(|c| escape_level(&p, &c.y, depth).map(|a| (a, *c)))
            .min_by(|(a1, c1), (a2, c2)| a1.cmp(a2).then_with(|| c2.ratio.cmp(&c1.ratio)));
        let Some((a, x)) = chosen else {
            round.note = Some("no witness leaves the first-child chain within the working depth".into());
            trace.rounds.push(round);
            break;
        };
        round.x = Some(x.y.clone());
        round.x_ratio = Some(x.ratio.clone());
        round.a = Some(a);
        let q = p.ones(a - 1 - lvl)?;
        let fq = f_interval(&q);
        let uq = left_half(&fq);
        if !uq.contains(&x.y) {
            trace.certificate = increment_violation(f, &outer, n, &x.y, &y);
            round.note = Some("witness lies right of the left half".into());
            trace.rounds.push(round);
            if trace.certificate.is_some() {
                trace.verdict = AdversarialVerdict::ForcedFailure;
            }
            break;
        }
        let mut index = None;
        let mut last_violation: Option<PairRatio> = None;
        for i in 1..=width(a) {
            let m = max_pair_ratio(f, &uq, &child_block(&fq, a, i), &opts.budget)?;
            if m.ratio <= cap() {
                round.kicsi_max = Some(m.ratio);
                index = Some(i);
                break;
            }
            last_violation = Some(m);
        }
        round.index = index;
        let (Some(i), Some(vw)) = (index, last_violation.clone()) else {
            let (pa, pb) = match &last_violation {
                Some(m) => (m.x.clone(), m.y.clone()),
                None => (x.y.clone(), y.clone()),
            };
            trace.certificate = increment_violation(f, &outer, n, &pa, &pb);
            round.note = Some(if index.is_none() { "no block meets the cap" } else { "first block meets the cap" }.into());
            trace.rounds.push(round);
            if trace.certificate.is_some() {
                trace.verdict = AdversarialVerdict::ForcedFailure;
            }
            break;
        };
        let region = q.child(i)?;
        let block = child_block(&fq, a, i);
        let chain = great_chain(&vw.x, &vw.y, &block.len());
        let great_min = min_ratio_from(f, &vw.x, &block);
        let kicsi_max = round.kicsi_max.clone().expect("set with index");
        trace.rounds.push(round);
        if great_min >= floor() && chain >= floor() {
            trace.certificate = Some(Certificate::Sandwich {
                round: n,
                region,
                kicsi_max,
                v: vw.x,
                w: vw.y,
                vw_ratio: vw.ratio,
                great_chain: chain,
                great_min,
            });
            trace.verdict = AdversarialVerdict::ForcedFailure;
            break;
        }
        if let Some(c) = increment_violation(f, &outer, n, &vw.x, &vw.y) {
            trace.certificate = Some(c);
            trace.verdict = AdversarialVerdict::ForcedFailure;
            break;
        }
        p = region;
        a_prev = a;
    }
    Ok(trace)
}

impl AdversarialTrace {
    /// Recomputes the certificate from `f` alone; `true` when every recorded
    /// number is reproduced and the failure condition holds.
    pub fn recheck(&self, f: &PiecewiseLinear, budget: &Budget) -> Result<bool> {
        let Some(cert) = &self.certificate else {
            return Ok(self.verdict == AdversarialVerdict::InconclusiveAtDepth);
        };
        let sw = approximate_e(self.depth, budget)?;
        Ok(match cert {
            Certificate::NoEbenWitness { point, eps, best_ratio, .. } => {
                let inner = sw.deep_inner();
                let cands = eben_candidates(f, &inner, point, eps)?;
                lemma_eben_search(f, &inner, point, eps)?.is_none()
                    && &cands.iter().map(|c| c.ratio.clone()).max() == best_ratio
            }
            Certificate::IncrementViolation { a, b, increment, outer_mass, .. } => {
                let inc = (f.eval(a) - f.eval(b)).abs();
                let m = sw.outer().mass_between(a, b);
                &inc == increment && &m == outer_mass && inc > m
            }
            Certificate::Sandwich { region, kicsi_max, v, w, vw_ratio, great_chain: chain, great_min, .. } => {
                let Some(q) = region.parent() else { return Ok(false) };
                let (fq, a, i) = (f_interval(&q), region.level(), region.last());
                if i < 2 {
                    return Ok(false);
                }
                let uq = left_half(&fq);
                let block = child_block(&fq, a, i);
                let prev = child_block(&fq, a, i - 1);
                let m = max_pair_ratio(f, &uq, &block, budget)?;
                let vw = slope_ratio(&f.eval(v), &f.eval(w), v, w);
                uq.contains(v)
                    && prev.contains(w)
                    && &m.ratio == kicsi_max
                    && m.ratio <= cap()
                    && &vw == vw_ratio
                    && vw > cap()
                    && &great_chain(v, w, &block.len()) == chain
                    && chain >= &floor()
                    && &min_ratio_from(f, v, &block) == great_min
                    && great_min >= &floor()
            }
        })
    }
}

/// Mass of `E`'s sandwich sides on `[a, b]`: `(inner, outer)`.
pub fn sandwich_mass(sw: &Sandwich, a: &Rational, b: &Rational) -> (Rational, Rational) {
    (sw.u_part.mass(a, b), sw.outer().mass(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{density_ratio, DensityQuery, Side};

    fn path(v: &[u64]) -> SymbolPath {
        SymbolPath::new(v.to_vec()).unwrap()
    }

    #[test]
    fn blocks() {
        assert_eq!(f_interval(&path(&[1])), Interval::new(int(0), int(1)).unwrap());
        assert_eq!(f_interval(&path(&[1, 1])), Interval::new(rat(9, 16), rat(5, 8)).unwrap());
        assert_eq!(f_interval(&path(&[1, 4])), Interval::new(rat(15, 16), int(1)).unwrap());
        assert_eq!(u_interval(&path(&[1])), Interval::new(int(0), rat(1, 2)).unwrap());
        assert_eq!(u_interval(&path(&[1, 1])), Interval::new(rat(9, 16), rat(19, 32)).unwrap());
        assert_eq!(f_interval(&path(&[1, 1])).len(), rat(1, 16));
    }

    #[test]
    fn path_validation() {
        assert!(SymbolPath::new(vec![]).is_err());
        assert!(SymbolPath::new(vec![2]).is_err());
        assert!(SymbolPath::new(vec![1, 5]).is_err());
        assert!(SymbolPath::new(vec![1, 4, 16]).is_ok());
        assert!(SymbolPath::new(vec![1, 0]).is_err());
        assert_eq!("(1,3,7)".parse::<SymbolPath>().unwrap(), path(&[1, 3, 7]));
        assert_eq!(path(&[1, 3, 7]).to_string(), "(1,3,7)");
        let j = serde_json::to_string(&path(&[1, 2])).unwrap();
        assert_eq!(j, "[1,2]");
        assert!(serde_json::from_str::<SymbolPath>("[1,9]").is_err());
    }

    #[test]
    fn wd_values() {
        assert_eq!(wd_ratio(&path(&[1])), rat(4, 5));
        assert_eq!(wd_ratio(&path(&[1, 3])), rat(16, 17));
        assert_eq!(wd_expected(0), rat(4, 5));
        let sw = approximate_e(1, &Budget::default()).unwrap();
        assert_eq!(sw.u_part, IntervalSet::single(int(0), rat(1, 2)).unwrap());
        let q = DensityQuery { x: rat(5, 8), side: Side::Left, r: rat(5, 8) };
        assert_eq!(density_ratio(&sw.u_part, &q).unwrap(), rat(4, 5));
    }

    #[test]
    fn sandwich_depth_one() {
        let sw = approximate_e(1, &Budget::default()).unwrap();
        assert_eq!(sw.f_cover.len(), 4);
        assert_eq!(sw.f_cover.intervals()[0], Interval::new(rat(9, 16), rat(5, 8)).unwrap());
        assert!(sw.u_part.contains(&rat(1, 4)));
        assert!(sw.deep_inner().contains(&rat(9, 16)) && !sw.u_part.contains(&rat(9, 16)));
        assert!(sw.u_part.is_subset_of(&approximate_e(2, &Budget::default()).unwrap().u_part));
        assert!(matches!(approximate_e(4, &Budget::default()), Err(Error::Budget(_))));
        assert!(approximate_e(0, &Budget::default()).is_err());
    }

    #[test]
    fn two_thirds() {
        assert_eq!(two_thirds_bound(1), rat(2, 3));
        assert_eq!(two_thirds_bound(3), rat(4, 7));
        let sw = approximate_e(2, &Budget::default()).unwrap();
        let phi = PiecewiseLinear::build_phi(&sw.u_part, &int(0), Some(&Interval::new(int(0), int(1)).unwrap())).unwrap();
        let p = path(&[1]);
        let (a, b) = (f_interval(&p.child(1).unwrap()), f_interval(&p.child(2).unwrap()));
        let rep = two_thirds_bound_check(&phi, &sw, &p, 1, 2, a.lo(), b.hi()).unwrap();
        assert!(rep.passed(), "{rep:?}");
        assert!(two_thirds_bound_check(&phi, &sw, &p, 2, 1, a.lo(), b.hi()).is_err());
    }

    #[test]
    fn eben() {
        let e = IntervalSet::single(int(0), int(1)).unwrap();
        let w = Interval::new(int(-1), int(2)).unwrap();
        let phi = PiecewiseLinear::build_phi(&e, &int(0), Some(&w)).unwrap();
        let hit = lemma_eben_search(&phi, &e, &rat(1, 2), &rat(1, 4)).unwrap().unwrap();
        assert_eq!(hit.ratio, int(1));
        assert!(hit.y > rat(1, 4) && hit.y < rat(3, 4));
        let zero = PiecewiseLinear::zero(&w);
        assert!(lemma_eben_search(&zero, &e, &rat(1, 2), &rat(1, 4)).unwrap().is_none());
        let scaled = phi.scale(&rat(9, 10));
        assert!(lemma_eben_search(&scaled, &e, &rat(1, 2), &rat(1, 16)).unwrap().is_none());
        assert!(lemma_eben_search(&phi, &e, &int(3), &rat(1, 4)).is_err());
    }

    #[test]
    fn sandwich_masses_match_unions() {
        let sw = approximate_e(2, &Budget::default()).unwrap();
        let (inner, outer) = (sw.deep_inner(), sw.outer());
        let pts = [int(0), rat(1, 3), rat(9, 16), rat(5, 8), rat(77, 100), rat(15, 16), int(1)];
        for a in &pts {
            for b in pts.iter().filter(|b| *b > a) {
                assert_eq!(sw.deep_inner_mass(a, b), inner.mass_between(a, b));
                assert_eq!(sw.outer_mass(a, b), outer.mass_between(a, b));
            }
        }
    }

    #[test]
    fn adversary_defeats_simple_candidates() {
        let unit = Interval::new(int(0), int(1)).unwrap();
        let opts = AdversarialOptions::default();
        let sw = approximate_e(3, &opts.budget).unwrap();
        let phi = PiecewiseLinear::build_phi(&sw.u_part, &int(0), Some(&unit)).unwrap();
        for f in [PiecewiseLinear::zero(&unit), phi.scale(&rat(9, 10)), phi] {
            let t = adversarial_verify(&f, &opts).unwrap();
            assert_eq!(t.verdict, AdversarialVerdict::ForcedFailure, "{t:?}");
            assert!(t.recheck(&f, &opts.budget).unwrap());
        }
    }
}
