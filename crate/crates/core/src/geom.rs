//! Exact convex-polygon clipping in the plane.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

pub(crate) type Pt = (Rational, Rational);

/// `a·u + b·v + c ≥ 0` (or `> 0` when `strict`).
#[derive(Clone, Debug)]
pub(crate) struct HalfPlane {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub strict: bool,
}

impl HalfPlane {
    pub fn new(a: Rational, b: Rational, c: Rational) -> Self {
        HalfPlane { a, b, c, strict: false }
    }

    pub fn strict(a: Rational, b: Rational, c: Rational) -> Self {
        HalfPlane { a, b, c, strict: true }
    }

    fn eval(&self, p: &Pt) -> Rational {
        &self.a * &p.0 + &self.b * &p.1 + &self.c
    }
}

pub(crate) fn rect(u0: &Rational, u1: &Rational, v0: &Rational, v1: &Rational) -> Vec<Pt> {
    vec![
        (u0.clone(), v0.clone()),
        (u1.clone(), v0.clone()),
        (u1.clone(), v1.clone()),
        (u0.clone(), v1.clone()),
    ]
}

/// Sutherland-Hodgman against one half-plane. A strict half-plane with a
/// non-constant form is clipped as closed; the caller only uses the result
/// through its area, which is insensitive to the boundary line.
pub(crate) fn clip(poly: &[Pt], h: &HalfPlane) -> Vec<Pt> {
    if poly.is_empty() {
        return Vec::new();
    }
    if h.a.is_zero() && h.b.is_zero() {
        let keep = if h.strict { h.c.is_positive() } else { !h.c.is_negative() };
        return if keep { poly.to_vec() } else { Vec::new() };
    }
    let n = poly.len();
    let vals: Vec<Rational> = poly.iter().map(|p| h.eval(p)).collect();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let j = (i + 1) % n;
        let (p, q) = (&poly[i], &poly[j]);
        let (fp, fq) = (&vals[i], &vals[j]);
        if !fp.is_negative() {
            out.push(p.clone());
        }
        if (fp.is_positive() && fq.is_negative()) || (fp.is_negative() && fq.is_positive()) {
            let t = fp / (fp - fq);
            out.push((&p.0 + (&q.0 - &p.0) * &t, &p.1 + (&q.1 - &p.1) * &t));
        }
    }
    out
}

/// Twice the signed area.
pub(crate) fn area2(poly: &[Pt]) -> Rational {
    let n = poly.len();
    let mut s = Rational::zero();
    for i in 0..n {
        let j = (i + 1) % n;
        s += &poly[i].0 * &poly[j].1 - &poly[j].0 * &poly[i].1;
    }
    s
}

pub(crate) fn vertex_mean(poly: &[Pt]) -> Pt {
    let n = Rational::from_integer((poly.len() as i64).into());
    let su: Rational = poly.iter().map(|p| p.0.clone()).sum();
    let sv: Rational = poly.iter().map(|p| p.1.clone()).sum();
    (su / &n, sv / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    #[test]
    fn clip_square_by_diagonal() {
        let sq = rect(&int(0), &int(1), &int(0), &int(1));
        assert_eq!(area2(&sq), int(2));
        let tri = clip(&sq, &HalfPlane::new(int(-1), int(-1), int(1)));
        assert_eq!(area2(&tri), int(1));
        let none = clip(&sq, &HalfPlane::new(int(1), int(1), int(-3)));
        assert!(none.is_empty() || area2(&none).is_zero());
        let gone = clip(&sq, &HalfPlane::strict(int(0), int(0), int(0)));
        assert!(gone.is_empty());
    }
}
