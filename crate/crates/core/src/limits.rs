//! One-sided limits of set-valued functions: the second coordinates of the
//! cluster points of the graph as `t ↑ a` or `t ↓ a`. Distances in `I × I`
//! use the maximum metric.

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::function::{FiniteGraph, GeneratedFn, SetValuedFn};
use crate::partition::{Location, Point};
use crate::scalar::{int, pow, q, Rational, Side};
use crate::set::ClosedSet1D;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideLimit {
    pub side: Side,
    pub at: Rational,
    pub value: ClosedSet1D,
}

pub fn lim_up(f: &SetValuedFn, a: &Rational) -> Result<ClosedSet1D> {
    one_sided_limit(f, a, Side::Up)
}

pub fn lim_down(f: &SetValuedFn, a: &Rational) -> Result<ClosedSet1D> {
    one_sided_limit(f, a, Side::Down)
}

pub fn side_limit(f: &SetValuedFn, a: &Rational, side: Side) -> Result<SideLimit> {
    Ok(SideLimit { side, at: a.clone(), value: one_sided_limit(f, a, side)? })
}

pub fn one_sided_limit(f: &SetValuedFn, a: &Rational, side: Side) -> Result<ClosedSet1D> {
    let (lo, hi) = f.domain();
    if a < lo || a > hi {
        return Err(Error::OutOfDomain(a.to_string()));
    }
    match f {
        SetValuedFn::Finite(g) => finite_limit(g, a, side),
        SetValuedFn::Generated(g) => Ok(generated_limit(g, a, side)),
    }
}

fn finite_limit(g: &FiniteGraph, a: &Rational, side: Side) -> Result<ClosedSet1D> {
    // a piece contributes when it covers a one-sided neighbourhood of `a`
    let covers = |x0: &Rational, x1: &Rational| match side {
        Side::Up => x0 < a && a <= x1,
        Side::Down => x0 <= a && a < x1,
    };
    let mut out = ClosedSet1D::empty();
    for s in g.segments() {
        if !s.is_vertical() && covers(&s.start.0, &s.end.0) {
            out = out.union(&ClosedSet1D::point(s.y_at(a)));
        }
    }
    for b in g.boxes() {
        if covers(&b.x0, &b.x1) {
            out = out.union(&ClosedSet1D::interval(b.y0.clone(), b.y1.clone()));
        }
    }
    for fam in g.families() {
        if fam.limit() == a {
            if fam.from_left() == (side == Side::Up) {
                out = out.union(&fam.limit_range());
            }
            continue;
        }
        for n in fam.members_spanning(a)? {
            let s = fam.member(&n);
            if !s.is_vertical() && covers(&s.start.0, &s.end.0) {
                out = out.union(&ClosedSet1D::point(s.y_at(a)));
            }
        }
    }
    Ok(out)
}

fn generated_limit(f: &GeneratedFn, a: &Rational, side: Side) -> ClosedSet1D {
    match f.partition().locate(a).expect("checked against the domain") {
        Location::Gap(g) => ClosedSet1D::point(f.gap_value(&g, a)),
        Location::Point(p) => generated_limit_at(f, p, side),
    }
}

/// Exact one-sided limit of a generated function at a point of its partition.
pub fn generated_limit_at(f: &GeneratedFn, p: Point, side: Side) -> ClosedSet1D {
    let part = f.partition();
    let neighbour = match side {
        Side::Up => part.predecessor(p),
        Side::Down => part.successor(p),
    };
    if let Some(n) = neighbour {
        let left = if side == Side::Up { n } else { p };
        let rule = f.gap_rule(left).expect("every gap has a rule");
        let r = if side == Side::Up { &rule.to } else { &rule.from };
        return ClosedSet1D::point(part.resolve(r, None).expect("validated reference"));
    }
    let Point::Explicit(i) = p else {
        unreachable!("family members have neighbours on both sides")
    };
    let Some(tail) = part.tail_at(i, side) else {
        // ambient endpoint approached from outside
        return ClosedSet1D::empty();
    };
    let mut out = ClosedSet1D::empty();
    for e in &tail.entries {
        let (u, v) = &f.family_values()[e.family];
        let rule = &f.family_gaps()[e.family];
        out = out
            .union(&ClosedSet1D::interval(part.ref_limit(u), part.ref_limit(v)))
            .union(&ClosedSet1D::interval(part.ref_limit(&rule.from), part.ref_limit(&rule.to)));
    }
    out
}

/// Brute-force sample of the one-sided cluster values at `a`, built only
/// from `evaluate`. Abscissae come from a geometric mesh
/// `a ∓ d / 2^k` (k ≤ 200) plus a structural scan of the pieces inside a
/// deep window, and every fiber is sampled at spacing `epsilon / 2`.
pub fn lim_sampling_oracle(
    f: &SetValuedFn,
    a: &Rational,
    side: Side,
    epsilon: &Rational,
) -> Result<Vec<Rational>> {
    let (lo, hi) = f.domain();
    if a < lo || a > hi {
        return Err(Error::OutOfDomain(a.to_string()));
    }
    if (side == Side::Up && a == lo) || (side == Side::Down && a == hi) {
        return Ok(Vec::new());
    }
    let sign = if side == Side::Up { int(-1) } else { int(1) };
    let room = if side == Side::Up { a - lo } else { hi - a };
    let mut d = q(1, 10).min(room);
    if let Some(iso) = isolation(f, a, side) {
        d = d.min(iso);
    }
    // deep window: d / 2^k0 < epsilon / 2^16
    let two = int(2);
    let target = epsilon / pow(&two, 16);
    let mut k0 = 1i64;
    while &d / pow(&two, k0) >= target {
        k0 += 1;
    }
    let w = &d / pow(&two, k0);

    let mut xs: Vec<Rational> = (k0.max(1)..=200.max(k0))
        .map(|k| a + &sign * &d / pow(&two, k))
        .collect();
    match f {
        SetValuedFn::Finite(g) => structural_finite(g, a, side, &w, &mut xs),
        SetValuedFn::Generated(g) => structural_generated(g, a, side, &w, &mut xs),
    }

    let step = epsilon / &two;
    let mut ys = Vec::new();
    for x in xs {
        for (c0, c1) in f.evaluate(&x)?.components() {
            let mut y = c0.clone();
            while &y < c1 {
                ys.push(y.clone());
                y += &step;
            }
            ys.push(c1.clone());
        }
    }
    ys.sort();
    ys.dedup();
    Ok(ys)
}

/// Distance from `a` to the nearest structural change on the given side.
fn isolation(f: &SetValuedFn, a: &Rational, side: Side) -> Option<Rational> {
    match f {
        SetValuedFn::Finite(g) => g.isolation(a),
        SetValuedFn::Generated(g) => {
            let part = g.partition();
            match part.locate(a).ok()? {
                Location::Gap(gap) => {
                    let (l, r) = (part.value(gap.left), part.value(gap.right));
                    Some(if side == Side::Up { a - l } else { r - a })
                }
                Location::Point(p) => {
                    let n = if side == Side::Up { part.predecessor(p) } else { part.successor(p) };
                    match n {
                        Some(n) => Some((part.value(n) - a).abs()),
                        None => part
                            .explicit()
                            .iter()
                            .filter(|(_, v)| v != a)
                            .map(|(_, v)| (v - a).abs())
                            .min(),
                    }
                }
            }
        }
    }
}

fn fractions(x0: &Rational, x1: &Rational, out: &mut Vec<Rational>) {
    for j in 0..=64 {
        out.push(x0 + (x1 - x0) * q(j, 64));
    }
}

fn structural_finite(g: &FiniteGraph, a: &Rational, side: Side, w: &Rational, xs: &mut Vec<Rational>) {
    let (wl, wr) = match side {
        Side::Up => (a - w, a.clone()),
        Side::Down => (a.clone(), a + w),
    };
    // open window: the fiber at `a` itself is not a cluster value
    let push_overlap = |x0: &Rational, x1: &Rational, xs: &mut Vec<Rational>| {
        let l = x0.max(&wl);
        let r = x1.min(&wr);
        if l < r {
            let mut tmp = Vec::new();
            fractions(l, r, &mut tmp);
            xs.extend(tmp.into_iter().filter(|x| x != a));
        }
    };
    for s in g.segments() {
        push_overlap(&s.start.0, &s.end.0, xs);
    }
    for b in g.boxes() {
        push_overlap(&b.x0, &b.x1, xs);
    }
    for fam in g.families() {
        if fam.limit() != a || fam.from_left() != (side == Side::Up) {
            continue;
        }
        let mut n = fam.first_within(w);
        for _ in 0..8 {
            let s = fam.member(&n);
            push_overlap(&s.start.0, &s.end.0, xs);
            n += 1;
        }
    }
}

fn structural_generated(g: &GeneratedFn, a: &Rational, side: Side, w: &Rational, xs: &mut Vec<Rational>) {
    let part = g.partition();
    let edge = match side {
        Side::Up => a - w,
        Side::Down => a + w,
    };
    let mut cur = match part.locate(&edge).expect("window inside the domain") {
        Location::Point(p) => p,
        Location::Gap(gap) => match side {
            Side::Up => gap.right,
            Side::Down => gap.left,
        },
    };
    let steps = 2 + 4 * part.order().tails.iter().map(|t| t.entries.len()).max().unwrap_or(1);
    let past = |x: &Rational| match side {
        Side::Up => x >= a,
        Side::Down => x <= a,
    };
    let mut prev_x = edge;
    for _ in 0..steps {
        let x = part.value(cur);
        let mut tmp = Vec::new();
        if past(&x) {
            fractions(&prev_x, a, &mut tmp);
            xs.extend(tmp.into_iter().filter(|t| t != a));
            break;
        }
        fractions(&prev_x, &x, &mut tmp);
        xs.extend(tmp);
        prev_x = x;
        match side {
            Side::Up => cur = part.successor(cur).expect("a lies to the right"),
            Side::Down => cur = part.predecessor(cur).expect("a lies to the left"),
        }
    }
}
