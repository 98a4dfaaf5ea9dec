//! Set-valued functions `f: [x, y] → 2^[x', y']`, identified with their graphs.

mod finite_graph;
mod generated;

use std::cmp::Ordering;

pub use finite_graph::{FiniteGraph, GraphBox, Segment, SegmentFamily, SeqCoord};
pub use generated::{GapRule, GeneratedFn};

use crate::error::Result;
use crate::limits::{generated_limit_at, one_sided_limit};
use crate::partition::Point;
use crate::scalar::{first_joint_failure, sign_profile, Rational, Side};
use crate::set::{ClosedSet1D, Piece};

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum SetValuedFn {
    Finite(FiniteGraph),
    Generated(GeneratedFn),
}

/// A cluster point of the graph at `x` that is missing from the fiber.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosedGraphViolation {
    pub x: Rational,
    pub side: Side,
    pub limit: ClosedSet1D,
    pub value: ClosedSet1D,
    /// A point `(x, y)` of the closure that is not in the graph.
    pub witness: (Rational, Rational),
}

impl SetValuedFn {
    pub fn domain(&self) -> (&Rational, &Rational) {
        match self {
            SetValuedFn::Finite(g) => g.domain(),
            SetValuedFn::Generated(g) => (g.partition().lower(), g.partition().upper()),
        }
    }

    pub fn codomain(&self) -> (&Rational, &Rational) {
        match self {
            SetValuedFn::Finite(g) => g.codomain(),
            SetValuedFn::Generated(g) => (g.partition().lower(), g.partition().upper()),
        }
    }

    /// The fiber `{s : (t, s) ∈ Γ(f)}`.
    pub fn evaluate(&self, t: &Rational) -> Result<ClosedSet1D> {
        match self {
            SetValuedFn::Finite(g) => g.evaluate(t),
            SetValuedFn::Generated(g) => g.evaluate(t),
        }
    }

    pub fn as_generated(&self) -> Option<&GeneratedFn> {
        match self {
            SetValuedFn::Generated(g) => Some(g),
            SetValuedFn::Finite(_) => None,
        }
    }

    /// Decides whether the graph is closed, i.e. whether both one-sided
    /// limits at every abscissa lie in the fiber there. Family rules of a
    /// generated function are checked for every index symbolically and the
    /// first `depth` members concretely.
    pub fn closed_graph_check(&self, depth: i64) -> Result<Option<ClosedGraphViolation>> {
        match self {
            SetValuedFn::Finite(g) => {
                for x in g.critical_points() {
                    let value = g.evaluate(&x)?;
                    for side in [Side::Up, Side::Down] {
                        let limit = one_sided_limit(self, &x, side)?;
                        if let Some(v) = violation(&x, side, limit, &value) {
                            return Ok(Some(v));
                        }
                    }
                }
                Ok(None)
            }
            SetValuedFn::Generated(g) => Ok(generated_closed_graph(g, depth)),
        }
    }

    /// `None` when every point of the codomain is a value; otherwise the
    /// first uncovered piece. Uses the projection of the closure of the graph.
    pub fn surjective_graph_check(&self) -> Option<Piece> {
        let (lo, hi) = self.codomain();
        match self {
            SetValuedFn::Finite(g) => {
                let mut cover = ClosedSet1D::empty();
                for s in g.segments() {
                    cover = cover.union(&ClosedSet1D::interval(s.start.1.clone(), s.end.1.clone()));
                }
                for b in g.boxes() {
                    cover = cover.union(&ClosedSet1D::interval(b.y0.clone(), b.y1.clone()));
                }
                for f in g.families() {
                    cover = cover.union(&f.limit_range());
                }
                cover.complement_in(lo, hi).into_iter().next()
            }
            SetValuedFn::Generated(g) => {
                let part = g.partition();
                let mut depth = 16;
                loop {
                    let mut cover = ClosedSet1D::empty();
                    for p in part.points_to_depth(depth) {
                        let (u, v) = g.value_at(p);
                        cover = cover.union(&ClosedSet1D::interval(u, v));
                    }
                    for gap in part.gaps_to_depth(depth) {
                        let (a, b) = g.gap_image(&gap);
                        cover = cover.union(&ClosedSet1D::interval(a, b));
                    }
                    for &i in &part.derived_set() {
                        for side in [Side::Up, Side::Down] {
                            cover = cover.union(&generated_limit_at(g, Point::Explicit(i), side));
                        }
                    }
                    let first = cover.complement_in(lo, hi).into_iter().next();
                    if first.is_none() || part.is_finite() || depth >= 1024 {
                        return first;
                    }
                    depth *= 2;
                }
            }
        }
    }
}

fn violation(
    x: &Rational,
    side: Side,
    limit: ClosedSet1D,
    value: &ClosedSet1D,
) -> Option<ClosedGraphViolation> {
    if limit.is_subset(value) {
        return None;
    }
    let y = limit
        .components()
        .iter()
        .find_map(|(c0, c1)| {
            let missing = value.complement_in(c0, c1);
            missing.into_iter().next().map(|p| {
                if p.lo_closed {
                    p.lo
                } else if p.hi_closed {
                    p.hi
                } else {
                    (p.lo + p.hi) / Rational::from_integer(2.into())
                }
            })
        })
        .expect("limit is not a subset");
    Some(ClosedGraphViolation {
        x: x.clone(),
        side,
        limit,
        value: value.clone(),
        witness: (x.clone(), y),
    })
}

fn generated_closed_graph(g: &GeneratedFn, depth: i64) -> Option<ClosedGraphViolation> {
    let part = g.partition();
    let mut concrete_depth = depth;
    for f in 0..part.families().len() {
        let (_, start) = part.tail_index_start(f);
        concrete_depth = concrete_depth.max(start);
    }
    let check_point = |p: Point| {
        let (u, v) = g.value_at(p);
        let value = ClosedSet1D::interval(u, v);
        let x = part.value(p);
        [Side::Up, Side::Down]
            .into_iter()
            .find_map(|side| violation(&x, side, generated_limit_at(g, p, side), &value))
    };
    for p in part.points_to_depth(concrete_depth) {
        if let Some(v) = check_point(p) {
            return Some(v);
        }
    }
    // every member from the tail start on, as sequences in the index
    for f in 0..part.families().len() {
        let (_, start) = part.tail_index_start(f);
        let start = start.max(part.family(f).n0);
        let (u, v) = g.family_value_terms(f);
        let (from, _) = g.family_gap_terms(f);
        let (pf, d) = part.symbolic_predecessor(f);
        let to_prev = part.term(&g.family_gaps()[pf].to.shifted(d));
        for x in [from, to_prev] {
            let profiles = [sign_profile(&u, &x, start), sign_profile(&v, &x, start)];
            let inside = |o: &[Ordering]| {
                (o[0] != Ordering::Greater && o[1] != Ordering::Less)
                    || (o[0] != Ordering::Less && o[1] != Ordering::Greater)
            };
            if let Some(n) = first_joint_failure(&profiles, inside) {
                if let Some(v) = check_point(Point::Member(f, n)) {
                    return Some(v);
                }
            }
        }
    }
    None
}

impl GeneratedFn {
    /// The graph restricted to members of index `<= depth`: a vertical
    /// segment at every materialized point and an open-ended segment over
    /// every gap whose left endpoint is materialized.
    pub fn truncate(&self, depth: i64) -> FiniteGraph {
        let part = self.partition();
        let gaps = part.gaps_to_depth(depth);
        let mut points = part.points_to_depth(depth);
        points.extend(gaps.iter().map(|g| g.right));
        points.sort_by_key(|p| part.value(*p));
        points.dedup();
        let mut segments = Vec::new();
        for p in points {
            let x = part.value(p);
            let (u, v) = self.value_at(p);
            segments.push(Segment::closed((x.clone(), u), (x, v)));
        }
        for gap in &gaps {
            let (a, b) = self.gap_image(gap);
            segments.push(Segment {
                start: (part.value(gap.left), a),
                end: (part.value(gap.right), b),
                start_open: true,
                end_open: true,
            });
        }
        let ambient = (part.lower().clone(), part.upper().clone());
        FiniteGraph::new(ambient.clone(), ambient, segments, vec![], vec![])
            .expect("pieces of a generated function stay in the ambient square")
    }
}
