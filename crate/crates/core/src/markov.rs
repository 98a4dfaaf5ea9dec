//! Decides whether a generated function is countably Markov with respect to
//! its partition: upper semicontinuity plus the four conditions on values,
//! gap pieces and one-sided limits.

use std::cmp::Ordering;
use std::fmt;

use crate::function::{ClosedGraphViolation, GeneratedFn, SetValuedFn};
use crate::limits::generated_limit_at;
use crate::partition::{MarkovPartition, Membership, Point, PointRef};
use crate::scalar::{sign_profile, Rational, Side};
use crate::set::ClosedSet1D;

/// Concrete verification depth used when none is given.
pub const DEFAULT_DEPTH: i64 = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkovWitness {
    /// Condition 1: a value endpoint is not a point of `A`.
    ValueNotInA { point: String, endpoint: Rational },
    /// Condition 1: `u > v`.
    ReversedValue { point: String, u: Rational, v: Rational },
    /// Condition 2: a gap is mapped onto a single point.
    ConstantGap { left: String, image: Rational },
    /// Condition 3: a limit at an isolated point of `A` leaves `A`.
    LimitNotInA { point: String, side: Side, limit: ClosedSet1D },
    /// Condition 4: an extreme of a limit at an accumulation point leaves `A`.
    LimitExtremeNotInA { point: String, side: Side, value: Rational },
}

impl fmt::Display for MarkovWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkovWitness::ValueNotInA { point, endpoint } => {
                write!(f, "value endpoint {endpoint} at {point} is not in A")
            }
            MarkovWitness::ReversedValue { point, u, v } => {
                write!(f, "value at {point} has u = {u} > v = {v}")
            }
            MarkovWitness::ConstantGap { left, image } => {
                write!(f, "gap right of {left} collapses onto {image}")
            }
            MarkovWitness::LimitNotInA { point, side, limit } => {
                write!(f, "{} limit {limit} at {point} is not contained in A", side.name())
            }
            MarkovWitness::LimitExtremeNotInA { point, side, value } => {
                write!(f, "{} limit at {point} has extreme {value} outside A", side.name())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionResult {
    pub condition: u8,
    pub witness: Option<MarkovWitness>,
}

impl ConditionResult {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovReport {
    pub usc: Option<ClosedGraphViolation>,
    pub conditions: Vec<ConditionResult>,
    pub derived_set: Vec<Rational>,
}

impl MarkovReport {
    pub fn passed(&self) -> bool {
        self.usc.is_none() && self.conditions.iter().all(ConditionResult::passed)
    }
}

pub fn is_point_of(p: &MarkovPartition, v: &Rational) -> Membership {
    p.is_point_of(v)
}

pub fn verify_cmif(f: &GeneratedFn) -> MarkovReport {
    verify_cmif_to_depth(f, DEFAULT_DEPTH)
}

pub fn verify_cmif_to_depth(f: &GeneratedFn, depth: i64) -> MarkovReport {
    let part = f.partition();
    let usc = SetValuedFn::Generated(f.clone())
        .closed_graph_check(depth)
        .expect("generated functions evaluate without search");
    let conditions = vec![
        ConditionResult { condition: 1, witness: condition1(f) },
        ConditionResult { condition: 2, witness: condition2(f) },
        ConditionResult { condition: 3, witness: condition3(f) },
        ConditionResult { condition: 4, witness: condition4(f) },
    ];
    let derived_set = part.derived_set().into_iter().map(|i| part.explicit()[i].1.clone()).collect();
    MarkovReport { usc, conditions, derived_set }
}

/// A literal that is not a point of `A`; names of points always are.
fn outside_a(part: &MarkovPartition, r: &PointRef) -> Option<Rational> {
    match r {
        PointRef::Value(v) if part.is_point_of(v) == Membership::NotInA => Some(v.clone()),
        _ => None,
    }
}

fn condition1(f: &GeneratedFn) -> Option<MarkovWitness> {
    let part = f.partition();
    for i in 0..part.explicit().len() {
        let p = Point::Explicit(i);
        let (ur, vr) = f.value_refs(p);
        for r in [&ur, &vr] {
            if let Some(endpoint) = outside_a(part, r) {
                return Some(MarkovWitness::ValueNotInA { point: part.display_point(p), endpoint });
            }
        }
        let (u, v) = f.value_at(p);
        if u > v {
            return Some(MarkovWitness::ReversedValue { point: part.display_point(p), u, v });
        }
    }
    for fam in 0..part.families().len() {
        let n0 = part.family(fam).n0;
        let (ur, vr) = &f.family_values()[fam];
        for r in [ur, vr] {
            if let Some(endpoint) = outside_a(part, r) {
                let point = part.display_point(Point::Member(fam, n0));
                return Some(MarkovWitness::ValueNotInA { point, endpoint });
            }
        }
        let (u, v) = f.family_value_terms(fam);
        if let Some(n) = sign_profile(&u, &v, n0).first_failure(|o| o != Ordering::Greater) {
            let p = Point::Member(fam, n);
            let (u, v) = f.value_at(p);
            return Some(MarkovWitness::ReversedValue { point: part.display_point(p), u, v });
        }
    }
    None
}

fn condition2(f: &GeneratedFn) -> Option<MarkovWitness> {
    let part = f.partition();
    for (&i, rule) in f.explicit_gaps() {
        let a = part.resolve(&rule.from, None).expect("validated reference");
        let b = part.resolve(&rule.to, None).expect("validated reference");
        if a == b {
            let left = part.display_point(Point::Explicit(i));
            return Some(MarkovWitness::ConstantGap { left, image: a });
        }
    }
    for fam in 0..part.families().len() {
        let n0 = part.family(fam).n0;
        let (from, to) = f.family_gap_terms(fam);
        if let Some(n) = sign_profile(&from, &to, n0).first_failure(|o| o != Ordering::Equal) {
            let left = part.display_point(Point::Member(fam, n));
            return Some(MarkovWitness::ConstantGap { left, image: from.at(n) });
        }
    }
    None
}

fn condition3(f: &GeneratedFn) -> Option<MarkovWitness> {
    let part = f.partition();
    let derived = part.derived_set();
    let singleton = |r: &PointRef| ClosedSet1D::point(part.resolve(r, None).expect("validated reference"));
    for (&i, rule) in f.explicit_gaps() {
        let left = Point::Explicit(i);
        if !derived.contains(&i)
            && outside_a(part, &rule.from).is_some() {
                let limit = singleton(&rule.from);
                return Some(MarkovWitness::LimitNotInA { point: part.display_point(left), side: Side::Down, limit });
            }
        let right = part.successor(left).expect("gap rules sit left of a gap");
        if !matches!(right, Point::Explicit(j) if derived.contains(&j))
            && outside_a(part, &rule.to).is_some() {
                let limit = singleton(&rule.to);
                return Some(MarkovWitness::LimitNotInA { point: part.display_point(right), side: Side::Up, limit });
            }
    }
    for fam in 0..part.families().len() {
        let left = Point::Member(fam, part.family(fam).n0);
        let rule = &f.family_gaps()[fam];
        if outside_a(part, &rule.from).is_some() {
            let limit = singleton(&rule.from);
            return Some(MarkovWitness::LimitNotInA { point: part.display_point(left), side: Side::Down, limit });
        }
        let right = part.successor(left).expect("members have successors");
        if outside_a(part, &rule.to).is_some() && !matches!(right, Point::Explicit(j) if derived.contains(&j)) {
            let limit = singleton(&rule.to);
            return Some(MarkovWitness::LimitNotInA { point: part.display_point(right), side: Side::Up, limit });
        }
    }
    None
}

fn condition4(f: &GeneratedFn) -> Option<MarkovWitness> {
    let part = f.partition();
    for i in part.derived_set() {
        let p = Point::Explicit(i);
        for side in [Side::Up, Side::Down] {
            let limit = generated_limit_at(f, p, side);
            for value in [limit.min(), limit.max()].into_iter().flatten() {
                if part.is_point_of(value) == Membership::NotInA {
                    return Some(MarkovWitness::LimitExtremeNotInA {
                        point: part.display_point(p),
                        side,
                        value: value.clone(),
                    });
                }
            }
        }
    }
    None
}
