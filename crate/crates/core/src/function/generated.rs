use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::partition::{Gap, Index, Location, MarkovPartition, Point, PointRef};
use crate::scalar::{GeoTerm, Rational};
use crate::set::ClosedSet1D;

/// The affine bijection of a gap `(l, r)` onto the open interval between
/// `from` and `to`, with `l ↦ from` and `r ↦ to`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GapRule {
    pub from: PointRef,
    pub to: PointRef,
}

/// A set-valued function determined by a partition `A`: an interval value
/// `[u, v]` at every point of `A` and an affine rule on every gap.
///
/// Family members share one rule written in the member index `n`
/// (`PointRef::Member(_, Index::Shift(c))` names member `n + c`).
#[derive(Debug, Clone)]
pub struct GeneratedFn {
    partition: Arc<MarkovPartition>,
    explicit_values: Vec<(PointRef, PointRef)>,
    family_values: Vec<(PointRef, PointRef)>,
    explicit_gaps: BTreeMap<usize, GapRule>,
    family_gaps: Vec<GapRule>,
}

impl GeneratedFn {
    /// Checks that every point has a value, every gap has a rule and that
    /// every reference is well formed. Markov conditions are not checked here.
    pub fn new(
        partition: Arc<MarkovPartition>,
        explicit_values: Vec<(PointRef, PointRef)>,
        family_values: Vec<(PointRef, PointRef)>,
        explicit_gaps: BTreeMap<usize, GapRule>,
        family_gaps: Vec<GapRule>,
    ) -> Result<Self> {
        let p = &*partition;
        let bad = |m: String| Err(Error::InvalidFunction(m));
        if explicit_values.len() != p.explicit().len() {
            return bad(format!(
                "{} explicit values for {} explicit points",
                explicit_values.len(),
                p.explicit().len()
            ));
        }
        if family_values.len() != p.families().len() || family_gaps.len() != p.families().len() {
            return bad("every family needs one value rule and one gap rule".into());
        }
        for (i, (name, _)) in p.explicit().iter().enumerate() {
            let has_gap = p.successor(Point::Explicit(i)).is_some();
            match (has_gap, explicit_gaps.contains_key(&i)) {
                (true, false) => return bad(format!("missing gap rule after explicit:{name}")),
                (false, true) => return bad(format!("explicit:{name} has no gap to its right")),
                _ => {}
            }
        }
        if let Some(&i) = explicit_gaps.keys().find(|&&i| i >= p.explicit().len()) {
            return bad(format!("gap rule for unknown explicit point {i}"));
        }
        let concrete = |r: &PointRef| -> Result<()> {
            match r {
                PointRef::Member(_, Index::Shift(_)) => Err(Error::InvalidFunction(format!(
                    "{} uses the family index outside a family rule",
                    p.display_ref(r)
                ))),
                PointRef::Member(f, Index::Fixed(m)) => check_index(p, *f, *m),
                _ => Ok(()),
            }
        };
        for (u, v) in &explicit_values {
            concrete(u)?;
            concrete(v)?;
        }
        for rule in explicit_gaps.values() {
            concrete(&rule.from)?;
            concrete(&rule.to)?;
        }
        for f in 0..p.families().len() {
            let n0 = p.family(f).n0;
            let sym = |r: &PointRef| -> Result<()> {
                match r {
                    PointRef::Member(g, Index::Shift(c)) => check_index(p, *g, n0 + c),
                    other => concrete(other),
                }
            };
            sym(&family_values[f].0)?;
            sym(&family_values[f].1)?;
            sym(&family_gaps[f].from)?;
            sym(&family_gaps[f].to)?;
        }
        Ok(GeneratedFn { partition, explicit_values, family_values, explicit_gaps, family_gaps })
    }

    pub fn partition(&self) -> &MarkovPartition {
        &self.partition
    }

    pub fn partition_arc(&self) -> &Arc<MarkovPartition> {
        &self.partition
    }

    pub fn explicit_values(&self) -> &[(PointRef, PointRef)] {
        &self.explicit_values
    }

    pub fn family_values(&self) -> &[(PointRef, PointRef)] {
        &self.family_values
    }

    pub fn explicit_gaps(&self) -> &BTreeMap<usize, GapRule> {
        &self.explicit_gaps
    }

    pub fn family_gaps(&self) -> &[GapRule] {
        &self.family_gaps
    }

    /// Value references at a point, with any family index substituted.
    pub fn value_refs(&self, p: Point) -> (PointRef, PointRef) {
        match p {
            Point::Explicit(i) => self.explicit_values[i].clone(),
            Point::Member(f, n) => {
                let (u, v) = &self.family_values[f];
                (u.at(n), v.at(n))
            }
        }
    }

    /// The rule of the gap whose left endpoint is `left`, made concrete.
    pub fn gap_rule(&self, left: Point) -> Option<GapRule> {
        match left {
            Point::Explicit(i) => self.explicit_gaps.get(&i).cloned(),
            Point::Member(f, n) => {
                let r = &self.family_gaps[f];
                Some(GapRule { from: r.from.at(n), to: r.to.at(n) })
            }
        }
    }

    fn resolve(&self, r: &PointRef) -> Rational {
        self.partition.resolve(r, None).expect("references validated at construction")
    }

    /// `[u, v]` at a point (endpoints as written; `u > v` is reported by
    /// the Markov checks, the fiber is the spanned interval).
    pub fn value_at(&self, p: Point) -> (Rational, Rational) {
        let (u, v) = self.value_refs(p);
        (self.resolve(&u), self.resolve(&v))
    }

    /// Image endpoints of the gap with left endpoint `gap.left`.
    pub fn gap_image(&self, gap: &Gap) -> (Rational, Rational) {
        let r = self.gap_rule(gap.left).expect("every gap has a rule");
        (self.resolve(&r.from), self.resolve(&r.to))
    }

    /// Value of the affine gap piece at `t` inside `gap`.
    pub fn gap_value(&self, gap: &Gap, t: &Rational) -> Rational {
        let (l, r) = (self.partition.value(gap.left), self.partition.value(gap.right));
        let (a, b) = self.gap_image(gap);
        &a + (&b - &a) * (t - &l) / (r - &l)
    }

    pub fn evaluate(&self, t: &Rational) -> Result<ClosedSet1D> {
        Ok(match self.partition.locate(t)? {
            Location::Point(p) => {
                let (u, v) = self.value_at(p);
                ClosedSet1D::interval(u, v)
            }
            Location::Gap(g) => ClosedSet1D::point(self.gap_value(&g, t)),
        })
    }

    /// Sequences `(u(n), v(n))` of the value rule of a family.
    pub fn family_value_terms(&self, f: usize) -> (GeoTerm, GeoTerm) {
        let (u, v) = &self.family_values[f];
        (self.partition.term(u), self.partition.term(v))
    }

    /// Sequences `(from(n), to(n))` of the gap rule of a family.
    pub fn family_gap_terms(&self, f: usize) -> (GeoTerm, GeoTerm) {
        let r = &self.family_gaps[f];
        (self.partition.term(&r.from), self.partition.term(&r.to))
    }
}

fn check_index(p: &MarkovPartition, f: usize, m: i64) -> Result<()> {
    if f >= p.families().len() {
        return Err(Error::InvalidFunction(format!("unknown family {f}")));
    }
    let n0 = p.family(f).n0;
    if m < n0 {
        return Err(Error::InvalidFunction(format!(
            "{} reaches index {m} below the first index {n0}",
            p.families()[f].0
        )));
    }
    Ok(())
}
