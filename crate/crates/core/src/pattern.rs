//! Same-pattern maps: increasing bijections `τ: A → B` given by a finite
//! table plus, for every family of `A`, a target family and an index shift.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::GeneratedFn;
use crate::limits::generated_limit_at;
use crate::partition::{Index, MarkovPartition, Membership, Point, PointRef};
use crate::scalar::{sign_profile, Rational, Side};
use crate::set::ClosedSet1D;

/// Default bound on `|c|` for index shifts in [`find_pattern_map`].
pub const DEFAULT_SHIFT_BOUND: i64 = 8;

/// Concrete depth used on top of the structural minimum when checking maps.
const BASE_DEPTH: i64 = 8;

#[derive(Debug, Clone)]
pub struct PatternMap {
    source: Arc<MarkovPartition>,
    target: Arc<MarkovPartition>,
    explicit_map: BTreeMap<Point, Point>,
    family_map: Vec<(usize, i64)>,
    depth: i64,
}

impl PartialEq for PatternMap {
    fn eq(&self, other: &Self) -> bool {
        self.explicit_map == other.explicit_map && self.family_map == other.family_map
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternViolation {
    /// Source point at which a condition fails.
    pub point: String,
    /// 1: values, 2: limits from the left, 3: limits from the right.
    pub condition: u8,
    pub detail: String,
}

impl fmt::Display for PatternViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition {} fails at {}: {}", self.condition, self.point, self.detail)
    }
}

fn invalid(m: impl Into<String>) -> Error {
    Error::InvalidPattern(m.into())
}

impl PatternMap {
    /// Builds and validates a map: `explicit_map` must name every explicit
    /// point of the source and every member whose shifted index falls below
    /// the target family's first index.
    pub fn new(
        source: Arc<MarkovPartition>,
        target: Arc<MarkovPartition>,
        explicit_map: BTreeMap<Point, Point>,
        family_map: Vec<(usize, i64)>,
    ) -> Result<Self> {
        let (s, t) = (&*source, &*target);
        if family_map.len() != s.families().len() || s.families().len() != t.families().len() {
            return Err(invalid("families must correspond one to one"));
        }
        let mut seen = HashSet::new();
        for &(g, _) in &family_map {
            if g >= t.families().len() || !seen.insert(g) {
                return Err(invalid("family map is not a bijection"));
            }
        }
        let valid = |p: &MarkovPartition, pt: Point| match pt {
            Point::Explicit(i) => i < p.explicit().len(),
            Point::Member(f, n) => f < p.families().len() && n >= p.family(f).n0,
        };
        let mut targets = HashSet::new();
        for (&a, &b) in &explicit_map {
            if !valid(s, a) || !valid(t, b) {
                return Err(invalid("table names a point outside the partitions"));
            }
            if !targets.insert(b) {
                return Err(invalid(format!("{} is hit twice", t.display_point(b))));
            }
        }
        for i in 0..s.explicit().len() {
            if !explicit_map.contains_key(&Point::Explicit(i)) {
                return Err(Error::UnmappedPoint(s.display_point(Point::Explicit(i))));
            }
        }
        for (f, &(g, c)) in family_map.iter().enumerate() {
            for n in s.family(f).n0..t.family(g).n0 - c {
                if !explicit_map.contains_key(&Point::Member(f, n)) {
                    return Err(Error::UnmappedPoint(s.display_point(Point::Member(f, n))));
                }
            }
        }
        let mut tau = PatternMap { source, target, explicit_map, family_map, depth: 0 };
        tau.depth = tau.working_depth(&[]);
        tau.check_order()?;
        Ok(tau)
    }

    pub fn identity(p: Arc<MarkovPartition>) -> Self {
        let explicit_map = (0..p.explicit().len()).map(|i| (Point::Explicit(i), Point::Explicit(i))).collect();
        let family_map = (0..p.families().len()).map(|f| (f, 0)).collect();
        PatternMap::new(p.clone(), p, explicit_map, family_map).expect("identity is an order isomorphism")
    }

    pub fn source(&self) -> &MarkovPartition {
        &self.source
    }

    pub fn target(&self) -> &MarkovPartition {
        &self.target
    }

    pub fn source_arc(&self) -> &Arc<MarkovPartition> {
        &self.source
    }

    pub fn target_arc(&self) -> &Arc<MarkovPartition> {
        &self.target
    }

    pub fn explicit_map(&self) -> &BTreeMap<Point, Point> {
        &self.explicit_map
    }

    pub fn family_map(&self) -> &[(usize, i64)] {
        &self.family_map
    }

    /// `τ` on a point of `A`.
    pub fn map_point(&self, p: Point) -> Point {
        if let Some(&q) = self.explicit_map.get(&p) {
            return q;
        }
        match p {
            Point::Member(f, n) => {
                let (g, c) = self.family_map[f];
                Point::Member(g, n + c)
            }
            Point::Explicit(_) => unreachable!("explicit points are tabulated"),
        }
    }

    /// `τ` on a coordinate of `A`.
    pub fn map_value(&self, v: &Rational) -> Result<Rational> {
        let p = point_of(&self.source, v).ok_or_else(|| Error::UnmappedPoint(v.to_string()))?;
        Ok(self.target.value(self.map_point(p)))
    }

    pub fn inverse(&self) -> PatternMap {
        let explicit_map = self.explicit_map.iter().map(|(&a, &b)| (b, a)).collect::<BTreeMap<_, _>>();
        let mut family_map = vec![(0, 0); self.family_map.len()];
        for (f, &(g, c)) in self.family_map.iter().enumerate() {
            family_map[g] = (f, -c);
        }
        let mut inv = PatternMap {
            source: self.target.clone(),
            target: self.source.clone(),
            explicit_map,
            family_map,
            depth: 0,
        };
        inv.depth = inv.working_depth(&[]);
        inv
    }

    /// Applies `τ` to a reference. Symbolic members map to symbolic members
    /// of the target family (valid beyond the table).
    pub fn tau_apply(&self, r: &PointRef) -> Result<PointRef> {
        match r {
            PointRef::Member(f, Index::Shift(k)) => {
                let (g, c) = self.family_map[*f];
                Ok(PointRef::Member(g, Index::Shift(k + c)))
            }
            PointRef::Value(v) => {
                let p = point_of(&self.source, v).ok_or_else(|| Error::UnmappedPoint(v.to_string()))?;
                Ok(self.map_point(p).into())
            }
            other => {
                let p = self.source.point_of_ref(other, None).expect("concrete reference");
                Ok(self.map_point(p).into())
            }
        }
    }

    /// Largest member index in the table.
    fn table_reach(&self) -> i64 {
        self.explicit_map
            .iter()
            .flat_map(|(a, b)| [*a, *b])
            .filter_map(|p| match p {
                Point::Member(_, n) => Some(n),
                Point::Explicit(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Concrete depth beyond which every structural rule is uniform.
    fn working_depth(&self, rule_shifts: &[i64]) -> i64 {
        let max_c = self.family_map.iter().map(|&(_, c)| c.abs()).max().unwrap_or(0);
        let max_k = rule_shifts.iter().map(|k| k.abs()).max().unwrap_or(0);
        let mut d = BASE_DEPTH.max(self.table_reach() + max_c + max_k + 1);
        for p in [&self.source, &self.target] {
            for f in 0..p.families().len() {
                d = d.max(p.tail_index_start(f).1 + max_c + max_k + 1);
                d = d.max(p.family(f).n0 + max_c + max_k + 1);
            }
        }
        d + 1
    }

    /// Successor preservation on the concrete prefix and on the tail
    /// templates, surjectivity and the endpoints.
    fn check_order(&self) -> Result<()> {
        let (s, t) = (&*self.source, &*self.target);
        let d = self.depth;
        let max_c = self.family_map.iter().map(|&(_, c)| c.abs()).max().unwrap_or(0);
        let points = s.points_to_depth(d);
        let mut images = HashSet::new();
        for &p in &points {
            let q = self.map_point(p);
            if let Point::Member(g, m) = q {
                if m < t.family(g).n0 {
                    return Err(invalid(format!("{} maps below the first index", s.display_point(p))));
                }
            }
            if !images.insert(q) {
                return Err(invalid(format!("{} is hit twice", t.display_point(q))));
            }
        }
        for q in t.points_to_depth(d - max_c) {
            if !images.contains(&q) {
                return Err(invalid(format!("{} is not hit", t.display_point(q))));
            }
        }
        for &p in &points {
            let q = self.map_point(p);
            let within = |x: Point| matches!(x, Point::Explicit(_)) || matches!(x, Point::Member(_, n) if n <= d);
            match s.successor(p) {
                Some(sp) if within(sp) => {
                    if t.successor(q) != Some(self.map_point(sp)) {
                        return Err(invalid(format!("order is not preserved after {}", s.display_point(p))));
                    }
                }
                Some(_) => {}
                None => {
                    if t.successor(q).is_some() {
                        return Err(invalid(format!("{} has a successor only in the target", s.display_point(p))));
                    }
                }
            }
            if s.predecessor(p).is_none() != t.predecessor(q).is_none() {
                return Err(invalid(format!("{} and its image differ in having a predecessor", s.display_point(p))));
            }
        }
        let lo = s.explicit_at(s.lower()).map(Point::Explicit).expect("endpoint");
        let hi = s.explicit_at(s.upper()).map(Point::Explicit).expect("endpoint");
        if t.value(self.map_point(lo)) != *t.lower() || t.value(self.map_point(hi)) != *t.upper() {
            return Err(invalid("ambient endpoints are not preserved"));
        }
        // template successors: member n of f is followed by member n + d of f'
        for (f, &(g, c)) in self.family_map.iter().enumerate() {
            let (f2, dn) = s.symbolic_successor(f);
            let (g2, dm) = t.symbolic_successor(g);
            let (g_of_f2, c2) = self.family_map[f2];
            if g2 != g_of_f2 || c + dm != dn + c2 {
                return Err(invalid(format!(
                    "tail order of {} is not preserved",
                    s.display_ref(&PointRef::Member(f, Index::Shift(0)))
                )));
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> PatternFile {
        let (s, t) = (&*self.source, &*self.target);
        PatternFile {
            version: 1,
            points: self
                .explicit_map
                .iter()
                .map(|(&a, &b)| (s.display_point(a), t.display_point(b)))
                .collect(),
            families: self
                .family_map
                .iter()
                .enumerate()
                .map(|(f, &(g, c))| {
                    (s.families()[f].0.clone(), FamilyImage { target: t.families()[g].0.clone(), shift: c })
                })
                .collect(),
        }
    }

    pub fn from_file(
        file: &PatternFile,
        source: Arc<MarkovPartition>,
        target: Arc<MarkovPartition>,
    ) -> Result<Self> {
        if file.version != 1 {
            return Err(Error::doc("version", format!("unsupported version {}", file.version)));
        }
        let concrete = |p: &MarkovPartition, s: &str, ctx: &str| -> Result<Point> {
            match p.parse_ref(s) {
                Ok(r) if !r.is_symbolic() && !matches!(r, PointRef::Value(_)) => {
                    Ok(p.point_of_ref(&r, None).expect("concrete"))
                }
                _ => Err(Error::doc(ctx, format!("`{s}` does not name a point"))),
            }
        };
        let mut explicit_map = BTreeMap::new();
        for (a, b) in &file.points {
            let ctx = format!("points.{a}");
            explicit_map.insert(concrete(&source, a, &ctx)?, concrete(&target, b, &ctx)?);
        }
        let mut family_map = vec![None; source.families().len()];
        for (name, img) in &file.families {
            let ctx = format!("families.{name}");
            let f = source.family_id(name).ok_or_else(|| Error::doc(&ctx, "unknown source family"))?;
            let g = target
                .family_id(&img.target)
                .ok_or_else(|| Error::doc(&ctx, format!("unknown target family `{}`", img.target)))?;
            family_map[f] = Some((g, img.shift));
        }
        let family_map = family_map
            .into_iter()
            .enumerate()
            .map(|(f, m)| m.ok_or_else(|| Error::doc("families", format!("no image for `{}`", source.families()[f].0))))
            .collect::<Result<Vec<_>>>()?;
        PatternMap::new(source, target, explicit_map, family_map)
    }
}

impl fmt::Display for PatternMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let file = self.to_file();
        let mut parts: Vec<String> = file.points.iter().map(|(a, b)| format!("{a} -> {b}")).collect();
        for (name, img) in &file.families {
            let shift = match img.shift {
                0 => "n".to_string(),
                c if c > 0 => format!("n+{c}"),
                c => format!("n-{}", -c),
            };
            parts.push(format!("family:{name}[n] -> family:{}[{shift}]", img.target));
        }
        write!(f, "{}", parts.join(", "))
    }
}

/// Serialized form of a [`PatternMap`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternFile {
    pub version: u32,
    pub points: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub families: BTreeMap<String, FamilyImage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyImage {
    pub target: String,
    pub shift: i64,
}

pub fn parse_pattern_map(text: &str) -> Result<PatternFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn serialize_pattern_map(file: &PatternFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("pattern files serialize");
    s.push('\n');
    s
}

fn point_of(p: &MarkovPartition, v: &Rational) -> Option<Point> {
    match p.is_point_of(v) {
        Membership::Explicit(i) => Some(Point::Explicit(i)),
        Membership::Member(f, n) => Some(Point::Member(f, n)),
        Membership::NotInA => None,
    }
}

pub fn tau_apply(tau: &PatternMap, p: &PointRef) -> Result<PointRef> {
    tau.tau_apply(p)
}

fn rule_shifts(f: &GeneratedFn) -> Vec<i64> {
    let mut out = Vec::new();
    let refs = f
        .family_values()
        .iter()
        .flat_map(|(u, v)| [u, v])
        .chain(f.family_gaps().iter().flat_map(|r| [&r.from, &r.to]));
    for r in refs {
        if let PointRef::Member(_, Index::Shift(k)) = r {
            out.push(*k);
        }
    }
    out
}

/// Checks the three conditions of the same-pattern relation for every point
/// of `A`: prefix points concretely, family members beyond it symbolically.
pub fn check_same_pattern(f: &GeneratedFn, g: &GeneratedFn, tau: &PatternMap) -> Option<PatternViolation> {
    let (s, t) = (f.partition(), g.partition());
    let mut shifts = rule_shifts(f);
    shifts.extend(rule_shifts(g));
    let depth = tau.working_depth(&shifts);
    let fail = |p: Point, condition: u8, detail: String| PatternViolation {
        point: s.display_point(p),
        condition,
        detail,
    };
    let map_set = |set: &ClosedSet1D| -> std::result::Result<ClosedSet1D, Rational> {
        let mut parts = Vec::new();
        for (a, b) in set.components() {
            let ta = tau.map_value(a).map_err(|_| a.clone())?;
            let tb = tau.map_value(b).map_err(|_| b.clone())?;
            parts.push((ta, tb));
        }
        Ok(ClosedSet1D::from_parts(parts))
    };

    for p in s.points_to_depth(depth) {
        let tp = tau.map_point(p);
        let (u, v) = f.value_at(p);
        let (gu, gv) = g.value_at(tp);
        match (tau.map_value(&u), tau.map_value(&v)) {
            (Ok(tu), Ok(tv)) if tu == gu && tv == gv => {}
            (Ok(tu), Ok(tv)) => {
                return Some(fail(p, 1, format!("g(τ(a)) = [{gu}, {gv}] but [τ(u), τ(v)] = [{tu}, {tv}]")));
            }
            _ => return Some(fail(p, 1, format!("value [{u}, {v}] has an endpoint outside A"))),
        }
        for (side, cond) in [(Side::Up, 2u8), (Side::Down, 3u8)] {
            let lf = generated_limit_at(f, p, side);
            let lg = generated_limit_at(g, tp, side);
            match map_set(&lf) {
                Ok(m) if m == lg => {}
                Ok(m) => {
                    return Some(fail(p, cond, format!("limit of g at τ(a) is {lg} but τ maps the limit of f to {m}")));
                }
                Err(x) => return Some(fail(p, cond, format!("limit endpoint {x} is outside A"))),
            }
        }
    }

    // members beyond the concrete depth, as sequences in the member index
    for (fam, &(gfam, c)) in tau.family_map().iter().enumerate() {
        let start = depth + 1;
        let (fu, fv) = &f.family_values()[fam];
        let (gu, gv) = &g.family_values()[gfam];
        let fr = &f.family_gaps()[fam];
        let gr = &g.family_gaps()[gfam];
        let pairs = [(fu, gu, 1u8), (fv, gv, 1), (&fr.from, &gr.from, 3), (&fr.to, &gr.to, 2)];
        for (fr, gr, cond) in pairs {
            let Ok(mapped) = tau.tau_apply(fr) else {
                return Some(fail(Point::Member(fam, start), cond, format!("{} is outside A", s.display_ref(fr))));
            };
            let lhs = t.term(&mapped);
            let rhs = t.term(&gr.shifted(c));
            if let Some(n) = sign_profile(&lhs, &rhs, start).first_failure(|o| o.is_eq()) {
                return Some(fail(
                    Point::Member(fam, n),
                    cond,
                    format!("{} and {} disagree", t.display_ref(&mapped.at(n)), t.display_ref(&gr.shifted(c).at(n))),
                ));
            }
        }
    }
    None
}

/// Searches the structured class: target families matched by a permutation,
/// index shifts with `|c| <= shift_bound`, remaining points matched in
/// increasing order. Candidates are ordered by total `|c|`, then by
/// permutation and shift vector lexicographically.
pub fn find_pattern_map(f: &GeneratedFn, g: &GeneratedFn, shift_bound: i64) -> Option<PatternMap> {
    let (s, t) = (f.partition_arc(), g.partition_arc());
    let nf = s.families().len();
    if nf != t.families().len() {
        return None;
    }
    let mut shifts: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..nf {
        shifts = shifts
            .into_iter()
            .flat_map(|v| {
                (-shift_bound..=shift_bound).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    let perms = permutations(nf);
    let mut by_total: BTreeMap<i64, Vec<&Vec<i64>>> = BTreeMap::new();
    for v in &shifts {
        by_total.entry(v.iter().map(|c| c.abs()).sum()).or_default().push(v);
    }
    for vs in by_total.values() {
        for perm in &perms {
            // a family can only follow a family with the same side and the
            // matching accumulation structure
            if (0..nf).any(|i| s.family(i).side() != t.family(perm[i]).side()) {
                continue;
            }
            for v in vs {
                let family_map: Vec<(usize, i64)> = (0..nf).map(|i| (perm[i], v[i])).collect();
                let Some(explicit_map) = forced_table(s, t, &family_map) else { continue };
                let Ok(tau) = PatternMap::new(s.clone(), t.clone(), explicit_map, family_map) else { continue };
                if check_same_pattern(f, g, &tau).is_none() {
                    return Some(tau);
                }
            }
        }
    }
    None
}

/// Points outside the family images, matched in increasing order.
fn forced_table(
    s: &MarkovPartition,
    t: &MarkovPartition,
    family_map: &[(usize, i64)],
) -> Option<BTreeMap<Point, Point>> {
    let mut src: Vec<Point> = (0..s.explicit().len()).map(Point::Explicit).collect();
    let mut hit_targets = Vec::new();
    for (f, &(g, c)) in family_map.iter().enumerate() {
        let n0 = s.family(f).n0;
        let first = t.family(g).n0;
        for n in n0..first - c {
            src.push(Point::Member(f, n));
        }
        // members of g not reached by the shifted family
        for m in first..n0 + c {
            hit_targets.push(Point::Member(g, m));
        }
    }
    let mut dst: Vec<Point> = (0..t.explicit().len()).map(Point::Explicit).collect();
    dst.extend(hit_targets);
    if src.len() != dst.len() {
        return None;
    }
    src.sort_by_key(|p| s.value(*p));
    dst.sort_by_key(|p| t.value(*p));
    Some(src.into_iter().zip(dst).collect())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for i in 0..=rest.len() {
            let mut v = rest.clone();
            v.insert(i, n - 1);
            out.push(v);
        }
    }
    out.sort();
    out
}
