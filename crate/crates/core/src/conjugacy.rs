//! Conjugating homeomorphisms `h_1, ..., h_{m+1}` with
//! `h_i ∘ f_i = g_i ∘ h_{i+1}`, built from a same-pattern map.
//!
//! `h_1` is affine on every gap. The lift `h_{i+1}` is `(g_i|τG)^{-1} ∘ h_i ∘ f_i|G`
//! on a gap `G`; since `f_i(G)` usually covers several gaps, `h_{i+1}` is
//! piecewise affine inside `G` and is kept as an exact composition.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::function::GeneratedFn;
use crate::partition::{Gap, Location, MarkovPartition};
use crate::pattern::{check_same_pattern, PatternMap};
use crate::scalar::{int, Rational};
use crate::set::ClosedSet1D;

/// Gaps up to this member index are checked by [`HomeoChain::verify`].
pub const VERIFY_DEPTH: i64 = 6;

/// Interior sample points per gap, besides knot preimages and midpoints.
const GAP_SAMPLES: i64 = 8;

#[derive(Debug, Clone)]
enum Kind {
    Base,
    Lifted { prev: Arc<PiecewiseHomeo>, f: GeneratedFn, g: GeneratedFn },
    Perturbed { inner: Arc<PiecewiseHomeo>, gap: Gap, delta: Rational },
}

/// A strictly increasing homeomorphism `[x, y] → [x', y']` agreeing with `τ`
/// on the partition.
#[derive(Debug, Clone)]
pub struct PiecewiseHomeo {
    tau: Arc<PatternMap>,
    kind: Kind,
}

fn affine(t: &Rational, (a, b): (&Rational, &Rational), (c, d): (&Rational, &Rational)) -> Rational {
    c + (d - c) * (t - a) / (b - a)
}

impl PiecewiseHomeo {
    pub fn tau(&self) -> &PatternMap {
        &self.tau
    }

    fn source(&self) -> &MarkovPartition {
        self.tau.source()
    }

    fn target(&self) -> &MarkovPartition {
        self.tau.target()
    }

    /// Image of the gap `G` of `A`: the gap `(τ(a), τ(a'))` of `B`.
    fn image_gap(&self, gap: &Gap) -> Gap {
        Gap { left: self.tau.map_point(gap.left), right: self.tau.map_point(gap.right) }
    }

    pub fn eval(&self, t: &Rational) -> Result<Rational> {
        let s = self.source();
        if let Kind::Perturbed { inner, gap, delta } = &self.kind {
            return match s.locate(t)? {
                Location::Gap(g) if g == *gap => inner.eval(&perturb(s, gap, delta, t)),
                _ => inner.eval(t),
            };
        }
        let gap = match s.locate(t)? {
            Location::Point(p) => return Ok(self.target().value(self.tau.map_point(p))),
            Location::Gap(g) => g,
        };
        let img = self.image_gap(&gap);
        let (l, r) = (s.value(gap.left), s.value(gap.right));
        let (tl, tr) = (self.target().value(img.left), self.target().value(img.right));
        match &self.kind {
            Kind::Base => Ok(affine(t, (&l, &r), (&tl, &tr))),
            Kind::Lifted { prev, f, g } => {
                let y = prev.eval(&f.gap_value(&gap, t))?;
                let (c0, c1) = g.gap_image(&img);
                let inside = (c0 < y && y < c1) || (c1 < y && y < c0);
                if !inside {
                    return Err(Error::PatternMismatch(format!(
                        "h maps f({t}) = {y} outside the image ({c0}, {c1}) of the gap {}",
                        self.target().display_point(img.left)
                    )));
                }
                Ok(affine(&y, (&c0, &c1), (&tl, &tr)))
            }
            Kind::Perturbed { .. } => unreachable!(),
        }
    }

    /// The same map precomposed, on one gap, with a homeomorphism of the gap
    /// whose slope on the left half is `1 + delta`.
    pub fn perturbed(self: &Arc<Self>, gap: Gap, delta: Rational) -> PiecewiseHomeo {
        PiecewiseHomeo { tau: self.tau.clone(), kind: Kind::Perturbed { inner: self.clone(), gap, delta } }
    }
}

fn perturb(s: &MarkovPartition, gap: &Gap, delta: &Rational, t: &Rational) -> Rational {
    let (l, r) = (s.value(gap.left), s.value(gap.right));
    let two = int(2);
    let m = (&l + &r) / &two;
    let m2 = &l + (&m - &l) * (int(1) + delta);
    if *t <= m {
        affine(t, (&l, &m), (&l, &m2))
    } else {
        affine(t, (&m, &r), (&m2, &r))
    }
}

pub fn build_h1(tau: &Arc<PatternMap>) -> PiecewiseHomeo {
    PiecewiseHomeo { tau: tau.clone(), kind: Kind::Base }
}

fn check_pair(f: &GeneratedFn, g: &GeneratedFn, tau: &PatternMap) -> Result<()> {
    if f.partition() != tau.source() || g.partition() != tau.target() {
        return Err(Error::PatternMismatch("functions do not live on the partitions of τ".into()));
    }
    if let Some(v) = check_same_pattern(f, g, tau) {
        return Err(Error::PatternMismatch(v.to_string()));
    }
    Ok(())
}

pub fn lift_h(h: &Arc<PiecewiseHomeo>, f: &GeneratedFn, g: &GeneratedFn) -> Result<PiecewiseHomeo> {
    check_pair(f, g, &h.tau)?;
    Ok(lift_unchecked(h, f, g))
}

fn lift_unchecked(h: &Arc<PiecewiseHomeo>, f: &GeneratedFn, g: &GeneratedFn) -> PiecewiseHomeo {
    PiecewiseHomeo {
        tau: h.tau.clone(),
        kind: Kind::Lifted { prev: h.clone(), f: f.clone(), g: g.clone() },
    }
}

/// A point where `h_i ∘ f_i` and `g_i ∘ h_{i+1}` differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommutingWitness {
    pub t: Rational,
    pub lhs: ClosedSet1D,
    pub rhs: ClosedSet1D,
}

impl fmt::Display for CommutingWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at t = {}: h_i(f_i(t)) = {} but g_i(h_(i+1)(t)) = {}", self.t, self.lhs, self.rhs)
    }
}

fn image(h: &PiecewiseHomeo, set: &ClosedSet1D) -> Result<ClosedSet1D> {
    let mut parts = Vec::new();
    for (a, b) in set.components() {
        parts.push((h.eval(a)?, h.eval(b)?));
    }
    Ok(ClosedSet1D::from_parts(parts))
}

/// Compares `h_i(f_i(t))` with `g_i(h_{i+1}(t))` exactly at every partition
/// point up to `depth` and, on every gap up to `depth`, at evenly spaced
/// points, at the preimages of partition points and at the midpoints
/// between consecutive samples.
pub fn verify_commuting(
    h: &PiecewiseHomeo,
    f: &GeneratedFn,
    g: &GeneratedFn,
    h_next: &PiecewiseHomeo,
    depth: i64,
) -> Result<Option<CommutingWitness>> {
    let a = f.partition();
    let check = |t: Rational| -> Result<Option<CommutingWitness>> {
        let lhs = image(h, &f.evaluate(&t)?)?;
        let rhs = g.evaluate(&h_next.eval(&t)?)?;
        Ok((lhs != rhs).then_some(CommutingWitness { t, lhs, rhs }))
    };
    for p in a.points_to_depth(depth) {
        if let Some(w) = check(a.value(p))? {
            return Ok(Some(w));
        }
    }
    let knots: Vec<Rational> = a.points_to_depth(depth).into_iter().map(|p| a.value(p)).collect();
    for gap in a.gaps_to_depth(depth) {
        let (l, r) = (a.value(gap.left), a.value(gap.right));
        let (c0, c1) = f.gap_image(&gap);
        let mut ts: Vec<Rational> = (1..GAP_SAMPLES)
            .map(|j| &l + (&r - &l) * int(j) / int(GAP_SAMPLES))
            .collect();
        for k in &knots {
            if (&c0 < k && k < &c1) || (&c1 < k && k < &c0) {
                ts.push(affine(k, (&c0, &c1), (&l, &r)));
            }
        }
        ts.push(l.clone());
        ts.push(r.clone());
        ts.sort();
        ts.dedup();
        let mids: Vec<Rational> =
            ts.windows(2).map(|w| (&w[0] + &w[1]) / int(2)).collect();
        for t in ts.into_iter().chain(mids).filter(|t| t > &l && t < &r) {
            if let Some(w) = check(t)? {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone)]
pub struct HomeoChain {
    maps: Vec<Arc<PiecewiseHomeo>>,
    fs: Vec<GeneratedFn>,
    gs: Vec<GeneratedFn>,
    tau: Arc<PatternMap>,
}

/// A failing square `h_i ∘ f_i = g_i ∘ h_{i+1}` (1-based `i`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SquareFailure {
    pub index: usize,
    pub witness: CommutingWitness,
}

impl fmt::Display for SquareFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "square {}: {}", self.index, self.witness)
    }
}

/// Builds `h_1, ..., h_{m+1}` and verifies every square. A single function
/// in `fs` and `gs` stands for the constant sequence.
pub fn build_chain(fs: &[GeneratedFn], gs: &[GeneratedFn], tau: Arc<PatternMap>, m: usize) -> Result<HomeoChain> {
    let pick = |v: &[GeneratedFn], i: usize| -> Result<GeneratedFn> {
        match v.len() {
            1 => Ok(v[0].clone()),
            n if n >= m => Ok(v[i].clone()),
            n => Err(Error::LengthMismatch { expected: m, found: n }),
        }
    };
    let mut fs_used = Vec::with_capacity(m);
    let mut gs_used = Vec::with_capacity(m);
    for i in 0..m {
        fs_used.push(pick(fs, i)?);
        gs_used.push(pick(gs, i)?);
    }
    let mut checked: Vec<(&GeneratedFn, &GeneratedFn)> = Vec::new();
    for (f, g) in fs_used.iter().zip(&gs_used) {
        let seen = checked.iter().any(|(f0, g0)| {
            f0.partition_arc().as_ref() == f.partition() && same_fn(f0, f) && same_fn(g0, g)
        });
        if !seen {
            check_pair(f, g, &tau)?;
            checked.push((f, g));
        }
    }
    let mut maps = vec![Arc::new(build_h1(&tau))];
    for (f, g) in fs_used.iter().zip(&gs_used) {
        let next = lift_unchecked(maps.last().expect("h_1 exists"), f, g);
        maps.push(Arc::new(next));
    }
    let chain = HomeoChain { maps, fs: fs_used, gs: gs_used, tau };
    if let Some(fail) = chain.verify(VERIFY_DEPTH)? {
        return Err(Error::PatternMismatch(fail.to_string()));
    }
    Ok(chain)
}

fn same_fn(a: &GeneratedFn, b: &GeneratedFn) -> bool {
    a.explicit_values() == b.explicit_values()
        && a.family_values() == b.family_values()
        && a.explicit_gaps() == b.explicit_gaps()
        && a.family_gaps() == b.family_gaps()
}

impl HomeoChain {
    /// Number of maps `h_i`, i.e. `m + 1`.
    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn map(&self, i: usize) -> &PiecewiseHomeo {
        &self.maps[i]
    }

    pub fn tau(&self) -> &Arc<PatternMap> {
        &self.tau
    }

    pub fn sources(&self) -> &[GeneratedFn] {
        &self.fs
    }

    pub fn targets(&self) -> &[GeneratedFn] {
        &self.gs
    }

    pub fn verify(&self, depth: i64) -> Result<Option<SquareFailure>> {
        for i in 0..self.fs.len() {
            if let Some(witness) = verify_commuting(&self.maps[i], &self.fs[i], &self.gs[i], &self.maps[i + 1], depth)? {
                return Ok(Some(SquareFailure { index: i + 1, witness }));
            }
        }
        Ok(None)
    }

    /// The chain with `h_i` (0-based) replaced by its perturbation on `gap`.
    pub fn with_perturbation(&self, i: usize, gap: Gap, delta: Rational) -> HomeoChain {
        let mut out = self.clone();
        out.maps[i] = Arc::new(self.maps[i].perturbed(gap, delta));
        out
    }

    /// The chain for `(gs, fs, τ^{-1})`.
    pub fn inverse(&self) -> Result<HomeoChain> {
        build_chain(&self.gs, &self.fs, Arc::new(self.tau.inverse()), self.fs.len())
    }
}

/// `(h_1(x_1), ..., h_n(x_n))`.
pub fn apply_h(chain: &HomeoChain, x: &[Rational], n: usize) -> Result<Vec<Rational>> {
    if x.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: x.len() });
    }
    if n > chain.len() {
        return Err(Error::LengthMismatch { expected: chain.len(), found: n });
    }
    x.iter().zip(&chain.maps).map(|(t, h)| h.eval(t)).collect()
}

/// Gap of `A` containing `t`, for choosing perturbation targets.
pub fn gap_at(p: &MarkovPartition, t: &Rational) -> Option<Gap> {
    match p.locate(t).ok()? {
        Location::Gap(g) => Some(g),
        Location::Point(_) => None,
    }
}

