use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{pow, Rational};
use crate::set::ClosedSet1D;

/// Widest member window examined when evaluating a segment family.
const MAX_WINDOW: u32 = 4096;

/// A straight segment of the graph. Endpoints are stored with
/// `start.0 <= end.0`; only non-vertical segments may have open ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub start: (Rational, Rational),
    pub end: (Rational, Rational),
    pub start_open: bool,
    pub end_open: bool,
}

impl Segment {
    pub fn closed(start: (Rational, Rational), end: (Rational, Rational)) -> Self {
        Self::new(start, end, false, false)
    }

    /// Segment with the given ends, reordered so that `start.0 <= end.0`.
    pub fn new(start: (Rational, Rational), end: (Rational, Rational), start_open: bool, end_open: bool) -> Self {
        Segment { start, end, start_open, end_open }.normalized()
    }

    fn normalized(mut self) -> Self {
        let swap = self.start.0 > self.end.0
            || (self.start.0 == self.end.0 && self.start.1 > self.end.1);
        if swap {
            std::mem::swap(&mut self.start, &mut self.end);
            std::mem::swap(&mut self.start_open, &mut self.end_open);
        }
        self
    }

    pub fn is_vertical(&self) -> bool {
        self.start.0 == self.end.0
    }

    /// `y` on the supporting line at `x` (non-vertical segments only).
    pub fn y_at(&self, x: &Rational) -> Rational {
        let (x0, y0) = &self.start;
        let (x1, y1) = &self.end;
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn fiber(&self, x: &Rational) -> ClosedSet1D {
        let (x0, x1) = (&self.start.0, &self.end.0);
        if self.is_vertical() {
            return if x == x0 {
                ClosedSet1D::interval(self.start.1.clone(), self.end.1.clone())
            } else {
                ClosedSet1D::empty()
            };
        }
        if x < x0 || x > x1 || (x == x0 && self.start_open) || (x == x1 && self.end_open) {
            return ClosedSet1D::empty();
        }
        ClosedSet1D::point(self.y_at(x))
    }
}

/// A filled axis-aligned box `[x0, x1] × [y0, y1]` whose vertical sides may be
/// left out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphBox {
    pub x0: Rational,
    pub x1: Rational,
    pub y0: Rational,
    pub y1: Rational,
    pub left_open: bool,
    pub right_open: bool,
}

impl GraphBox {
    pub fn fiber(&self, x: &Rational) -> ClosedSet1D {
        let inside = (&self.x0 < x && x < &self.x1)
            || (x == &self.x0 && !self.left_open)
            || (x == &self.x1 && !self.right_open);
        if inside {
            ClosedSet1D::interval(self.y0.clone(), self.y1.clone())
        } else {
            ClosedSet1D::empty()
        }
    }
}

/// An index sequence converging strictly monotonically to `limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeqCoord {
    /// `limit + coeff / (scale * n + offset)`.
    Harmonic { limit: Rational, coeff: Rational, scale: Rational, offset: Rational },
    /// `limit + coeff * ratio^n`.
    Geometric { limit: Rational, coeff: Rational, ratio: Rational },
}

impl SeqCoord {
    pub fn limit(&self) -> &Rational {
        match self {
            SeqCoord::Harmonic { limit, .. } | SeqCoord::Geometric { limit, .. } => limit,
        }
    }

    fn coeff(&self) -> &Rational {
        match self {
            SeqCoord::Harmonic { coeff, .. } | SeqCoord::Geometric { coeff, .. } => coeff,
        }
    }

    pub fn at(&self, n: &BigInt) -> Rational {
        self.limit() + self.signed_dist(n)
    }

    fn signed_dist(&self, n: &BigInt) -> Rational {
        match self {
            SeqCoord::Harmonic { coeff, scale, offset, .. } => {
                coeff / (scale * Rational::from_integer(n.clone()) + offset)
            }
            SeqCoord::Geometric { coeff, ratio, .. } => {
                let e = n.to_i64().expect("geometric index fits in i64");
                coeff * pow(ratio, e)
            }
        }
    }

    fn validate(&self, n0: i64) -> Result<()> {
        if self.coeff().is_zero() {
            return Err(Error::InvalidFunction("segment family coordinate with zero coefficient".into()));
        }
        match self {
            SeqCoord::Harmonic { scale, offset, .. } => {
                if !scale.is_positive() || !(scale * Rational::from_integer(n0.into()) + offset).is_positive() {
                    return Err(Error::InvalidFunction(
                        "harmonic coordinate needs scale > 0 and a positive denominator at n0".into(),
                    ));
                }
            }
            SeqCoord::Geometric { ratio, .. } => {
                if !(ratio.is_positive() && ratio < &Rational::one()) {
                    return Err(Error::InvalidFunction(format!("ratio {ratio} is not in (0, 1)")));
                }
            }
        }
        Ok(())
    }

    /// Largest `n` with `|x(n) - limit| >= d` (`d > 0`).
    fn reach(&self, d: &Rational) -> BigInt {
        match self {
            SeqCoord::Harmonic { coeff, scale, offset, .. } => {
                ((coeff.abs() / d - offset) / scale).floor().to_integer()
            }
            SeqCoord::Geometric { coeff, ratio, .. } => {
                let (mut n, mut v) = (0i64, coeff.abs());
                while &v < d {
                    v /= ratio;
                    n -= 1;
                }
                while &(&v * ratio) >= d {
                    v *= ratio;
                    n += 1;
                }
                n.into()
            }
        }
    }

    /// Smallest `n` with `|x(n) - limit| <= d` (`d > 0`).
    fn enter(&self, d: &Rational) -> BigInt {
        match self {
            SeqCoord::Harmonic { coeff, scale, offset, .. } => {
                ((coeff.abs() / d - offset) / scale).ceil().to_integer()
            }
            SeqCoord::Geometric { .. } => {
                let r = self.reach(d);
                if self.signed_dist(&r).abs() == *d {
                    r
                } else {
                    r + 1
                }
            }
        }
    }
}

/// Infinitely many segments: member `n >= n0` joins `(x[0](n), y[0])` to
/// `(x[1](n), y[1])`. Both abscissae converge to the same point from the
/// same side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentFamily {
    pub n0: i64,
    pub x: [SeqCoord; 2],
    pub y: [Rational; 2],
}

impl SegmentFamily {
    pub fn limit(&self) -> &Rational {
        self.x[0].limit()
    }

    /// `true` when the members lie to the left of the limit.
    pub fn from_left(&self) -> bool {
        self.x[0].coeff().is_negative()
    }

    pub fn member(&self, n: &BigInt) -> Segment {
        Segment::closed(
            (self.x[0].at(n), self.y[0].clone()),
            (self.x[1].at(n), self.y[1].clone()),
        )
    }

    /// The vertical segment the members converge to.
    pub fn limit_range(&self) -> ClosedSet1D {
        ClosedSet1D::interval(self.y[0].clone(), self.y[1].clone())
    }

    /// First index from which every member lies within `d > 0` of the limit.
    pub fn first_within(&self, d: &Rational) -> BigInt {
        self.x[0].enter(d).max(self.x[1].enter(d)).max(BigInt::from(self.n0))
    }

    /// Indices of the members whose x-range contains `t`, ascending.
    pub fn members_spanning(&self, t: &Rational) -> Result<Vec<BigInt>> {
        let a = self.limit();
        let d = if self.from_left() { a - t } else { t - a };
        if !d.is_positive() {
            return Ok(Vec::new());
        }
        let lo = self.x[0].enter(&d).min(self.x[1].enter(&d)).max(BigInt::from(self.n0));
        let hi = self.x[0].reach(&d).max(self.x[1].reach(&d));
        if hi < lo {
            return Ok(Vec::new());
        }
        if &hi - &lo > BigInt::from(MAX_WINDOW) {
            return Err(Error::FiberSearch(t.to_string()));
        }
        let mut out = Vec::new();
        let mut n = lo;
        while n <= hi {
            let s = self.member(&n);
            if &s.start.0 <= t && t <= &s.end.0 {
                out.push(n.clone());
            }
            n += 1;
        }
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        self.x[0].validate(self.n0)?;
        self.x[1].validate(self.n0)?;
        if self.x[0].limit() != self.x[1].limit()
            || self.x[0].coeff().signum() != self.x[1].coeff().signum()
        {
            return Err(Error::InvalidFunction(
                "segment family abscissae must converge to one point from one side".into(),
            ));
        }
        Ok(())
    }
}

/// A graph given by finitely many segments and boxes plus finitely many
/// segment families. Fibers may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGraph {
    domain: (Rational, Rational),
    codomain: (Rational, Rational),
    segments: Vec<Segment>,
    boxes: Vec<GraphBox>,
    families: Vec<SegmentFamily>,
}

impl FiniteGraph {
    pub fn new(
        domain: (Rational, Rational),
        codomain: (Rational, Rational),
        segments: Vec<Segment>,
        boxes: Vec<GraphBox>,
        families: Vec<SegmentFamily>,
    ) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidFunction(m));
        if domain.0 >= domain.1 || codomain.0 >= codomain.1 {
            return bad("empty ambient interval".into());
        }
        let in_x = |x: &Rational| &domain.0 <= x && x <= &domain.1;
        let in_y = |y: &Rational| &codomain.0 <= y && y <= &codomain.1;
        let segments: Vec<Segment> = segments.into_iter().map(Segment::normalized).collect();
        for (i, s) in segments.iter().enumerate() {
            if !(in_x(&s.start.0) && in_x(&s.end.0) && in_y(&s.start.1) && in_y(&s.end.1)) {
                return bad(format!("segment {i} leaves the ambient square"));
            }
            if s.is_vertical() && (s.start_open || s.end_open) {
                return bad(format!("vertical segment {i} cannot have open ends"));
            }
        }
        for (i, b) in boxes.iter().enumerate() {
            if b.x0 >= b.x1 || b.y0 > b.y1 {
                return bad(format!("box {i} is degenerate"));
            }
            if !(in_x(&b.x0) && in_x(&b.x1) && in_y(&b.y0) && in_y(&b.y1)) {
                return bad(format!("box {i} leaves the ambient square"));
            }
        }
        for (i, f) in families.iter().enumerate() {
            f.validate()?;
            let first = f.member(&f.n0.into());
            if !(in_x(f.limit()) && in_x(&first.start.0) && in_x(&first.end.0))
                || !(in_y(&f.y[0]) && in_y(&f.y[1]))
            {
                return bad(format!("segment family {i} leaves the ambient square"));
            }
        }
        Ok(FiniteGraph { domain, codomain, segments, boxes, families })
    }

    pub fn domain(&self) -> (&Rational, &Rational) {
        (&self.domain.0, &self.domain.1)
    }

    pub fn codomain(&self) -> (&Rational, &Rational) {
        (&self.codomain.0, &self.codomain.1)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn boxes(&self) -> &[GraphBox] {
        &self.boxes
    }

    pub fn families(&self) -> &[SegmentFamily] {
        &self.families
    }

    pub fn evaluate(&self, t: &Rational) -> Result<ClosedSet1D> {
        if t < &self.domain.0 || t > &self.domain.1 {
            return Err(Error::OutOfDomain(t.to_string()));
        }
        let mut out = ClosedSet1D::empty();
        for s in &self.segments {
            out = out.union(&s.fiber(t));
        }
        for b in &self.boxes {
            out = out.union(&b.fiber(t));
        }
        for f in &self.families {
            for n in f.members_spanning(t)? {
                out = out.union(&f.member(&n).fiber(t));
            }
        }
        Ok(out)
    }

    /// Abscissae where the graph can fail to be closed: ends of pieces and
    /// family limits.
    pub fn critical_points(&self) -> Vec<Rational> {
        let mut xs: Vec<Rational> = Vec::new();
        for s in &self.segments {
            xs.push(s.start.0.clone());
            xs.push(s.end.0.clone());
        }
        for b in &self.boxes {
            xs.push(b.x0.clone());
            xs.push(b.x1.clone());
        }
        for f in &self.families {
            xs.push(f.limit().clone());
        }
        xs.sort();
        xs.dedup();
        xs
    }

    /// The segments of members `n0..=n0 + count - 1` of every family
    /// together with the plain segments.
    pub fn materialized_segments(&self, count: i64) -> Vec<Segment> {
        let mut out = self.segments.clone();
        for f in &self.families {
            for n in f.n0..f.n0 + count {
                out.push(f.member(&n.into()));
            }
        }
        out
    }

    /// Smallest distance `> 0` between `a` and another critical point, or
    /// `None` when there is no other.
    pub(crate) fn isolation(&self, a: &Rational) -> Option<Rational> {
        self.critical_points()
            .into_iter()
            .filter(|x| x != a)
            .map(|x| (x - a).abs())
            .min()
    }
}
