use std::fmt;

use crate::scalar::Rational;

/// A finite union of disjoint closed intervals (points are degenerate
/// intervals), kept sorted. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct ClosedSet1D {
    parts: Vec<(Rational, Rational)>,
}

/// A connected piece of a complement, with endpoint inclusion flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub lo: Rational,
    pub hi: Rational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

impl ClosedSet1D {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn point(v: Rational) -> Self {
        ClosedSet1D { parts: vec![(v.clone(), v)] }
    }

    /// `[min(a, b), max(a, b)]`.
    pub fn interval(a: Rational, b: Rational) -> Self {
        if a <= b {
            ClosedSet1D { parts: vec![(a, b)] }
        } else {
            ClosedSet1D { parts: vec![(b, a)] }
        }
    }

    pub fn from_parts(parts: impl IntoIterator<Item = (Rational, Rational)>) -> Self {
        let mut v: Vec<(Rational, Rational)> = parts
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect();
        v.sort();
        let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match out.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        ClosedSet1D { parts: out }
    }

    pub fn union(&self, other: &ClosedSet1D) -> ClosedSet1D {
        Self::from_parts(self.parts.iter().chain(&other.parts).cloned())
    }

    pub fn components(&self) -> &[(Rational, Rational)] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Nonempty and connected.
    pub fn is_interval(&self) -> bool {
        self.parts.len() == 1
    }

    pub fn min(&self) -> Option<&Rational> {
        self.parts.first().map(|p| &p.0)
    }

    pub fn max(&self) -> Option<&Rational> {
        self.parts.last().map(|p| &p.1)
    }

    pub fn contains(&self, v: &Rational) -> bool {
        let k = self.parts.partition_point(|(_, b)| b < v);
        k < self.parts.len() && &self.parts[k].0 <= v
    }

    pub fn contains_interval(&self, a: &Rational, b: &Rational) -> bool {
        let k = self.parts.partition_point(|(_, hi)| hi < a);
        k < self.parts.len() && &self.parts[k].0 <= a && b <= &self.parts[k].1
    }

    pub fn is_subset(&self, other: &ClosedSet1D) -> bool {
        self.parts.iter().all(|(a, b)| other.contains_interval(a, b))
    }

    /// Connected pieces of `[lo, hi] \ self`.
    pub fn complement_in(&self, lo: &Rational, hi: &Rational) -> Vec<Piece> {
        let mut out = Vec::new();
        let mut cur = lo.clone();
        let mut cur_closed = true;
        for (a, b) in &self.parts {
            if b < lo || a > hi {
                continue;
            }
            if a > &cur {
                out.push(Piece { lo: cur.clone(), hi: a.clone(), lo_closed: cur_closed, hi_closed: false });
            }
            if b >= &cur {
                cur = b.clone();
                cur_closed = false;
            }
        }
        if &cur < hi || (&cur == hi && cur_closed) {
            out.push(Piece { lo: cur, hi: hi.clone(), lo_closed: cur_closed, hi_closed: true });
        }
        out
    }

    /// Distance from `v` to the set (`None` when empty).
    pub fn distance_to(&self, v: &Rational) -> Option<Rational> {
        let zero = Rational::from_integer(0.into());
        self.parts
            .iter()
            .map(|(a, b)| {
                if v < a {
                    a - v
                } else if v > b {
                    v - b
                } else {
                    zero.clone()
                }
            })
            .min()
    }

    /// Image under an increasing map of the endpoints.
    pub fn map_increasing(&self, f: impl Fn(&Rational) -> Rational) -> ClosedSet1D {
        Self::from_parts(self.parts.iter().map(|(a, b)| (f(a), f(b))))
    }
}

impl fmt::Display for ClosedSet1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "∅");
        }
        let s: Vec<String> = self
            .parts
            .iter()
            .map(|(a, b)| if a == b { format!("{{{a}}}") } else { format!("[{a}, {b}]") })
            .collect();
        write!(f, "{}", s.join(" ∪ "))
    }
}

/// Symmetric Hausdorff distance between a finite sample and a closed set,
/// both nonempty; `Some(0)` when both are empty, `None` when exactly one is.
pub fn hausdorff_to_set(samples: &[Rational], set: &ClosedSet1D) -> Option<Rational> {
    if samples.is_empty() || set.is_empty() {
        return (samples.is_empty() && set.is_empty()).then(|| Rational::from_integer(0.into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort();
    let mut worst = sorted
        .iter()
        .map(|s| set.distance_to(s).unwrap())
        .max()
        .unwrap();
    let nearest = |v: &Rational| {
        let k = sorted.partition_point(|s| s < v);
        let mut d: Option<Rational> = None;
        for j in [k.wrapping_sub(1), k] {
            if let Some(s) = sorted.get(j) {
                let e = if s > v { s - v } else { v - s };
                if d.as_ref().is_none_or(|x| &e < x) {
                    d = Some(e);
                }
            }
        }
        d.unwrap()
    };
    let two = Rational::from_integer(2.into());
    for (a, b) in set.components() {
        // the farthest point of [a, b] from the samples is an endpoint or a
        // midpoint between consecutive samples inside it
        let mut cands = vec![a.clone(), b.clone()];
        for w in sorted.windows(2) {
            let m = (&w[0] + &w[1]) / &two;
            if &m > a && &m < b {
                cands.push(m);
            }
        }
        for c in cands {
            let d = nearest(&c);
            if d > worst {
                worst = d;
            }
        }
    }
    Some(worst)
}
