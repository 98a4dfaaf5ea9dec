//! Finite-depth projections of generalized inverse limits: tuples
//! `(x_1, ..., x_n)` with `x_k ∈ f_k(x_{k+1})`.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Signed;

use crate::conjugacy::{apply_h, HomeoChain};
use crate::error::{Error, Result};
use crate::function::SetValuedFn;
use crate::scalar::{fmt_rational, int, parse_rational, Rational};

/// Family indices materialized for seeds when none is given.
pub const DEFAULT_TRUNCATION: i64 = 16;

/// A finite cloud of tuples of one depth, each in the inverse limit
/// projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthNApprox {
    pub depth: usize,
    pub resolution: Option<Rational>,
    pub truncation: Option<i64>,
    pub tuples: Vec<Vec<Rational>>,
}

impl DepthNApprox {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

/// `f_k`, reading a single function as the constant sequence.
fn bonding(fs: &[SetValuedFn], k: usize) -> Result<&SetValuedFn> {
    match fs.len() {
        0 => Err(Error::LengthMismatch { expected: 1, found: 0 }),
        1 => Ok(&fs[0]),
        n if k < n => Ok(&fs[k]),
        n => Err(Error::LengthMismatch { expected: k + 1, found: n }),
    }
}

/// First `k` (1-based) with `x_k ∉ f_k(x_{k+1})`, or `None`.
pub fn membership_check(fs: &[SetValuedFn], x: &[Rational]) -> Result<Option<usize>> {
    if x.len() < 2 {
        return Err(Error::LengthMismatch { expected: 2, found: x.len() });
    }
    for k in 0..x.len() - 1 {
        let f = bonding(fs, k)?;
        let (lo, hi) = f.domain();
        if x[k + 1] < *lo || x[k + 1] > *hi || !f.evaluate(&x[k + 1])?.contains(&x[k]) {
            return Ok(Some(k + 1));
        }
    }
    Ok(None)
}

/// Multiples of `res` strictly inside `(lo, hi)`, plus both ends.
fn mesh(lo: &Rational, hi: &Rational, res: &Rational) -> Vec<Rational> {
    let mut out = vec![lo.clone()];
    let mut k = (lo / res).floor() + int(1);
    loop {
        let v = &k * res;
        if v >= *hi {
            break;
        }
        if v > *lo {
            out.push(v);
        }
        k += int(1);
    }
    if hi != lo {
        out.push(hi.clone());
    }
    out
}

fn seeds(f: &SetValuedFn, res: &Rational, truncation: i64) -> Vec<Rational> {
    let (lo, hi) = f.domain();
    let mut out: BTreeSet<Rational> = mesh(lo, hi, res).into_iter().collect();
    match f {
        SetValuedFn::Generated(g) => {
            let p = g.partition();
            out.extend(p.points_to_depth(truncation).into_iter().map(|q| p.value(q)));
            for gap in p.gaps_to_depth(truncation) {
                let two = int(2);
                out.insert((p.value(gap.left) + p.value(gap.right)) / two);
            }
        }
        SetValuedFn::Finite(g) => {
            out.extend(g.critical_points().into_iter().filter(|x| x >= lo && x <= hi));
        }
    }
    out.into_iter().collect()
}

/// Seeds `x_n` on the mesh and the partition, then fills in `x_{n-1}, ..., x_1`
/// from the fibers, sampling interval fibers at `resolution` (endpoints
/// included). Tuples whose fiber is empty are dropped.
pub fn approximate(fs: &[SetValuedFn], n: usize, resolution: &Rational) -> Result<DepthNApprox> {
    approximate_with(fs, n, resolution, DEFAULT_TRUNCATION)
}

pub fn approximate_with(fs: &[SetValuedFn], n: usize, resolution: &Rational, truncation: i64) -> Result<DepthNApprox> {
    if n < 2 {
        return Err(Error::LengthMismatch { expected: 2, found: n });
    }
    if *resolution <= int(0) {
        return Err(Error::BadRational(resolution.to_string()));
    }
    // x_n lies in the domain of f_{n-1}
    let last = bonding(fs, n - 2)?;
    let mut partial: Vec<Vec<Rational>> = seeds(last, resolution, truncation).into_iter().map(|s| vec![s]).collect();
    for k in (0..n - 1).rev() {
        let f = bonding(fs, k)?;
        let mut next = Vec::new();
        for tail in partial {
            let fiber = f.evaluate(&tail[0])?;
            for (a, b) in fiber.components() {
                for y in mesh(a, b, resolution) {
                    let mut t = Vec::with_capacity(tail.len() + 1);
                    t.push(y);
                    t.extend(tail.iter().cloned());
                    next.push(t);
                }
            }
        }
        partial = next;
    }
    let tuples: BTreeSet<Vec<Rational>> = partial.into_iter().collect();
    Ok(DepthNApprox {
        depth: n,
        resolution: Some(resolution.clone()),
        truncation: Some(truncation),
        tuples: tuples.into_iter().collect(),
    })
}

fn max_metric(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().expect("tuples are nonempty")
}

/// `max_a min_b d(a, b)` with pruning on the first coordinate (`b` sorted).
fn directed(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Rational {
    let mut worst = int(0);
    for x in a {
        let k = b.partition_point(|y| y[0] < x[0]);
        let mut best: Option<Rational> = None;
        let mut scan = |i: usize| -> bool {
            let gap = (&b[i][0] - &x[0]).abs();
            if best.as_ref().is_some_and(|d| gap >= *d) {
                return false;
            }
            let d = max_metric(x, &b[i]);
            if best.as_ref().is_none_or(|e| d < *e) {
                best = Some(d);
            }
            true
        };
        for i in k..b.len() {
            if !scan(i) {
                break;
            }
        }
        for i in (0..k).rev() {
            if !scan(i) {
                break;
            }
        }
        let best = best.expect("clouds are nonempty");
        if best > worst {
            worst = best;
        }
    }
    worst
}

/// Symmetric Hausdorff distance in the maximum metric, exact.
pub fn hausdorff_distance(a: &DepthNApprox, b: &DepthNApprox) -> Result<Rational> {
    if a.depth != b.depth {
        return Err(Error::DepthMismatch(a.depth, b.depth));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut sa = a.tuples.clone();
    let mut sb = b.tuples.clone();
    sa.sort();
    sb.sort();
    let d1 = directed(&sa, &sb);
    let d2 = directed(&sb, &sa);
    Ok(d1.max(d2))
}

/// A tuple of the source cloud whose image under `H` leaves the target
/// inverse limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportWitness {
    pub tuple: Vec<Rational>,
    pub image: Vec<Rational>,
    pub index: usize,
}

impl fmt::Display for TransportWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &[Rational]| v.iter().map(fmt_rational).collect::<Vec<_>>().join(", ");
        write!(
            f,
            "({}) maps to ({}), which fails membership at coordinate {}",
            show(&self.tuple),
            show(&self.image),
            self.index
        )
    }
}

/// Applies `H` to every tuple and checks membership against `gs`, exactly.
pub fn transport_test(
    chain: &HomeoChain,
    approx: &DepthNApprox,
    gs: &[SetValuedFn],
) -> Result<Option<TransportWitness>> {
    if chain.len() < approx.depth {
        return Err(Error::LengthMismatch { expected: approx.depth, found: chain.len() });
    }
    for x in &approx.tuples {
        let image = apply_h(chain, x, approx.depth)?;
        if let Some(index) = membership_check(gs, &image)? {
            return Ok(Some(TransportWitness { tuple: x.clone(), image, index }));
        }
    }
    Ok(None)
}

/// The image cloud `H(approx)`.
pub fn transport(chain: &HomeoChain, approx: &DepthNApprox) -> Result<DepthNApprox> {
    let tuples: BTreeSet<Vec<Rational>> =
        approx.tuples.iter().map(|x| apply_h(chain, x, approx.depth)).collect::<Result<_>>()?;
    Ok(DepthNApprox { tuples: tuples.into_iter().collect(), ..approx.clone() })
}

/// CSV with a header `x1,...,xn` and one tuple per line as `p/q` strings.
pub fn write_cloud_csv(approx: &DepthNApprox) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=approx.depth).map(|k| format!("x{k}")))?;
    for t in &approx.tuples {
        w.write_record(t.iter().map(fmt_rational))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::doc("csv", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("rationals print as ASCII"))
}

pub fn parse_cloud_csv(text: &str) -> Result<DepthNApprox> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let depth = r.headers()?.len();
    if depth < 2 {
        return Err(Error::doc("csv header", format!("expected at least 2 columns, found {depth}")));
    }
    let mut tuples = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let t = rec
            .iter()
            .enumerate()
            .map(|(col, s)| {
                parse_rational(s).map_err(|_| Error::doc(format!("csv row {} column {}", line + 2, col + 1), format!("invalid rational `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        tuples.push(t);
    }
    Ok(DepthNApprox { depth, resolution: None, truncation: None, tuples })
}
