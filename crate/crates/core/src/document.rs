//! Function description files: a version-tagged JSON document holding the
//! partition and either generated rules or a literal graph. Every rational
//! is a `"p/q"` string.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{
    FiniteGraph, GapRule, GeneratedFn, GraphBox, Segment, SegmentFamily, SeqCoord, SetValuedFn,
};
use crate::partition::{validate_partition, Index, MarkovPartition, PointRef, RawPartition};
use crate::scalar::{parse_rational, GeometricFamily, Rational};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionDocument {
    pub version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub provenance: String,
    pub ambient: [String; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionBlock>,
    pub representation: Representation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionBlock {
    pub explicit: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub families: BTreeMap<String, FamilyBlock>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyBlock {
    pub alpha: String,
    pub beta: String,
    pub rho: String,
    pub n0: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Representation {
    Generated {
        values: BTreeMap<String, [String; 2]>,
        gaps: BTreeMap<String, GapBlock>,
    },
    FiniteGraph {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        codomain: Option<[String; 2]>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        segments: Vec<SegmentBlock>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        boxes: Vec<BoxBlock>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        segment_families: Vec<SegmentFamilyBlock>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapBlock {
    pub from: String,
    pub to: String,
}

fn all_closed(open: &[bool; 2]) -> bool {
    !open[0] && !open[1]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentBlock {
    pub from: [String; 2],
    pub to: [String; 2],
    /// Whether `from` and `to` are left out of the graph.
    #[serde(default, skip_serializing_if = "all_closed")]
    pub open: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxBlock {
    pub x: [String; 2],
    pub y: [String; 2],
    /// Whether the left and right sides are left out of the graph.
    #[serde(default, skip_serializing_if = "all_closed")]
    pub open: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFamilyBlock {
    pub n0: i64,
    pub x: [CoordBlock; 2],
    pub y: [String; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoordBlock {
    Harmonic { limit: String, coeff: String, scale: String, offset: String },
    Geometric { limit: String, coeff: String, ratio: String },
}

/// Parses and fully validates a document.
pub fn parse_document(text: &str) -> Result<FunctionDocument> {
    let doc: FunctionDocument = serde_json::from_str(text)?;
    doc.build()?;
    Ok(doc)
}

/// Parses a document and builds the function it describes.
pub fn load_function(text: &str) -> Result<(FunctionDocument, SetValuedFn)> {
    let doc: FunctionDocument = serde_json::from_str(text)?;
    let f = doc.build()?;
    Ok((doc, f))
}

/// Canonical text: two-space JSON, keys of maps sorted, trailing newline.
pub fn serialize_document(doc: &FunctionDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

fn rat(context: &str, s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|_| Error::doc(context, format!("`{s}` is not a rational p/q")))
}

fn pair(context: &str, v: &[String; 2]) -> Result<(Rational, Rational)> {
    Ok((rat(&format!("{context}[0]"), &v[0])?, rat(&format!("{context}[1]"), &v[1])?))
}

impl FunctionDocument {
    pub fn build(&self) -> Result<SetValuedFn> {
        if self.version != FORMAT_VERSION {
            return Err(Error::doc("version", format!("unsupported version {}", self.version)));
        }
        let ambient = pair("ambient", &self.ambient)?;
        match &self.representation {
            Representation::Generated { values, gaps } => {
                let part = Arc::new(self.build_partition()?);
                build_generated(part, values, gaps).map(SetValuedFn::Generated)
            }
            Representation::FiniteGraph { codomain, segments, boxes, segment_families } => {
                if self.partition.is_some() {
                    return Err(Error::doc("partition", "only generated functions carry a partition"));
                }
                let codomain = match codomain {
                    Some(c) => pair("representation.codomain", c)?,
                    None => ambient.clone(),
                };
                let segs = segments
                    .iter()
                    .enumerate()
                    .map(|(i, s)| {
                        let c = format!("representation.segments[{i}]");
                        Ok(Segment::new(
                            pair(&format!("{c}.from"), &s.from)?,
                            pair(&format!("{c}.to"), &s.to)?,
                            s.open[0],
                            s.open[1],
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let bxs = boxes
                    .iter()
                    .enumerate()
                    .map(|(i, b)| {
                        let c = format!("representation.boxes[{i}]");
                        let (x0, x1) = pair(&format!("{c}.x"), &b.x)?;
                        let (y0, y1) = pair(&format!("{c}.y"), &b.y)?;
                        Ok(GraphBox { x0, x1, y0, y1, left_open: b.open[0], right_open: b.open[1] })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let fams = segment_families
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        let c = format!("representation.segment_families[{i}]");
                        Ok(SegmentFamily {
                            n0: f.n0,
                            x: [coord(&format!("{c}.x[0]"), &f.x[0])?, coord(&format!("{c}.x[1]"), &f.x[1])?],
                            y: {
                                let (a, b) = pair(&format!("{c}.y"), &f.y)?;
                                [a, b]
                            },
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                FiniteGraph::new(ambient, codomain, segs, bxs, fams).map(SetValuedFn::Finite)
            }
        }
    }

    pub fn build_partition(&self) -> Result<MarkovPartition> {
        let block = self
            .partition
            .as_ref()
            .ok_or_else(|| Error::doc("partition", "generated functions need a partition block"))?;
        let (lower, upper) = pair("ambient", &self.ambient)?;
        let explicit = block
            .explicit
            .iter()
            .map(|(id, v)| Ok((id.clone(), rat(&format!("partition.explicit.{id}"), v)?)))
            .collect::<Result<Vec<_>>>()?;
        let families = block
            .families
            .iter()
            .map(|(id, f)| {
                let c = format!("partition.families.{id}");
                let fam = GeometricFamily::new(
                    rat(&format!("{c}.alpha"), &f.alpha)?,
                    rat(&format!("{c}.beta"), &f.beta)?,
                    rat(&format!("{c}.rho"), &f.rho)?,
                    f.n0,
                )
                .map_err(|e| Error::doc(&c, e.to_string()))?;
                Ok((id.clone(), fam))
            })
            .collect::<Result<Vec<_>>>()?;
        validate_partition(RawPartition { lower, upper, explicit, families })
    }
}

fn coord(context: &str, c: &CoordBlock) -> Result<SeqCoord> {
    Ok(match c {
        CoordBlock::Harmonic { limit, coeff, scale, offset } => SeqCoord::Harmonic {
            limit: rat(&format!("{context}.limit"), limit)?,
            coeff: rat(&format!("{context}.coeff"), coeff)?,
            scale: rat(&format!("{context}.scale"), scale)?,
            offset: rat(&format!("{context}.offset"), offset)?,
        },
        CoordBlock::Geometric { limit, coeff, ratio } => SeqCoord::Geometric {
            limit: rat(&format!("{context}.limit"), limit)?,
            coeff: rat(&format!("{context}.coeff"), coeff)?,
            ratio: rat(&format!("{context}.ratio"), ratio)?,
        },
    })
}

/// Key of a value or gap rule: `explicit:<id>` or `family:<id>[n]`.
enum RuleKey {
    Explicit(usize),
    Family(usize),
}

fn rule_key(part: &MarkovPartition, context: &str, key: &str) -> Result<RuleKey> {
    match part.parse_ref(key) {
        Ok(PointRef::Explicit(i)) => Ok(RuleKey::Explicit(i)),
        Ok(PointRef::Member(f, Index::Shift(0))) => Ok(RuleKey::Family(f)),
        _ => Err(Error::doc(
            context,
            format!("`{key}` must be `explicit:<id>` or `family:<id>[n]`"),
        )),
    }
}

fn point_ref(part: &MarkovPartition, context: &str, s: &str) -> Result<PointRef> {
    part.parse_ref(s).map_err(|e| Error::doc(context, e.to_string()))
}

fn build_generated(
    part: Arc<MarkovPartition>,
    values: &BTreeMap<String, [String; 2]>,
    gaps: &BTreeMap<String, GapBlock>,
) -> Result<GeneratedFn> {
    let ne = part.explicit().len();
    let nf = part.families().len();
    let mut ev: Vec<Option<(PointRef, PointRef)>> = vec![None; ne];
    let mut fv: Vec<Option<(PointRef, PointRef)>> = vec![None; nf];
    for (key, [u, v]) in values {
        let c = format!("representation.values.{key}");
        let r = (point_ref(&part, &c, u)?, point_ref(&part, &c, v)?);
        match rule_key(&part, &c, key)? {
            RuleKey::Explicit(i) => ev[i] = Some(r),
            RuleKey::Family(f) => fv[f] = Some(r),
        }
    }
    let mut eg = BTreeMap::new();
    let mut fg: Vec<Option<GapRule>> = vec![None; nf];
    for (key, g) in gaps {
        let c = format!("representation.gaps.{key}");
        let rule = GapRule { from: point_ref(&part, &c, &g.from)?, to: point_ref(&part, &c, &g.to)? };
        match rule_key(&part, &c, key)? {
            RuleKey::Explicit(i) => {
                eg.insert(i, rule);
            }
            RuleKey::Family(f) => fg[f] = Some(rule),
        }
    }
    let missing = |what: &str, r: String| Error::doc(format!("representation.{what}"), format!("missing rule for {r}"));
    let ev = ev
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| missing("values", part.display_ref(&PointRef::Explicit(i)))))
        .collect::<Result<Vec<_>>>()?;
    let fv = fv
        .into_iter()
        .enumerate()
        .map(|(f, v)| v.ok_or_else(|| missing("values", part.display_ref(&PointRef::Member(f, Index::Shift(0))))))
        .collect::<Result<Vec<_>>>()?;
    let fg = fg
        .into_iter()
        .enumerate()
        .map(|(f, v)| v.ok_or_else(|| missing("gaps", part.display_ref(&PointRef::Member(f, Index::Shift(0))))))
        .collect::<Result<Vec<_>>>()?;
    GeneratedFn::new(part, ev, fv, eg, fg)
}
