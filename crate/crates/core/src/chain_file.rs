//! Self-contained chain files: both function documents, the pattern map and
//! the depth, enough to rebuild the chain, plus a summary of the maps.

use serde::{Deserialize, Serialize};

use crate::conjugacy::{build_chain, HomeoChain, VERIFY_DEPTH};
use crate::document::{FunctionDocument, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::function::{GeneratedFn, SetValuedFn};
use crate::pattern::{PatternFile, PatternMap};
use crate::scalar::{fmt_rational, int, Rational};

/// Number of mesh intervals in the summary.
const SUMMARY_MESH: i64 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub version: u32,
    /// `m`: the chain holds `h_1, ..., h_{m+1}`.
    pub depth: usize,
    pub source: FunctionDocument,
    pub target: FunctionDocument,
    pub pattern: PatternFile,
    pub summary: ChainSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSummary {
    pub maps: usize,
    pub verify_depth: i64,
    /// Domain mesh points `t`.
    pub mesh: Vec<String>,
    /// `h_i(t)` for every map and mesh point.
    pub images: Vec<Vec<String>>,
}

fn generated(doc: &FunctionDocument, context: &str) -> Result<GeneratedFn> {
    match doc.build()? {
        SetValuedFn::Generated(g) => Ok(g),
        SetValuedFn::Finite(_) => Err(Error::doc(context, "chains need generated functions")),
    }
}

fn summarize(chain: &HomeoChain) -> Result<ChainSummary> {
    let p = chain.tau().source();
    let (lo, hi) = (p.lower().clone(), p.upper().clone());
    let mesh: Vec<Rational> =
        (0..=SUMMARY_MESH).map(|k| &lo + (&hi - &lo) * int(k) / int(SUMMARY_MESH)).collect();
    let images = (0..chain.len())
        .map(|i| mesh.iter().map(|t| chain.map(i).eval(t).map(|v| fmt_rational(&v))).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ChainSummary {
        maps: chain.len(),
        verify_depth: VERIFY_DEPTH,
        mesh: mesh.iter().map(fmt_rational).collect(),
        images,
    })
}

impl ChainFile {
    /// Builds and verifies the chain for the constant sequences `f`, `g`.
    pub fn create(source: FunctionDocument, target: FunctionDocument, tau: &PatternMap, depth: usize) -> Result<(Self, HomeoChain)> {
        let chain = rebuild(&source, &target, &tau.to_file(), depth)?;
        let file = ChainFile {
            version: FORMAT_VERSION,
            depth,
            source,
            target,
            pattern: tau.to_file(),
            summary: summarize(&chain)?,
        };
        Ok((file, chain))
    }

    /// Rebuilds the chain; the stored summary must match the rebuilt maps.
    pub fn load(&self) -> Result<HomeoChain> {
        if self.version != FORMAT_VERSION {
            return Err(Error::doc("version", format!("unsupported version {}", self.version)));
        }
        let chain = rebuild(&self.source, &self.target, &self.pattern, self.depth)?;
        if summarize(&chain)? != self.summary {
            return Err(Error::doc("summary", "does not match the rebuilt chain"));
        }
        Ok(chain)
    }
}

fn rebuild(source: &FunctionDocument, target: &FunctionDocument, pattern: &PatternFile, depth: usize) -> Result<HomeoChain> {
    let f = generated(source, "source")?;
    let g = generated(target, "target")?;
    let tau = PatternMap::from_file(pattern, f.partition_arc().clone(), g.partition_arc().clone())?;
    build_chain(&[f], &[g], std::sync::Arc::new(tau), depth)
}

pub fn parse_chain_file(text: &str) -> Result<ChainFile> {
    Ok(serde_json::from_str(text)?)
}

pub fn serialize_chain_file(file: &ChainFile) -> String {
    let mut s = serde_json::to_string_pretty(file).expect("chain files serialize");
    s.push('\n');
    s
}
